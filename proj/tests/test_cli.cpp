// End-to-end pipeline tests driving the actual binary (path in HEDONIC_BIN).

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string binary() {
  const char* env = std::getenv("HEDONIC_BIN");
  REQUIRE(env != nullptr);
  return env;
}

int run(const std::string& args, const std::string& log = "cli_test.log") {
  const std::string cmd = binary() + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_config(const fs::path& path, const fs::path& dir,
                  const json& extra = {}) {
  json cfg;
  cfg["listings"] = (dir / "city.csv").string();
  cfg["offenders"] = (dir / "offenders.csv").string();
  cfg["factors"] = {{"environment", true}, {"distance", true}};
  cfg["models"] = {"gam", "glm-l"};
  cfg["out"] = (dir / "out").string();
  cfg["seed"] = 7;
  for (const auto& [k, v] : extra.items()) cfg[k] = v;
  std::ofstream out(path);
  out << cfg.dump(1);
}

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("pipeline: fixture, ingest, fit, report", "[cli]") {
  Workdir wd("cli_pipe");
  REQUIRE(run("fixture --out " + wd.dir.string() + " --seed 7 --n 500") == 0);
  REQUIRE(fs::exists(wd.dir / "city.csv"));
  REQUIRE(fs::exists(wd.dir / "offenders.csv"));
  REQUIRE(fs::exists(wd.dir / "truth.json"));

  const fs::path cfg = wd.dir / "config.json";
  write_config(cfg, wd.dir);

  REQUIRE(run("ingest --config " + cfg.string()) == 0);
  REQUIRE(fs::exists(wd.dir / "out" / "dataset.json"));
  REQUIRE(fs::exists(wd.dir / "out" / "rejections.jsonl"));

  // ingest determinism: byte-identical artifact on re-run
  const std::string first = slurp(wd.dir / "out" / "dataset.json");
  REQUIRE(run("ingest --config " + cfg.string()) == 0);
  REQUIRE(slurp(wd.dir / "out" / "dataset.json") == first);

  REQUIRE(run("fit --config " + cfg.string()) == 0);
  REQUIRE(fs::exists(wd.dir / "out" / "model_gam.json"));
  REQUIRE(fs::exists(wd.dir / "out" / "model_glm-l.json"));
  REQUIRE(fs::exists(wd.dir / "out" / "stats.json"));

  const json gam = json::parse(slurp(wd.dir / "out" / "model_gam.json"));
  const json glm = json::parse(slurp(wd.dir / "out" / "model_glm-l.json"));
  REQUIRE(gam.at("stats").at("adj_r2").get<double>() >
          glm.at("stats").at("adj_r2").get<double>());

  REQUIRE(run("distfit --config " + cfg.string()) == 0);
  REQUIRE(fs::exists(wd.dir / "out" / "distfit.json"));

  REQUIRE(run("report --config " + cfg.string()) == 0);
  const std::string text = slurp(wd.dir / "out" / "report.txt");
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("gam"));
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("glm-l"));
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("Latitude"));
  // the planted latitude effect is overwhelming: footnote rendering kicks in
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("*"));
}

TEST_CASE("missing offenders with Distance requested exits 2 and names it",
          "[cli]") {
  Workdir wd("cli_nooff");
  REQUIRE(run("fixture --out " + wd.dir.string() + " --seed 3 --n 300") == 0);
  fs::remove(wd.dir / "offenders.csv");
  const fs::path cfg = wd.dir / "config.json";
  write_config(cfg, wd.dir);

  const std::string log = (wd.dir / "ingest.log").string();
  REQUIRE(run("ingest --config " + cfg.string(), log) == 2);
  REQUIRE_THAT(slurp(log), Catch::Matchers::ContainsSubstring("Distance"));
}

TEST_CASE("fit before ingest exits 2", "[cli]") {
  Workdir wd("cli_nofit");
  REQUIRE(run("fixture --out " + wd.dir.string() + " --seed 3 --n 300") == 0);
  const fs::path cfg = wd.dir / "config.json";
  write_config(cfg, wd.dir);
  REQUIRE(run("fit --config " + cfg.string()) == 2);
  REQUIRE(run("report --config " + cfg.string()) == 2);
}

TEST_CASE("environment toggle produces NI rows in the comparison", "[cli]") {
  Workdir wd("cli_env");
  REQUIRE(run("fixture --out " + wd.dir.string() + " --seed 5 --n 500") == 0);
  const fs::path cfg = wd.dir / "config.json";
  write_config(cfg, wd.dir, {{"factors", {{"environment", false},
                                          {"distance", false}}},
                             {"models", {"gam"}}});

  REQUIRE(run("ingest --config " + cfg.string()) == 0);
  REQUIRE(run("fit --config " + cfg.string()) == 0);

  // refit with the environmental block under a distinct stored name
  REQUIRE(run("fit --config " + cfg.string() +
              " --env-factors --name-suffix -env") == 0);
  REQUIRE(fs::exists(wd.dir / "out" / "model_gam-env.json"));

  const fs::path cfg2 = wd.dir / "config2.json";
  write_config(cfg2, wd.dir, {{"models", {"gam", "gam-env"}}});
  REQUIRE(run("report --config " + cfg2.string()) == 0);

  const json report = json::parse(slurp(wd.dir / "out" / "report.json"));
  const auto& cells = report.at("significance").at("pvalues");
  REQUIRE(cells.at("waterfront").at("gam") == "NI");
  REQUIRE(cells.at("waterfront").at("gam-env").is_number());
  const std::string text = slurp(wd.dir / "out" / "report.txt");
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("NI"));
}

TEST_CASE("stratified fit writes suffixed model files", "[cli]") {
  Workdir wd("cli_strat");
  REQUIRE(run("fixture --out " + wd.dir.string() + " --seed 9 --n 800") == 0);
  const fs::path cfg = wd.dir / "config.json";
  write_config(cfg, wd.dir, {{"models", {"glm-l"}}});
  REQUIRE(run("ingest --config " + cfg.string()) == 0);
  REQUIRE(run("fit --config " + cfg.string() +
              " --stratify dwelling=Condo") == 0);
  REQUIRE(fs::exists(wd.dir / "out" / "model_glm-l-cond.json"));
  REQUIRE(fs::exists(wd.dir / "out" / "model_glm-l-non.json"));
}

TEST_CASE("standalone distance command fills the artifact", "[cli]") {
  Workdir wd("cli_dist");
  REQUIRE(run("fixture --out " + wd.dir.string() + " --seed 4 --n 300") == 0);
  const fs::path cfg = wd.dir / "config.json";
  write_config(cfg, wd.dir, {{"factors", {{"environment", false},
                                          {"distance", false}}}});
  REQUIRE(run("ingest --config " + cfg.string()) == 0);
  json before = json::parse(slurp(wd.dir / "out" / "dataset.json"));
  REQUIRE(!before.at("records").at(0).contains("distance"));

  REQUIRE(run("distance --config " + cfg.string()) == 0);
  json after = json::parse(slurp(wd.dir / "out" / "dataset.json"));
  REQUIRE(after.at("records").at(0).contains("distance"));
}

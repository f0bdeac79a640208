#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "ttm/io.hpp"
#include "ttm/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workdir {
  fs::path path;
  Workdir() {
    path = fs::temp_directory_path() / ("ttm_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(TTM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) { return ttm::io::read_file(path); }

}  // namespace

TEST_CASE("generate") {
  Workdir w;
  REQUIRE(run("generate --n 3 --m 2 --p 1 --q 1 --seed 4 --out " + (w / "full.json")) == 0);
  const auto full = ttm::io::model_from_json(slurp(w / "full.json"));
  std::size_t dag = 0, map = 0;
  for (const auto& a : full.activities) {
    dag += a.parents.size();
    for (int r : a.required) map += r > 0;
  }
  CHECK(dag == 3);
  CHECK(map == 6);

  REQUIRE(run("generate --n 20 --m 10 --p 0.4 --q 0.4 --seed 9 --out " + (w / "a.json")) == 0);
  REQUIRE(run("generate --n 20 --m 10 --p 0.4 --q 0.4 --seed 9 --out " + (w / "b.json")) == 0);
  CHECK(slurp(w / "a.json") == slurp(w / "b.json"));
  CHECK(ttm::validate_model(ttm::io::model_from_json(slurp(w / "a.json"))).empty());

  CHECK(run("generate --p 2 --out " + (w / "bad.json")) == 2);
  CHECK(run("generate --out " + (w / "no/such/dir/x.json")) == 5);
  CHECK(run("bogus") == 2);
}

TEST_CASE("config files and flag overrides") {
  Workdir w;
  ttm::io::write_file(w / "gen.json", R"({"command":"generate","n":4,"m":3,"p":1,"q":1,"seed":2})");
  REQUIRE(run("generate --config " + (w / "gen.json") + " --n 5 --out " + (w / "m.json")) == 0);
  const auto model = ttm::io::model_from_json(slurp(w / "m.json"));
  CHECK(model.n() == 5);
  CHECK(model.m() == 3);

  CHECK(run("simulate --config " + (w / "gen.json")) == 2);
  ttm::io::write_file(w / "typo.json", R"({"command":"generate","nn":4})");
  CHECK(run("generate --config " + (w / "typo.json")) == 2);
}

TEST_CASE("simulate, train, infer and predict round trip") {
  Workdir w;
  REQUIRE(run("generate --n 12 --m 6 --seed 3 --out " + (w / "m.json")) == 0);
  REQUIRE(run("simulate --model " + (w / "m.json") + " --seed 5 --obs-out " + (w / "obs.json") + " --out " +
              (w / "t.json")) == 0);
  const auto trace = ttm::io::trace_from_json(slurp(w / "t.json"));
  CHECK(trace.total_time > 0.0);
  REQUIRE(run("simulate --model " + (w / "m.json") + " --seed 5 --runs 300 --out " + (w / "ts.json")) == 0);
  REQUIRE(run("train --model " + (w / "m.json") + " --traces " + (w / "ts.json") + " --out " + (w / "h.json")) == 0);
  REQUIRE(run("infer --hmm " + (w / "h.json") + " --obs " + (w / "obs.json") + " --out " + (w / "d.json")) == 0);
  const auto report = json::parse(slurp(w / "d.json"));
  CHECK(report.at("path").size() == report.at("length").get<std::size_t>());

  REQUIRE(run("simulate --model " + (w / "m.json") + " --seed 5 --obs-format csv --obs-out " + (w / "obs.csv") +
              " --out " + (w / "t2.json")) == 0);
  CHECK(run("infer --hmm " + (w / "h.json") + " --obs " + (w / "obs.csv")) == 0);

  CHECK(run("train --model " + (w / "m.json") + " --runs 1 --min-outgoing 50") == 3);
  CHECK(run("infer --hmm " + (w / "m.json") + " --obs " + (w / "obs.json")) == 2);
}

TEST_CASE("predict on a fully observed finished run") {
  Workdir w;
  // Every activity uses every resource, so only the terminal state is silent.
  REQUIRE(run("generate --n 6 --m 3 --q 1 --seed 11 --out " + (w / "m.json")) == 0);
  REQUIRE(run("train --model " + (w / "m.json") + " --runs 400 --obs-prob 1 --seed 2 --out " + (w / "h.json")) == 0);
  REQUIRE(run("simulate --model " + (w / "m.json") + " --seed 77 --obs-prob 1 --obs-tail 2 --obs-out " +
              (w / "obs.json") + " --out " + (w / "t.json")) == 0);
  REQUIRE(run("predict --model " + (w / "m.json") + " --hmm " + (w / "h.json") + " --obs " + (w / "obs.json") +
              " --ensemble 20 --out " + (w / "f.json")) == 0);
  const auto f = ttm::io::forecast_from_json(slurp(w / "f.json"));
  CHECK(f.mean == 0.0);
  CHECK(f.inferred_active.empty());

  ttm::io::write_file(w / "bad.json", "[[0]]");
  CHECK(run("predict --model " + (w / "m.json") + " --hmm " + (w / "h.json") + " --obs " + (w / "bad.json")) == 4);
}

TEST_CASE("sweep smoke config") {
  Workdir w;
  ttm::io::write_file(w / "sweep.json", R"({"command":"sweep","n":8,"m_values":[3],"p_values":[0.5],
    "q_values":[0.4],"samples":2,"sub_simulations":10,"test_runs":4,"max_length":6,"t_max":20,
    "duration_mean_max":20})");
  REQUIRE(run("sweep --config " + (w / "sweep.json") + " --out " + (w / "out")) == 0);
  std::istringstream success(slurp(w / "out/success.csv"));
  std::string line;
  std::getline(success, line);
  CHECK(line == ttm::io::kSuccessHeader);
  std::size_t rows = 0;
  while (std::getline(success, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 9);
  }
  CHECK(rows == 6);
  std::istringstream cut(slurp(w / "out/cutoffs.csv"));
  std::getline(cut, line);
  CHECK(line == ttm::io::kCutoffHeader);
  CHECK(json::parse(slurp(w / "out/summary.json")).at("cells").size() == 1);

  ttm::io::write_file(w / "bad.json", R"({"command":"sweep","samples":1})");
  CHECK(run("sweep --config " + (w / "bad.json") + " --out " + (w / "out2")) == 2);
}

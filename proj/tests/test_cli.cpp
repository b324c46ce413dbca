#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "renorm/cli/scenario.hpp"
#include "renorm/disk_energy.hpp"
#include "renorm/micro_min.hpp"

using namespace renorm;
using namespace renorm::cli;
namespace fs = std::filesystem;

namespace {

ErrorCode parse_code(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("scenario accepted: " << text);
  return ErrorCode::ComputeError;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "renorm_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

const char* kWmicro = R"({"name": "w", "kind": "wmicro", "seed": 1,
  "payload": {"configs": [{"points": [[0.5, 0]], "degrees": [1]}], "b": 0.5, "tol": 1e-10}})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("malformed documents") {
  CHECK(parse_code("{") == ErrorCode::ParseError);
  CHECK(parse_code("[1, 2]") == ErrorCode::ValidationError);
  CHECK(parse_code(R"({"kind": "wmicro", "payload": {}})") == ErrorCode::ValidationError);
  CHECK(parse_code(R"({"name": "x", "kind": "nope", "payload": {}})") == ErrorCode::ValidationError);
  CHECK(parse_code(R"({"name": "a/b", "kind": "wmicro", "payload": {}})") == ErrorCode::ValidationError);
}

TEST_CASE("payloads are validated before anything runs") {
  const char* bad[] = {
      R"({"name": "x", "kind": "wmicro", "payload": {"configs": [{"points": [[0.1, 0]], "degrees": [1, 2]}], "b": 0.5}})",
      R"({"name": "x", "kind": "wmicro", "payload": {"configs": [{"points": [[0.1, 0]], "degrees": [1]}], "b": -1}})",
      R"({"name": "x", "kind": "wmicro", "payload": {"configs": [], "b": 0.5}})",
      R"({"name": "x", "kind": "minimize", "payload": {"degrees": [1, 1]}})",
      R"({"name": "x", "kind": "minimize", "payload": {"degrees": [1, 1], "b": 0.5, "n_starts": 0}})",
      R"({"name": "x", "kind": "oracle", "payload": {"points": [[0.4, 0]], "degrees": [1], "b": 0.5, "R": 25, "rho": 0.7}})",
      R"({"name": "x", "kind": "oracle", "payload": {"points": [[0.4, 0]], "degrees": [1], "b": 0.5, "R": 25, "rho": 0.01, "exterior": {"type": "plaid"}}})",
      R"({"name": "x", "kind": "oracle", "payload": {"points": [[0.4, 0]], "degrees": [1], "b": 0.5, "R": 25, "rho": 0.01, "levels": 9}})",
      R"({"name": "x", "kind": "annulus", "payload": {"r": 2, "R": [1]}})",
      R"({"name": "x", "kind": "sweep", "payload": {"scenarios": [{"name": "a", "kind": "sweep", "payload": {"scenarios": []}}]}})",
      R"({"name": "x", "kind": "sweep", "payload": {"scenarios": [
          {"name": "a", "kind": "wmicro", "payload": {"configs": [{"points": [[0.1, 0]], "degrees": [1]}], "b": 0.5}},
          {"name": "a", "kind": "wmicro", "payload": {"configs": [{"points": [[0.1, 0]], "degrees": [1]}], "b": 0.5}}]}})",
  };
  for (const char* s : bad) CHECK(parse_code(s) == ErrorCode::ValidationError);
}

TEST_CASE("environment seed overrides the document") {
  const auto sc = parse_scenario(kWmicro, 99);
  CHECK(sc.seed == 99);
  CHECK(sc.seed_from_env);
  CHECK(parse_scenario(kWmicro).seed == 1);
}

TEST_CASE("numbers keep 17 significant digits") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-0.0) == "0");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv cells with separators are quoted") {
  Table t{{"a", "b"}, {{"x,y", "say \"hi\""}}};
  CHECK(to_csv(t) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
}

TEST_CASE("wmicro row carries the energies of both routes") {
  nlohmann::json timings;
  const Table t = execute(parse_scenario(kWmicro), "unused", 1, timings);
  REQUIRE(t.rows.size() == 1);
  auto col = [&](const std::string& name) {
    return t.rows[0][std::find(t.header.begin(), t.header.end(), name) - t.header.begin()];
  };
  const VortexConfig cfg({{0.5, 0.0}}, {1});
  CHECK(col("points") == "0.5:0");
  CHECK(col("degrees") == "1");
  CHECK(std::stod(col("w_lr")) == disk::lr_renormalized_energy(cfg));
  CHECK(std::stod(col("k_min")) == disk::k_min(cfg, 0.5, 1e-10));
  CHECK(std::stod(col("w_micro_closed")) == disk::w_micro_closed(cfg, 0.5));
  CHECK(std::stod(col("abs_difference")) <= 1e-9);
}

TEST_CASE("minimize row reports a converged gauge-fixed pair") {
  const auto sc = parse_scenario(R"({"name": "m", "kind": "minimize", "seed": 5,
    "payload": {"degrees": [1, 1], "b": 0.5, "n_starts": 8}})");
  nlohmann::json timings;
  const Table t = execute(sc, "unused", 1, timings);
  REQUIRE(t.rows.size() == 1);
  const auto& row = t.rows[0];
  auto col = [&](const std::string& name) { return row[std::find(t.header.begin(), t.header.end(), name) - t.header.begin()]; };
  CHECK(col("status") == "Converged");
  CHECK(col("seed") == "5");
  const auto cf = micro::n2_positive_minimizer(1, 1, 0.5);
  CHECK(std::stod(col("value")) == doctest::Approx(*cf.value).epsilon(1e-12));
  CHECK(col("points").rfind(format_number((*cf.points)[0].real()).substr(0, 10), 0) == 0);
}

TEST_CASE("rows carry the full input tuple") {
  const auto sc = parse_scenario(R"({"name": "m", "kind": "minimize", "seed": 5,
    "payload": {"degrees": [[1], [1, -1]], "b": [0.5, 2.0], "n_starts": 4}})");
  nlohmann::json timings;
  const Table t = execute(sc, "unused", 1, timings);
  CHECK(t.rows.size() == 4);
  for (const auto& r : t.rows) {
    CHECK(r.size() == t.header.size());
    CHECK(!r[1].empty());
    CHECK(!r[2].empty());
  }
}

TEST_CASE("reruns write byte-identical csv and a full meta record") {
  const fs::path file = scratch("random.json");
  {
    std::ofstream f(file);
    f << R"({"name": "r", "kind": "wmicro", "seed": 17,
      "payload": {"random": {"count": 25, "max_n": 5}, "tol": 1e-10}})";
  }
  const auto a = run(file, scratch("r1").string(), 1);
  const auto b = run(file, scratch("r2").string(), 2);
  CHECK(a.rows == 25);
  CHECK(slurp(a.csv) == slurp(b.csv));
  const auto meta = nlohmann::json::parse(slurp(a.meta));
  for (const char* key : {"scenario", "kind", "seed", "seed_source", "input", "versions", "wall_seconds", "timestamp"})
    CHECK(meta.contains(key));
  CHECK(meta["seed"] == 17);
  CHECK(slurp(a.csv).find("wall") == std::string::npos);
  for (const auto& entry : fs::directory_iterator(scratch("")))
    CHECK(entry.path().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("a different seed changes random configurations") {
  nlohmann::json t1, t2;
  const char* doc = R"({"name": "r", "kind": "wmicro", "seed": 3, "payload": {"random": {"count": 5}}})";
  const auto a = execute(parse_scenario(doc), "x", 1, t1);
  const auto b = execute(parse_scenario(doc, 4), "x", 1, t2);
  CHECK(to_csv(a) != to_csv(b));
}

TEST_CASE("sweeps write one file per child") {
  const fs::path file = scratch("sweep.json");
  {
    std::ofstream f(file);
    f << R"({"name": "s", "kind": "sweep", "seed": 2, "payload": {"scenarios": [
      {"name": "a", "kind": "wmicro", "payload": {"configs": [{"points": [[0.3, 0], [-0.3, 0]], "degrees": [1, 1]}], "b": [0.5, 1.0]}},
      {"name": "b", "kind": "minimize", "payload": {"degrees": [1, 2], "b": 0.5, "n_starts": 4}}]}})";
  }
  const auto out = run(file, scratch("sweep").string(), 2);
  CHECK(out.rows == 2);
  CHECK(fs::exists(scratch("sweep.a.csv")));
  CHECK(fs::exists(scratch("sweep.b.csv")));
  CHECK(fs::exists(scratch("sweep.b.meta.json")));
  const auto again = run(file, scratch("sweep2").string(), 1);
  CHECK(slurp(scratch("sweep.csv")) == slurp(scratch("sweep2.csv")));
  CHECK(slurp(scratch("sweep.a.csv")) == slurp(scratch("sweep2.a.csv")));
  CHECK(slurp(scratch("sweep.b.csv")) == slurp(scratch("sweep2.b.csv")));
  (void)again;
}

TEST_CASE("module errors are wrapped with the scenario name") {
  const auto sc = parse_scenario(R"({"name": "edge", "kind": "wmicro",
    "payload": {"configs": [{"points": [[1.5, 0]], "degrees": [1]}], "b": 0.5}})");
  nlohmann::json timings;
  try {
    execute(sc, "x", 1, timings);
    FAIL("expected ComputeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ComputeError);
    CHECK(std::string(e.what()).find("edge") != std::string::npos);
    CHECK(std::string(e.what()).find("BoundaryDegenerate") != std::string::npos);
    const auto rec = nlohmann::json::parse(error_record(e, "edge"));
    CHECK(rec["error"] == "ComputeError");
    CHECK(rec["scenario"] == "edge");
  }
}

TEST_CASE("the executable exits nonzero with an error record") {
  const fs::path bad = scratch("bad.json");
  {
    std::ofstream f(bad);
    f << R"({"name": "bad", "kind": "minimize", "payload": {"degrees": [1]}})";
  }
  const fs::path err = scratch("bad.err");
  const std::string cmd = std::string(RENORM_CLI_PATH) + " run " + bad.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CHECK(status != 0);
  CHECK(WEXITSTATUS(status) == 3);
  const auto rec = nlohmann::json::parse(slurp(err));
  CHECK(rec["error"] == "ValidationError");
  CHECK(rec["scenario"] == "bad");

  const fs::path ok = scratch("ok.json");
  {
    std::ofstream f(ok);
    f << kWmicro;
  }
  const std::string run_ok = std::string(RENORM_CLI_PATH) + " run " + ok.string() + " --out " +
                             scratch("ok").string() + " > /dev/null";
  CHECK(std::system(run_ok.c_str()) == 0);
  CHECK(fs::exists(scratch("ok.csv")));
}

TEST_CASE("regimes table") {
  const auto cfg = nlohmann::json::parse(R"({"b": [0.5, 1.0, 2.0], "degrees": [[1], [1, 1], [1, -1]], "n_starts": 4})");
  const Table t = regimes_table(cfg);
  CHECK(t.rows.size() == 9);
  const std::string csv = to_csv(t);
  CHECK(csv.find("InfimumNotAttainedBEqualsOne") != std::string::npos);
  CHECK(csv.find("BoundaryEscapeBGreaterOne") != std::string::npos);
  CHECK(csv.find("MixedSignUnbounded") != std::string::npos);
}

}

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clonesim/cli.hpp"
#include "clonesim/config.hpp"
#include "clonesim/dataset_io.hpp"
#include "clonesim/errors.hpp"
#include "doctest.h"

using namespace clonesim;
using doctest::Approx;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "clonesim_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) { std::ofstream(path) << text; }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  return cells;
}

// Row whose first cell parses to `t`.
std::vector<std::string> row_at(const std::string& table, double t) {
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    auto cells = split(line);
    if (!cells.empty() && std::stod(cells[0]) == t) return cells;
  }
  return {};
}

}  // namespace

TEST_CASE("dataset round trip") {
  fit::DataSet data{{
      {.experiment = 1, .arm = "8.5", .kind = fit::ObservableKind::log_count, .time = 168, .value = 2.6749},
      {.experiment = 2, .arm = "ii", .kind = fit::ObservableKind::profile, .time = 84, .division = 5, .value = 31.8,
       .weight = 0.25},
      {.experiment = 3, .arm = "i", .kind = fit::ObservableKind::recruitment, .time = 132, .value = 1.0 / 3.0},
  }};
  std::stringstream buf;
  write_dataset(buf, data);
  CHECK(read_dataset(buf) == data);
  CHECK(format_number(1.0 / 3.0) == "3.3333333333333331e-01");
}

TEST_CASE("dataset parsing") {
  std::istringstream reordered(
      "# comment\n"
      "value,kind,arm,experiment,time_h\n"
      "\n"
      "2.5,log_count,0.1,1,168\n");
  const auto data = read_dataset(reordered);
  REQUIRE(data.records.size() == 1);
  CHECK(data.records[0].arm == "0.1");
  CHECK(data.records[0].weight == 1.0);
  CHECK(data.records[0].division == 0);

  const auto fails = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_dataset(in), InvalidArgument);
  };
  fails("");
  fails("# only a comment\n");
  fails("experiment,arm,kind,time_h\n1,8.5,log_count,168\n");  // no value column
  fails("experiment,arm,kind,time_h,value,extra\n");
  fails("experiment,arm,kind,time_h,value\n1,8.5,log_count,abc,1\n");
  fails("experiment,arm,kind,time_h,value\n1,8.5,log_count,168\n");
  fails("experiment,arm,kind,time_h,value\n1,8.5,volume,168,1\n");

  std::istringstream bad("experiment,arm,kind,time_h,value\n1,8.5,log_count,168,1\n1,8.5,log_count,x,1\n");
  try {
    read_dataset(bad);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("config round trip") {
  RunConfig c;
  c.preset = Preset::custom;
  c.params.tau = 4.5;
  c.scenario = build_experiment3(Group::ii);
  c.scenario.initial_antigen = 0.3;
  c.solver.step_h = 0.125;
  c.fit.free = {"r_e", "g"};
  c.fit.bounds["r_e"] = {0.5, 3.0};
  c.seed = 99;
  CHECK(parse_config(dump_config(c)) == c);
  CHECK(parse_config("{}") == RunConfig{});
  CHECK(parse_config(dump_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"params": {"zeta": 1}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"scenario": {"cohorts": [{"labl": "x"}]}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"n0": "many"})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"preset": "experiment9"})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"output": {"grid_h": 0}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("{"), InvalidArgument);
}

TEST_CASE("scenario resolution") {
  RunConfig c;
  c.preset = Preset::experiment2;
  c.group = Group::iii;
  c.params.s = 0.002;
  CHECK(resolve_scenario(c) == build_experiment2(Group::iii, c.params));
  c.preset = Preset::experiment1;
  c.n0 = 1.3;
  c.antigen_dose = 0.0;
  const auto s = resolve_scenario(c);
  CHECK(s.cohorts[0].initial_naive == 1.3);
  CHECK(s.antigen.dose == 0.0);
}

TEST_CASE("cli simulate") {
  const auto r = invoke({"simulate", "--preset", "experiment1", "--n0", "8.5"});
  REQUIRE(r.code == cli::kOk);
  const auto header = split(r.out.substr(0, r.out.find('\n')));
  CHECK(header.front() == "time_h");
  CHECK(header[1] == "antigen");
  CHECK(header.back() == "labelled.total");
  CHECK(header.size() == 2 + 42);
  const auto day0 = row_at(r.out, 0.0);
  REQUIRE(!day0.empty());
  CHECK(std::stod(day0.back()) == Approx(8.5).epsilon(1e-12));
  CHECK(!row_at(r.out, 0.5).empty());
  CHECK(!row_at(r.out, 1008.0).empty());

  SUBCASE("byte-identical on repeat") { CHECK(invoke({"simulate", "--preset", "experiment1", "--n0", "8.5"}).out == r.out); }

  SUBCASE("no antigen keeps the total constant") {
    const auto flat = invoke({"simulate", "--preset", "experiment1", "--antigen-dose", "0", "--grid-h", "24"});
    REQUIRE(flat.code == cli::kOk);
    std::istringstream in(flat.out);
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
      CHECK(std::stod(split(line).back()) == 8.5);
      ++rows;
    }
    CHECK(rows > 40);
  }
}

TEST_CASE("cli report") {
  const auto two = invoke({"report", "--preset", "experiment2"});
  REQUIRE(two.code == cli::kOk);
  CHECK(two.out.rfind("experiment,arm,metric,value\n", 0) == 0);
  int recruitment_rows = 0;
  std::istringstream in(two.out);
  for (std::string line; std::getline(in, line);) {
    const auto cells = split(line);
    if (cells.size() == 4 && cells[2] == "recruitment_pct") {
      ++recruitment_rows;
      const double v = std::stod(cells[3]);
      if (cells[1] == "i") CHECK(v == Approx(76).epsilon(0.07));
      if (cells[1] == "ii") CHECK(v == Approx(74).epsilon(0.07));
      if (cells[1] == "iii") CHECK(v == Approx(58).epsilon(0.09));
    }
  }
  CHECK(recruitment_rows == 3);

  const auto one = invoke({"report", "--preset", "experiment1"});
  REQUIRE(one.code == cli::kOk);
  CHECK(one.out.find("all,fold_day0,9.4700000000000") != std::string::npos);

  const auto three = invoke({"report", "--preset", "experiment3"});
  REQUIRE(three.code == cli::kOk);
  CHECK(three.out.find("3,iii,recruitment_pct,") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  CHECK(invoke({}).code != cli::kOk);
  CHECK(invoke({"frobnicate"}).code != cli::kOk);
  CHECK(invoke({"simulate", "--preset", "experiment7"}).code == cli::kConfigError);
  CHECK(invoke({"simulate", "--param", "zeta=1"}).code == cli::kConfigError);
  CHECK(invoke({"simulate", "--param", "g=0.5"}).code == cli::kConfigError);
  CHECK(invoke({"simulate", "--config", scratch("missing.json").string()}).code == cli::kConfigError);
  CHECK(invoke({"simulate", "--step-h", "10"}).code == cli::kConfigError);

  const auto empty = scratch("empty.csv");
  write_text(empty, "");
  CHECK(invoke({"fit", "--data", empty.string()}).code == cli::kConfigError);
  write_text(empty, "experiment,arm,kind,time_h,value\n");
  CHECK(invoke({"fit", "--data", empty.string()}).code == cli::kConfigError);

  // A huge proliferation rate overflows the state.
  CHECK(invoke({"simulate", "--preset", "experiment1", "--param", "r_e=1e6", "--param", "g=0"}).code ==
        cli::kSolverFailure);
}

TEST_CASE("cli dump-config round trip") {
  const auto dumped = invoke({"simulate", "--preset", "experiment3", "--group", "ii", "--param", "s=0.002", "--seed", "5",
                           "--dump-config"});
  REQUIRE(dumped.code == cli::kOk);
  const auto path = scratch("dumped.json");
  write_text(path, dumped.out);
  const auto again = invoke({"simulate", "--config", path.string(), "--dump-config"});
  CHECK(again.out == dumped.out);
  const auto cfg = parse_config(dumped.out);
  CHECK(cfg.preset == Preset::experiment3);
  CHECK(cfg.group == Group::ii);
  CHECK(cfg.params.s == 0.002);
  CHECK(cfg.seed == 5);

  CHECK(invoke({"simulate", "--config", path.string()}).out ==
        invoke({"simulate", "--preset", "experiment3", "--group", "ii", "--param", "s=0.002"}).out);
}

TEST_CASE("cli synthesize and fit") {
  const auto data_path = scratch("clean.csv");
  REQUIRE(invoke({"synthesize", "--noise", "0", "--out", data_path.string()}).code == cli::kOk);
  const auto data = read_dataset_file(data_path.string());
  CHECK(data.records.size() > 12);

  const auto r = invoke({"fit", "--data", data_path.string(), "--free", "r_e", "--param", "r_e=1.4", "--param", "d=0.001"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find(",free,1.3999999999999999e+00,") != std::string::npos);
  CHECK(r.out.find("\nd,1.0000000000000000e-03,fixed") != std::string::npos);
  CHECK(r.out.find("converged,true") != std::string::npos);

  const auto capped = invoke({"fit", "--data", data_path.string(), "--free", "r_e,tau", "--param", "r_e=1.0",
                           "--max-iterations", "1"});
  CHECK(capped.code == cli::kNotConverged);
  CHECK(capped.out.find("converged,false") != std::string::npos);
}

TEST_CASE("cli sweep") {
  const auto r = invoke({"sweep", "--preset", "experiment2", "--grid", "s=0,0.0009", "--grid", "n0=1"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("s,n0,", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
  CHECK(invoke({"sweep", "--grid", "s=abc"}).code == cli::kConfigError);
}

TEST_CASE("output file and worker cap") {
  const auto path = scratch("traj.csv");
  std::filesystem::remove(path);
  CHECK(invoke({"simulate", "--preset", "experiment2", "--out", path.string()}).code == cli::kOk);
  CHECK(std::filesystem::file_size(path) > 0);
  std::ifstream in(path);
  const std::string to_file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  ::setenv("CLONESIM_THREADS", "1", 1);
  const auto one = invoke({"report", "--preset", "experiment3"});
  ::setenv("CLONESIM_THREADS", "3", 1);
  const auto three = invoke({"report", "--preset", "experiment3"});
  ::unsetenv("CLONESIM_THREADS");
  CHECK(one.out == three.out);
  CHECK(to_file == invoke({"simulate", "--preset", "experiment2"}).out);
}

TEST_CASE("documented examples load") {
  const std::string docs = CLONESIM_DOCS_DIR;
  const auto config = load_config(docs + "/example_config.json");
  CHECK(config.preset == Preset::custom);
  CHECK(parse_config(dump_config(config)) == config);
  CHECK_NOTHROW(run(resolve_scenario(config)));
  const auto data = read_dataset_file(docs + "/example_data.csv");
  CHECK(data.records.size() == 37);
  CHECK_NOTHROW(fit::validate(data));
}

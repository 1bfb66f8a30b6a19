#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "clonesim/errors.hpp"
#include "clonesim/scenarios.hpp"
#include "doctest.h"

using namespace clonesim;
using doctest::Approx;

TEST_CASE("group tags") {
  CHECK(parse_group("i") == Group::i);
  CHECK(parse_group("iii") == Group::iii);
  CHECK(to_string(Group::ii) == "ii");
  CHECK_THROWS_AS(parse_group("iv"), InvalidArgument);
}

TEST_CASE("experiment builders") {
  SUBCASE("experiment 1") {
    const auto spec = build_experiment1(8.5);
    REQUIRE(spec.cohorts.size() == 1);
    CHECK(spec.cohorts[0].initial_naive == 8.5);
    CHECK_FALSE(spec.cohorts[0].supply.enabled);
    CHECK(spec.antigen.t_k == 0.0);
    CHECK(spec.horizon == 1008.0);
    CHECK(start_time(spec) == 0.0);
    CHECK(supplied_cells(spec, 0) == 8.5);
    CHECK_THROWS_AS(build_experiment1(0.0), InvalidArgument);
  }
  SUBCASE("experiment 2") {
    const auto one = build_experiment2(Group::i);
    CHECK(one.cohorts.size() == 1);
    CHECK(one.cohorts[0].supply.t_c == 24.0);
    CHECK(one.cohorts[0].supply.dose == kTransferDose);
    CHECK(one.horizon == 84.0);
    CHECK(start_time(one) == -12.0);
    const auto two = build_experiment2(Group::ii);
    REQUIRE(two.cohorts.size() == 2);
    CHECK(two.cohorts[1].supply.t_c == 24.0);
    CHECK(build_experiment2(Group::iii).cohorts[1].supply.t_c == 0.0);
    CHECK(supplied_cells(two, 1) == kTransferDose);
  }
  SUBCASE("experiment 3") {
    const auto three = build_experiment3(Group::iii);
    REQUIRE(three.cohorts.size() == 2);
    CHECK(three.cohorts[0].supply.t_c == 72.0);
    CHECK(three.cohorts[1].supply.t_c == 0.0);
    CHECK(build_experiment3(Group::ii).cohorts[1].supply.t_c == 48.0);
    CHECK(three.horizon == 132.0);
  }
}

TEST_CASE("scenario validation") {
  auto spec = build_experiment2(Group::ii);
  spec.horizon = -1.0;
  CHECK_THROWS_AS(validate(spec), InvalidArgument);
  spec = build_experiment2(Group::ii);
  spec.cohorts.clear();
  CHECK_THROWS_AS(validate(spec), InvalidArgument);
  spec = build_experiment2(Group::ii);
  spec.params.g = 0.5;
  CHECK_THROWS_AS(run(spec), InvalidArgument);
}

TEST_CASE("experiment 1 observables") {
  std::map<double, SimulationResult> arms;
  for (double n0 : kExperiment1Arms) arms.emplace(n0, run(build_experiment1(n0)));
  CHECK(fold_difference(arms, 0.0) == Approx(947.0).epsilon(1e-12));
  for (const auto& [n0, r] : arms) {
    CHECK(r.total(0.0) == Approx(n0).epsilon(1e-12));
    CHECK(r.total(168.0) > n0);
  }
  std::vector<std::pair<double, double>> points;
  for (const auto& [n0, r] : arms) points.emplace_back(n0, recruitment_fraction(r, 0, n0));
  const auto reg = recruitment_regression(points);
  CHECK(reg.slope < 0.0);
  CHECK(reg.r_squared > 0.9);
  CHECK(reg.r_squared <= 1.0);

  std::map<double, SimulationResult> one;
  one.emplace(8.5, run(build_experiment1(8.5)));
  CHECK_THROWS_AS(fold_difference(one, 0.0), InvalidArgument);
}

TEST_CASE("recruitment regression") {
  const auto exact = recruitment_regression({{1.0, 50.0}, {10.0, 44.0}, {100.0, 38.0}});
  CHECK(exact.slope == Approx(-6.0));
  CHECK(exact.intercept == Approx(50.0));
  CHECK(exact.r_squared == Approx(1.0));
  CHECK_THROWS_AS(recruitment_regression({{1.0, 50.0}, {10.0, 44.0}}), InvalidArgument);
  CHECK_THROWS_AS(recruitment_regression({{1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}}), UndefinedObservable);
}

TEST_CASE("recruitment and profiles in experiment 2") {
  const auto results = run_all({build_experiment2(Group::i), build_experiment2(Group::ii), build_experiment2(Group::iii)});
  std::vector<double> rec;
  for (const auto& r : results) {
    const double pct = recruitment_fraction(r, 0, kTransferDose);
    CHECK(pct >= 0.0);
    CHECK(pct <= 100.0);
    rec.push_back(pct);
    const auto profile = division_profile(r, r.spec().horizon, 0);
    CHECK(profile.size() == 20);
    CHECK(std::accumulate(profile.begin(), profile.end(), 0.0) == Approx(100.0).epsilon(1e-12));
    for (double v : profile) CHECK(v >= 0.0);
  }
  CHECK(rec[0] >= rec[1]);
  CHECK(rec[1] > rec[2]);

  SUBCASE("no division before activation is possible") {
    CHECK_THROWS_AS(division_profile(results[0], 20.0, 0), UndefinedObservable);
    CHECK(recruitment_fraction_at(results[0], 20.0, 0, kTransferDose) ==
          Approx(100.0 * (1.0 - results[0].naive(20.0, 0) / kTransferDose)));
  }

  SUBCASE("equal cohorts trace each other") {
    for (double t : {30.0, 60.0, 84.0}) {
      const auto totals = cohort_activated_totals(results[1], t);
      REQUIRE(totals.size() == 2);
      CHECK(totals[0] == Approx(totals[1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("profile helpers") {
  std::vector<double> profile(20, 0.0);
  profile[0] = 10.0;
  profile[3] = 60.0;
  profile[6] = 29.5;
  profile[9] = 0.5;
  CHECK(profile_mode(profile) == 4);
  CHECK(profile_support(profile) == 7);
  CHECK(profile_support(profile, 0.1) == 10);
  CHECK_THROWS_AS(profile_mode({}), UndefinedObservable);
}

TEST_CASE("state stays nonnegative") {
  for (const auto& spec : {build_experiment1(0.1), build_experiment2(Group::iii), build_experiment3(Group::ii)}) {
    const auto r = run(spec);
    const double t0 = r.trajectory().t0();
    for (double t = t0; t <= spec.horizon; t += 0.5) {
      for (double v : r.state(t)) CHECK(v >= -1e-6);
    }
  }
}

TEST_CASE("results are independent of the worker schedule") {
  const std::vector<ScenarioSpec> specs{build_experiment3(Group::i), build_experiment3(Group::ii)};
  const auto parallel = run_all(specs);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto serial = run(specs[k]);
    CHECK(serial.state(specs[k].horizon) == parallel[k].state(specs[k].horizon));
  }
}

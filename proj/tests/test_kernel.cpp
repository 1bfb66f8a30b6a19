#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "clonesim/errors.hpp"
#include "clonesim/kernel.hpp"
#include "clonesim/params.hpp"
#include "clonesim/supply.hpp"
#include "doctest.h"

using namespace clonesim;
using doctest::Approx;

TEST_CASE("default parameters") {
  const ModelParams p;
  CHECK(p.r_e == 1.5412);
  CHECK(p.r_N == 0.0497);
  CHECK(p.g == 0.0994);
  CHECK(p.d == 0.0009);
  CHECK(p.M == 10);
  CHECK(p.s == 0.0009);
  CHECK(p.s_N == 0.0);
  CHECK(p.sigma == 24.0);
  CHECK(p.tau == 3.9796);
  CHECK(p.d_A == 0.01);
  CHECK(p.K == 20);
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("parameter validation") {
  ModelParams p;
  p.g = 0.1;  // g*M == 1
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  p = {};
  p.K = 5;  // K < M
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  p = {};
  p.tau = 0.0;
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  p = {};
  p.d = -1.0;
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  CHECK_THROWS_AS(set_param(p, "M", 2.5), InvalidArgument);
  CHECK_THROWS_AS(set_param(p, "bogus", 1.0), InvalidArgument);
}

TEST_CASE("proliferation_rate") {
  const ModelParams p;
  CHECK(proliferation_rate(1, p) == Approx(1.5412).epsilon(1e-15));
  CHECK(proliferation_rate(5, p) == Approx(1.5412 * (1.0 - 0.0994 * 4)).epsilon(1e-14));
  CHECK(std::abs(proliferation_rate(5, p) - 0.928417) < 5e-6);
  CHECK(proliferation_rate(11, p) == Approx(0.0092472).epsilon(1e-9));
  ModelParams flat;
  flat.g = 0.0;
  for (int i = 1; i <= 30; ++i) CHECK(proliferation_rate(i, flat) == flat.r_e);

  CHECK_THROWS_AS(proliferation_rate(0, p), InvalidArgument);
  ModelParams bad;
  bad.g = 0.2;
  CHECK_THROWS_AS(proliferation_rate(1, bad), InvalidArgument);

  SUBCASE("nonincreasing, positive, constant from M") {
    for (int i = 1; i < 3 * p.M; ++i) {
      CHECK(proliferation_rate(i + 1, p) <= proliferation_rate(i, p));
      CHECK(proliferation_rate(i, p) > 0.0);
      if (i >= p.M) CHECK(proliferation_rate(i, p) == proliferation_rate(p.M, p));
    }
  }
}

TEST_CASE("naive supply") {
  NaiveSupplySpec spec{.dose = 17.0, .t_c = 24.0};
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const double total = gk.integrate([&](double t) { return naive_supply_rate(t, spec); }, 14.0, 44.0, 15, 1e-13);
  CHECK(total == Approx(17.0).epsilon(1e-3));

  NaiveSupplySpec unit{.dose = 1.0, .t_c = 0.0};
  CHECK(naive_supply_rate(3.0, unit) == Approx(1.0 / (0.75 * std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-14));
  CHECK(naive_supply_rate(3.0, unit) == Approx(0.531923).epsilon(1e-6));

  SUBCASE("peak three hours after injection") {
    double best_t = 0.0, best = -1.0;
    for (int k = 0; k <= 6000; ++k) {
      const double t = 20.0 + 0.002 * k;
      if (naive_supply_rate(t, spec) > best) best = naive_supply_rate(t, spec), best_t = t;
    }
    CHECK(best_t == Approx(27.0).epsilon(1e-9));
  }

  SUBCASE("about 91% supplied by the fourth hour") {
    const double by_four = gk.integrate([&](double t) { return naive_supply_rate(t, unit); }, -10.0, 4.0, 15, 1e-13);
    CHECK(by_four == Approx(0.91).epsilon(0.005));
    CHECK(naive_supply_cumulative(4.0, unit) == Approx(by_four).epsilon(1e-10));
  }

  spec.enabled = false;
  CHECK(naive_supply_rate(27.0, spec) == 0.0);
  CHECK(naive_supply_cumulative(100.0, spec) == 0.0);
}

TEST_CASE("antigen supply") {
  const AntigenSupplySpec spec{.t_k = -12.0};
  const double onset = spec.location();
  CHECK(onset == 0.0);
  CHECK(antigen_supply_rate(onset, spec) == 0.0);
  for (double t : {-100.0, -1.0, -1e-9}) CHECK(antigen_supply_rate(t, spec) == 0.0);
  for (double t : {1e-3, 0.5, 10.0, 1e4}) CHECK(antigen_supply_rate(t, spec) > 0.0);

  boost::math::quadrature::tanh_sinh<double> ts;
  const auto rate = [&](double t) { return antigen_supply_rate(t, spec); };
  const double heavy = ts.integrate(rate, onset, onset + 1e6);
  CHECK(heavy == Approx(1.0).epsilon(1e-2));

  SUBCASE("first-day fraction matches the closed-form Levy CDF") {
    const double expected = std::erfc(std::sqrt(1.0 / 48.0));
    CHECK(expected == Approx(0.8383).epsilon(1e-4));
    const double day = ts.integrate(rate, onset, onset + 24.0);
    CHECK(day == Approx(expected).epsilon(1e-9));
    CHECK(antigen_supply_cumulative(onset + 24.0, spec) == Approx(expected).epsilon(1e-12));
  }

  SUBCASE("dose scales linearly") {
    AntigenSupplySpec half = spec;
    half.dose = 0.5;
    CHECK(antigen_supply_rate(5.0, half) == Approx(0.5 * antigen_supply_rate(5.0, spec)));
  }

  AntigenSupplySpec bad = spec;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
}

namespace {

Supplies quiet_supplies(int cohorts) {
  Supplies s{.antigen = {.dose = 0.0}, .naive = {}};
  for (int c = 0; c < cohorts; ++c) s.naive.push_back({.enabled = false});
  return s;
}

std::vector<double> random_state(const StateLayout& layout, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<double> y(layout.size());
  for (auto& v : y) v = u(rng);
  return y;
}

}  // namespace

TEST_CASE("state layout") {
  const StateLayout layout(2, 20);
  CHECK(layout.size() == 1 + 2 * 41);
  CHECK(layout.naive(0) == 1);
  CHECK(layout.activated(0, 1) == 2);
  CHECK(layout.activated(0, 20) == 21);
  CHECK(layout.first_transit(0) == 22);
  CHECK(layout.transit(0, 1) == 23);
  CHECK(layout.transit(0, 19) == 41);
  CHECK(layout.naive(1) == 42);
  CHECK_THROWS_AS(StateLayout(0, 20), InvalidArgument);
}

TEST_CASE("rhs examples") {
  const ModelParams p;
  const StateLayout layout(1, p.K);
  const std::size_t n = layout.size();

  SUBCASE("no antigen means no activation") {
    Supplies s = quiet_supplies(1);
    s.naive[0] = {.dose = 17.0, .t_c = 0.0};
    std::mt19937_64 rng(1);
    auto now = random_state(layout, rng);
    now[0] = 0.0;
    auto lag_s = random_state(layout, rng);
    lag_s[0] = 0.0;
    auto lag_t = random_state(layout, rng);
    lag_t[0] = 0.0;
    const auto dy = rhs(3.0, now, lag_s, lag_t, s, p);
    CHECK(dy[0] == 0.0);
    CHECK(dy[layout.naive(0)] == Approx(naive_supply_rate(3.0, s.naive[0])));
    for (int i = 1; i <= p.K; ++i) {
      CHECK(dy[layout.activated(0, i)] == Approx(-p.d * now[layout.activated(0, i)]));
    }
  }

  SUBCASE("antigen grazing by activated cells") {
    std::vector<double> now(n, 0.0), lag(n, 0.0);
    now[0] = 1.0;
    now[layout.activated(0, 1)] = 10.0;
    const auto dy = rhs(0.0, now, lag, lag, quiet_supplies(1), p);
    CHECK(dy[0] == Approx(-0.019).epsilon(1e-14));
  }

  SUBCASE("first-division arrivals") {
    std::vector<double> now(n, 0.0), lag_s(n, 0.0), lag_t(n, 0.0);
    lag_s[layout.naive(0)] = 5.0;
    lag_s[0] = 0.5;
    const auto dy = rhs(0.0, now, lag_s, lag_t, quiet_supplies(1), p);
    CHECK(dy[layout.activated(0, 1)] == Approx(0.2485).epsilon(1e-14));
    CHECK(dy[layout.first_transit(0)] == Approx(-0.12425).epsilon(1e-14));
  }

  SUBCASE("nonfinite input") {
    std::vector<double> now(n, 0.0), lag(n, 0.0);
    now[0] = std::nan("");
    now[layout.activated(0, 1)] = 1.0;
    CHECK_THROWS_AS(rhs(0.0, now, lag, lag, quiet_supplies(1), p), IntegrationError);
  }
}

TEST_CASE("rhs scales linearly in cells at fixed antigen") {
  const ModelParams p;
  const StateLayout layout(2, p.K);
  const Supplies s = quiet_supplies(2);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto now = random_state(layout, rng);
    auto ls = random_state(layout, rng);
    auto lt = random_state(layout, rng);
    auto now2 = now, ls2 = ls, lt2 = lt;
    for (std::size_t k = 1; k < layout.size(); ++k) now2[k] *= 2, ls2[k] *= 2, lt2[k] *= 2;
    const auto a = rhs(1.0, now, ls, lt, s, p);
    const auto b = rhs(1.0, now2, ls2, lt2, s, p);
    for (std::size_t k = 1; k < layout.size(); ++k) CHECK(b[k] == Approx(2.0 * a[k]).epsilon(1e-12));
    const double decay = -p.d_A * now[0];
    CHECK(b[0] - decay == Approx(2.0 * (a[0] - decay)).epsilon(1e-12));
  }
}

TEST_CASE("an empty second cohort leaves the first cohort's dynamics unchanged") {
  ModelParams p;
  p.s_N = 0.002;
  const StateLayout one(1, p.K), two(2, p.K);
  Supplies s1{.antigen = {.t_k = -12.0}, .naive = {{.dose = 17.0, .t_c = 24.0}}};
  Supplies s2 = s1;
  s2.naive.push_back({.enabled = false});
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto now = random_state(one, rng), ls = random_state(one, rng), lt = random_state(one, rng);
    auto widen = [&](const std::vector<double>& y) {
      std::vector<double> w(two.size(), 0.0);
      std::copy(y.begin(), y.end(), w.begin());
      return w;
    };
    const double t = 20.0 + trial;
    const auto a = rhs(t, now, ls, lt, s1, p);
    const auto b = rhs(t, widen(now), widen(ls), widen(lt), s2, p);
    for (std::size_t k = 0; k < one.size(); ++k) CHECK(b[k] == a[k]);
    for (std::size_t k = one.size(); k < two.size(); ++k) CHECK(b[k] == 0.0);
  }
}

TEST_CASE("total_t_cells") {
  const StateLayout layout(1, 20);
  std::vector<double> y(layout.size(), 0.0);
  CHECK(total_t_cells(y, layout) == 0.0);
  y[layout.naive(0)] = 5.0;
  CHECK(total_t_cells(y, layout, 0) == 5.0);
  y[layout.naive(0)] = 1.0;
  y[layout.activated(0, 1)] = 2.0;
  y[layout.activated(0, 2)] = 4.0;
  y[layout.first_transit(0)] = 0.5;
  y[layout.transit(0, 1)] = 0.25;
  y[0] = 100.0;  // antigen is not a cell
  CHECK(total_t_cells(y, layout, 0) == 7.75);
  CHECK(activated_t_cells(y, layout, 0) == 6.75);
  CHECK_THROWS_AS(total_t_cells(y, layout, 1), InvalidArgument);

  const StateLayout two(2, 20);
  std::vector<double> z(two.size(), 1.0);
  CHECK(total_t_cells(z, two) == Approx(2 * 41.0));
}

#include <doctest.h>

#include <cmath>
#include <memory>

#include "ncer/elimination.hpp"
#include "ncer/errors.hpp"
#include "ncer/model_spec.hpp"
#include "ncer/rates.hpp"
#include "oracles.hpp"

using namespace ncer;

namespace {

constexpr double kSigns[] = {-1.0, 1.0};

double binary_entropy_rate(double a) {
  return (1 + a) / 2 * std::log1p(a) + (1 - a) / 2 * std::log1p(-a);
}

// phi for the centered Bernoulli product: F = -1/4 w.p. 3/4, 3/4 w.p. 1/4.
double bernoulli_log_mgf(double t) { return std::log(0.75 * std::exp(-t / 4) + 0.25 * std::exp(0.75 * t)); }

Observable constant(const FiniteDistribution& dist, int ell, double c) {
  return Observable::from_function(dist, ell, [c](std::span<const double>) { return c; });
}

}  // namespace

TEST_CASE("moment generating function") {
  const auto rad = preset("rademacher-product", 2);
  const auto ber = preset("bernoulli-product", 2);
  CHECK(std::abs(mgf(rad.dist, rad.obs, 1.0) - 1.5430806348152437) < 1e-14);
  CHECK(mgf(rad.dist, rad.obs, 0.0) == 1.0);
  CHECK(mgf(ber.dist, ber.obs, 0.0) == 1.0);
  for (double t : {-3.0, -0.5, 1e-9, 0.7, 2.0, 40.0})
    CHECK(std::abs(log_mgf(law_of(ber.obs, ber.dist), t) - bernoulli_log_mgf(t)) < 1e-13 * (1 + std::abs(t)));
  // Large arguments stay finite in log space.
  CHECK(std::abs(log_mgf(law_of(rad.obs, rad.dist), 800.0) - (800.0 - std::log(2.0))) < 1e-9);
}

TEST_CASE("cramer rate") {
  const auto rad = preset("rademacher-product", 2);
  const CramerRate rate(rad.dist, rad.obs);
  CHECK(std::abs(rate(0.5) - 0.1308120359411370) < 1e-9);
  CHECK(rate(0.0) == 0.0);
  CHECK(std::isinf(rate(1.5)));
  CHECK(std::isinf(rate(-1.0001)));
  // Boundary: -ln P(F = M+).
  CHECK(std::abs(rate(1.0) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(rate(-1.0) - std::log(2.0)) < 1e-12);

  for (double a = -0.95; a < 0.96; a += 0.05) {
    CAPTURE(a);
    CHECK(std::abs(rate(a) - binary_entropy_rate(a)) < 1e-9 * std::max(1.0, binary_entropy_rate(a)));
  }

  // Asymmetric case against a dense grid search of the conjugate.
  const auto ber = preset("bernoulli-product", 2);
  const CramerRate bi(ber.dist, ber.obs);
  for (double a : {-0.2, -0.1, 0.05, 0.3, 0.6}) {
    CAPTURE(a);
    const double grid = oracle::grid_conjugate(bernoulli_log_mgf, a, -30.0, 30.0, 600000);
    CHECK(std::abs(bi(a) - grid) < 1e-6);
  }
  CHECK(std::isinf(bi(-0.26)));
  CHECK(std::abs(bi(-0.25) + std::log(0.75)) < 1e-12);

  const auto signs = FiniteDistribution::uniform(kSigns);
  CHECK_THROWS_AS(CramerRate(signs, constant(signs, 2, 0.0)), DegenerateError);
  CHECK_THROWS_AS(CramerRate(signs, constant(signs, 1, 2.0) ), DegenerateError);
  CHECK_THROWS_AS(CramerRate(ber.dist, Observable::product(ber.dist, 2)), InputError);
}

TEST_CASE("cramer rate shape") {
  for (const auto& name : preset_names()) {
    const auto m = preset(name, 2);
    const CramerRate rate(m.dist, m.obs);
    const double lo = -m.obs.sup_neg(), hi = m.obs.sup_pos();
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double a = hi * i / 101.0;
      const double v = rate(a);
      CHECK(v > prev);
      prev = v;
    }
    prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double a = lo * i / 101.0;
      const double v = rate(a);
      CHECK(v > prev);
      prev = v;
    }
    for (int i = 1; i < 200; ++i) {
      const double x = lo + (hi - lo) * i / 201.0, y = lo + (hi - lo) * (i + 1) / 201.0;
      CHECK(rate(0.5 * (x + y)) <= 0.5 * (rate(x) + rate(y)) + 1e-8);
    }
  }
}

TEST_CASE("chain index structure") {
  const auto s2 = chain_index_structure(primes_up_to(2), 3);
  CHECK(s2.indices == std::vector<std::int64_t>{1, 2, 4, 8});
  for (int k = 0; k < 3; ++k) {
    CHECK(s2.positions(k, 0) == k);
    CHECK(s2.positions(k, 1) == k + 1);
  }

  const auto s3 = chain_index_structure(primes_up_to(3), 2);
  CHECK(s3.indices == std::vector<std::int64_t>{1, 2, 3, 4, 6});
  CHECK(s3.positions.row(0) == Eigen::RowVector3i(0, 1, 2));
  CHECK(s3.positions.row(1) == Eigen::RowVector3i(1, 3, 4));

  const auto s1 = chain_index_structure(primes_up_to(1), 5);
  CHECK(s1.indices == std::vector<std::int64_t>{1, 2, 3, 4, 5});
  for (int k = 0; k < 5; ++k) CHECK(s1.positions(k, 0) == k);
}

TEST_CASE("exact R_l against brute force") {
  const auto rad = preset("rademacher-product", 2);
  for (int l = 1; l <= 10; ++l) {
    std::vector<std::int64_t> b;
    for (int k = 0; k < l; ++k) b.push_back(std::int64_t{1} << k);
    for (double lambda : {-1.0, 0.5, 1.3}) {
      const double brute = oracle::brute_chain_mgf(rad.dist, rad.obs, b, lambda);
      CHECK(std::abs(r_l(rad.dist, rad.obs, lambda, l) / brute - 1.0) < 1e-12);
      CHECK(std::abs(r_l(rad.dist, rad.obs, lambda, l) / std::pow(std::cosh(lambda), l) - 1.0) < 1e-12);
    }
  }
  // ell = 3 with three primes interleaving, and a non-product observable.
  for (const auto& name : {"bernoulli-product", "indicator-match"}) {
    const auto m = preset(name, 3);
    const auto seq = smooth_numbers(primes_up_to(3), 7);
    for (int l = 1; l <= 6; ++l) {
      std::vector<std::int64_t> b(seq.h.begin(), seq.h.begin() + l);
      for (double lambda : {-0.8, 0.4}) {
        const double brute = oracle::brute_chain_mgf(m.dist, m.obs, b, lambda);
        CHECK(std::abs(r_l(m.dist, m.obs, lambda, l) / brute - 1.0) < 1e-12);
      }
    }
  }
  const auto signs = FiniteDistribution::uniform(kSigns);
  const auto c = constant(signs, 2, 0.3);
  for (int l = 1; l <= 6; ++l) {
    CHECK(r_l(rad.dist, rad.obs, 0.0, l) == 1.0);
    CHECK(std::abs(log_r_l(signs, c, 1.7, l) - 1.7 * 0.3 * l) < 1e-12);
  }
}

TEST_CASE("R_l stays finite for large lambda") {
  const auto rad = preset("rademacher-product", 2);
  const double v = log_r_l(rad.dist, rad.obs, 500.0, 20);
  CHECK(std::isfinite(v));
  CHECK(std::abs(v - 20 * (500.0 - std::log(2.0))) < 1e-8);
  const auto ber = preset("bernoulli-product", 2);
  for (int l = 1; l <= 12; ++l) {
    const double x = log_r_l(ber.dist, ber.obs, -2.0, l);
    CHECK(x >= 0.0);
    CHECK(x <= l * ber.obs.sup_abs() * 2.0);
  }
}

TEST_CASE("budget") {
  const auto rad = preset("rademacher-product", 3);
  CHECK_THROWS_AS(log_r_l(rad.dist, rad.obs, 1.0, 60, 1000), BudgetExceeded);
  try {
    log_r_l(rad.dist, rad.obs, 1.0, 60, 1000);
  } catch (const BudgetExceeded& e) {
    CHECK(e.budget() == 1000);
    CHECK(e.cost() > 1000);
    CHECK(std::string(e.what()).find("Monte Carlo") != std::string::npos);
  }
  CHECK_THROWS_AS(Pressure(rad.dist, rad.obs, primes_up_to(3), 1e-12, 10.0, 2000), ToleranceError);
  try {
    Pressure(rad.dist, rad.obs, primes_up_to(3), 1e-12, 10.0, 2000);
  } catch (const ToleranceError& e) {
    CHECK(e.achievable_tol() > 1e-12);
    CHECK(std::isfinite(e.achievable_tol()));
  }
}

TEST_CASE("monte carlo R_l") {
  const auto rad = preset("rademacher-product", 2);
  const auto zero = r_l_mc(rad.dist, rad.obs, 0.0, 5, 1000, 3);
  CHECK(zero.mean == 1.0);
  CHECK(zero.stderr_ == 0.0);

  const auto est = r_l_mc(rad.dist, rad.obs, 1.0, 5, 200000, 11);
  CHECK(std::abs(est.mean - std::pow(std::cosh(1.0), 5)) < 3 * est.stderr_);
  const auto again = r_l_mc(rad.dist, rad.obs, 1.0, 5, 200000, 11);
  CHECK(again.mean == est.mean);

  const auto ber = preset("bernoulli-product", 2);
  for (int l = 1; l <= 8; ++l)
    for (double lambda : {-1.0, -0.5, 0.5, 1.0}) {
      CAPTURE(l);
      CAPTURE(lambda);
      const auto mc = r_l_mc(ber.dist, ber.obs, lambda, l, 20000, 100 + l);
      CHECK(std::abs(mc.mean - r_l(ber.dist, ber.obs, lambda, l)) < 4 * mc.stderr_);
    }
  CHECK_THROWS_AS(r_l_mc(rad.dist, rad.obs, 1.0, 5, 999, 1), InputError);
}

TEST_CASE("weighted tail") {
  // ell = 2: sum_{l > L} 2^{-l} l = (L + 2) 2^{-L}.
  const auto b2 = primes_up_to(2);
  for (int L : {0, 1, 5, 20, 60})
    CHECK(std::abs(weighted_tail(b2, L) / ((L + 2) * std::ldexp(1.0, -L)) - 1.0) < 1e-12);
  // Near and past the enumerated range it remains a decreasing upper bound.
  for (int L : {100, 119, 120, 150, 200, 400}) {
    CHECK(weighted_tail(b2, L) >= (L + 2) * std::ldexp(1.0, -L));
    CHECK(weighted_tail(b2, L) < weighted_tail(b2, L - 1));
  }
  CHECK(weighted_tail(primes_up_to(1), 1) == 0.0);
  // sum_l w_l l = 1 / r; the enumerated part is exact, the remainder an upper bound.
  for (int ell : {2, 3, 5}) {
    const auto basis = primes_up_to(ell);
    CHECK(std::abs(weighted_tail(basis, 0) * basis.r_const - 1.0) < 1e-9);
  }
  CHECK(weighted_tail(primes_up_to(7), 0) * primes_up_to(7).r_const >= 1.0);
  // Against trial-division smooth numbers, using sum_l 1/h_l = 2 * 3/2 = 3
  // for the 3-smooth numbers.
  const auto brute = oracle::smooth_by_trial_division(3, 100000000);
  for (int L : {1, 10, 50, 200}) {
    long double head = 0;
    for (int l = 1; l <= L + 1; ++l) head += 1.0L / brute[static_cast<std::size_t>(l - 1)];
    const auto direct = static_cast<double>((L + 1.0L) / brute[static_cast<std::size_t>(L)] + 3.0L - head);
    CHECK(weighted_tail(primes_up_to(3), L) >= direct * (1 - 1e-12));
    CHECK(weighted_tail(primes_up_to(3), L) < direct * (1 + 1e-9));
  }
}

TEST_CASE("pressure closed forms") {
  const auto rad = preset("rademacher-product", 2);
  const Pressure q(rad.dist, rad.obs, primes_up_to(2), 1e-10, 4.0);
  CHECK(q(0.0) == 0.0);
  for (double lambda : {-4.0, -1.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
    CHECK(std::abs(q(lambda) - std::log(std::cosh(lambda))) < 1e-10);
    CHECK(q.tail_bound(lambda) < 1e-10);
  }
  CHECK(std::abs(pressure(rad.dist, rad.obs, primes_up_to(2), 1.0, 1e-8) - 0.43378083088) < 1e-8);

  const auto signs = FiniteDistribution::uniform(kSigns);
  // Deeper bases cannot certify 1e-9 within the default budget.
  for (auto [ell, tol] : {std::pair{1, 1e-9}, {2, 1e-9}, {3, 1e-4}}) {
    CAPTURE(ell);
    const auto c = constant(signs, ell, 0.7);
    const Pressure qc(signs, c, primes_up_to(ell), tol, 2.0);
    for (double lambda : {-2.0, 0.3, 2.0}) CHECK(std::abs(qc(lambda) - 0.7 * lambda) < tol);
  }
  CHECK_THROWS_AS(Pressure(signs, constant(signs, 5, 0.7), primes_up_to(5), 1e-3, 2.0), ToleranceError);

  // ell = 1: Q = ln phi.
  const auto ber1 = preset("bernoulli-product", 1);
  const Pressure q1(ber1.dist, ber1.obs, primes_up_to(1), 1e-12, 5.0);
  CHECK(q1.truncation() == 1);
  for (double lambda : {-5.0, -1.0, 0.5, 3.0})
    CHECK(std::abs(q1(lambda) - std::log(mgf(ber1.dist, ber1.obs, lambda))) < 1e-12);
}

TEST_CASE("pressure properties") {
  // Every truncation is itself convex and smooth, so a coarse ell = 3 series keeps this fast.
  for (auto [ell, tol] : {std::pair{2, 1e-9}, {3, 1e-2}}) {
    for (const auto& name : preset_names()) {
      CAPTURE(ell);
      CAPTURE(name);
      const auto m = preset(name, ell);
      const Pressure q(m.dist, m.obs, primes_up_to(ell), tol, 3.0);
      const double big_m = m.obs.sup_abs();
      for (int i = -30; i <= 30; ++i) {
        const double x = 0.1 * i;
        CHECK(q(x) >= -1e-12);
        CHECK(q(x) <= big_m * std::abs(x) + 1e-9);
        if (i < 30) CHECK(q(x + 0.05) <= 0.5 * (q(x) + q(x + 0.1)) + 1e-8);
      }
      // Q'(0) = 0 and bounded, refinement-stable derivatives.
      const double h = 1e-4;
      CHECK(std::abs((q(h) - q(-h)) / (2 * h)) < 1e-6);
      for (double x : {-1.0, 0.5, 2.0}) {
        const double d1a = (q(x + 1e-3) - q(x - 1e-3)) / 2e-3;
        const double d1b = (q(x + 5e-4) - q(x - 5e-4)) / 1e-3;
        const double d2a = (q(x + 1e-3) - 2 * q(x) + q(x - 1e-3)) / 1e-6;
        const double d2b = (q(x + 2e-3) - 2 * q(x) + q(x - 2e-3)) / 4e-6;
        CHECK(std::abs(d1a) <= big_m + 1e-6);
        CHECK(std::abs(d1a - d1b) < 1e-5);
        CHECK(std::abs(d2a - d2b) < 1e-2);
        CHECK(d2a >= -1e-3);
      }
    }
  }
}

TEST_CASE("finite pressure") {
  const auto rad = preset("rademacher-product", 2);
  const auto b2 = primes_up_to(2);
  CHECK(std::abs(finite_pressure(rad.dist, rad.obs, b2, 0.8, 1) - std::log(std::cosh(0.8))) < 1e-14);
  const double gap = std::abs(finite_pressure(rad.dist, rad.obs, b2, 1.0, 4096) - std::log(std::cosh(1.0)));
  CHECK(gap < 0.01);

  const auto ber1 = preset("bernoulli-product", 1);
  for (std::int64_t n : {1, 2, 7, 100, 1000})
    CHECK(std::abs(finite_pressure(ber1.dist, ber1.obs, primes_up_to(1), 0.9, n) -
                   std::log(mgf(ber1.dist, ber1.obs, 0.9))) < 1e-12);

  // Against exhaustive enumeration of all X_1..X_{ell N}.
  const auto ber = preset("bernoulli-product", 2);
  for (int n = 1; n <= 7; ++n)
    for (double lambda : {-1.0, 0.5}) {
      const double brute = std::log(oracle::brute_sum_mgf(ber.dist, ber.obs, n, lambda)) / n;
      CHECK(std::abs(finite_pressure(ber.dist, ber.obs, b2, lambda, n) - brute) < 1e-12);
    }
  const auto match3 = preset("indicator-match", 3);
  for (int n = 1; n <= 5; ++n) {
    const double brute = std::log(oracle::brute_sum_mgf(match3.dist, match3.obs, n, 0.7)) / n;
    CHECK(std::abs(finite_pressure(match3.dist, match3.obs, primes_up_to(3), 0.7, n) - brute) < 1e-12);
  }
}

TEST_CASE("rate J") {
  const auto rad = preset("rademacher-product", 2);
  const auto j = make_rate_j(rad.dist, rad.obs, primes_up_to(2));
  CHECK(j(0.0) == 0.0);
  CHECK(std::abs(j(0.5) - 0.1308120) < 1e-4);
  CHECK(std::isinf(j(2.0)));
  CHECK(std::isinf(j(-2.0)));
  CHECK(std::abs(j.upper_endpoint() - 1.0) < 1e-3);
  CHECK(std::abs(j.lower_endpoint() - 1.0) < 1e-3);
  for (double u = -0.9; u < 0.95; u += 0.1) CHECK(std::abs(j(u) - binary_entropy_rate(u)) < 1e-5);

  // J-hat from the negated observable mirrors J.
  const auto ber = preset("bernoulli-product", 2);
  const auto jb = make_rate_j(ber.dist, ber.obs, primes_up_to(2), 1e-9);
  const auto jhat = make_rate_j(ber.dist, negate(ber.obs), primes_up_to(2), 1e-9);
  for (double u : {0.05, 0.1, 0.2}) CHECK(std::abs(jb(-u) - jhat(u)) < 1e-9);

  const auto signs = FiniteDistribution::uniform(kSigns);
  CHECK_THROWS_AS(make_rate_j(signs, constant(signs, 2, 0.0), primes_up_to(2)), DegenerateError);
}

TEST_CASE("ell = 1 rates coincide") {
  for (const auto& name : {"rademacher-product", "bernoulli-product"}) {
    const auto m = preset(name, 1);
    const CramerRate i(m.dist, m.obs);
    const auto j = make_rate_j(m.dist, m.obs, primes_up_to(1));
    for (int k = -9; k <= 9; ++k) {
      const double u = k / 10.0 * (k < 0 ? m.obs.sup_neg() : m.obs.sup_pos());
      CHECK(std::abs(j(u) - i(u)) < 1e-6);
    }
  }
}

TEST_CASE("elimination plan") {
  // Two overlapping terms on three variables, G(x, y) = x + 2y over {0, 1}:
  // E exp(G(X0, X1) + G(X1, X2)) with fair bits.
  Eigen::MatrixXi terms(2, 2);
  terms << 0, 1, 1, 2;
  const EliminationPlan plan(terms, 3, 2, 1000);
  Eigen::VectorXd g(4);
  g << 0, 2, 1, 3;
  const Eigen::Vector2d probs(0.5, 0.5);
  double brute = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) brute += 0.125 * std::exp(a + 2 * b + b + 2 * c);
  CHECK(std::abs(plan.log_expectation(g, probs) - std::log(brute)) < 1e-13);
  CHECK(plan.cost() > 0);
  CHECK_THROWS_AS(EliminationPlan(terms, 3, 2, 2), BudgetExceeded);
}

#include <doctest.h>

#include "oracles.hpp"

using namespace kronlik;
using namespace kronlik::testing;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

const Matrix kGamma = mat2(0.15, 0.24, 0.24, 1.0);
const Matrix kPsi = mat2(1.69, 0.26, 0.26, 0.15);

}  // namespace

TEST_CASE("existence_gate examples") {
  auto v = existence_gate(2, 3, 3);
  CHECK(v.necessary_ok);
  CHECK_FALSE(v.sufficient_ok);
  CHECK(v.zone == ExistenceZone::Unknown);

  v = existence_gate(1, 4, 2);
  CHECK_FALSE(v.necessary_ok);
  CHECK(v.zone == ExistenceZone::RuledOut);

  v = existence_gate(5, 2, 2);
  CHECK(v.sufficient_ok);
  CHECK(v.zone == ExistenceZone::Guaranteed);

  // n equal to the ratio is not enough
  CHECK(existence_gate(2, 4, 2).zone == ExistenceZone::RuledOut);
  CHECK(existence_gate(3, 4, 2).zone == ExistenceZone::Unknown);
  CHECK_THROWS_AS(existence_gate(0, 1, 1), Error);
}

TEST_CASE("flip_flop refuses when existence is ruled out") {
  auto eng = stream_engine(1, 0);
  const auto data = random_dataset(2, 6, 2, eng);  // n = 2 <= 3
  try {
    (void)flip_flop(data);
    FAIL("expected ExistenceRuledOut");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ExistenceRuledOut);
  }
}

TEST_CASE("flip_flop is consistent at large n") {
  const auto truth = canonicalize({kGamma, kPsi, false});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto eng = stream_engine(1000 + seed, 0);
    const auto data = simulate({kGamma, kPsi, false}, 200, eng);
    const auto rep = flip_flop(data);
    REQUIRE(rep.status == Status::Converged);
    CHECK(rep.zone == ExistenceZone::Guaranteed);
    CHECK(product_distance(truth, rep.covariance) <= 0.15);
  }
}

TEST_CASE("flip_flop lands on the closed-form member for n = 2, p = q") {
  auto eng = stream_engine(2, 0);
  const auto data = random_dataset(2, 2, 2, eng);
  const Matrix psi0 = random_spd(2, eng);
  FlipFlopConfig cfg;
  cfg.init_psi = psi0;
  const auto rep = flip_flop(data, cfg);
  CHECK(rep.status == Status::Converged);
  CHECK(rep.iterations <= 2);
  CHECK(rep.zone == ExistenceZone::Unknown);
  const auto member = analytic_family_n2(data, psi0);
  CHECK(product_distance(member, rep.covariance) <= 1e-12);
}

TEST_CASE("flip_flop reports DegenerateUpdate for identical observations") {
  const Matrix x = mat2(1, 2, 3, 4);
  const MatrixDataset data({x, x, x, x, x, x});
  const auto rep = flip_flop(data);
  CHECK(rep.status == Status::DegenerateUpdate);
}

TEST_CASE("flip_flop invariants on random instances") {
  auto eng = stream_engine(77, 0);
  for (int t = 0; t < 15; ++t) {
    const Eigen::Index p = 1 + t % 3;
    const Eigen::Index q = 1 + (t / 3) % 3;
    const auto n = static_cast<std::size_t>(p * q + 1 + t % 4);
    const auto data = simulate({random_spd(p, eng), random_spd(q, eng), false}, n, eng);
    const auto rep = flip_flop(data);
    REQUIRE(rep.status == Status::Converged);
    CHECK(rep.residual <= 1e-8);
    for (std::size_t i = 1; i < rep.trace.size(); ++i) CHECK(rep.trace[i] >= rep.trace[i - 1] - 1e-9);

    const auto stats = compute_stats(data);
    CHECK(likelihood_equation_residual(stats, rep.covariance, data) <= 1e-8);
    const double plug_a = plugin_log_likelihood_given_psi(data, stats, rep.covariance.psi);
    const double plug_b = plugin_log_likelihood_given_gamma(data, stats, rep.covariance.gamma);
    CHECK(std::abs(plug_a - rep.log_likelihood) / std::abs(rep.log_likelihood) <= 1e-10);
    CHECK(std::abs(plug_b - rep.log_likelihood) / std::abs(rep.log_likelihood) <= 1e-10);
  }
}

TEST_CASE("flip_flop is scale equivariant") {
  auto eng = stream_engine(9, 0);
  const auto data = simulate({random_spd(3, eng), random_spd(2, eng), false}, 12, eng);
  const auto base = flip_flop(data);
  const auto scaled = flip_flop(data.scaled(3.0));
  REQUIRE(base.status == Status::Converged);
  REQUIRE(scaled.status == Status::Converged);
  const KroneckerCovariance expected{9.0 * base.covariance.gamma, base.covariance.psi, true};
  CHECK(product_distance(expected, scaled.covariance) <= 1e-8);
}

TEST_CASE("non-uniqueness witness for n = 2, p = q") {
  auto eng = stream_engine(4, 0);
  const auto data = random_dataset(2, 3, 3, eng);
  std::vector<Matrix> starts;
  for (int i = 0; i < 5; ++i) starts.push_back(random_spd(3, eng));
  const auto summary = multi_start(data, starts, {});
  CHECK(summary.all_converged);
  CHECK(summary.loglik_spread <= 1e-8);
  CHECK(summary.product_spread > 1e-3);
}

TEST_CASE("analytic_family_n2") {
  auto eng = stream_engine(6, 0);
  const auto data = random_dataset(2, 3, 3, eng);
  const Matrix d = 0.5 * (data[0] - data[1]);

  const auto at_identity = analytic_family_n2(data, Matrix::Identity(3, 3));
  CHECK((at_identity.gamma - d * d.transpose() / 3.0).cwiseAbs().maxCoeff() <= 1e-14);

  const double closed = analytic_family_n2_log_likelihood(data);
  const double expected = -9.0 * std::log(2.0 * std::numbers::pi) + 9.0 * std::log(3.0) -
                          6.0 * std::log(std::abs(d.determinant())) - 9.0;
  CHECK(closed == doctest::Approx(expected).epsilon(1e-13));

  const auto stats = compute_stats(data);
  const auto a = analytic_family_n2(data, random_spd(3, eng));
  const auto b = analytic_family_n2(data, random_spd(3, eng));
  const double lla = log_likelihood(data, stats.m_hat, a);
  const double llb = log_likelihood(data, stats.m_hat, b);
  CHECK(std::abs(lla - llb) <= 1e-10);
  CHECK(std::abs(lla - closed) <= 1e-10);
  CHECK(product_distance(a, b) > 1e-3);
  CHECK(likelihood_equation_residual(stats, a, data) <= 1e-10);
}

TEST_CASE("analytic_family_n2 error paths") {
  auto eng = stream_engine(6, 1);
  const auto wrong_n = random_dataset(3, 2, 2, eng);
  const auto wrong_pq = random_dataset(2, 2, 3, eng);
  const auto expect_code = [](auto&& fn, ErrorCode code) {
    try {
      fn();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect_code([&] { (void)analytic_family_n2(wrong_n, Matrix::Identity(2, 2)); }, ErrorCode::WrongShape);
  expect_code([&] { (void)analytic_family_n2(wrong_pq, Matrix::Identity(3, 3)); }, ErrorCode::WrongShape);
  const MatrixDataset singular({mat2(1, 2, 2, 4), Matrix::Zero(2, 2)});
  expect_code([&] { (void)analytic_family_n2(singular, Matrix::Identity(2, 2)); }, ErrorCode::SingularDifference);
}

TEST_CASE("a run started at the fixed point converges even with a sub-rounding ll_tol") {
  auto eng = stream_engine(9, 0);
  const auto data = simulate({random_spd(3, eng), random_spd(2, eng), false}, 10, eng);
  const auto first = flip_flop(data);
  REQUIRE(first.status == Status::Converged);
  FlipFlopConfig cfg;
  cfg.ll_tol = 1e-300;
  cfg.product_tol = 1e-12;
  cfg.init_psi = first.covariance.psi;
  const auto again = flip_flop(data, cfg);
  CHECK(again.status == Status::Converged);
  CHECK(again.iterations <= 5);
}

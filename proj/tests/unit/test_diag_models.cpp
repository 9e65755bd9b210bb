#include <doctest.h>

#include "oracles.hpp"

using namespace kronlik;
using namespace kronlik::testing;

namespace {

template <typename Fn>
void expect_code(Fn&& fn, ErrorCode code) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

MatrixDataset diagonal_model_data(Eigen::Index p, Eigen::Index q, std::size_t n, Engine& eng) {
  const Vector g = random_positive(p, eng);
  const Vector s = random_positive(q, eng);
  return simulate({Matrix(g.asDiagonal()), Matrix(s.asDiagonal()), false}, n, eng);
}

}  // namespace

TEST_CASE("diagonal_mle scalar case") {
  const MatrixDataset data({Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 4.0), Matrix::Constant(1, 1, -2.0)});
  const auto est = diagonal_mle(data);
  CHECK(est.status == Status::Converged);
  const double y2 = compute_stats(data).y_squared(0, 0);
  CHECK(est.gamma_diag(0) * est.psi_diag(0) == doctest::Approx(y2 / 3.0).epsilon(1e-14));
}

TEST_CASE("diagonal_mle separable residuals converge in one sweep") {
  Vector u(3), v(4);
  u << 0.5, 2.0, 1.5;
  v << 1.0, 3.0, 0.25, 2.0;
  const Matrix y2 = u * v.transpose();
  const auto est = diagonal_mle_from_y2(y2, 5);
  CHECK(est.status == Status::Converged);
  CHECK(est.iterations <= 2);
  const Vector ratio_g = est.gamma_diag.cwiseQuotient(u);
  const Vector ratio_p = est.psi_diag.cwiseQuotient(v);
  CHECK((ratio_g.array() / ratio_g(0) - 1.0).abs().maxCoeff() <= 1e-14);
  CHECK((ratio_p.array() / ratio_p(0) - 1.0).abs().maxCoeff() <= 1e-14);
}

TEST_CASE("diagonal_mle matches the grid-refinement oracle") {
  auto eng = stream_engine(4312, 0);
  const auto data = random_dataset(3, 4, 3, eng);
  const auto stats = compute_stats(data);
  const auto est = diagonal_mle(data);
  REQUIRE(est.status == Status::Converged);
  const auto oracle = grid_oracle_covariance(stats.y_squared, data.n());
  CHECK(product_distance(oracle, est.covariance()) <= 1e-5);
}

TEST_CASE("diagonal_mle rejects zero residual cells") {
  Matrix a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 1, 5, 6, 7;  // cell (0,0) identical
  expect_code([&] { (void)diagonal_mle(MatrixDataset({a, b})); }, ErrorCode::ZeroResidualCell);
  expect_code([&] { (void)diagonal_search_box(compute_stats(MatrixDataset({a, b}))); }, ErrorCode::ZeroResidualCell);
}

TEST_CASE("diagonal_search_box") {
  const Matrix same = Matrix::Constant(3, 2, 2.5);
  auto box = diagonal_search_box(same);
  CHECK(box.lower == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(box.upper == doctest::Approx(9.0).epsilon(1e-13));

  box = diagonal_search_box(Matrix::Constant(1, 4, 0.7));
  CHECK(box.lower == doctest::Approx(1.0));
  CHECK(box.upper == doctest::Approx(1.0));

  auto eng = stream_engine(55, 0);
  for (int t = 0; t < 10; ++t) {
    const auto data = random_dataset(4, 3, 2, eng);
    const auto stats = compute_stats(data);
    const auto b = diagonal_search_box(stats);
    CHECK(b.lower <= 1.0);
    const auto est = diagonal_mle(data);
    const Vector normalized = est.gamma_diag / std::exp(est.gamma_diag.array().log().mean());
    CHECK((normalized.array() >= b.lower * (1 - 1e-12)).all());
    CHECK((normalized.array() <= b.upper * (1 + 1e-12)).all());
  }
}

TEST_CASE("Minkowski determinant inequality on nonnegative definite scatters") {
  auto eng = stream_engine(66, 0);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int t = 0; t < 200; ++t) {
    const int p = dim(eng);
    const int q = dim(eng);
    std::vector<Matrix> s;
    std::vector<double> g;
    for (int i = 0; i < p; ++i) {
      const Matrix a = random_matrix(q, dim(eng), eng);  // rank may be < q
      s.push_back(a * a.transpose());
      g.push_back(random_positive(1, eng)(0));
    }
    const auto sides = minkowski_sides(g, s);
    // rank-deficient sums have determinants at rounding level of the scale
    double scale = 0.0;
    for (int i = 0; i < p; ++i) scale = std::max(scale, g[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)].norm());
    CHECK(sides.combined >= sides.separate - 1e-12 * std::pow(scale, q));
  }
}

TEST_CASE("diagonal profile objective equals the determinant form") {
  auto eng = stream_engine(67, 0);
  const auto data = random_dataset(5, 3, 4, eng);
  const auto stats = compute_stats(data);
  const Vector gamma = random_positive(3, eng);
  Matrix total = Matrix::Zero(4, 4);
  for (Eigen::Index i = 0; i < 3; ++i) total += Matrix(stats.y_squared.row(i).asDiagonal()) / gamma(i);
  const double expected = total.determinant() * std::pow(5.0 * 3.0, -4.0);
  CHECK(diagonal_profile_objective(stats.y_squared, 5, gamma) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("diagonal_mle is start independent") {
  auto eng = stream_engine(68, 0);
  for (int t = 0; t < 5; ++t) {
    const auto data = diagonal_model_data(4, 3, 2, eng);
    const auto ref = diagonal_mle(data);
    REQUIRE(ref.status == Status::Converged);
    for (int s = 0; s < 10; ++s) {
      DiagonalConfig cfg;
      cfg.init_gamma = random_positive(4, eng, 0.01, 100.0);
      const auto est = diagonal_mle(data, cfg);
      REQUIRE(est.status == Status::Converged);
      CHECK(product_distance(ref.covariance(), est.covariance()) <= 1e-8);
    }
  }
}

TEST_CASE("diagonal_mle with a known mean and a single observation") {
  Matrix x(2, 3);
  x << 1.0, -2.0, 0.5, 3.0, 0.7, -1.2;
  const MatrixDataset data({x}, Matrix::Zero(2, 3));
  const auto est = diagonal_mle(data);
  REQUIRE(est.status == Status::Converged);
  CHECK((est.gamma_diag.array() > 0).all());
  CHECK((est.psi_diag.array() > 0).all());
  const Matrix y2 = x.cwiseAbs2();
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double rhs = (y2.row(i).transpose().array() / est.psi_diag.array()).sum() / 3.0;
    CHECK(est.gamma_diag(i) == doctest::Approx(rhs).epsilon(1e-11));
  }
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double rhs = (y2.col(j).array() / est.gamma_diag.array()).sum() / 2.0;
    CHECK(est.psi_diag(j) == doctest::Approx(rhs).epsilon(1e-11));
  }
}

TEST_CASE("one_diag_mle preconditions and the p = 1 case") {
  auto eng = stream_engine(70, 0);
  expect_code([&] { (void)one_diag_mle(random_dataset(3, 2, 3, eng)); }, ErrorCode::ExistenceNotGuaranteed);

  const auto data = random_dataset(6, 1, 3, eng);
  const auto rep = one_diag_mle(data);
  REQUIRE(rep.status == Status::Converged);
  CHECK(rep.iterations <= 2);
  const auto stats = compute_stats(data);
  const KroneckerCovariance expected{Matrix::Ones(1, 1), stats.row_scatter[0] / 6.0, false};
  CHECK(product_distance(expected, rep.covariance) <= 1e-12);
}

TEST_CASE("one_diag_mle agrees with diagonal_mle when rows are independent") {
  auto eng = stream_engine(71, 0);
  const auto data = diagonal_model_data(3, 3, 500, eng);
  const auto rep = one_diag_mle(data);
  REQUIRE(rep.status == Status::Converged);
  CHECK(rep.residual <= 1e-8);
  const auto diag = diagonal_mle(data);
  CHECK(product_distance(diag.covariance(), rep.covariance) <= 0.1);
}

TEST_CASE("simultaneous_diagonalize is a congruence") {
  auto eng = stream_engine(72, 0);
  const Matrix s1 = random_spd(4, eng);
  const Matrix s2 = random_spd(4, eng);
  const auto sd = simultaneous_diagonalize(s1, s2);
  const Matrix d1 = sd.transform.transpose() * s1 * sd.transform;
  const Matrix d2 = sd.transform.transpose() * s2 * sd.transform;
  CHECK((d1 - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((d2 - Matrix(sd.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("one_diag_mle_p2 with identical row scatters") {
  auto eng = stream_engine(73, 0);
  std::vector<Matrix> obs;
  for (int k = 0; k < 6; ++k) {
    const Matrix row = random_matrix(1, 3, eng);
    Matrix x(2, 3);
    x << row, row;
    obs.push_back(x);
  }
  const MatrixDataset data(std::move(obs));
  const auto rep = one_diag_mle_p2(data);
  REQUIRE(rep.status == Status::Converged);
  CHECK(rep.covariance.gamma(0, 0) == doctest::Approx(rep.covariance.gamma(1, 1)).epsilon(1e-12));
  CHECK(rep.covariance.gamma(0, 1) == 0.0);
}

TEST_CASE("one_diag_mle_p2 with already diagonal scatters") {
  // Centred, mutually orthogonal columns make both S_i diagonal.
  const double h1[4] = {1, 1, -1, -1};
  const double h2[4] = {1, -1, 1, -1};
  const double h3[4] = {1, -1, -1, 1};
  std::vector<Matrix> obs;
  for (int k = 0; k < 4; ++k) {
    Matrix x(2, 2);
    x << 2.0 * h1[k], 0.5 * h2[k], 1.3 * h3[k], 0.7 * h1[k];
    obs.push_back(x);
  }
  const MatrixDataset data(std::move(obs));
  const auto stats = compute_stats(data);
  CHECK(std::abs(stats.row_scatter[0](0, 1)) <= 1e-15);
  CHECK(std::abs(stats.row_scatter[1](0, 1)) <= 1e-15);
  const auto rep = one_diag_mle_p2(data);
  const auto diag = diagonal_mle(data);
  CHECK(product_distance(diag.covariance(), rep.covariance) <= 1e-10);
}

TEST_CASE("one_diag_mle_p2 agrees with multi-start alternation") {
  auto eng = stream_engine(74, 0);
  const auto data = random_dataset(8, 2, 3, eng);
  const auto reduced = one_diag_mle_p2(data);
  REQUIRE(reduced.status == Status::Converged);
  std::vector<Matrix> starts;
  for (int i = 0; i < 10; ++i) starts.push_back(random_spd(3, eng));
  FlipFlopConfig cfg;
  cfg.max_iterations = 20000;
  cfg.ll_tol = 1e-15;
  cfg.product_tol = 1e-12;
  const auto summary = multi_start(data, starts, cfg, one_diag_mle);
  for (const auto& run : summary.runs) {
    REQUIRE(run.status == Status::Converged);
    CHECK(product_distance(reduced.covariance, run.covariance) <= 1e-6);
  }
  expect_code([&] { (void)one_diag_mle_p2(random_dataset(8, 3, 3, eng)); }, ErrorCode::WrongShape);
  expect_code([&] { (void)one_diag_mle_p2(random_dataset(3, 2, 3, eng)); }, ErrorCode::ExistenceNotGuaranteed);
}

TEST_CASE("sign_pattern_check") {
  Vector g(2), s(2), l(2), f(2);
  g << 1.0, 2.0;
  s << 0.5, 3.0;
  CHECK(sign_pattern_check(SignPatternCase(g, s, g, s)));

  g << 1, 1;
  s << 1, 1;
  l << 2, 2;
  f << 1, 1;
  const SignPatternCase neg(g, s, l, f);
  CHECK((neg.b_matrix().array() < 0).all());
  CHECK_FALSE(sign_pattern_check(neg));

  // Same product through different factors: B == 0.
  CHECK(sign_pattern_check(SignPatternCase(2.0 * g, s, g, 2.0 * s)));

  auto eng = stream_engine(75, 0);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int t = 0; t < 10000; ++t) {
    const int p = dim(eng);
    const int q = dim(eng);
    const SignPatternCase c(random_positive(p, eng), random_positive(q, eng), random_positive(p, eng),
                            random_positive(q, eng));
    if (c.b_matrix().cwiseAbs().maxCoeff() > 0.0) CHECK_FALSE(sign_pattern_check(c));
  }
  CHECK_THROWS_AS(SignPatternCase(g, s, l, Vector::Ones(3)), Error);
}

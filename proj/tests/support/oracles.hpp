#pragma once

// Test-only reference computations. Each one deliberately takes a different
// numerical path from the library routine it checks.

#include "kronlik/kronlik.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace kronlik::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Engine& eng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = nd(eng);
  return m;
}

inline MatrixDataset random_dataset(std::size_t n, Eigen::Index p, Eigen::Index q, Engine& eng) {
  std::vector<Matrix> obs;
  for (std::size_t k = 0; k < n; ++k) obs.push_back(random_matrix(p, q, eng));
  return MatrixDataset(std::move(obs));
}

inline Vector random_positive(Eigen::Index len, Engine& eng, double lo = 0.2, double hi = 5.0) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Vector v(len);
  for (Eigen::Index i = 0; i < len; ++i) v(i) = std::exp(u(eng));
  return v;
}

// Sum over k of the dense pq-variate normal log-density of vec(X_k), with the
// covariance formed explicitly and inverted by LU.
inline double dense_log_likelihood(const MatrixDataset& data, const Matrix& mean, const KroneckerCovariance& cov) {
  const Matrix sigma = kron(cov.psi, cov.gamma);
  const Eigen::FullPivLU<Matrix> lu(sigma);
  const Matrix inv = lu.inverse();
  const double log_det = std::log(lu.determinant());
  const double d = static_cast<double>(sigma.rows());
  double total = 0.0;
  for (const auto& x : data.observations()) {
    const Vector r = vec(x - mean);
    total += -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det - 0.5 * r.dot(inv * r);
  }
  return total;
}

inline double dense_neg_objective(const KroneckerCovariance& cov, const Matrix& s) {
  const Matrix r = kron(cov.psi, cov.gamma);
  return -std::log(r.determinant()) - (r.inverse() * s).trace();
}

// Triple loop over (k, j1, j2) for every row i.
inline std::vector<Matrix> brute_force_scatter(const MatrixDataset& data) {
  Matrix mean = Matrix::Zero(data.p(), data.q());
  for (std::size_t k = 0; k < data.n(); ++k) {
    for (Eigen::Index i = 0; i < data.p(); ++i)
      for (Eigen::Index j = 0; j < data.q(); ++j) mean(i, j) += data[k](i, j) / static_cast<double>(data.n());
  }
  std::vector<Matrix> out(static_cast<std::size_t>(data.p()), Matrix::Zero(data.q(), data.q()));
  for (Eigen::Index i = 0; i < data.p(); ++i) {
    for (std::size_t k = 0; k < data.n(); ++k) {
      for (Eigen::Index j1 = 0; j1 < data.q(); ++j1) {
        for (Eigen::Index j2 = 0; j2 < data.q(); ++j2) {
          out[static_cast<std::size_t>(i)](j1, j2) +=
              (data[k](i, j1) - mean(i, j1)) * (data[k](i, j2) - mean(i, j2));
        }
      }
    }
  }
  return out;
}

// Grid-refinement minimizer of prod_j sum_i Y2(i,j)/gamma_i over
// prod(gamma) == 1, in log coordinates t_i = log gamma_i with t_p fixed by
// the constraint. Each pass evaluates a (2m+1)^(p-1) grid centred on the
// incumbent; the step halves whenever the centre is already best. The box
// from the existence argument supplies the initial extent.
inline Vector grid_refinement_gamma(const Matrix& y2, double final_step = 1e-10, int half_width = 2) {
  const auto p = y2.rows();
  if (p == 1) return Vector::Ones(1);
  const auto box = diagonal_search_box(y2);
  const auto free = p - 1;
  auto objective = [&](const Vector& t) {
    Vector gamma(p);
    gamma.head(free) = t.array().exp();
    gamma(p - 1) = std::exp(-t.sum());
    double log_obj = 0.0;
    for (Eigen::Index j = 0; j < y2.cols(); ++j) log_obj += std::log((y2.col(j).array() / gamma.array()).sum());
    return log_obj;
  };
  Vector centre = Vector::Zero(free);
  double best = objective(centre);
  double step = (std::log(box.upper) - std::log(box.lower)) / (2.0 * half_width);
  if (!(step > 0.0)) step = 1.0;
  const int side = 2 * half_width + 1;
  long total = 1;
  for (Eigen::Index d = 0; d < free; ++d) total *= side;
  while (step > final_step) {
    Vector best_point = centre;
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx;
      Vector t = centre;
      for (Eigen::Index d = 0; d < free; ++d) {
        t(d) += static_cast<double>(rem % side - half_width) * step;
        rem /= side;
      }
      const double v = objective(t);
      if (v < best) {
        best = v;
        best_point = t;
      }
    }
    if (best_point == centre) {
      step *= 0.5;
    } else {
      centre = best_point;
    }
  }
  Vector gamma(p);
  gamma.head(free) = centre.array().exp();
  gamma(p - 1) = std::exp(-centre.sum());
  return gamma;
}

// Diagonal-model covariance from the grid oracle, psi from its likelihood
// equation, canonical.
inline KroneckerCovariance grid_oracle_covariance(const Matrix& y2, std::size_t n) {
  const Vector gamma = grid_refinement_gamma(y2);
  Vector psi(y2.cols());
  for (Eigen::Index j = 0; j < y2.cols(); ++j)
    psi(j) = (y2.col(j).array() / gamma.array()).sum() / (static_cast<double>(n) * static_cast<double>(y2.rows()));
  const double s = psi(0);
  return {Matrix((gamma * s).asDiagonal()), Matrix((psi / s).asDiagonal()), true};
}

// Both likelihood equations with explicit inverses and the sample mean
// recomputed from scratch; returns the larger relative Frobenius residual.
inline double dense_equation_residual(const MatrixDataset& data, const KroneckerCovariance& cov) {
  const auto n = data.n();
  Matrix mean = Matrix::Zero(data.p(), data.q());
  if (data.known_mean()) {
    mean = *data.known_mean();
  } else {
    for (std::size_t k = 0; k < n; ++k) mean += data[k];
    mean /= static_cast<double>(n);
  }
  const Matrix gi = cov.gamma.fullPivLu().inverse();
  const Matrix pi = cov.psi.fullPivLu().inverse();
  Matrix g = Matrix::Zero(data.p(), data.p());
  Matrix s = Matrix::Zero(data.q(), data.q());
  for (std::size_t k = 0; k < n; ++k) {
    const Matrix e = data[k] - mean;
    g += e * pi * e.transpose();
    s += e.transpose() * gi * e;
  }
  g /= static_cast<double>(n * static_cast<std::size_t>(data.q()));
  s /= static_cast<double>(n * static_cast<std::size_t>(data.p()));
  return std::max((g - cov.gamma).norm() / cov.gamma.norm(), (s - cov.psi).norm() / cov.psi.norm());
}

// Profile objective (a - b^2) / |sum_k E_k^T [[1,-b],[-b,a]] E_k| built from
// the raw residual matrices.
inline double profile_ratio(const std::vector<Matrix>& e, double a, double b) {
  Matrix q(2, 2);
  q << 1.0, -b, -b, a;
  Matrix acc = Matrix::Zero(2, 2);
  for (const auto& ek : e) acc += ek.transpose() * q * ek;
  return (a - b * b) / acc.determinant();
}

// Coefficients of the quadratic denominator
//   D(a,b) = C + B1 b + A1 a + AB ab + B2 b^2 + A2 a^2
// recovered by least squares from direct determinant evaluations.
struct QuadraticDenominator {
  double c, b1, a1, ab, b2, a2;
};

inline QuadraticDenominator fit_denominator(const std::vector<Matrix>& e) {
  const std::vector<std::pair<double, double>> pts = {{0.5, 0.1}, {1.3, -0.4}, {2.0, 0.7}, {0.9, 0.0},
                                                       {3.1, 1.2}, {1.7, -1.1}, {0.4, 0.5}, {2.6, -0.3}};
  Matrix design(static_cast<Eigen::Index>(pts.size()), 6);
  Vector rhs(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto [a, b] = pts[i];
    Matrix q(2, 2);
    q << 1.0, -b, -b, a;
    Matrix acc = Matrix::Zero(2, 2);
    for (const auto& ek : e) acc += ek.transpose() * q * ek;
    const auto r = static_cast<Eigen::Index>(i);
    design.row(r) << 1.0, b, a, a * b, b * b, a * a;
    rhs(r) = acc.determinant();
  }
  const Vector x = design.colPivHouseholderQr().solve(rhs);
  return {x(0), x(1), x(2), x(3), x(4), x(5)};
}

// Real roots in `a` of dL/da = 0 and dL/db = 0 at fixed b, from the fitted
// denominator (numerator of each derivative is quadratic in a).
inline std::vector<double> quadratic_roots(double c2, double c1, double c0) {
  std::vector<double> out;
  if (std::abs(c2) < 1e-300) {
    if (c1 != 0.0) out.push_back(-c0 / c1);
    return out;
  }
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < 0.0) return out;
  const double s = std::sqrt(disc);
  out.push_back((-c1 - s) / (2.0 * c2));
  out.push_back((-c1 + s) / (2.0 * c2));
  return out;
}

// d/da: D - (a - b^2)(A1 + AB b + 2 A2 a) = 0
inline std::vector<double> da_roots(const QuadraticDenominator& d, double b) {
  const double c0 = d.c + d.b1 * b + d.b2 * b * b + b * b * (d.a1 + d.ab * b);
  const double c1 = 2.0 * d.a2 * b * b;
  const double c2 = -d.a2;
  return quadratic_roots(c2, c1, c0);
}

// d/db: -2b D - (a - b^2)(B1 + AB a + 2 B2 b) = 0
inline std::vector<double> db_roots(const QuadraticDenominator& d, double b) {
  const double base = d.c + d.b1 * b + d.b2 * b * b;
  const double lin = d.a1 + d.ab * b;
  // -2b (base + lin a + A2 a^2) - (a - b^2)(B1 + 2 B2 b) - (a - b^2) AB a
  const double k = d.b1 + 2.0 * d.b2 * b;
  const double c2 = -2.0 * b * d.a2 - d.ab;
  const double c1 = -2.0 * b * lin - k + d.ab * b * b;
  const double c0 = -2.0 * b * base + b * b * k;
  return quadratic_roots(c2, c1, c0);
}

}  // namespace kronlik::testing

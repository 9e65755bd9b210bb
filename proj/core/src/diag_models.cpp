#include "kronlik/diag_models.hpp"

#include "alternating.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace kronlik {

KroneckerCovariance DiagonalEstimate::covariance() const {
  return {gamma_diag.asDiagonal(), psi_diag.asDiagonal(), psi_diag.size() > 0 && psi_diag(0) == 1.0};
}

namespace {

void require_positive_cells(const Matrix& y_squared) {
  for (Eigen::Index i = 0; i < y_squared.rows(); ++i) {
    for (Eigen::Index j = 0; j < y_squared.cols(); ++j) {
      if (!(y_squared(i, j) > 0.0) || !std::isfinite(y_squared(i, j))) {
        throw Error(ErrorCode::ZeroResidualCell,
                    "residual sum of squares is zero at cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

Vector psi_from_gamma(const Matrix& y2, double n, const Vector& gamma) {
  return (y2.transpose() * gamma.cwiseInverse()) / (n * static_cast<double>(y2.rows()));
}

Vector gamma_from_psi(const Matrix& y2, double n, const Vector& psi) {
  return (y2 * psi.cwiseInverse()) / (n * static_cast<double>(y2.cols()));
}

double geometric_mean(const Vector& v) { return std::exp(v.array().log().mean()); }

double diagonal_residual(const Matrix& y2, double n, const Vector& gamma, const Vector& psi) {
  const Vector g = gamma_from_psi(y2, n, psi);
  const Vector s = psi_from_gamma(y2, n, gamma);
  const double rg = ((g - gamma).array() / gamma.array()).abs().maxCoeff();
  const double rs = ((s - psi).array() / psi.array()).abs().maxCoeff();
  return std::max(rg, rs);
}

}  // namespace

double diagonal_log_likelihood(const Matrix& y_squared, std::size_t n, const Vector& gamma, const Vector& psi) {
  const double nn = static_cast<double>(n);
  const double pq = static_cast<double>(y_squared.size());
  double ll = -0.5 * pq * nn * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index i = 0; i < y_squared.rows(); ++i) {
    for (Eigen::Index j = 0; j < y_squared.cols(); ++j) {
      const double v = gamma(i) * psi(j);
      ll -= 0.5 * nn * std::log(v) + 0.5 * y_squared(i, j) / v;
    }
  }
  return ll;
}

double diagonal_profile_objective(const Matrix& y_squared, std::size_t n, const Vector& gamma) {
  const double scale = static_cast<double>(n) * static_cast<double>(y_squared.rows());
  return (y_squared.transpose() * gamma.cwiseInverse() / scale).prod();
}

DiagonalEstimate diagonal_mle_from_y2(const Matrix& y_squared, std::size_t n, const DiagonalConfig& config) {
  if (n == 0) throw Error(ErrorCode::InsufficientData, "n must be positive");
  if (config.max_iterations == 0 || !(config.tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max_iterations and tol must be positive");
  }
  require_positive_cells(y_squared);
  const double nn = static_cast<double>(n);
  const auto p = y_squared.rows();

  Vector gamma = Vector::Ones(p);
  if (config.init_gamma) {
    if (config.init_gamma->size() != p || !(config.init_gamma->array() > 0.0).all()) {
      throw Error(ErrorCode::InvalidArgument, "init_gamma must hold p positive entries");
    }
    gamma = *config.init_gamma;
  }
  gamma /= geometric_mean(gamma);

  DiagonalEstimate est;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    est.iterations = it;
    Vector next = gamma_from_psi(y_squared, nn, psi_from_gamma(y_squared, nn, gamma));
    next /= geometric_mean(next);
    const double change = ((next - gamma).array() / gamma.array()).abs().maxCoeff();
    gamma = next;
    if (change <= config.tol) {
      const Vector psi = psi_from_gamma(y_squared, nn, gamma);
      if (diagonal_residual(y_squared, nn, gamma, psi) <= 10.0 * config.tol) {
        est.status = Status::Converged;
        break;
      }
    }
  }
  const Vector psi = psi_from_gamma(y_squared, nn, gamma);
  est.residual = diagonal_residual(y_squared, nn, gamma, psi);
  est.log_likelihood = diagonal_log_likelihood(y_squared, n, gamma, psi);
  const double s = psi(0);
  est.gamma_diag = gamma * s;
  est.psi_diag = psi / s;
  est.psi_diag(0) = 1.0;
  return est;
}

DiagonalEstimate diagonal_mle(const MatrixDataset& data, const DiagonalConfig& config) {
  const auto stats = compute_stats(data);
  return diagonal_mle_from_y2(stats.y_squared, data.n(), config);
}

SearchBox diagonal_search_box(const Matrix& y_squared) {
  require_positive_cells(y_squared);
  const auto p = y_squared.rows();
  const double q = static_cast<double>(y_squared.cols());
  // log|S_1 + ... + S_p| for diagonal S_i; the 1/(np) factor cancels in L_i.
  const double log_total = y_squared.colwise().sum().array().log().sum();
  double log_l = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p; ++i) {
    log_l = std::min(log_l, (y_squared.row(i).array().log().sum() - log_total) / q);
  }
  return {std::exp(log_l), std::exp(-static_cast<double>(p - 1) * log_l)};
}

SearchBox diagonal_search_box(const SufficientStats& stats) { return diagonal_search_box(stats.y_squared); }

EstimateReport one_diag_mle(const MatrixDataset& data, const FlipFlopConfig& config) {
  config.validate(data.q());
  if (!(data.n() > static_cast<std::size_t>(data.q()))) {
    throw Error(ErrorCode::ExistenceNotGuaranteed, "the one-diagonal model needs n > q");
  }
  return detail::alternate(data, config, true, ExistenceZone::Guaranteed);
}

SimultaneousDiagonalization simultaneous_diagonalize(const Matrix& s1, const Matrix& s2) {
  if (s1.rows() != s2.rows() || s1.cols() != s2.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "scatter matrices differ in shape");
  }
  const auto l1 = checked_cholesky(s1, "S1");
  const Matrix half = l1.matrixL().solve(s2);
  const Matrix whitened = l1.matrixL().solve(half.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (whitened + whitened.transpose()));
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "eigendecomposition of the whitened scatter failed");
  }
  SimultaneousDiagonalization out;
  out.transform = l1.matrixU().solve(eig.eigenvectors());
  out.eigenvalues = eig.eigenvalues();
  return out;
}

EstimateReport one_diag_mle_p2(const MatrixDataset& data) {
  if (data.p() != 2) throw Error(ErrorCode::WrongShape, "the reduction needs p = 2");
  if (!(data.n() > static_cast<std::size_t>(data.q()))) {
    throw Error(ErrorCode::ExistenceNotGuaranteed, "the one-diagonal model needs n > q");
  }
  const auto stats = compute_stats(data);
  const auto& s1 = stats.row_scatter[0];
  const auto& s2 = stats.row_scatter[1];
  const auto sd = simultaneous_diagonalize(s1, s2);
  if (!(sd.eigenvalues.array() > 0.0).all()) {
    throw Error(ErrorCode::NotPositiveDefinite, "row scatter S2 is not positive definite");
  }

  Matrix reduced(2, data.q());
  reduced.row(0).setOnes();
  reduced.row(1) = sd.eigenvalues.transpose();
  DiagonalConfig dcfg;
  dcfg.tol = 1e-14;
  dcfg.max_iterations = 1000000;
  const auto dest = diagonal_mle_from_y2(reduced, data.n(), dcfg);

  // The reduced gamma is only meaningful up to scale; restore prod == 1.
  Vector gamma = dest.gamma_diag / geometric_mean(dest.gamma_diag);
  const double np = 2.0 * static_cast<double>(data.n());
  Matrix psi = (s1 / gamma(0) + s2 / gamma(1)) / np;
  psi = 0.5 * (psi + psi.transpose()).eval();

  EstimateReport report;
  report.zone = ExistenceZone::Guaranteed;
  report.iterations = dest.iterations;
  report.covariance = canonicalize({Matrix(gamma.asDiagonal()), psi, false});
  report.log_likelihood = log_likelihood(data, stats.m_hat, report.covariance);
  report.residual = detail::equation_residual(centered(data, stats), report.covariance, true);
  report.trace.push_back(report.log_likelihood);
  report.status = (dest.status == Status::Converged && report.residual <= 1e-8) ? Status::Converged
                                                                                 : Status::MaxIterations;
  return report;
}

SignPatternCase::SignPatternCase(Vector gamma, Vector psi, Vector lambda, Vector phi)
    : gamma_(std::move(gamma)), psi_(std::move(psi)), lambda_(std::move(lambda)), phi_(std::move(phi)) {
  if (gamma_.size() != lambda_.size() || psi_.size() != phi_.size() || gamma_.size() == 0 || psi_.size() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "gamma/lambda and psi/phi must have matching lengths");
  }
  const auto positive = [](const Vector& v) { return (v.array() > 0.0).all(); };
  if (!positive(gamma_) || !positive(psi_) || !positive(lambda_) || !positive(phi_)) {
    throw Error(ErrorCode::InvalidArgument, "sign-pattern parameters must be strictly positive");
  }
  b_ = gamma_ * psi_.transpose() - lambda_ * phi_.transpose();
}

namespace {

template <typename Line>
bool zero_or_mixed(const Line& line) {
  bool pos = false;
  bool neg = false;
  bool nonzero = false;
  for (Eigen::Index k = 0; k < line.size(); ++k) {
    pos = pos || line(k) > 0.0;
    neg = neg || line(k) < 0.0;
    nonzero = nonzero || line(k) != 0.0;
  }
  return !nonzero || (pos && neg);
}

}  // namespace

bool sign_pattern_check(const SignPatternCase& c) {
  const auto& b = c.b_matrix();
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    if (!zero_or_mixed(b.row(i))) return false;
  }
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    if (!zero_or_mixed(b.col(j))) return false;
  }
  return true;
}

MinkowskiSides minkowski_sides(std::span<const double> gamma, std::span<const Matrix> scatters) {
  if (gamma.size() != scatters.size() || gamma.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "need one positive weight per scatter matrix");
  }
  MinkowskiSides out;
  Matrix total = Matrix::Zero(scatters.front().rows(), scatters.front().cols());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const Matrix term = scatters[i] / gamma[i];
    total += term;
    out.separate += term.fullPivLu().determinant();
  }
  out.combined = total.fullPivLu().determinant();
  return out;
}

}  // namespace kronlik

#include "kronlik/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace kronlik {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ExistenceRuledOut: return "ExistenceRuledOut";
    case ErrorCode::ExistenceNotGuaranteed: return "ExistenceNotGuaranteed";
    case ErrorCode::DegenerateUpdate: return "DegenerateUpdate";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::WrongShape: return "WrongShape";
    case ErrorCode::SingularDifference: return "SingularDifference";
    case ErrorCode::ZeroResidualCell: return "ZeroResidualCell";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::PoleOnGrid: return "PoleOnGrid";
    case ErrorCode::RootNotBracketed: return "RootNotBracketed";
    case ErrorCode::NotInInterval: return "NotInInterval";
    case ErrorCode::NotNonUnique: return "NotNonUnique";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::MaxIterations: return "MaxIterations";
    case Status::ExistenceRuledOut: return "ExistenceRuledOut";
    case Status::DegenerateUpdate: return "DegenerateUpdate";
  }
  return "Unknown";
}

std::string_view to_string(ExistenceZone z) noexcept {
  switch (z) {
    case ExistenceZone::RuledOut: return "RuledOut";
    case ExistenceZone::Unknown: return "Unknown";
    case ExistenceZone::Guaranteed: return "Guaranteed";
  }
  return "Unknown";
}

MatrixDataset::MatrixDataset(std::vector<Matrix> observations, std::optional<Matrix> known_mean)
    : observations_(std::move(observations)), known_mean_(std::move(known_mean)) {
  if (observations_.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset needs at least one observation");
  }
  p_ = observations_.front().rows();
  q_ = observations_.front().cols();
  if (p_ < 1 || q_ < 1) {
    throw Error(ErrorCode::DimensionMismatch, "observations must be non-empty matrices");
  }
  for (std::size_t k = 0; k < observations_.size(); ++k) {
    if (observations_[k].rows() != p_ || observations_[k].cols() != q_) {
      std::ostringstream os;
      os << "observation " << k << " is " << observations_[k].rows() << "x" << observations_[k].cols()
         << ", expected " << p_ << "x" << q_;
      throw Error(ErrorCode::DimensionMismatch, os.str());
    }
  }
  if (known_mean_ && (known_mean_->rows() != p_ || known_mean_->cols() != q_)) {
    throw Error(ErrorCode::DimensionMismatch, "known mean shape differs from observations");
  }
}

MatrixDataset MatrixDataset::scaled(double factor) const {
  std::vector<Matrix> obs;
  obs.reserve(observations_.size());
  for (const auto& x : observations_) obs.push_back(factor * x);
  std::optional<Matrix> mean;
  if (known_mean_) mean = factor * *known_mean_;
  return MatrixDataset(std::move(obs), std::move(mean));
}

bool operator==(const MatrixDataset& a, const MatrixDataset& b) {
  if (a.n() != b.n() || a.p() != b.p() || a.q() != b.q()) return false;
  if (a.known_mean_.has_value() != b.known_mean_.has_value()) return false;
  if (a.known_mean_ && *a.known_mean_ != *b.known_mean_) return false;
  for (std::size_t k = 0; k < a.n(); ++k) {
    if (a[k] != b[k]) return false;
  }
  return true;
}

Matrix KroneckerCovariance::product() const { return kron(psi, gamma); }

Eigen::LLT<Matrix> checked_cholesky(const Matrix& a, std::string_view what) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " is not square");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " failed Cholesky factorization");
  }
  // Eigen's LLT reports success on NaN input; reject non-finite factors.
  if (!llt.matrixLLT().allFinite()) {
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " has non-finite entries");
  }
  return llt;
}

namespace {

double log_det_from(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double log_det_spd(const Matrix& a) { return log_det_from(checked_cholesky(a)); }

bool is_positive_definite(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) return false;
  Eigen::LLT<Matrix> llt(a);
  return llt.info() == Eigen::Success && llt.matrixLLT().allFinite();
}

void require_positive_definite(const KroneckerCovariance& cov) {
  (void)checked_cholesky(cov.gamma, "gamma");
  (void)checked_cholesky(cov.psi, "psi");
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

SufficientStats compute_stats(const MatrixDataset& data) {
  const auto n = data.n();
  if (n == 0) throw Error(ErrorCode::InsufficientData, "empty dataset");
  SufficientStats s;
  s.n = n;
  if (data.known_mean()) {
    s.m_hat = *data.known_mean();
    s.mean_known = true;
  } else {
    if (n < 2) {
      throw Error(ErrorCode::InsufficientData,
                  "n = 1 with estimated mean leaves every residual identically zero");
    }
    s.m_hat = Matrix::Zero(data.p(), data.q());
    for (const auto& x : data.observations()) s.m_hat += x;
    s.m_hat /= static_cast<double>(n);
  }

  s.y_squared = Matrix::Zero(data.p(), data.q());
  s.row_scatter.assign(static_cast<std::size_t>(data.p()), Matrix::Zero(data.q(), data.q()));
  for (const auto& x : data.observations()) {
    const Matrix e = x - s.m_hat;
    s.y_squared += e.cwiseAbs2();
    for (Eigen::Index i = 0; i < data.p(); ++i) {
      const Vector row = e.row(i).transpose();
      s.row_scatter[static_cast<std::size_t>(i)].selfadjointView<Eigen::Lower>().rankUpdate(row);
    }
  }
  for (auto& si : s.row_scatter) si = si.selfadjointView<Eigen::Lower>();
  return s;
}

std::vector<Matrix> centered(const MatrixDataset& data, const Matrix& mean) {
  std::vector<Matrix> out;
  out.reserve(data.n());
  for (const auto& x : data.observations()) out.push_back(x - mean);
  return out;
}

std::vector<Matrix> centered(const MatrixDataset& data, const SufficientStats& stats) {
  return centered(data, stats.m_hat);
}

double log_likelihood(const MatrixDataset& data, const Matrix& mean, const KroneckerCovariance& cov) {
  if (cov.p() != data.p() || cov.q() != data.q() || mean.rows() != data.p() || mean.cols() != data.q()) {
    throw Error(ErrorCode::DimensionMismatch, "covariance or mean shape differs from data");
  }
  const auto lg = checked_cholesky(cov.gamma, "gamma");
  const auto lp = checked_cholesky(cov.psi, "psi");
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());
  const double q = static_cast<double>(data.q());

  // tr(psi^-1 E^T gamma^-1 E) = || Lg^-1 E Lp^-T ||_F^2
  double quad = 0.0;
  for (const auto& x : data.observations()) {
    const Matrix z = lg.matrixL().solve(x - mean);
    const Matrix w = lp.matrixL().solve(z.transpose());
    quad += w.squaredNorm();
  }
  return -0.5 * p * q * n * std::log(2.0 * std::numbers::pi) - 0.5 * q * n * log_det_from(lg) -
         0.5 * p * n * log_det_from(lp) - 0.5 * quad;
}

double neg_objective(const KroneckerCovariance& cov, const Matrix& sample_cov) {
  const auto p = cov.p();
  const auto q = cov.q();
  if (sample_cov.rows() != p * q || sample_cov.cols() != p * q) {
    throw Error(ErrorCode::DimensionMismatch, "sample covariance must be pq x pq");
  }
  const auto lg = checked_cholesky(cov.gamma, "gamma");
  const auto lp = checked_cholesky(cov.psi, "psi");
  const Matrix gamma_inv = lg.solve(Matrix::Identity(p, p));
  const Matrix psi_inv = lp.solve(Matrix::Identity(q, q));

  // tr(kron(Pi, Gi) S) = sum_{a,b} Pi(a,b) tr(Gi S_{b,a})
  double trace = 0.0;
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) {
      trace += psi_inv(a, b) * (gamma_inv.cwiseProduct(sample_cov.block(b * p, a * p, p, p).transpose())).sum();
    }
  }
  const double log_det = static_cast<double>(q) * log_det_from(lg) + static_cast<double>(p) * log_det_from(lp);
  return -log_det - trace;
}

Matrix gamma_update(const std::vector<Matrix>& residuals, const Matrix& psi) {
  const auto lp = checked_cholesky(psi, "psi");
  const auto p = residuals.front().rows();
  const auto q = residuals.front().cols();
  Matrix acc = Matrix::Zero(p, p);
  for (const auto& e : residuals) {
    const Matrix w = lp.matrixL().solve(e.transpose());  // q x p
    acc.noalias() += w.transpose() * w;
  }
  return acc / static_cast<double>(residuals.size() * static_cast<std::size_t>(q));
}

Matrix psi_update(const std::vector<Matrix>& residuals, const Matrix& gamma) {
  const auto lg = checked_cholesky(gamma, "gamma");
  const auto p = residuals.front().rows();
  const auto q = residuals.front().cols();
  Matrix acc = Matrix::Zero(q, q);
  for (const auto& e : residuals) {
    const Matrix w = lg.matrixL().solve(e);  // p x q
    acc.noalias() += w.transpose() * w;
  }
  return acc / static_cast<double>(residuals.size() * static_cast<std::size_t>(p));
}

double likelihood_equation_residual(const SufficientStats& stats, const KroneckerCovariance& cov,
                                    const MatrixDataset& data) {
  const auto residuals = centered(data, stats);
  const double rg = (cov.gamma - gamma_update(residuals, cov.psi)).norm() / cov.gamma.norm();
  const double rp = (cov.psi - psi_update(residuals, cov.gamma)).norm() / cov.psi.norm();
  return std::max(rg, rp);
}

double plugin_log_likelihood_given_psi(const MatrixDataset& data, const SufficientStats& stats,
                                       const Matrix& psi) {
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());
  const double q = static_cast<double>(data.q());
  const Matrix gamma = gamma_update(centered(data, stats), psi);
  return -0.5 * p * q * n * std::log(2.0 * std::numbers::pi) - 0.5 * q * n * log_det_spd(gamma) -
         0.5 * p * n * log_det_spd(psi) - 0.5 * n * p * q;
}

double plugin_log_likelihood_given_gamma(const MatrixDataset& data, const SufficientStats& stats,
                                         const Matrix& gamma) {
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());
  const double q = static_cast<double>(data.q());
  const Matrix psi = psi_update(centered(data, stats), gamma);
  return -0.5 * p * q * n * std::log(2.0 * std::numbers::pi) - 0.5 * p * n * log_det_spd(psi) -
         0.5 * q * n * log_det_spd(gamma) - 0.5 * n * p * q;
}

KroneckerCovariance canonicalize(const KroneckerCovariance& cov) {
  require_positive_definite(cov);
  const double s = cov.psi(0, 0);
  KroneckerCovariance out{cov.gamma * s, cov.psi / s, true};
  out.psi(0, 0) = 1.0;
  return out;
}

double product_distance(const KroneckerCovariance& a, const KroneckerCovariance& b) {
  if (a.p() != b.p() || a.q() != b.q()) {
    throw Error(ErrorCode::DimensionMismatch, "covariances have different shapes");
  }
  double diff = 0.0;
  double base = 0.0;
  for (Eigen::Index i = 0; i < a.q(); ++i) {
    for (Eigen::Index j = 0; j < a.q(); ++j) {
      diff += (a.psi(i, j) * a.gamma - b.psi(i, j) * b.gamma).squaredNorm();
      base += a.psi(i, j) * a.psi(i, j) * a.gamma.squaredNorm();
    }
  }
  return std::sqrt(diff / base);
}

bool same_product(const KroneckerCovariance& a, const KroneckerCovariance& b, double rel_tol) {
  return product_distance(a, b) <= rel_tol;
}

}  // namespace kronlik

#include "kronlik/flipflop.hpp"

#include "alternating.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace kronlik {

void FlipFlopConfig::validate(Eigen::Index q) const {
  if (max_iterations == 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
  if (!(ll_tol > 0.0) || !(product_tol > 0.0) || !(residual_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  }
  if (init_psi) {
    if (init_psi->rows() != q || init_psi->cols() != q) {
      throw Error(ErrorCode::DimensionMismatch, "init_psi must be q x q");
    }
    (void)checked_cholesky(*init_psi, "init_psi");
  }
}

ExistenceVerdict existence_gate(std::size_t n, std::size_t p, std::size_t q) {
  if (n == 0 || p == 0 || q == 0) throw Error(ErrorCode::InvalidArgument, "n, p, q must be positive");
  ExistenceVerdict v;
  // n > p/q and n > q/p, kept in integer arithmetic
  v.necessary_ok = n * q > p && n * p > q;
  v.sufficient_ok = n > p * q;
  if (!v.necessary_ok) {
    v.zone = ExistenceZone::RuledOut;
  } else if (v.sufficient_ok) {
    v.zone = ExistenceZone::Guaranteed;
  } else {
    v.zone = ExistenceZone::Unknown;
  }
  return v;
}

namespace {

constexpr double kAscentSlack = 1e-9;

struct Iterate {
  Matrix gamma;
  Matrix psi;
};

}  // namespace

namespace detail {

namespace {

Matrix restricted_gamma_update(const std::vector<Matrix>& residuals, const Matrix& psi, bool diagonal_gamma) {
  Matrix g = gamma_update(residuals, psi);
  if (diagonal_gamma) return g.diagonal().asDiagonal();
  return g;
}

}  // namespace

double equation_residual(const std::vector<Matrix>& residuals, const KroneckerCovariance& cov,
                         bool diagonal_gamma) {
  const double rg =
      (cov.gamma - restricted_gamma_update(residuals, cov.psi, diagonal_gamma)).norm() / cov.gamma.norm();
  const double rp = (cov.psi - psi_update(residuals, cov.gamma)).norm() / cov.psi.norm();
  return std::max(rg, rp);
}

EstimateReport alternate(const MatrixDataset& data, const FlipFlopConfig& config, bool diagonal_gamma,
                         std::optional<ExistenceZone> zone) {
  const auto stats = compute_stats(data);
  const auto residuals = centered(data, stats);

  EstimateReport report;
  report.zone = zone;

  Iterate current{Matrix::Identity(data.p(), data.p()),
                  config.init_psi.value_or(Matrix::Identity(data.q(), data.q()))};
  std::optional<Iterate> accepted;  // last full sweep that passed every check
  double last_ll = -std::numeric_limits<double>::infinity();

  auto finish = [&](Status status) {
    report.status = status;
    if (accepted) {
      report.covariance = canonicalize({accepted->gamma, accepted->psi, false});
      report.log_likelihood = log_likelihood(data, stats.m_hat, report.covariance);
      report.residual = equation_residual(residuals, report.covariance, diagonal_gamma);
    } else {
      report.covariance = canonicalize({current.gamma, current.psi, false});
      report.log_likelihood = -std::numeric_limits<double>::infinity();
      report.residual = std::numeric_limits<double>::infinity();
    }
    return report;
  };

  // One half-step: false when the update is not PD or the likelihood drops.
  auto half_step = [&](Matrix& target, const Matrix& update) {
    if (!is_positive_definite(update)) return false;
    target = update;
    const double ll = log_likelihood(data, stats.m_hat, {current.gamma, current.psi, false});
    report.trace.push_back(ll);
    if (ll < last_ll - kAscentSlack) return false;
    last_ll = ll;
    return true;
  };

  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    report.iterations = it;
    const double ll_before = last_ll;
    if (!half_step(current.gamma, restricted_gamma_update(residuals, current.psi, diagonal_gamma))) {
      return finish(Status::DegenerateUpdate);
    }
    if (!half_step(current.psi, psi_update(residuals, current.gamma))) {
      return finish(Status::DegenerateUpdate);
    }

    const bool have_previous = accepted.has_value();
    const double ll_change = std::abs(last_ll - ll_before) / std::max(1.0, std::abs(last_ll));
    const double product_change =
        have_previous ? product_distance({accepted->gamma, accepted->psi, false},
                                         {current.gamma, current.psi, false})
                      : std::numeric_limits<double>::infinity();
    accepted = current;

    // Below ~64 ulp the log-likelihood change is rounding noise and a stricter
    // ll_tol could never be met.
    const double ll_tol = std::max(config.ll_tol, 64.0 * std::numeric_limits<double>::epsilon());
    if (have_previous && ll_change <= ll_tol && product_change <= config.product_tol) {
      const double residual =
          equation_residual(residuals, {current.gamma, current.psi, false}, diagonal_gamma);
      if (residual <= config.residual_tol) return finish(Status::Converged);
    }
  }
  return finish(Status::MaxIterations);
}

}  // namespace detail

EstimateReport flip_flop(const MatrixDataset& data, const FlipFlopConfig& config) {
  config.validate(data.q());
  const auto verdict = existence_gate(data.n(), static_cast<std::size_t>(data.p()),
                                      static_cast<std::size_t>(data.q()));
  if (verdict.zone == ExistenceZone::RuledOut) {
    throw Error(ErrorCode::ExistenceRuledOut, "n <= max(p/q, q/p): the MLE does not exist");
  }
  return detail::alternate(data, config, false, verdict.zone);
}

namespace {

Matrix half_difference(const MatrixDataset& data) {
  if (data.n() != 2 || data.p() != data.q()) {
    throw Error(ErrorCode::WrongShape, "the closed-form family needs n = 2 and p = q");
  }
  if (data.known_mean()) {
    throw Error(ErrorCode::InvalidArgument, "the closed-form family assumes an estimated mean");
  }
  const Matrix d = 0.5 * (data[0] - data[1]);
  Eigen::JacobiSVD<Matrix> svd(d);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || sv(0) / smin > 1e12) {
    throw Error(ErrorCode::SingularDifference, "X1 - X2 is numerically singular");
  }
  return d;
}

}  // namespace

KroneckerCovariance analytic_family_n2(const MatrixDataset& data, const Matrix& psi) {
  const Matrix d = half_difference(data);
  if (psi.rows() != data.q() || psi.cols() != data.q()) {
    throw Error(ErrorCode::DimensionMismatch, "psi must be q x q");
  }
  const auto lp = checked_cholesky(psi, "psi");
  const Matrix w = lp.matrixL().solve(d.transpose());
  Matrix gamma = (w.transpose() * w) / static_cast<double>(data.p());
  gamma = 0.5 * (gamma + gamma.transpose()).eval();
  return {gamma, psi, false};
}

double analytic_family_n2_log_likelihood(const MatrixDataset& data) {
  const Matrix d = half_difference(data);
  const double p = static_cast<double>(data.p());
  const double log_abs_det = std::log(std::abs(d.fullPivLu().determinant()));
  // |Gamma|^p |Psi|^p = p^(p^2) |D|^(2p) for every member of the family.
  return -p * p * std::log(2.0 * std::numbers::pi) + p * p * std::log(p) - 2.0 * p * log_abs_det - p * p;
}

MultiStartSummary multi_start(const MatrixDataset& data, std::span<const Matrix> init_psis,
                              FlipFlopConfig config, const Solver& solver) {
  MultiStartSummary summary;
  summary.runs.reserve(init_psis.size());
  for (const auto& psi0 : init_psis) {
    config.init_psi = psi0;
    summary.runs.push_back(solver ? solver(data, config) : flip_flop(data, config));
    summary.all_converged = summary.all_converged && summary.runs.back().status == Status::Converged;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < summary.runs.size(); ++i) {
    lo = std::min(lo, summary.runs[i].log_likelihood);
    hi = std::max(hi, summary.runs[i].log_likelihood);
    for (std::size_t j = i + 1; j < summary.runs.size(); ++j) {
      summary.product_spread = std::max(
          summary.product_spread, product_distance(summary.runs[i].covariance, summary.runs[j].covariance));
    }
  }
  summary.loglik_spread = summary.runs.empty() ? 0.0 : hi - lo;
  return summary;
}

}  // namespace kronlik

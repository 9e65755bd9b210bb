#pragma once

#include "kronlik/core.hpp"

#include <functional>
#include <optional>
#include <span>

namespace kronlik {

struct FlipFlopConfig {
  std::size_t max_iterations = 500;
  double ll_tol = 1e-12;       // relative log-likelihood change per sweep (floored at 64 ulp)
  double product_tol = 1e-10;  // relative Frobenius change of kron(psi, gamma) per sweep
  double residual_tol = 1e-8;  // likelihood equations must hold to this before Converged
  std::optional<Matrix> init_psi;  // identity when empty

  void validate(Eigen::Index q) const;
};

struct ExistenceVerdict {
  bool necessary_ok = false;   // n > max(p/q, q/p)
  bool sufficient_ok = false;  // n > pq
  ExistenceZone zone = ExistenceZone::RuledOut;
};

/// Existence of the general-model MLE, from sample size alone. The open
/// middle zone is reported as Unknown.
ExistenceVerdict existence_gate(std::size_t n, std::size_t p, std::size_t q);

/// Alternating solution of both likelihood equations starting from
/// config.init_psi. The returned covariance is canonical. Throws for
/// ExistenceRuledOut and InsufficientData; numerical breakdowns are
/// reported through EstimateReport::status.
EstimateReport flip_flop(const MatrixDataset& data, const FlipFlopConfig& config = {});

/// Closed-form member of the maximizer family for n = 2, p = q:
/// gamma = (1/p) D psi^{-1} D^T with D = (X1 - X2) / 2. The psi argument is
/// returned unchanged (not canonicalized).
KroneckerCovariance analytic_family_n2(const MatrixDataset& data, const Matrix& psi);

/// Common log-likelihood of every member of the n = 2, p = q family:
/// -p^2 log 2pi + p^2 log p - 2p log|det D| - p^2.
double analytic_family_n2_log_likelihood(const MatrixDataset& data);

using Solver = std::function<EstimateReport(const MatrixDataset&, const FlipFlopConfig&)>;

struct MultiStartSummary {
  std::vector<EstimateReport> runs;
  double product_spread = 0.0;  // max pairwise relative Frobenius distance
  double loglik_spread = 0.0;   // max - min log-likelihood
  bool all_converged = true;
};

/// Runs `solver` once per starting psi and summarizes how far the results
/// disagree. With an empty solver, flip_flop is used.
MultiStartSummary multi_start(const MatrixDataset& data, std::span<const Matrix> init_psis,
                              FlipFlopConfig config, const Solver& solver = {});

}  // namespace kronlik

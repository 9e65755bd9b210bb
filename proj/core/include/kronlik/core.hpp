#pragma once

#include "kronlik/error.hpp"
#include "kronlik/types.hpp"

#include <Eigen/Cholesky>

namespace kronlik {

/// Default relative Frobenius tolerance for comparing Kronecker products.
inline constexpr double kProductTolerance = 1e-8;

/// Cholesky factor of a symmetric matrix. Throws NotPositiveDefinite when the
/// factorization fails; there is no tolerance slack.
Eigen::LLT<Matrix> checked_cholesky(const Matrix& a, std::string_view what = "matrix");

/// log|A| for symmetric positive definite A, through Cholesky.
double log_det_spd(const Matrix& a);

bool is_positive_definite(const Matrix& a);

/// Throws NotPositiveDefinite unless both components factor.
void require_positive_definite(const KroneckerCovariance& cov);

Matrix kron(const Matrix& a, const Matrix& b);

/// vec(X): column-major stacking, so Cov(vec X) = kron(psi, gamma).
Vector vec(const Matrix& x);

/// Sample (or known) mean, per-cell residual sums of squares and per-row
/// column scatters. Requires n >= 2 unless the mean is known.
SufficientStats compute_stats(const MatrixDataset& data);

/// Residuals X_k - m_hat.
std::vector<Matrix> centered(const MatrixDataset& data, const Matrix& mean);
std::vector<Matrix> centered(const MatrixDataset& data, const SufficientStats& stats);

/// Log of the matrix-normal likelihood at (mean, gamma, psi).
double log_likelihood(const MatrixDataset& data, const Matrix& mean, const KroneckerCovariance& cov);

/// g(R) = -log|R| - tr(R^{-1} S) with R = kron(psi, gamma). Evaluated through
/// the factors: log|R| = p log|psi| + q log|gamma| and R^{-1} = kron(psi^{-1}, gamma^{-1}).
double neg_objective(const KroneckerCovariance& cov, const Matrix& sample_cov);

/// Right-hand sides of the two likelihood equations:
///   gamma_update = (1/nq) sum_k E_k psi^{-1} E_k^T
///   psi_update   = (1/np) sum_k E_k^T gamma^{-1} E_k
Matrix gamma_update(const std::vector<Matrix>& residuals, const Matrix& psi);
Matrix psi_update(const std::vector<Matrix>& residuals, const Matrix& gamma);

/// max of the relative Frobenius residuals of both likelihood equations.
double likelihood_equation_residual(const SufficientStats& stats, const KroneckerCovariance& cov,
                                    const MatrixDataset& data);

/// Plug-in log-likelihood values attained when the gamma (resp. psi)
/// likelihood equation holds for the given psi (resp. gamma).
double plugin_log_likelihood_given_psi(const MatrixDataset& data, const SufficientStats& stats,
                                       const Matrix& psi);
double plugin_log_likelihood_given_gamma(const MatrixDataset& data, const SufficientStats& stats,
                                         const Matrix& gamma);

/// Rescale so psi(0,0) == 1; the product is unchanged.
KroneckerCovariance canonicalize(const KroneckerCovariance& cov);

/// ||kron(a) - kron(b)||_F / ||kron(a)||_F, accumulated block by block.
double product_distance(const KroneckerCovariance& a, const KroneckerCovariance& b);

bool same_product(const KroneckerCovariance& a, const KroneckerCovariance& b,
                  double rel_tol = kProductTolerance);

}  // namespace kronlik

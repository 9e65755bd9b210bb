#pragma once

#include "kronlik/flipflop.hpp"

#include <span>
#include <utility>

namespace kronlik {

// Diagonal-model estimate. Entries are canonical (psi_diag(0) == 1); the
// solver works internally under prod(gamma) == 1.
struct DiagonalEstimate {
  Vector gamma_diag;
  Vector psi_diag;
  bool normalized_by_gamma_product = true;
  double log_likelihood = 0.0;
  Status status = Status::MaxIterations;
  std::size_t iterations = 0;
  double residual = 0.0;

  [[nodiscard]] KroneckerCovariance covariance() const;
};

struct DiagonalConfig {
  std::size_t max_iterations = 100000;
  double tol = 1e-13;
  std::optional<Vector> init_gamma;  // positive; ones when empty
};

/// MLE of the model with both components diagonal. Uses the known mean when
/// the dataset carries one, in which case n = 1 suffices.
DiagonalEstimate diagonal_mle(const MatrixDataset& data, const DiagonalConfig& config = {});

/// Same solver driven directly by a residual sum-of-squares table and the
/// sample size used in the likelihood equations.
DiagonalEstimate diagonal_mle_from_y2(const Matrix& y_squared, std::size_t n,
                                      const DiagonalConfig& config = {});

/// Log-likelihood of the diagonal model at (gamma, psi).
double diagonal_log_likelihood(const Matrix& y_squared, std::size_t n, const Vector& gamma, const Vector& psi);

/// prod_j sum_i Y2(i,j) / (n p gamma_i): the profile objective minimized over
/// prod(gamma) == 1.
double diagonal_profile_objective(const Matrix& y_squared, std::size_t n, const Vector& gamma);

struct SearchBox {
  double lower = 1.0;
  double upper = 1.0;
};

/// Compact box [L, L^{-(p-1)}] that contains every normalized minimizer of
/// the diagonal profile objective.
SearchBox diagonal_search_box(const SufficientStats& stats);
SearchBox diagonal_search_box(const Matrix& y_squared);

/// MLE with gamma diagonal and psi unrestricted. Requires n > q.
EstimateReport one_diag_mle(const MatrixDataset& data, const FlipFlopConfig& config = {});

/// p = 2 one-diagonal MLE through simultaneous diagonalization of the two
/// row scatters, reducing to a two-row diagonal problem.
EstimateReport one_diag_mle_p2(const MatrixDataset& data);

struct SimultaneousDiagonalization {
  Matrix transform;  // A with A^T S1 A = I and A^T S2 A = diag(eigenvalues)
  Vector eigenvalues;
};

SimultaneousDiagonalization simultaneous_diagonalize(const Matrix& s1, const Matrix& s2);

// B(i,j) = gamma_i psi_j - lambda_i phi_j
class SignPatternCase {
public:
  SignPatternCase(Vector gamma, Vector psi, Vector lambda, Vector phi);

  [[nodiscard]] const Matrix& b_matrix() const noexcept { return b_; }
  [[nodiscard]] const Vector& gamma() const noexcept { return gamma_; }
  [[nodiscard]] const Vector& psi() const noexcept { return psi_; }
  [[nodiscard]] const Vector& lambda() const noexcept { return lambda_; }
  [[nodiscard]] const Vector& phi() const noexcept { return phi_; }

private:
  Vector gamma_, psi_, lambda_, phi_;
  Matrix b_;
};

/// True when every row and every column of B is all zero or holds both a
/// strictly positive and a strictly negative entry.
bool sign_pattern_check(const SignPatternCase& c);

struct MinkowskiSides {
  double combined = 0.0;  // |sum_i S_i / gamma_i|
  double separate = 0.0;  // sum_i |S_i / gamma_i|
};

MinkowskiSides minkowski_sides(std::span<const double> gamma, std::span<const Matrix> scatters);

}  // namespace kronlik

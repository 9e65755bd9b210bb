#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace kronlik {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// n observed p x q matrices with an optional known mean.
class MatrixDataset {
public:
  MatrixDataset() = default;
  // Throws DimensionMismatch when shapes disagree or the list is empty.
  explicit MatrixDataset(std::vector<Matrix> observations,
                         std::optional<Matrix> known_mean = std::nullopt);

  [[nodiscard]] std::size_t n() const noexcept { return observations_.size(); }
  [[nodiscard]] Eigen::Index p() const noexcept { return p_; }
  [[nodiscard]] Eigen::Index q() const noexcept { return q_; }
  [[nodiscard]] const std::vector<Matrix>& observations() const noexcept { return observations_; }
  [[nodiscard]] const Matrix& operator[](std::size_t k) const { return observations_[k]; }
  [[nodiscard]] const std::optional<Matrix>& known_mean() const noexcept { return known_mean_; }

  [[nodiscard]] MatrixDataset scaled(double factor) const;

  friend bool operator==(const MatrixDataset& a, const MatrixDataset& b);

private:
  std::vector<Matrix> observations_;
  std::optional<Matrix> known_mean_;
  Eigen::Index p_ = 0;
  Eigen::Index q_ = 0;
};

// Covariance Cov(vec X) = kron(psi, gamma). Gamma is the p x p row component,
// psi the q x q column component.
struct KroneckerCovariance {
  Matrix gamma;
  Matrix psi;
  bool canonical = false;

  [[nodiscard]] Eigen::Index p() const noexcept { return gamma.rows(); }
  [[nodiscard]] Eigen::Index q() const noexcept { return psi.rows(); }
  // Dense pq x pq product; only for diagnostics and small problems.
  [[nodiscard]] Matrix product() const;
};

struct SufficientStats {
  Matrix m_hat;                     // p x q
  Matrix y_squared;                 // p x q, unnormalized
  std::vector<Matrix> row_scatter;  // p matrices, q x q, unnormalized
  std::size_t n = 0;
  bool mean_known = false;
};

enum class Status { Converged, MaxIterations, ExistenceRuledOut, DegenerateUpdate };
enum class ExistenceZone { RuledOut, Unknown, Guaranteed };

std::string_view to_string(Status s) noexcept;
std::string_view to_string(ExistenceZone z) noexcept;

struct EstimateReport {
  KroneckerCovariance covariance;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  Status status = Status::MaxIterations;
  double residual = 0.0;
  std::optional<ExistenceZone> zone;
  // Log-likelihood after every half-step (first entry: starting point).
  std::vector<double> trace;
};

}  // namespace kronlik

#pragma once

#include "kronlik/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

namespace kronlik {

// Uniqueness analysis for n = 3, p = q = 2.
//
// With gamma = [[a, b], [b, 1]] and psi profiled out, the stationarity
// conditions reduce to a = g(b) together with a = h1(b) or a = h2(b):
//
//   g(b)  = b^2 + |W(b)|,   W(b) = b^2 + V1 b + V2
//   h1(b) = -V1 b - V2
//   h2(b) = -V2 b / (b + V3)
//
// disc(W) > 0: g == h1 on the open interval where W < 0 and every point of
// that segment is a maximizer. disc(W) < 0: the single admissible stationary
// point is where g meets h2.

struct CellResiduals {
  // Rows: cells (1,1), (1,2), (2,1), (2,2); columns: observations 1..3.
  Eigen::Matrix<double, 4, 3> r;
};

struct WPolynomial {
  double v1 = 0.0;
  double v2 = 0.0;
  double v3 = 0.0;
  double discriminant = 0.0;

  [[nodiscard]] double operator()(double b) const noexcept { return b * b + v1 * b + v2; }
  [[nodiscard]] double g(double b) const noexcept;
  [[nodiscard]] double h1(double b) const noexcept;
  [[nodiscard]] double h2(double b) const noexcept;
};

enum class Classification { Unique, NonUnique, Borderline };
std::string_view to_string(Classification c) noexcept;

struct UniquenessReport {
  Classification classification = Classification::Borderline;
  WPolynomial w;
  std::optional<std::pair<double, double>> interval;      // (b_lo, b_hi), W < 0 inside
  std::optional<std::pair<double, double>> unique_point;  // (a, b), a > b^2
  std::optional<double> family_loglik;
};

inline constexpr double kBorderlineEps = 1e-8;

CellResiduals cell_residuals(const MatrixDataset& data);

/// V1, V2, V3 and disc(W). Throws DegenerateDenominator when
/// r31 r42 - r32 r41 vanishes relative to the residual scale.
WPolynomial compute_w(const CellResiduals& stats);

struct CurvePoint {
  double b = 0.0;
  double g = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  bool w_negative = false;
};

std::vector<CurvePoint> curves(const WPolynomial& w, std::span<const double> b_grid);

/// Classifies by the sign of disc(W); |disc| <= eps (V1^2 + 4|V2|) is Borderline.
UniquenessReport classify(const WPolynomial& w, double borderline_eps = kBorderlineEps);

/// cell_residuals -> compute_w -> classify, plus the family log-likelihood
/// for non-unique data.
UniquenessReport diagnose(const MatrixDataset& data, double borderline_eps = kBorderlineEps);

/// Profile point: gamma = [[a, b], [b, 1]], psi from the psi likelihood
/// equation, canonicalized.
KroneckerCovariance profile_member(const MatrixDataset& data, double a, double b);

/// One maximizer per b value; each b must lie strictly inside the interval.
std::vector<KroneckerCovariance> family(const MatrixDataset& data, const UniquenessReport& report,
                                        std::span<const double> b_values);

struct ProbabilityEstimate {
  double fraction = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t replications = 0;
  std::size_t non_unique = 0;
  std::size_t unique = 0;
  std::size_t borderline = 0;  // includes degenerate denominators
};

/// Wilson 95% score interval for `successes` out of `trials`.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials);

/// Fraction of simulated n = 3 datasets from N(0, kron(psi, gamma)) whose MLE
/// is not unique. Replication k draws from stream_engine(seed, k), so the
/// result is independent of `parallelism`.
ProbabilityEstimate nonuniqueness_probability(const Matrix& gamma, const Matrix& psi, std::size_t replications,
                                              std::uint64_t seed, std::size_t parallelism = 1,
                                              double borderline_eps = kBorderlineEps);

}  // namespace kronlik

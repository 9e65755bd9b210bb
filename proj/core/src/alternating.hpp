#pragma once

#include "kronlik/flipflop.hpp"

namespace kronlik::detail {

// Shared alternating solver. With diagonal_gamma the gamma half-step keeps
// only the diagonal of the unrestricted update.
EstimateReport alternate(const MatrixDataset& data, const FlipFlopConfig& config, bool diagonal_gamma,
                         std::optional<ExistenceZone> zone);

double equation_residual(const std::vector<Matrix>& residuals, const KroneckerCovariance& cov,
                         bool diagonal_gamma);

}  // namespace kronlik::detail

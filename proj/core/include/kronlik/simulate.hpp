#pragma once

#include "kronlik/core.hpp"

#include <cstdint>
#include <random>

namespace kronlik {

using Engine = std::mt19937_64;

/// Engine for replication `stream` of a run seeded with `seed`. Streams are
/// keyed by (seed, stream) through std::seed_seq over the four 32-bit halves,
/// so results do not depend on how replications are scheduled.
Engine stream_engine(std::uint64_t seed, std::uint64_t stream);

/// One draw X = M + chol(gamma) Z chol(psi)^T, i.e. vec(X) = vec(M) + kron(Lpsi, Lgamma) vec(Z).
Matrix draw_matrix_normal(const Matrix& chol_gamma, const Matrix& chol_psi, const Matrix& mean, Engine& engine);

/// n independent draws from N(vec M, kron(psi, gamma)). The mean defaults to
/// zero and is not attached to the dataset as a known mean.
MatrixDataset simulate(const KroneckerCovariance& cov, std::size_t n, Engine& engine,
                       const std::optional<Matrix>& mean = std::nullopt);

/// Random SPD matrix A A^T / dim + ridge * I with Gaussian A.
Matrix random_spd(Eigen::Index dim, Engine& engine, double ridge = 0.1);

}  // namespace kronlik

#include "kronlik/simulate.hpp"

namespace kronlik {

Engine stream_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

Matrix draw_matrix_normal(const Matrix& chol_gamma, const Matrix& chol_psi, const Matrix& mean, Engine& engine) {
  std::normal_distribution<double> normal;
  Matrix z(chol_gamma.rows(), chol_psi.rows());
  for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] = normal(engine);  // column-major = vec order
  return mean + chol_gamma.triangularView<Eigen::Lower>() * z *
                    chol_psi.transpose().triangularView<Eigen::Upper>();
}

MatrixDataset simulate(const KroneckerCovariance& cov, std::size_t n, Engine& engine,
                       const std::optional<Matrix>& mean) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  const Matrix lg = checked_cholesky(cov.gamma, "gamma").matrixL();
  const Matrix lp = checked_cholesky(cov.psi, "psi").matrixL();
  const Matrix m = mean.value_or(Matrix::Zero(cov.p(), cov.q()));
  if (m.rows() != cov.p() || m.cols() != cov.q()) {
    throw Error(ErrorCode::DimensionMismatch, "mean must be p x q");
  }
  std::vector<Matrix> obs;
  obs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) obs.push_back(draw_matrix_normal(lg, lp, m, engine));
  return MatrixDataset(std::move(obs));
}

Matrix random_spd(Eigen::Index dim, Engine& engine, double ridge) {
  std::normal_distribution<double> normal;
  Matrix a(dim, dim);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = normal(engine);
  return a * a.transpose() / static_cast<double>(dim) + ridge * Matrix::Identity(dim, dim);
}

}  // namespace kronlik

#include "kronlik/uniqueness.hpp"

#include "kronlik/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace kronlik {

std::string_view to_string(Classification c) noexcept {
  switch (c) {
    case Classification::Unique: return "Unique";
    case Classification::NonUnique: return "NonUnique";
    case Classification::Borderline: return "Borderline";
  }
  return "Unknown";
}

double WPolynomial::g(double b) const noexcept {
  const double wb = (*this)(b);
  return wb < 0.0 ? h1(b) : b * b + wb;
}
double WPolynomial::h1(double b) const noexcept { return -v1 * b - v2; }
double WPolynomial::h2(double b) const noexcept { return -v2 * b / (b + v3); }

namespace {

void require_n3_p2_q2(const MatrixDataset& data) {
  if (data.n() != 3 || data.p() != 2 || data.q() != 2) {
    throw Error(ErrorCode::WrongShape, "uniqueness analysis needs n = 3, p = q = 2");
  }
  if (data.known_mean()) {
    throw Error(ErrorCode::InvalidArgument, "uniqueness analysis assumes an estimated mean");
  }
}

}  // namespace

CellResiduals cell_residuals(const MatrixDataset& data) {
  require_n3_p2_q2(data);
  const Matrix mean = (data[0] + data[1] + data[2]) / 3.0;
  CellResiduals s;
  for (int k = 0; k < 3; ++k) {
    const Matrix e = data[static_cast<std::size_t>(k)] - mean;
    s.r(0, k) = e(0, 0);
    s.r(1, k) = e(0, 1);
    s.r(2, k) = e(1, 0);
    s.r(3, k) = e(1, 1);
  }
  return s;
}

WPolynomial compute_w(const CellResiduals& stats) {
  // 1-based (cell, observation) access to match the residual table layout
  const auto r = [&](int i, int k) { return stats.r(i - 1, k - 1); };
  const double den = -r(3, 2) * r(4, 1) + r(3, 1) * r(4, 2);
  const double scale = stats.r.cwiseAbs().maxCoeff();
  if (!(std::abs(den) > 1e-12 * scale * scale)) {
    throw Error(ErrorCode::DegenerateDenominator, "r31 r42 - r32 r41 vanishes");
  }
  WPolynomial w;
  w.v1 = (-r(2, 2) * r(3, 1) + r(2, 1) * r(3, 2) + r(1, 2) * r(4, 1) - r(1, 1) * r(4, 2)) / den;
  w.v2 = (-r(1, 2) * r(2, 1) + r(1, 1) * r(2, 2)) / den;
  // The b-derivative of the profile likelihood factors as
  // (a - h1(b)) * (a (b + V1) + V2 b), so the pole of h2 sits at -V1.
  w.v3 = w.v1;
  w.discriminant = w.v1 * w.v1 - 4.0 * w.v2;
  return w;
}

std::vector<CurvePoint> curves(const WPolynomial& w, std::span<const double> b_grid) {
  std::vector<CurvePoint> out;
  out.reserve(b_grid.size());
  for (const double b : b_grid) {
    if (std::abs(b + w.v3) <= 1e-12 * std::max(1.0, std::abs(w.v3))) {
      throw Error(ErrorCode::PoleOnGrid, "grid contains the pole of h2 at b = " + std::to_string(-w.v3));
    }
    out.push_back({b, w.g(b), w.h1(b), w.h2(b), w(b) < 0.0});
  }
  return out;
}

namespace {

// (g(b) - h2(b)) * (b + V3): same roots as g - h2 away from the pole, no pole.
double cleared_difference(const WPolynomial& w, double b) { return w.g(b) * (b + w.v3) + w.v2 * b; }

double bisect(const WPolynomial& w, double lo, double hi) {
  double flo = cleared_difference(w, lo);
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = cleared_difference(w, mid);
    if (fmid == 0.0) return mid;
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

UniquenessReport classify(const WPolynomial& w, double borderline_eps) {
  UniquenessReport rep;
  rep.w = w;
  const double scale = w.v1 * w.v1 + 4.0 * std::abs(w.v2);
  const double band = borderline_eps * scale;
  if (scale == 0.0 || std::abs(w.discriminant) <= band) {
    rep.classification = Classification::Borderline;
    return rep;
  }
  if (w.discriminant > band) {
    rep.classification = Classification::NonUnique;
    const double sq = std::sqrt(w.discriminant);
    const double t = -0.5 * (w.v1 + (w.v1 >= 0.0 ? sq : -sq));
    const double r1 = t;
    const double r2 = w.v2 / t;
    rep.interval = std::make_pair(std::min(r1, r2), std::max(r1, r2));
    return rep;
  }

  rep.classification = Classification::Unique;
  // Cauchy bound on the real root of the cleared cubic
  // 2 b^3 + 3 V1 b^2 + (V1^2 + 2 V2) b + V1 V2 (W > 0 everywhere here).
  const double radius = 1.0 + std::max({std::abs(1.5 * w.v1), std::abs(0.5 * (w.v1 * w.v1 + 2.0 * w.v2)),
                                        std::abs(0.5 * w.v1 * w.v2)});
  constexpr int kCoarse = 64;
  std::optional<std::pair<double, double>> bracket;
  double prev_b = -radius;
  double prev_f = cleared_difference(w, prev_b);
  for (int i = 1; i <= kCoarse && !bracket; ++i) {
    const double b = -radius + 2.0 * radius * i / kCoarse;
    const double f = cleared_difference(w, b);
    if (prev_f == 0.0) {
      bracket = std::make_pair(prev_b, prev_b);
    } else if ((f < 0.0) != (prev_f < 0.0) || f == 0.0) {
      bracket = std::make_pair(prev_b, b);
    }
    prev_b = b;
    prev_f = f;
  }
  if (!bracket) {
    throw Error(ErrorCode::RootNotBracketed, "no sign change of g - h2 on the coarse grid");
  }
  const double b = bracket->first == bracket->second ? bracket->first : bisect(w, bracket->first, bracket->second);
  const double a = w.g(b);
  if (!(a > b * b)) {
    throw Error(ErrorCode::RootNotBracketed, "root of g - h2 violates a > b^2");
  }
  rep.unique_point = std::make_pair(a, b);
  return rep;
}

KroneckerCovariance profile_member(const MatrixDataset& data, double a, double b) {
  const auto stats = compute_stats(data);
  Matrix gamma(2, 2);
  gamma << a, b, b, 1.0;
  if (data.p() != 2) throw Error(ErrorCode::WrongShape, "profile members need p = 2");
  const Matrix psi = psi_update(centered(data, stats), gamma);
  return canonicalize({gamma, 0.5 * (psi + psi.transpose()), false});
}

std::vector<KroneckerCovariance> family(const MatrixDataset& data, const UniquenessReport& report,
                                        std::span<const double> b_values) {
  require_n3_p2_q2(data);
  if (report.classification != Classification::NonUnique || !report.interval) {
    throw Error(ErrorCode::NotNonUnique, "the maximizer family exists only for non-unique data");
  }
  const auto [lo, hi] = *report.interval;
  std::vector<KroneckerCovariance> out;
  out.reserve(b_values.size());
  for (const double b : b_values) {
    if (!(b > lo && b < hi) || !(report.w(b) < 0.0)) {
      throw Error(ErrorCode::NotInInterval,
                  "b = " + std::to_string(b) + " is not strictly inside (" + std::to_string(lo) + ", " +
                      std::to_string(hi) + ")");
    }
    out.push_back(profile_member(data, report.w.g(b), b));
  }
  return out;
}

UniquenessReport diagnose(const MatrixDataset& data, double borderline_eps) {
  auto rep = classify(compute_w(cell_residuals(data)), borderline_eps);
  if (rep.classification == Classification::NonUnique) {
    const double mid = 0.5 * (rep.interval->first + rep.interval->second);
    const auto member = profile_member(data, rep.w.g(mid), mid);
    rep.family_loglik = log_likelihood(data, compute_stats(data).m_hat, member);
  }
  return rep;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (phat + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ProbabilityEstimate nonuniqueness_probability(const Matrix& gamma, const Matrix& psi, std::size_t replications,
                                              std::uint64_t seed, std::size_t parallelism,
                                              double borderline_eps) {
  if (replications < 100) throw Error(ErrorCode::InvalidArgument, "need at least 100 replications");
  if (gamma.rows() != 2 || gamma.cols() != 2 || psi.rows() != 2 || psi.cols() != 2) {
    throw Error(ErrorCode::WrongShape, "gamma and psi must be 2 x 2");
  }
  const Matrix lg = checked_cholesky(gamma, "gamma").matrixL();
  const Matrix lp = checked_cholesky(psi, "psi").matrixL();
  const Matrix zero = Matrix::Zero(2, 2);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> non_unique{0};
  std::atomic<std::size_t> unique{0};
  std::atomic<std::size_t> borderline{0};

  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < replications; k = next.fetch_add(1)) {
      auto engine = stream_engine(seed, k);
      std::vector<Matrix> obs;
      obs.reserve(3);
      for (int i = 0; i < 3; ++i) obs.push_back(draw_matrix_normal(lg, lp, zero, engine));
      try {
        const auto rep = classify(compute_w(cell_residuals(MatrixDataset(std::move(obs)))), borderline_eps);
        switch (rep.classification) {
          case Classification::NonUnique: ++non_unique; break;
          case Classification::Unique: ++unique; break;
          case Classification::Borderline: ++borderline; break;
        }
      } catch (const Error&) {
        ++borderline;
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, replications);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ProbabilityEstimate est;
  est.replications = replications;
  est.non_unique = non_unique.load();
  est.unique = unique.load();
  est.borderline = borderline.load();
  est.fraction = static_cast<double>(est.non_unique) / static_cast<double>(replications);
  std::tie(est.ci_low, est.ci_high) = wilson_interval(est.non_unique, replications);
  return est;
}

}  // namespace kronlik

#include "cfid/features.hpp"

#include <algorithm>
#include <cmath>

#include "cfid/errors.hpp"

namespace cfid {

void ReactionTimeConfig::validate() const {
  if (!(tau_min >= 0.0 && tau_min < tau_max))
    throw ValidationError("reaction time config: need 0 <= tau_min < tau_max");
}

const std::array<std::string, 8>& RawFeatureVector::names() {
  static const std::array<std::string, 8> n = {
      "mean_speed",    "mean_gap",          "mean_accel",   "mean_pos_accel",
      "mean_neg_accel", "harmonic_mean_ttc", "reaction_time", "max_xcorr"};
  return n;
}

static bool has_variance(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss >= 1e-12;
}

// Pearson correlation of the pairs (ego[t+k], lead[t]) over their overlap;
// 0 when the overlap is too short or either segment is constant.
static double lag_correlation(const std::vector<double>& ego,
                              const std::vector<double>& lead, long k) {
  const long n = static_cast<long>(ego.size()) - k;
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (long t = 0; t < n; ++t) {
    mx += ego[t + k];
    my += lead[t];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (long t = 0; t < n; ++t) {
    const double dx = ego[t + k] - mx;
    const double dy = lead[t] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx < 1e-12 || syy < 1e-12) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

RawFeatureVector extract_features(const CarFollowingSequence& seq,
                                  const ReactionTimeConfig& rt) {
  rt.validate();
  const auto T = static_cast<long>(seq.frames.size());
  if (T < 2) throw ValidationError("extract_features: need at least two frames");
  if (!(seq.dt > 0.0)) throw ValidationError("extract_features: dt must be > 0");

  RawFeatureVector out;
  double sum_v = 0.0, sum_h = 0.0, sum_a = 0.0;
  double sum_pos = 0.0, sum_neg = 0.0;
  long n_pos = 0, n_neg = 0;
  double inv_ttc = 0.0;
  long n_ttc = 0;

  for (const Frame& f : seq.frames) {
    sum_v += f.v;
    sum_h += f.h;
    sum_a += f.a;
    if (f.a > 0.0) {
      sum_pos += f.a;
      ++n_pos;
    } else if (f.a < 0.0) {
      sum_neg += f.a;
      ++n_neg;
    }
    if (f.hdot > 0.0) {
      const double ttc = std::min(f.h / f.hdot, kTtcCapSeconds);
      inv_ttc += 1.0 / ttc;
      ++n_ttc;
    }
  }

  const double Td = static_cast<double>(T);
  out.f[0] = sum_v / Td;
  out.f[1] = sum_h / Td;
  out.f[2] = sum_a / Td;
  out.f[3] = n_pos > 0 ? sum_pos / static_cast<double>(n_pos) : 0.0;
  out.f[4] = n_neg > 0 ? sum_neg / static_cast<double>(n_neg) : 0.0;
  out.f[5] = n_ttc > 0 ? static_cast<double>(n_ttc) / inv_ttc : kTtcCapSeconds;

  // Reaction time: lag of maximum correlation between ego speed and leader
  // speed (v + hdot), searched over [tau_min, tau_max].
  std::vector<double> ego(T), lead(T);
  for (long t = 0; t < T; ++t) {
    ego[t] = seq.frames[t].v;
    lead[t] = seq.frames[t].v + seq.frames[t].hdot;
  }

  const long k_min = std::lround(rt.tau_min / seq.dt);
  const long k_max = std::min(std::lround(rt.tau_max / seq.dt), T - 2);

  double best_rho = 0.0;
  long best_k = 0;
  bool found = false;
  if (has_variance(ego) && has_variance(lead)) {
    for (long k = k_min; k <= k_max; ++k) {
      const double rho = lag_correlation(ego, lead, k);
      if (!found || rho > best_rho) {
        best_rho = rho;
        best_k = k;
        found = true;
      }
    }
  }
  out.f[6] = found ? static_cast<double>(best_k) * seq.dt : 0.0;
  out.f[7] = found ? best_rho : 0.0;
  return out;
}

Standardizer fit_standardizer(const std::vector<RawFeatureVector>& features) {
  if (features.size() < 2)
    throw ValidationError("fit_standardizer: need at least two feature vectors");
  const double n = static_cast<double>(features.size());

  Standardizer s;
  s.mean.setZero();
  for (const auto& x : features) s.mean += x.to_eigen();
  s.mean /= n;

  Vector8 var = Vector8::Zero();
  for (const auto& x : features) {
    const Vector8 d = x.to_eigen() - s.mean;
    var += d.cwiseProduct(d);
  }
  var /= n;
  s.std = var.cwiseSqrt().cwiseMax(1e-8);
  return s;
}

Vector8 standardize(const RawFeatureVector& x, const Standardizer& s) {
  return (x.to_eigen() - s.mean).cwiseQuotient(s.std);
}

Vector8 destandardize(const Vector8& z, const Standardizer& s) {
  return z.cwiseProduct(s.std) + s.mean;
}

void ProjectionModel::validate() const {
  const auto m = A.rows();
  if (A.cols() != kNumRawFeatures)
    throw ValidationError("projection: A must have 8 columns");
  if (m < 1 || m > kNumRawFeatures)
    throw ValidationError("projection: output dimension must lie in [1, 8]");
  if (!A.allFinite()) throw ValidationError("projection: non-finite entries in A");
}

Eigen::VectorXd project(const Vector8& x_std, const ProjectionModel& p) {
  if (p.A.cols() != x_std.size())
    throw ValidationError("project: dimension mismatch");
  return p.A * x_std;
}

void normalize_rows(Eigen::MatrixXd& A) {
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double len = A.row(i).norm();
    if (!(len > 0.0) || !std::isfinite(len))
      throw NumericalError("normalize_rows: row " + std::to_string(i) +
                           " has zero or non-finite length");
    A.row(i) /= len;
  }
}

Vector8 feature_contributions(const ProjectionModel& p) {
  p.validate();
  Vector8 c = Vector8::Zero();
  for (Eigen::Index j = 0; j < p.A.cols(); ++j) c(j) = p.A.col(j).squaredNorm();
  return c;
}

}  // namespace cfid

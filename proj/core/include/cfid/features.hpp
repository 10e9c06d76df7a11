#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cfid/domain.hpp"

namespace cfid {

using Vector8 = Eigen::Matrix<double, 8, 1>;

inline constexpr int kNumRawFeatures = 8;

// TTC values are capped here before harmonic averaging so that near-zero
// positive relative speeds cannot dominate f6; windows with no opening-gap
// frame get the cap itself.
inline constexpr double kTtcCapSeconds = 100.0;

// Lag bounds for the reaction-time search, in seconds. Non-negative lags
// only: the follower reacts after the leader.
struct ReactionTimeConfig {
  double tau_min = 0.0;
  double tau_max = 5.0;

  void validate() const;  // throws ValidationError
};

// The eight hand-crafted descriptors of one fixed-length window:
//   f1 mean ego speed, f2 mean gap, f3 mean acceleration,
//   f4 mean positive / f5 mean negative acceleration,
//   f6 harmonic-mean TTC over frames with hdot > 0,
//   f7 reaction time (best cross-correlation lag), f8 the correlation there.
struct RawFeatureVector {
  std::array<double, 8> f{};

  Vector8 to_eigen() const {
    Vector8 v;
    for (int i = 0; i < 8; ++i) v(i) = f[i];
    return v;
  }
  static const std::array<std::string, 8>& names();
};

// Degenerate-window conventions (documented, unit-tested): no a>0 frames
// gives f4 = 0; no a<0 frames gives f5 = 0; no hdot>0 frames gives
// f6 = kTtcCapSeconds; a window with (near) constant ego or leader speed
// gives f7 = f8 = 0. Requires at least two frames.
RawFeatureVector extract_features(const CarFollowingSequence& seq,
                                  const ReactionTimeConfig& rt = {});

// Per-dimension training-set statistics, fit once and frozen for the whole
// run so the projected cloud does not drift while A is learned.
struct Standardizer {
  Vector8 mean = Vector8::Zero();
  Vector8 std = Vector8::Ones();
};

// Population (1/N) convention; std floored at 1e-8. Needs >= 2 vectors.
Standardizer fit_standardizer(const std::vector<RawFeatureVector>& features);

Vector8 standardize(const RawFeatureVector& x, const Standardizer& s);
Vector8 destandardize(const Vector8& z, const Standardizer& s);

// The learnable linear map x = A*x_std, A in R^{M x 8}. Training keeps every
// row at unit Euclidean norm; M = 8 is allowed for identity-capacity sweep
// cells even though the projection is meant to reduce dimension.
struct ProjectionModel {
  Eigen::MatrixXd A;  // M x 8

  int output_dim() const { return static_cast<int>(A.rows()); }
  void validate() const;  // throws ValidationError
};

Eigen::VectorXd project(const Vector8& x_std, const ProjectionModel& p);

// Divides each row of A by its Euclidean length. Rows of zero length are
// rejected (NumericalError).
void normalize_rows(Eigen::MatrixXd& A);

// Contribution of input dimension j to the learned space: C(f_j) = sum_i
// a_ij^2. With unit-norm rows the contributions sum to M.
Vector8 feature_contributions(const ProjectionModel& p);

}  // namespace cfid

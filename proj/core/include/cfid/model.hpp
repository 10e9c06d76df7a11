#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cfid/domain.hpp"
#include "cfid/features.hpp"
#include "cfid/gaussian.hpp"

namespace cfid {

// A driver's distribution over the shared state pool (the driver profile).
struct DriverProfile {
  Eigen::VectorXd omega;  // on the simplex

  void validate() const;  // throws ValidationError
};

struct ModelHyper {
  int M = 2;
  int Q = 8;
  double window_T = 15.0;
  double dt = 0.1;
  ReactionTimeConfig rt;
  std::uint64_t seed = 0;
};

// The persisted bundle: projection + standardizer + shared states +
// per-driver profiles. Immutable after training; registration returns a new
// model.
struct GenerativeModel {
  ProjectionModel projection;
  Standardizer standardizer;
  StatePool states;
  std::vector<std::string> driver_ids;  // sorted; position = driver index
  std::vector<DriverProfile> profiles;  // parallel to driver_ids
  ModelHyper hyper;

  int num_drivers() const { return static_cast<int>(driver_ids.size()); }
  // Index of a driver id, -1 if absent.
  int driver_index(const std::string& id) const;
  void validate() const;  // cross-checks dimensions; throws ValidationError
};

// Standardize then project one raw feature vector into model space.
Eigen::VectorXd embed(const GenerativeModel& model, const RawFeatureVector& x);

// log p_k(x) = log sum_q omega_{k,q} N(x | mu_q, sigma_q); zero-weight
// components are skipped.
double log_mixture_density(const Eigen::VectorXd& x, const DriverProfile& profile,
                           const StateDensity& density);

// Per-driver mixture log-densities log p_k(x), k over model.driver_ids.
Eigen::VectorXd driver_log_densities(const Eigen::VectorXd& x,
                                     const std::vector<DriverProfile>& profiles,
                                     const StateDensity& density);

struct PosteriorResult {
  Eigen::VectorXd p;        // P(k | S), sums to 1
  bool underflow = false;   // all densities vanished; p fell back to uniform
};

// Softmax of the per-driver log-densities (uniform prior over drivers).
PosteriorResult posterior_over_drivers(const Eigen::VectorXd& x,
                                       const GenerativeModel& model,
                                       const StateDensity& density);
PosteriorResult posterior_over_drivers(const Eigen::VectorXd& x,
                                       const GenerativeModel& model);

struct SingleInference {
  std::string driver_id;
  Eigen::VectorXd posterior;
  bool underflow = false;
};

// Maximum-posterior identity from one window; ties break toward the
// smallest driver index.
SingleInference infer_single(const CarFollowingSequence& seq,
                             const GenerativeModel& model);

struct MultiInference {
  std::string driver_id;
  Eigen::VectorXd log_scores;  // sum_n log P(k | S_n), per driver
  bool underflow = false;      // some window's densities all vanished
};

// Joint identity over several windows of the same driver, assuming
// independence: argmax_k sum_n log P(k | S_n).
MultiInference infer_multi(const std::vector<CarFollowingSequence>& seqs,
                           const GenerativeModel& model);

// Shared scoring core for callers that already hold embedded features.
Eigen::VectorXd posterior_from_embedded(const Eigen::VectorXd& x,
                                        const std::vector<DriverProfile>& profiles,
                                        const StateDensity& density,
                                        bool* underflow = nullptr);

int argmax_index(const Eigen::VectorXd& v);  // smallest index wins ties

}  // namespace cfid

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cfid/em.hpp"
#include "cfid/features.hpp"
#include "cfid/model.hpp"

namespace cfid {

struct TrainingConfig {
  int M = 2;
  int Q = 8;
  int n_outer = 30;       // outer projection-learning iterations
  int n_inner = 10;       // EM iterations per outer step
  int n_final_em = 200;   // long EM refit from the cached best
  double lr = 0.05;       // initial learning rate r (0 disables the gradient step)
  double lr_up = 1.1;     // gamma_1
  double lr_down = 0.5;   // gamma_2
  double lr_max = 0.1;    // r bar
  std::uint64_t seed = 0;
  EmOptions em;

  void validate() const;  // throws ValidationError
};

struct TraceRow {
  int iter = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double lr = 0.0;   // value after this iteration's adaptation
  bool is_best = false;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;   // iteration 0 (post initial EM) .. n_outer
  double final_loss = 0.0;      // after the long final EM
  double final_train_acc = 0.0;
};

// Raw (unstandardized) feature vectors grouped by driver.
struct LabeledFeatures {
  std::vector<std::string> driver_ids;
  std::vector<std::vector<RawFeatureVector>> features;

  static LabeledFeatures from_windows(const Dataset& windows,
                                      const ReactionTimeConfig& rt);
};

// Joint negative log posterior of the ground truth:
// L = sum_k sum_n -log P(k | x_k^{(n)}).
double training_loss(const DriverFeatureSet& projected, const EmParams& params);

// d L / d A holding the EM parameters fixed: for each sample,
// d(-log P(k_gt | x))/dx = sum_k' (1[k'=k_gt] - P(k'|x)) g_k'(x) with
// g_k'(x) = sum_q gamma~_{k',q}(x) sigma_q^{-1} (x - mu_q), chained through
// x = A x_std by an outer product with the standardized features.
Eigen::MatrixXd training_loss_gradient(
    const std::vector<Eigen::MatrixXd>& standardized,  // per driver, 8 x N_k
    const ProjectionModel& projection, const EmParams& params);

// Convenience wrappers on a full model (used by tests and tools).
double loss(const GenerativeModel& model, const LabeledFeatures& data);
Eigen::MatrixXd loss_gradient_wrt_A(const GenerativeModel& model,
                                    const LabeledFeatures& data);

// Fraction of samples whose maximum-posterior driver matches the label.
double training_accuracy(const DriverFeatureSet& projected, const EmParams& params);

struct TrainResult {
  GenerativeModel model;
  TrainingTrace trace;
};

// Outer loop: alternate short EM refits with approximate-gradient steps on
// A (rows re-normalized after every step), adapt the learning rate on loss
// improvement, cache the best parameters, and finish with a long EM from
// the cached best. window_meta stamps the windowing hyperparameters into
// the returned model.
TrainResult train(const LabeledFeatures& data, const TrainingConfig& cfg,
                  const ModelHyper& window_meta);

// Sub-seed derivation shared by training, sweeps and the generator.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// train() draws its randomness from two independent streams so runs are
// reproducible piecewise: projection init from mix_seed(seed, kProjSeedSalt),
// EM init and reseeding from mix_seed(seed, kEmSeedSalt).
inline constexpr std::uint64_t kProjSeedSalt = 0x70726f6aULL;
inline constexpr std::uint64_t kEmSeedSalt = 0x656dULL;

}  // namespace cfid

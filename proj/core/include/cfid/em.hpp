#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cfid/gaussian.hpp"
#include "cfid/model.hpp"

namespace cfid {

// Projected features grouped by driver; column n of features[k] is sample n
// of driver k.
struct DriverFeatureSet {
  std::vector<std::string> driver_ids;
  std::vector<Eigen::MatrixXd> features;  // each M x N_k
};

struct EmOptions {
  double cov_reg = 1e-6;          // epsilon*I added after every M-step
  double empty_state_tol = 1e-8;  // M_q below this reseeds the state
};

// The EM-estimated parameter bundle: shared states plus per-driver weights.
struct EmParams {
  StatePool states;
  std::vector<DriverProfile> profiles;
};

struct EmResult {
  EmParams params;
  // log-likelihood before iteration 1 and after each iteration
  // (size n_iter + 1); non-decreasing up to the EM tolerance.
  std::vector<double> log_likelihood;
};

// Random initialization: means drawn without replacement from the pooled
// samples, identity covariances, uniform profiles.
EmParams em_random_init(const DriverFeatureSet& data, int Q, std::mt19937_64& rng);

// Algorithm: alternate the per-driver responsibility E-step with the
// pooled-state / per-driver-weight M-step. States are shared across drivers;
// only the weights are driver-specific. rng is consumed only when an empty
// state has to be reseeded.
EmResult em_fit(const DriverFeatureSet& data, int Q, const EmParams* warm_start,
                int n_iter, std::mt19937_64& rng, const EmOptions& opts = {});

// Per-sample responsibilities of driver k's samples under (omega, states):
// row n holds gamma_k^{(n)}(q), each row sums to 1.
Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& features,
                                 const Eigen::VectorXd& omega,
                                 const StateDensity& density);

// Total training log-likelihood sum_k sum_n log p_k(x_k^{(n)}).
double em_log_likelihood(const DriverFeatureSet& data, const EmParams& params);

struct RegisterOptions {
  int n_iter = 200;  // weights-only E/M iterations
};

// Estimates a profile for a previously unseen driver against the frozen
// state pool and projection, using only that driver's data, and returns a
// new model with the driver added. Nothing pre-existing is modified.
GenerativeModel register_driver(const GenerativeModel& model,
                                const std::string& new_driver_id,
                                const std::vector<RawFeatureVector>& new_features,
                                const RegisterOptions& opts = {});

}  // namespace cfid

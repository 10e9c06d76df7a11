#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cfid/domain.hpp"

namespace cfid {

// One behavioral regime of a synthetic follower: an intelligent-driver-style
// acceleration law plus an explicit perception delay.
struct RegimeParams {
  double desired_headway = 1.5;  // time headway [s]
  double max_accel = 1.5;        // [m/s^2]
  double comfort_decel = 2.0;    // [m/s^2]
  double reaction_lag = 0.8;     // perception delay [s]
  double desired_speed = 33.0;   // free speed [m/s]
  double min_gap = 2.0;          // standstill gap [m]
  double accel_noise = 0.1;      // std of per-frame acceleration noise [m/s^2]
};

struct DriverSpec {
  std::string driver_id;
  std::vector<RegimeParams> regimes;
  // Row-stochastic per-frame regime transition matrix (RxR).
  Eigen::MatrixXd transition;

  void validate() const;  // throws ValidationError
};

struct ScenarioSpec {
  double duration_min = 30.0;   // [s]
  double duration_max = 180.0;  // [s]
  double dt = 0.1;              // [s]
  double speed_min = 8.0;       // per-sequence base speed range [m/s]
  double speed_max = 25.0;
  double target_band = 3.0;     // leader targets stay within base +- band [m/s]
  double segment_min = 15.0;    // leader target segment durations [s]
  double segment_max = 40.0;
  double ramp_rate = 1.5;       // leader accel magnitude between targets [m/s^2]
  double perturb_amp = 0.5;     // bound on leader speed perturbation [m/s]
  std::uint64_t seed = 0;

  void validate() const;  // throws ValidationError
};

// Simulates n sequences per driver: leader trajectory first, then the
// follower under the active regime with Markov per-frame switching. Every
// emitted sequence keeps h > 0; infeasible draws are retried on fresh
// sub-seeds up to a budget. Pure function of (specs, scenario, n).
Dataset generate_corpus(const std::vector<DriverSpec>& drivers,
                        const ScenarioSpec& scenario, int n_sequences_per_driver);

// Per-driver stratified split, deterministic under seed. floor(fraction*N)
// sequences go to train.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed);

// Steady-state gap of the follower law at speed v (zero closing speed).
double equilibrium_gap(const RegimeParams& p, double v);

// Per-frame Markov chain over regimes; the path generate_corpus drives.
std::vector<int> sample_regime_path(const Eigen::MatrixXd& transition, int n_frames,
                                    std::mt19937_64& rng);

// Shipped presets: "easy4" (four well-separated single-regime drivers) and
// "hard8" (eight drivers with overlapping parameters, two regimes each).
std::vector<DriverSpec> preset_drivers(const std::string& name);

// JSON spec files: {"drivers":[...], "scenario":{...}}.
std::string specs_to_json_string(const std::vector<DriverSpec>& drivers,
                                 const ScenarioSpec& scenario);
std::pair<std::vector<DriverSpec>, ScenarioSpec> specs_from_json_string(
    const std::string& text);
std::pair<std::vector<DriverSpec>, ScenarioSpec> load_specs(
    const std::filesystem::path& path);

}  // namespace cfid

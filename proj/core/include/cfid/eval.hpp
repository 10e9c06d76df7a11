#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cfid/domain.hpp"
#include "cfid/model.hpp"
#include "cfid/training.hpp"

namespace cfid {

struct ConfusionMatrix {
  std::vector<std::string> labels;  // model driver order
  Eigen::MatrixXi counts;           // ground truth x predicted

  Eigen::VectorXd recall() const;  // diagonal / row sum (NaN for empty rows)
  long total() const { return counts.sum(); }
};

struct EvalResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  int n_sequences = 1;                 // windows per trial
  std::vector<std::string> skipped;    // drivers with fewer than n windows
};

// n_sequences == 1 scores every labeled window independently (seed unused);
// n > 1 draws ceil(W/n) trials per driver, each an independent
// without-replacement draw of n windows, and scores them jointly.
EvalResult evaluate(const GenerativeModel& model, const Dataset& test_windows,
                    int n_sequences, std::uint64_t seed);

struct SweepAxis {
  std::string name;  // one of M, Q, T, overlap, n_sequences
  std::vector<double> values;
};

struct SweepSpec {
  std::vector<SweepAxis> axes;  // one or two
  int repetitions = 1;
  std::uint64_t seed = 0;

  void validate() const;  // throws ValidationError
};

struct SweepCell {
  std::vector<double> coords;       // axis values, same order as spec.axes
  std::vector<double> train_accs;   // per successful repetition
  std::vector<double> test_accs;
  std::vector<std::string> errors;  // per failed repetition

  double mean_train_acc() const;
  double mean_test_acc() const;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepCell> cells;  // row-major over axis values
  int runs_attempted = 0;
};

// Trains one model per (cell, repetition) on a deterministic seed schedule
// and evaluates train/test accuracy. Only the model initialization is
// re-randomized across repetitions; the split stays fixed. Cell failures
// are recorded, not fatal.
SweepResult sweep(const SweepSpec& spec, const Dataset& raw_train,
                  const Dataset& raw_test, const TrainingConfig& base_cfg,
                  const ResampleConfig& base_window, const ReactionTimeConfig& rt);

// Grid file: {"axes":[{"name":"Q","values":[...]}, ...],
//             "repetitions":10, "seed":0}.
SweepSpec sweep_spec_from_json_string(const std::string& text);

}  // namespace cfid

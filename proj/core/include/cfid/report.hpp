#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfid/eval.hpp"
#include "cfid/features.hpp"
#include "cfid/training.hpp"

namespace cfid {

// Training trace: `iter,loss,train_acc,lr,is_best` rows plus a line chart
// of loss and accuracy over iterations.
void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace);
void write_trace_svg(const std::filesystem::path& path, const TrainingTrace& trace);

// Feature contributions C(f_j) as CSV and a bar chart.
void write_contributions_csv(const std::filesystem::path& path, const Vector8& c);
void write_contributions_svg(const std::filesystem::path& path, const Vector8& c);

// Window features: `driver_id,window_id,f1..f8`.
void write_features_csv(const std::filesystem::path& path, const LabeledFeatures& data);

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);

// Accuracy against the number of sequences used per trial.
void write_accuracy_curve_csv(const std::filesystem::path& path,
                              const std::vector<EvalResult>& results);
void write_accuracy_curve_svg(const std::filesystem::path& path,
                              const std::vector<EvalResult>& results);

// Sweep grid in the accuracy-table layout plus heatmaps.
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);
void write_sweep_svg(const std::filesystem::path& path, const SweepResult& result);

// FNV-1a over the given text; names run directories.
std::string hash_hex(const std::string& text);

}  // namespace cfid

#include "cfid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cfid/errors.hpp"

namespace cfid {

Eigen::VectorXd ConfusionMatrix::recall() const {
  Eigen::VectorXd r(counts.rows());
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    const long row = counts.row(i).sum();
    r(i) = row > 0 ? static_cast<double>(counts(i, i)) / static_cast<double>(row)
                   : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

EvalResult evaluate(const GenerativeModel& model, const Dataset& test_windows,
                    int n_sequences, std::uint64_t seed) {
  if (n_sequences < 1) throw ValidationError("evaluate: n_sequences must be >= 1");
  test_windows.require_labeled();

  const int K = model.num_drivers();
  EvalResult res;
  res.n_sequences = n_sequences;
  res.confusion.labels = model.driver_ids;
  res.confusion.counts = Eigen::MatrixXi::Zero(K, K);

  StateDensity density(model.states);

  // embed every window once, grouped by (sorted) ground-truth driver
  const auto groups = test_windows.by_driver();
  std::vector<std::pair<int, std::vector<Eigen::VectorXd>>> embedded;  // gt index, xs
  for (const auto& [id, windows] : groups) {
    const int gt = model.driver_index(id);
    if (gt < 0)
      throw ValidationError("evaluate: test driver '" + id + "' not in the model");
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(windows.size());
    for (const auto* w : windows)
      xs.push_back(embed(model, extract_features(*w, model.hyper.rt)));
    embedded.emplace_back(gt, std::move(xs));
  }

  long correct = 0, total = 0;
  std::mt19937_64 rng(mix_seed(seed, 0x6576616cULL));

  for (const auto& [gt, xs] : embedded) {
    const auto W = static_cast<long>(xs.size());
    if (n_sequences == 1) {
      for (const auto& x : xs) {
        const int pred = argmax_index(posterior_from_embedded(x, model.profiles, density));
        res.confusion.counts(gt, pred) += 1;
        correct += pred == gt;
        ++total;
      }
      continue;
    }
    if (W < n_sequences) {
      res.skipped.push_back(model.driver_ids[static_cast<std::size_t>(gt)]);
      continue;
    }
    const long trials = (W + n_sequences - 1) / n_sequences;  // ceil(W/n)
    std::vector<long> idx(static_cast<std::size_t>(W));
    for (long trial = 0; trial < trials; ++trial) {
      std::iota(idx.begin(), idx.end(), 0L);
      Eigen::VectorXd scores = Eigen::VectorXd::Zero(K);
      for (int pickn = 0; pickn < n_sequences; ++pickn) {
        std::uniform_int_distribution<long> pick(pickn, W - 1);
        std::swap(idx[static_cast<std::size_t>(pickn)],
                  idx[static_cast<std::size_t>(pick(rng))]);
        const auto& x = xs[static_cast<std::size_t>(idx[static_cast<std::size_t>(pickn)])];
        const Eigen::VectorXd logp = driver_log_densities(x, model.profiles, density);
        const double lse = log_sum_exp(logp);
        if (std::isfinite(lse))
          scores += (logp.array() - lse).matrix();
        else
          scores.array() -= std::log(static_cast<double>(K));
      }
      const int pred = argmax_index(scores);
      res.confusion.counts(gt, pred) += 1;
      correct += pred == gt;
      ++total;
    }
  }

  res.accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return res;
}

void SweepSpec::validate() const {
  if (axes.empty() || axes.size() > 2)
    throw ValidationError("sweep: need one or two axes");
  for (const auto& a : axes) {
    if (a.values.empty()) throw ValidationError("sweep: axis '" + a.name + "' has no values");
    if (a.name != "M" && a.name != "Q" && a.name != "T" && a.name != "overlap" &&
        a.name != "n_sequences")
      throw ValidationError("sweep: unknown axis '" + a.name +
                            "' (expected M, Q, T, overlap or n_sequences)");
  }
  if (repetitions < 1) throw ValidationError("sweep: repetitions must be >= 1");
}

double SweepCell::mean_train_acc() const {
  if (train_accs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(train_accs.begin(), train_accs.end(), 0.0) /
         static_cast<double>(train_accs.size());
}

double SweepCell::mean_test_acc() const {
  if (test_accs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(test_accs.begin(), test_accs.end(), 0.0) /
         static_cast<double>(test_accs.size());
}

SweepResult sweep(const SweepSpec& spec, const Dataset& raw_train,
                  const Dataset& raw_test, const TrainingConfig& base_cfg,
                  const ResampleConfig& base_window, const ReactionTimeConfig& rt) {
  spec.validate();
  raw_train.require_labeled();
  raw_test.require_labeled();

  const std::size_t n0 = spec.axes[0].values.size();
  const std::size_t n1 = spec.axes.size() > 1 ? spec.axes[1].values.size() : 1;

  SweepResult result;
  result.spec = spec;

  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      SweepCell cell;
      cell.coords.push_back(spec.axes[0].values[i]);
      if (spec.axes.size() > 1) cell.coords.push_back(spec.axes[1].values[j]);
      const std::uint64_t cell_index = static_cast<std::uint64_t>(i * n1 + j);

      for (int rep = 0; rep < spec.repetitions; ++rep) {
        ++result.runs_attempted;
        try {
          TrainingConfig cfg = base_cfg;
          ResampleConfig window = base_window;
          int n_eval = 1;
          for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            const double v = cell.coords[a];
            const std::string& name = spec.axes[a].name;
            if (name == "M") cfg.M = static_cast<int>(v);
            else if (name == "Q") cfg.Q = static_cast<int>(v);
            else if (name == "T") window.window_T = v;
            else if (name == "overlap") window.overlap_ratio = v;
            else n_eval = static_cast<int>(v);
          }
          cfg.seed = mix_seed(spec.seed, (cell_index << 16) ^ static_cast<std::uint64_t>(rep));

          // overlap augments the training windows only
          ResampleConfig test_window = window;
          test_window.overlap_ratio = 0.0;
          const Dataset train_windows = resample(raw_train, window);
          const Dataset test_windows = resample(raw_test, test_window);

          ModelHyper meta;
          meta.window_T = window.window_T;
          meta.dt = train_windows.sequences.empty() ? 0.1 : train_windows.sequences.front().dt;
          meta.rt = rt;
          const TrainResult tr = train(LabeledFeatures::from_windows(train_windows, rt),
                                       cfg, meta);

          cell.train_accs.push_back(
              evaluate(tr.model, train_windows, 1, cfg.seed).accuracy);
          cell.test_accs.push_back(
              evaluate(tr.model, test_windows, n_eval, mix_seed(cfg.seed, 0x65ULL)).accuracy);
        } catch (const std::exception& e) {
          cell.errors.push_back(e.what());
        }
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

SweepSpec sweep_spec_from_json_string(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("sweep json: parse error: ") + e.what());
  }
  try {
    SweepSpec spec;
    for (const auto& ja : doc.at("axes")) {
      SweepAxis axis;
      axis.name = ja.at("name").get<std::string>();
      for (const auto& v : ja.at("values")) axis.values.push_back(v.get<double>());
      spec.axes.push_back(std::move(axis));
    }
    spec.repetitions = doc.value("repetitions", 1);
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("sweep json: malformed document: ") + e.what());
  }
}

}  // namespace cfid

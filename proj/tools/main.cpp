// cfid: car-following driver identification toolkit.
//
// Subcommands: generate, train, identify, register, evaluate, sweep,
// inspect. Every run directory receives the fully resolved configuration
// and the tool version so a run can be reproduced bit-exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfid/csv_io.hpp"
#include "cfid/domain.hpp"
#include "cfid/em.hpp"
#include "cfid/errors.hpp"
#include "cfid/eval.hpp"
#include "cfid/features.hpp"
#include "cfid/model.hpp"
#include "cfid/model_io.hpp"
#include "cfid/report.hpp"
#include "cfid/synthdata.hpp"
#include "cfid/training.hpp"
#include "cfid/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cfid::ValidationError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_resolved_config(const fs::path& dir, const std::string& command,
                           const json& params) {
  json doc;
  doc["tool_version"] = cfid::kVersion;
  doc["command"] = command;
  doc["params"] = params;
  cfid::atomic_write_file(dir / "resolved_config.json", doc.dump(2) + "\n");
}

// Pre-pass: values from --config <json> become defaults, flags override.
// A resolved_config.json written by an earlier run works as-is (its params
// block is unwrapped), so a run directory reproduces itself.
json load_config_overlay(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) != "--config") continue;
    json doc = json::parse(read_text_file(argv[i + 1]));
    if (doc.contains("params") && doc["params"].is_object()) return doc["params"];
    return doc;
  }
  return json::object();
}

template <typename T>
void overlay(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

// Shared training knobs (train and sweep).
struct TrainFlags {
  double window_T = 15.0;
  double overlap = 0.0;
  double tau_min = 0.0;
  double tau_max = 5.0;
  double max_gap = 0.0;        // 0 = no validation filter
  double min_duration = 0.0;
  cfid::TrainingConfig cfg;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, const json& overlay_cfg) {
  overlay(overlay_cfg, "M", f.cfg.M);
  overlay(overlay_cfg, "Q", f.cfg.Q);
  overlay(overlay_cfg, "T", f.window_T);
  overlay(overlay_cfg, "overlap", f.overlap);
  overlay(overlay_cfg, "outer", f.cfg.n_outer);
  overlay(overlay_cfg, "inner", f.cfg.n_inner);
  overlay(overlay_cfg, "final_em", f.cfg.n_final_em);
  overlay(overlay_cfg, "lr", f.cfg.lr);
  overlay(overlay_cfg, "seed", f.cfg.seed);
  overlay(overlay_cfg, "tau_min", f.tau_min);
  overlay(overlay_cfg, "tau_max", f.tau_max);
  overlay(overlay_cfg, "max_gap", f.max_gap);
  overlay(overlay_cfg, "min_duration", f.min_duration);

  cmd->add_option("--M", f.cfg.M, "Projected feature dimension (1..8)");
  cmd->add_option("--Q", f.cfg.Q, "Number of shared driver states");
  cmd->add_option("--T", f.window_T, "Window duration [s]");
  cmd->add_option("--overlap", f.overlap, "Training window overlap ratio in [0,1)");
  cmd->add_option("--outer", f.cfg.n_outer, "Outer training iterations");
  cmd->add_option("--inner", f.cfg.n_inner, "EM iterations per outer step");
  cmd->add_option("--final-em", f.cfg.n_final_em, "Final EM iterations");
  cmd->add_option("--lr", f.cfg.lr, "Initial learning rate");
  cmd->add_option("--seed", f.cfg.seed, "Random seed");
  cmd->add_option("--tau-min", f.tau_min, "Reaction-time lag lower bound [s]");
  cmd->add_option("--tau-max", f.tau_max, "Reaction-time lag upper bound [s]");
  cmd->add_option("--max-gap", f.max_gap,
                  "Drop sequences whose gap ever exceeds this [m] (0 = keep all)");
  cmd->add_option("--min-duration", f.min_duration,
                  "Drop sequences shorter than this [s] (0 = keep all)");
}

json train_flags_to_json(const TrainFlags& f) {
  return {{"M", f.cfg.M},           {"Q", f.cfg.Q},
          {"T", f.window_T},        {"overlap", f.overlap},
          {"outer", f.cfg.n_outer}, {"inner", f.cfg.n_inner},
          {"final_em", f.cfg.n_final_em}, {"lr", f.cfg.lr},
          {"seed", f.cfg.seed},     {"tau_min", f.tau_min},
          {"tau_max", f.tau_max},   {"max_gap", f.max_gap},
          {"min_duration", f.min_duration}};
}

cfid::Dataset filter_validated(const cfid::Dataset& ds, double max_gap,
                               double min_duration) {
  if (max_gap <= 0.0 && min_duration <= 0.0) return ds;
  cfid::Dataset out;
  out.split = ds.split;
  long dropped = 0;
  for (const auto& seq : ds.sequences) {
    const auto verdict = cfid::validate_car_following(
        seq, max_gap > 0.0 ? max_gap : 1e30, min_duration > 0.0 ? min_duration : 0.0);
    if (verdict.ok)
      out.sequences.push_back(seq);
    else
      ++dropped;
  }
  if (dropped > 0)
    std::cerr << "note: dropped " << dropped << " sequence(s) failing validation\n";
  if (out.sequences.empty())
    throw cfid::ValidationError("all sequences rejected by the validation filter");
  return out;
}

std::vector<cfid::CarFollowingSequence> windows_for_model(
    const cfid::Dataset& ds, const cfid::GenerativeModel& model) {
  cfid::ResampleConfig rc;
  rc.window_T = model.hyper.window_T;
  const cfid::Dataset w = cfid::resample(ds, rc);
  return w.sequences;
}

// ---------------------------------------------------------------- generate

int cmd_generate(const std::string& preset, const std::string& spec_path,
                 const fs::path& out_dir, std::uint64_t seed, int sequences) {
  std::vector<cfid::DriverSpec> drivers;
  cfid::ScenarioSpec scenario;
  if (!spec_path.empty()) {
    auto loaded = cfid::load_specs(spec_path);
    drivers = std::move(loaded.first);
    scenario = loaded.second;
  } else {
    drivers = cfid::preset_drivers(preset);
  }
  scenario.seed = seed;

  const cfid::Dataset ds = cfid::generate_corpus(drivers, scenario, sequences);
  cfid::write_dataset_csv(out_dir, ds);
  cfid::atomic_write_file(out_dir / "specs.json",
                          cfid::specs_to_json_string(drivers, scenario));
  write_resolved_config(out_dir, "generate",
                        {{"preset", preset},
                         {"spec", spec_path},
                         {"seed", seed},
                         {"sequences", sequences}});
  std::cout << "wrote " << ds.sequences.size() << " sequences for "
            << drivers.size() << " drivers to " << out_dir.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const fs::path& data_dir, const fs::path& out_dir, const TrainFlags& f) {
  cfid::Dataset raw = cfid::read_dataset_csv(data_dir, "train");
  raw.require_labeled();
  raw = filter_validated(raw, f.max_gap, f.min_duration);

  cfid::ResampleConfig rc;
  rc.window_T = f.window_T;
  rc.overlap_ratio = f.overlap;
  const cfid::Dataset windows = cfid::resample(raw, rc);
  if (windows.sequences.empty())
    throw cfid::ValidationError("no training windows: sequences shorter than T?");

  cfid::ReactionTimeConfig rt{f.tau_min, f.tau_max};
  const auto features = cfid::LabeledFeatures::from_windows(windows, rt);

  cfid::ModelHyper meta;
  meta.window_T = f.window_T;
  meta.dt = windows.sequences.front().dt;
  meta.rt = rt;
  const cfid::TrainResult result = cfid::train(features, f.cfg, meta);

  fs::create_directories(out_dir);
  cfid::save_model(out_dir / "model.json", result.model);
  cfid::write_trace_csv(out_dir / "trace.csv", result.trace);
  cfid::write_trace_svg(out_dir / "trace.svg", result.trace);
  const cfid::Vector8 c = cfid::feature_contributions(result.model.projection);
  cfid::write_contributions_csv(out_dir / "contributions.csv", c);
  cfid::write_contributions_svg(out_dir / "contributions.svg", c);
  cfid::write_features_csv(out_dir / "features.csv", features);
  json params = train_flags_to_json(f);
  params["data"] = data_dir.string();
  write_resolved_config(out_dir, "train", params);

  json summary;
  summary["final_loss"] = result.trace.final_loss;
  summary["final_train_acc"] = result.trace.final_train_acc;
  summary["n_windows"] = windows.sequences.size();
  summary["n_drivers"] = features.driver_ids.size();
  cfid::atomic_write_file(out_dir / "summary.json", summary.dump(2) + "\n");

  std::cout << "trained " << features.driver_ids.size() << " drivers on "
            << windows.sequences.size() << " windows; final loss "
            << result.trace.final_loss << ", train accuracy "
            << result.trace.final_train_acc << "\n";
  return 0;
}

// ---------------------------------------------------------------- identify

int cmd_identify(const fs::path& model_path, const std::vector<std::string>& inputs,
                 const std::string& input_dir) {
  const cfid::GenerativeModel model = cfid::load_model(model_path);

  std::vector<fs::path> files;
  for (const auto& p : inputs) files.emplace_back(p);
  if (!input_dir.empty()) {
    std::vector<fs::path> found;
    for (const auto& e : fs::recursive_directory_iterator(input_dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  if (files.empty()) throw cfid::ValidationError("identify: no input sequences given");

  std::vector<cfid::CarFollowingSequence> windows;
  cfid::ResampleConfig rc;
  rc.window_T = model.hyper.window_T;
  for (const auto& file : files) {
    const cfid::CarFollowingSequence seq = cfid::read_sequence_csv(file);
    auto w = cfid::resample(seq, rc);
    if (w.empty())
      throw cfid::ValidationError("identify: " + file.string() + " is shorter than the model window of " +
                                  std::to_string(model.hyper.window_T) + " s");
    windows.insert(windows.end(), w.begin(), w.end());
  }

  const cfid::MultiInference inf = cfid::infer_multi(windows, model);
  if (inf.underflow)
    std::cerr << "warning: some windows carried no density mass under any driver\n";
  json out;
  out["predicted"] = inf.driver_id;
  json scores = json::object();
  for (int k = 0; k < model.num_drivers(); ++k)
    scores[model.driver_ids[static_cast<std::size_t>(k)]] = inf.log_scores(k);
  out["scores"] = std::move(scores);
  out["n_sequences"] = windows.size();
  std::cout << out.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------- register

int cmd_register(const fs::path& model_path, const fs::path& data_dir,
                 const std::string& new_id, const fs::path& out_path, int em_iters) {
  const cfid::GenerativeModel model = cfid::load_model(model_path);
  const cfid::Dataset raw = cfid::read_dataset_csv(data_dir);

  std::vector<cfid::RawFeatureVector> feats;
  for (const auto& w : windows_for_model(raw, model))
    feats.push_back(cfid::extract_features(w, model.hyper.rt));
  if (feats.empty())
    throw cfid::ValidationError("register: no windows extracted from " + data_dir.string());

  const cfid::GenerativeModel updated =
      cfid::register_driver(model, new_id, feats, {em_iters});
  cfid::save_model(out_path, updated);
  std::cout << "registered '" << new_id << "' from " << feats.size()
            << " windows -> " << out_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const fs::path& model_path, const fs::path& data_dir,
                 const fs::path& out_base, std::vector<int> ns, std::uint64_t seed) {
  const cfid::GenerativeModel model = cfid::load_model(model_path);
  const cfid::Dataset raw = cfid::read_dataset_csv(data_dir, "test");
  cfid::Dataset windows;
  windows.split = "test";
  windows.sequences = windows_for_model(raw, model);
  if (ns.empty()) ns = {1};

  const json params = {{"model", model_path.string()},
                       {"data", data_dir.string()},
                       {"n", ns},
                       {"seed", seed}};
  const fs::path run_dir = out_base / ("eval-" + cfid::hash_hex(params.dump()).substr(0, 12));
  fs::create_directories(run_dir);

  std::vector<cfid::EvalResult> results;
  for (int n : ns) {
    cfid::EvalResult r = cfid::evaluate(model, windows, n, seed);
    cfid::write_confusion_csv(run_dir / ("confusion_n" + std::to_string(n) + ".csv"),
                              r.confusion);
    for (const auto& s : r.skipped)
      std::cerr << "warning: driver " << s << " has fewer than " << n
                << " test windows, skipped\n";
    std::cout << "n=" << n << " accuracy " << r.accuracy << " over "
              << r.confusion.total() << " trials\n";
    results.push_back(std::move(r));
  }
  cfid::write_accuracy_curve_csv(run_dir / "accuracy.csv", results);
  cfid::write_accuracy_curve_svg(run_dir / "accuracy.svg", results);
  write_resolved_config(run_dir, "evaluate", params);
  std::cout << "report: " << run_dir.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------- sweep

int cmd_sweep(const fs::path& grid_path, const fs::path& train_dir,
              const fs::path& test_dir, const fs::path& data_dir,
              double train_fraction, std::uint64_t split_seed,
              const fs::path& out_base, const TrainFlags& f) {
  const cfid::SweepSpec spec = cfid::sweep_spec_from_json_string(read_text_file(grid_path));

  cfid::Dataset raw_train, raw_test;
  if (data_dir.empty() && (train_dir.empty() || test_dir.empty()))
    throw cfid::ValidationError("sweep: give either --data or both --train and --test");
  if (!data_dir.empty()) {
    cfid::Dataset all = cfid::read_dataset_csv(data_dir);
    all = filter_validated(all, f.max_gap, f.min_duration);
    auto split = cfid::split_dataset(all, train_fraction, split_seed);
    raw_train = std::move(split.first);
    raw_test = std::move(split.second);
  } else {
    raw_train = filter_validated(cfid::read_dataset_csv(train_dir, "train"), f.max_gap,
                                 f.min_duration);
    raw_test = filter_validated(cfid::read_dataset_csv(test_dir, "test"), f.max_gap,
                                f.min_duration);
  }

  cfid::ResampleConfig base_window;
  base_window.window_T = f.window_T;
  base_window.overlap_ratio = f.overlap;
  cfid::ReactionTimeConfig rt{f.tau_min, f.tau_max};

  json params = train_flags_to_json(f);
  params["grid"] = json::parse(read_text_file(grid_path));
  params["train_fraction"] = train_fraction;
  params["split_seed"] = split_seed;
  const fs::path run_dir = out_base / ("sweep-" + cfid::hash_hex(params.dump()).substr(0, 12));
  fs::create_directories(run_dir);

  const cfid::SweepResult result =
      cfid::sweep(spec, raw_train, raw_test, f.cfg, base_window, rt);

  cfid::write_sweep_csv(run_dir / "sweep.csv", result);
  cfid::write_sweep_svg(run_dir / "sweep.svg", result);
  write_resolved_config(run_dir, "sweep", params);

  long failures = 0;
  for (const auto& c : result.cells) failures += static_cast<long>(c.errors.size());
  std::cout << result.runs_attempted << " runs (" << failures << " failed); report: "
            << run_dir.string() << "\n";
  for (const auto& c : result.cells)
    for (const auto& e : c.errors) std::cerr << "warning: cell failure: " << e << "\n";
  return 0;
}

// ----------------------------------------------------------------- inspect

int cmd_inspect(const fs::path& model_path) {
  const cfid::GenerativeModel model = cfid::load_model(model_path);
  std::printf("model: %d drivers, Q=%d states, M=%d, T=%gs, dt=%gs, seed=%llu\n",
              model.num_drivers(), model.hyper.Q, model.hyper.M, model.hyper.window_T,
              model.hyper.dt, static_cast<unsigned long long>(model.hyper.seed));

  std::printf("\nfeature contributions C(f_j):\n");
  const cfid::Vector8 c = cfid::feature_contributions(model.projection);
  for (int j = 0; j < 8; ++j)
    std::printf("  f%d %-18s %.4f\n", j + 1,
                cfid::RawFeatureVector::names()[static_cast<std::size_t>(j)].c_str(), c(j));

  std::printf("\ndriver profiles (omega):\n        ");
  for (int q = 0; q < model.hyper.Q; ++q) std::printf(" q%-5d", q);
  std::printf("\n");
  for (int k = 0; k < model.num_drivers(); ++k) {
    std::printf("  %-6s", model.driver_ids[static_cast<std::size_t>(k)].c_str());
    for (int q = 0; q < model.hyper.Q; ++q)
      std::printf(" %.4f", model.profiles[static_cast<std::size_t>(k)].omega(q));
    std::printf("\n");
  }

  std::printf("\nstates (mass = summed profile weight):\n");
  for (int q = 0; q < model.hyper.Q; ++q) {
    double mass = 0.0;
    for (const auto& p : model.profiles) mass += p.omega(q);
    const auto& s = model.states[static_cast<std::size_t>(q)];
    std::printf("  q%-3d mass %.4f  |mu| %.4f  tr(sigma) %.4f\n", q, mass, s.mu.norm(),
                s.sigma.trace());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic multi-state car-following modeling for driver identification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cfid::kVersion);

  try {
    const json cfg = load_config_overlay(argc, argv);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a synthetic car-following corpus")->fallthrough();
    std::string gen_preset = "easy4", gen_spec;
    fs::path gen_out = "corpus";
    std::uint64_t gen_seed = cfg.value("seed", std::uint64_t{0});
    int gen_sequences = cfg.value("sequences", 100);
    gen->add_option("--preset", gen_preset, "Driver preset: easy4 or hard8");
    gen->add_option("--spec", gen_spec, "Driver/scenario spec JSON (overrides --preset)");
    gen->add_option("--out", gen_out, "Output corpus directory")->required();
    gen->add_option("--seed", gen_seed, "Random seed");
    gen->add_option("--sequences", gen_sequences, "Sequences per driver");

    // train
    auto* tr = app.add_subcommand("train", "Train a model from a corpus directory")->fallthrough();
    fs::path tr_data, tr_out = "run";
    TrainFlags tr_flags;
    tr->add_option("--data", tr_data, "Corpus directory (driver subdirectories)")->required();
    tr->add_option("--out", tr_out, "Output run directory")->required();
    add_train_flags(tr, tr_flags, cfg);

    // identify
    auto* id = app.add_subcommand("identify", "Identify the driver of sequence file(s)")->fallthrough();
    fs::path id_model;
    std::vector<std::string> id_inputs;
    std::string id_dir;
    id->add_option("--model", id_model, "Trained model.json")->required();
    id->add_option("--dir", id_dir, "Directory of sequence CSVs");
    id->add_option("inputs", id_inputs, "Sequence CSV files");

    // register
    auto* rg = app.add_subcommand("register", "Register a new driver against a trained model")->fallthrough();
    fs::path rg_model, rg_data, rg_out;
    std::string rg_id;
    int rg_iters = 200;
    rg->add_option("--model", rg_model, "Trained model.json")->required();
    rg->add_option("--data", rg_data, "Directory with the new driver's sequence CSVs")->required();
    rg->add_option("--id", rg_id, "New driver id")->required();
    rg->add_option("--out", rg_out, "Output model.json (input is untouched)")->required();
    rg->add_option("--em-iters", rg_iters, "Weights-only EM iterations");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Evaluate a model on a labeled corpus")->fallthrough();
    fs::path ev_model, ev_data, ev_out = "reports";
    std::vector<int> ev_ns;
    std::uint64_t ev_seed = cfg.value("seed", std::uint64_t{0});
    ev->add_option("--model", ev_model, "Trained model.json")->required();
    ev->add_option("--data", ev_data, "Labeled corpus directory")->required();
    ev->add_option("--out", ev_out, "Report base directory");
    ev->add_option("--n", ev_ns, "Sequences per trial (repeatable), default 1");
    ev->add_option("--seed", ev_seed, "Trial sampling seed");

    // sweep
    auto* sw = app.add_subcommand("sweep", "Hyperparameter sweep over a grid file")->fallthrough();
    fs::path sw_grid, sw_train, sw_test, sw_data, sw_out = "reports";
    double sw_fraction = cfg.value("train_fraction", 0.8);
    std::uint64_t sw_split_seed = cfg.value("split_seed", std::uint64_t{0});
    TrainFlags sw_flags;
    sw->add_option("--grid", sw_grid, "Grid spec JSON")->required();
    sw->add_option("--train", sw_train, "Training corpus directory");
    sw->add_option("--test", sw_test, "Test corpus directory");
    sw->add_option("--data", sw_data, "Unsplit corpus directory (uses --train-fraction)");
    sw->add_option("--train-fraction", sw_fraction, "Train fraction for --data");
    sw->add_option("--split-seed", sw_split_seed, "Split seed for --data");
    sw->add_option("--out", sw_out, "Report base directory");
    add_train_flags(sw, sw_flags, cfg);

    // inspect
    auto* in = app.add_subcommand("inspect", "Print profiles, contributions and states")->fallthrough();
    fs::path in_model;
    in->add_option("--model", in_model, "Trained model.json")->required();

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return kExitValidation;
    }

    if (gen->parsed()) return cmd_generate(gen_preset, gen_spec, gen_out, gen_seed, gen_sequences);
    if (tr->parsed()) return cmd_train(tr_data, tr_out, tr_flags);
    if (id->parsed()) return cmd_identify(id_model, id_inputs, id_dir);
    if (rg->parsed()) return cmd_register(rg_model, rg_data, rg_id, rg_out, rg_iters);
    if (ev->parsed()) return cmd_evaluate(ev_model, ev_data, ev_out, ev_ns, ev_seed);
    if (sw->parsed())
      return cmd_sweep(sw_grid, sw_train, sw_test, sw_data, sw_fraction, sw_split_seed,
                       sw_out, sw_flags);
    if (in->parsed()) return cmd_inspect(in_model);
    return 0;
  } catch (const cfid::ValidationError& e) {
    std::cerr << "error: validation: " << e.what() << "\n";
    return kExitValidation;
  } catch (const cfid::NumericalError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

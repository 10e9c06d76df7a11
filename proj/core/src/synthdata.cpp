#include "cfid/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cfid/errors.hpp"
#include "cfid/training.hpp"  // mix_seed

namespace cfid {

static constexpr double kIdmExponent = 4.0;
static constexpr double kHardBrake = 8.0;    // [m/s^2]
static constexpr double kMinimumGap = 0.5;   // contact guard [m]
static constexpr int kRetryBudget = 20;

void DriverSpec::validate() const {
  if (driver_id.empty()) throw ValidationError("driver spec: empty driver_id");
  if (regimes.empty()) throw ValidationError("driver spec: no regimes");
  for (const auto& r : regimes) {
    if (!(r.desired_headway > 0.0 && r.max_accel > 0.0 && r.comfort_decel > 0.0 &&
          r.desired_speed > 0.0))
      throw ValidationError("driver spec: physical parameters must be positive");
    if (r.reaction_lag < 0.0 || r.min_gap < 0.0 || r.accel_noise < 0.0)
      throw ValidationError("driver spec: negative lag, gap or noise");
  }
  const auto R = static_cast<Eigen::Index>(regimes.size());
  if (transition.rows() != R || transition.cols() != R)
    throw ValidationError("driver spec: transition matrix must be RxR");
  for (Eigen::Index i = 0; i < R; ++i) {
    if (transition.row(i).minCoeff() < 0.0)
      throw ValidationError("driver spec: negative transition probability");
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-9)
      throw ValidationError("driver spec: transition row " + std::to_string(i) +
                            " does not sum to 1");
  }
}

void ScenarioSpec::validate() const {
  if (!(duration_min > 0.0 && duration_min <= duration_max))
    throw ValidationError("scenario: need 0 < duration_min <= duration_max");
  if (!(dt > 0.0)) throw ValidationError("scenario: dt must be > 0");
  if (!(speed_min >= 0.0 && speed_min <= speed_max))
    throw ValidationError("scenario: need 0 <= speed_min <= speed_max");
  if (target_band < 0.0) throw ValidationError("scenario: negative target_band");
  if (!(segment_min > 0.0 && segment_min <= segment_max))
    throw ValidationError("scenario: need 0 < segment_min <= segment_max");
  if (!(ramp_rate > 0.0)) throw ValidationError("scenario: ramp_rate must be > 0");
  if (perturb_amp < 0.0) throw ValidationError("scenario: negative perturb_amp");
}

double equilibrium_gap(const RegimeParams& p, double v) {
  if (!(v >= 0.0 && v < p.desired_speed))
    throw ValidationError("equilibrium_gap: need 0 <= v < desired_speed");
  const double s_star = p.min_gap + v * p.desired_headway;
  return s_star / std::sqrt(1.0 - std::pow(v / p.desired_speed, kIdmExponent));
}

// IDM acceleration from the perceived gap and closing speed.
static double idm_accel(const RegimeParams& p, double v, double gap, double closing) {
  const double s_star =
      p.min_gap + std::max(0.0, v * p.desired_headway +
                                    v * closing /
                                        (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
  const double g = std::max(gap, 1e-3);
  return p.max_accel *
         (1.0 - std::pow(v / p.desired_speed, kIdmExponent) - (s_star / g) * (s_star / g));
}

std::vector<int> sample_regime_path(const Eigen::MatrixXd& transition, int n_frames,
                                    std::mt19937_64& rng) {
  const auto R = transition.rows();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> path(static_cast<std::size_t>(n_frames));
  int state = static_cast<int>(std::min<long>(R - 1, static_cast<long>(unit(rng) * R)));
  for (int t = 0; t < n_frames; ++t) {
    path[static_cast<std::size_t>(t)] = state;
    const double u = unit(rng);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < R; ++j) {
      acc += transition(state, j);
      if (u <= acc) {
        state = static_cast<int>(j);
        break;
      }
    }
  }
  return path;
}

// Leader speed: a per-sequence base speed, piecewise-constant targets inside
// base +- target_band approached at ramp_rate, plus a bounded AR(1)
// perturbation. Keeping targets near the base bounds the follower's
// transient so episodes stay car-following.
static std::vector<double> leader_speed_profile(const ScenarioSpec& sc, int n_frames,
                                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> base_dist(sc.speed_min, sc.speed_max);
  const double base_speed = base_dist(rng);
  std::uniform_real_distribution<double> target_dist(
      std::max(0.0, base_speed - sc.target_band), base_speed + sc.target_band);
  std::uniform_real_distribution<double> seg_dist(sc.segment_min, sc.segment_max);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> speed(static_cast<std::size_t>(n_frames));
  double target = target_dist(rng);
  double base = target;
  long frames_left = std::lround(seg_dist(rng) / sc.dt);
  double perturb = 0.0;
  const double innovation = 0.156 * sc.perturb_amp;  // stationary std ~ amp/2

  for (int t = 0; t < n_frames; ++t) {
    if (frames_left <= 0) {
      target = target_dist(rng);
      frames_left = std::lround(seg_dist(rng) / sc.dt);
    }
    const double step = sc.ramp_rate * sc.dt;
    base += std::clamp(target - base, -step, step);
    perturb = std::clamp(0.95 * perturb + innovation * gauss(rng), -sc.perturb_amp,
                         sc.perturb_amp);
    speed[static_cast<std::size_t>(t)] = std::max(0.0, base + perturb);
    --frames_left;
  }
  return speed;
}

// One follower-leader episode; empty optional means contact (retry).
static bool simulate_sequence(const DriverSpec& spec, const ScenarioSpec& sc,
                              std::mt19937_64& rng, CarFollowingSequence& out) {
  std::uniform_real_distribution<double> dur_dist(sc.duration_min, sc.duration_max);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int n_frames = static_cast<int>(std::lround(dur_dist(rng) / sc.dt));
  const std::vector<double> v_lead = leader_speed_profile(sc, n_frames, rng);
  const std::vector<int> regimes = sample_regime_path(spec.transition, n_frames, rng);

  // start at the equilibrium of the initial regime, matched to leader speed
  const RegimeParams& first = spec.regimes[static_cast<std::size_t>(regimes.front())];
  double v = std::min(v_lead.front(), 0.95 * first.desired_speed);
  double h = equilibrium_gap(first, v);

  // perceived (gap, closing speed) ring buffer per regime lag
  std::vector<std::pair<double, double>> history;
  history.reserve(static_cast<std::size_t>(n_frames));

  out.frames.clear();
  out.frames.reserve(static_cast<std::size_t>(n_frames));
  out.dt = sc.dt;

  for (int t = 0; t < n_frames; ++t) {
    const RegimeParams& p = spec.regimes[static_cast<std::size_t>(regimes[static_cast<std::size_t>(t)])];
    history.emplace_back(h, v - v_lead[static_cast<std::size_t>(t)]);

    const long lag = std::lround(p.reaction_lag / sc.dt);
    const auto& seen = history[static_cast<std::size_t>(std::max<long>(0, t - lag))];

    double a = idm_accel(p, v, seen.first, seen.second);
    if (p.accel_noise > 0.0) a += p.accel_noise * gauss(rng);
    a = std::clamp(a, -kHardBrake, p.max_accel);

    const double v_next = std::max(0.0, v + a * sc.dt);
    const double a_actual = (v_next - v) / sc.dt;
    out.frames.push_back({v, a_actual, h, v_lead[static_cast<std::size_t>(t)] - v});

    h += (v_lead[static_cast<std::size_t>(t)] - v) * sc.dt;
    v = v_next;
    if (h < kMinimumGap) return false;
  }
  return true;
}

Dataset generate_corpus(const std::vector<DriverSpec>& drivers,
                        const ScenarioSpec& scenario, int n_sequences_per_driver) {
  scenario.validate();
  if (drivers.empty()) throw ValidationError("generate: no driver specs");
  if (n_sequences_per_driver < 1)
    throw ValidationError("generate: need at least one sequence per driver");
  for (const auto& d : drivers) d.validate();

  Dataset ds;
  for (std::size_t di = 0; di < drivers.size(); ++di) {
    const DriverSpec& spec = drivers[di];
    for (int n = 0; n < n_sequences_per_driver; ++n) {
      CarFollowingSequence seq;
      bool done = false;
      for (int attempt = 0; attempt < kRetryBudget && !done; ++attempt) {
        std::mt19937_64 rng(mix_seed(
            scenario.seed, (static_cast<std::uint64_t>(di) << 40) ^
                               (static_cast<std::uint64_t>(n) << 8) ^
                               static_cast<std::uint64_t>(attempt)));
        done = simulate_sequence(spec, scenario, rng, seq);
      }
      if (!done)
        throw ValidationError("generate: driver " + spec.driver_id +
                              " cannot keep a positive gap (retry budget exhausted); "
                              "check the controller parameters");
      seq.driver_id = spec.driver_id;
      seq.source_id = spec.driver_id + "/seq_" + std::to_string(n);
      ds.sequences.push_back(std::move(seq));
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw ValidationError("split: train_fraction must lie in [0, 1]");
  ds.require_labeled();

  Dataset train, test;
  train.split = "train";
  test.split = "test";

  std::mt19937_64 rng(mix_seed(seed, 0x73706c6974ULL));
  for (const auto& [id, seqs] : ds.by_driver()) {
    std::vector<std::size_t> idx(seqs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(idx[i - 1], idx[pick(rng)]);
    }
    const auto n_train =
        static_cast<std::size_t>(train_fraction * static_cast<double>(seqs.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& seq = *seqs[idx[i]];
      (i < n_train ? train : test).sequences.push_back(seq);
    }
  }
  return {train, test};
}

std::vector<DriverSpec> preset_drivers(const std::string& name) {
  auto single = [](std::string id, double headway, double amax, double decel,
                   double lag, double v0, double noise) {
    DriverSpec d;
    d.driver_id = std::move(id);
    d.regimes.push_back({headway, amax, decel, lag, v0, 2.0, noise});
    d.transition = Eigen::MatrixXd::Ones(1, 1);
    return d;
  };

  if (name == "easy4") {
    return {
        single("D1", 0.8, 2.2, 2.8, 0.4, 38.0, 0.12),
        single("D2", 1.3, 1.6, 2.2, 0.9, 36.0, 0.12),
        single("D3", 1.8, 1.1, 1.7, 1.5, 34.0, 0.12),
        single("D4", 2.3, 0.7, 1.3, 2.2, 32.0, 0.12),
    };
  }
  if (name == "hard8") {
    std::vector<DriverSpec> out;
    // overlapping parameter grid: neighbors share most of their range
    const double headways[8] = {1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7};
    const double amaxes[8] = {1.8, 1.2, 1.6, 1.0, 1.4, 1.9, 1.1, 1.5};
    const double lags[8] = {0.6, 1.0, 1.4, 0.8, 1.2, 1.6, 0.7, 1.1};
    for (int i = 0; i < 8; ++i) {
      DriverSpec d;
      d.driver_id = "D" + std::to_string(i + 1);
      const double decel = 1.4 + 0.1 * static_cast<double>(i % 4);
      d.regimes.push_back(
          {headways[i], amaxes[i], decel, lags[i], 35.0, 2.0, 0.15});
      d.regimes.push_back({headways[i] + 0.5, 0.75 * amaxes[i], decel + 0.3,
                           lags[i] + 0.4, 33.0, 2.5, 0.2});
      d.transition.resize(2, 2);
      d.transition << 0.99, 0.01, 0.02, 0.98;
      out.push_back(std::move(d));
    }
    return out;
  }
  throw ValidationError("unknown preset '" + name + "' (expected easy4 or hard8)");
}

using nlohmann::json;

static json regime_to_json(const RegimeParams& r) {
  return {{"desired_headway", r.desired_headway}, {"max_accel", r.max_accel},
          {"comfort_decel", r.comfort_decel},     {"reaction_lag", r.reaction_lag},
          {"desired_speed", r.desired_speed},     {"min_gap", r.min_gap},
          {"accel_noise", r.accel_noise}};
}

static RegimeParams regime_from_json(const json& j) {
  RegimeParams r;
  r.desired_headway = j.at("desired_headway").get<double>();
  r.max_accel = j.at("max_accel").get<double>();
  r.comfort_decel = j.at("comfort_decel").get<double>();
  r.reaction_lag = j.at("reaction_lag").get<double>();
  r.desired_speed = j.at("desired_speed").get<double>();
  r.min_gap = j.value("min_gap", 2.0);
  r.accel_noise = j.value("accel_noise", 0.0);
  return r;
}

std::string specs_to_json_string(const std::vector<DriverSpec>& drivers,
                                 const ScenarioSpec& scenario) {
  json doc;
  doc["format"] = "cfid-specs";
  json ds = json::array();
  for (const auto& d : drivers) {
    json jd;
    jd["driver_id"] = d.driver_id;
    json regimes = json::array();
    for (const auto& r : d.regimes) regimes.push_back(regime_to_json(r));
    jd["regimes"] = std::move(regimes);
    json rows = json::array();
    for (Eigen::Index i = 0; i < d.transition.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < d.transition.cols(); ++j)
        row.push_back(d.transition(i, j));
      rows.push_back(std::move(row));
    }
    jd["transition"] = std::move(rows);
    ds.push_back(std::move(jd));
  }
  doc["drivers"] = std::move(ds);
  doc["scenario"] = {{"duration_min", scenario.duration_min},
                     {"duration_max", scenario.duration_max},
                     {"dt", scenario.dt},
                     {"speed_min", scenario.speed_min},
                     {"speed_max", scenario.speed_max},
                     {"target_band", scenario.target_band},
                     {"segment_min", scenario.segment_min},
                     {"segment_max", scenario.segment_max},
                     {"ramp_rate", scenario.ramp_rate},
                     {"perturb_amp", scenario.perturb_amp},
                     {"seed", scenario.seed}};
  return doc.dump(2) + "\n";
}

std::pair<std::vector<DriverSpec>, ScenarioSpec> specs_from_json_string(
    const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec json: parse error: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "cfid-specs")
      throw ValidationError("spec json: not a cfid-specs document");
    std::vector<DriverSpec> drivers;
    for (const auto& jd : doc.at("drivers")) {
      DriverSpec d;
      d.driver_id = jd.at("driver_id").get<std::string>();
      for (const auto& jr : jd.at("regimes")) d.regimes.push_back(regime_from_json(jr));
      const auto& rows = jd.at("transition");
      d.transition.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size())
          throw ValidationError("spec json: transition matrix must be square");
        for (std::size_t j = 0; j < rows.size(); ++j)
          d.transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              rows[i][j].get<double>();
      }
      d.validate();
      drivers.push_back(std::move(d));
    }
    ScenarioSpec sc;
    if (doc.contains("scenario")) {
      const auto& js = doc["scenario"];
      sc.duration_min = js.value("duration_min", sc.duration_min);
      sc.duration_max = js.value("duration_max", sc.duration_max);
      sc.dt = js.value("dt", sc.dt);
      sc.speed_min = js.value("speed_min", sc.speed_min);
      sc.speed_max = js.value("speed_max", sc.speed_max);
      sc.target_band = js.value("target_band", sc.target_band);
      sc.segment_min = js.value("segment_min", sc.segment_min);
      sc.segment_max = js.value("segment_max", sc.segment_max);
      sc.ramp_rate = js.value("ramp_rate", sc.ramp_rate);
      sc.perturb_amp = js.value("perturb_amp", sc.perturb_amp);
      sc.seed = js.value("seed", sc.seed);
    }
    sc.validate();
    return {std::move(drivers), sc};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec json: malformed document: ") + e.what());
  }
}

std::pair<std::vector<DriverSpec>, ScenarioSpec> load_specs(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open spec file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return specs_from_json_string(buf.str());
}

}  // namespace cfid

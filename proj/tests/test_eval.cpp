#include <doctest.h>

#include <cmath>
#include <random>

#include "cfid/errors.hpp"
#include "cfid/eval.hpp"
#include "cfid/synthdata.hpp"

using namespace cfid;

namespace {

// drivers separated along standardized f1; near-delta states make the model
// an oracle, shared profiles make it uniform
GenerativeModel separated_model(int K, double sigma) {
  GenerativeModel m;
  m.hyper.M = 1;
  m.hyper.Q = K;
  m.projection.A = Eigen::MatrixXd::Zero(1, 8);
  m.projection.A(0, 0) = 1.0;
  m.standardizer.mean = Vector8::Zero();
  m.standardizer.std = Vector8::Ones();
  for (int q = 0; q < K; ++q)
    m.states.push_back({Eigen::VectorXd::Constant(1, 10.0 * q),
                        sigma * Eigen::MatrixXd::Identity(1, 1)});
  for (int k = 0; k < K; ++k) {
    m.driver_ids.push_back("D" + std::to_string(k + 1));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    w(k) = 1.0;
    m.profiles.push_back({w});
  }
  return m;
}

Dataset windows_at_centers(int K, int per_driver, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, jitter);
  Dataset ds;
  ds.split = "test";
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < per_driver; ++n) {
      CarFollowingSequence s;
      s.dt = 0.1;
      const double v = 10.0 * k + (jitter > 0 ? g(rng) : 0.0);
      s.frames.assign(20, Frame{v, 0.0, 25.0, 0.5});
      s.driver_id = "D" + std::to_string(k + 1);
      s.source_id = s.driver_id + "#" + std::to_string(n);
      ds.sequences.push_back(std::move(s));
    }
  return ds;
}

}  // namespace

TEST_CASE("oracle model scores a diagonal confusion matrix") {
  const auto m = separated_model(4, 0.25);
  const auto ds = windows_at_centers(4, 12, 0.3, 3);
  const auto r = evaluate(m, ds, 1, 0);
  CHECK(r.accuracy == doctest::Approx(1.0));
  CHECK(r.confusion.counts.diagonal().sum() == 48);
  CHECK(r.confusion.total() == 48);
  const Eigen::VectorXd rec = r.confusion.recall();
  for (int k = 0; k < 4; ++k) CHECK(rec(k) == doctest::Approx(1.0));
}

TEST_CASE("uniform model scores at chance level") {
  auto m = separated_model(4, 0.25);
  const Eigen::VectorXd shared = Eigen::VectorXd::Constant(4, 0.25);
  for (auto& p : m.profiles) p.omega = shared;
  const auto ds = windows_at_centers(4, 50, 0.3, 5);
  // all posteriors tie at 1/4; deterministic tie-break predicts driver 1
  const auto r = evaluate(m, ds, 1, 0);
  CHECK(r.accuracy == doctest::Approx(0.25));
  for (int k = 0; k < 4; ++k) CHECK(r.confusion.counts(k, 0) == 50);
}

TEST_CASE("confusion row sums conserve test counts") {
  const auto m = separated_model(3, 4.0);  // noisy model, mistakes expected
  const auto ds = windows_at_centers(3, 17, 6.0, 11);
  const auto r = evaluate(m, ds, 1, 0);
  for (int k = 0; k < 3; ++k) CHECK(r.confusion.counts.row(k).sum() == 17);
}

TEST_CASE("n=1 evaluation ignores the trial seed") {
  const auto m = separated_model(3, 2.0);
  const auto ds = windows_at_centers(3, 9, 3.0, 13);
  const auto a = evaluate(m, ds, 1, 1);
  const auto b = evaluate(m, ds, 1, 999);
  CHECK(a.accuracy == b.accuracy);
  CHECK((a.confusion.counts.array() == b.confusion.counts.array()).all());
}

TEST_CASE("multi-sequence trials: counts, skips and improvement") {
  const auto m = separated_model(3, 9.0);
  const auto ds = windows_at_centers(3, 20, 8.0, 17);

  const auto r5 = evaluate(m, ds, 5, 42);
  CHECK(r5.confusion.total() == 3 * 4);  // ceil(20/5) = 4 trials each
  CHECK(r5.skipped.empty());

  const auto r25 = evaluate(m, ds, 25, 42);
  CHECK(r25.skipped.size() == 3);  // nobody has 25 windows
  CHECK(r25.confusion.total() == 0);

  // pooling evidence should help on average for a well-specified model
  const auto r1 = evaluate(m, ds, 1, 42);
  const auto r10 = evaluate(m, ds, 10, 42);
  CHECK(r10.accuracy >= r1.accuracy - 1e-12);
}

TEST_CASE("evaluate validates inputs") {
  const auto m = separated_model(2, 1.0);
  auto ds = windows_at_centers(2, 5, 0.5, 19);
  CHECK_THROWS_AS(evaluate(m, ds, 0, 0), ValidationError);
  ds.sequences[0].driver_id = "D9";
  CHECK_THROWS_AS(evaluate(m, ds, 1, 0), ValidationError);
  ds.sequences[0].driver_id.clear();
  CHECK_THROWS_AS(evaluate(m, ds, 1, 0), ValidationError);
}

namespace {

Dataset raw_sequences_for_sweep(int K, int per_driver, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.4);
  Dataset ds;
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < per_driver; ++n) {
      CarFollowingSequence s;
      s.dt = 0.1;
      const int frames = 300 + static_cast<int>(rng() % 200);  // 30..50 s
      s.frames.reserve(static_cast<std::size_t>(frames));
      for (int t = 0; t < frames; ++t) {
        const double v = 12.0 + 4.0 * k + g(rng);
        s.frames.push_back({v, g(rng), 20.0 + 5.0 * k + g(rng), g(rng)});
      }
      s.driver_id = "D" + std::to_string(k + 1);
      s.source_id = s.driver_id + "/" + std::to_string(n);
      ds.sequences.push_back(std::move(s));
    }
  return ds;
}

}  // namespace

TEST_CASE("sweep: 1x1 grid with one repetition equals a direct run") {
  const Dataset raw = raw_sequences_for_sweep(2, 6, 23);
  const auto [raw_train, raw_test] = split_dataset(raw, 0.7, 1);

  SweepSpec spec;
  spec.axes = {{"Q", {2.0}}};
  spec.repetitions = 1;
  spec.seed = 55;

  TrainingConfig base;
  base.M = 2;
  base.n_outer = 2;
  base.n_inner = 3;
  base.n_final_em = 5;
  ResampleConfig window{10.0, 0.0};
  ReactionTimeConfig rt;

  const SweepResult sr = sweep(spec, raw_train, raw_test, base, window, rt);
  REQUIRE(sr.cells.size() == 1);
  REQUIRE(sr.cells[0].test_accs.size() == 1);
  CHECK(sr.runs_attempted == 1);

  // replicate the cell's run directly on the published seed schedule
  TrainingConfig cfg = base;
  cfg.Q = 2;
  cfg.seed = mix_seed(spec.seed, 0);
  const Dataset train_w = resample(raw_train, window);
  const Dataset test_w = resample(raw_test, window);
  ModelHyper meta;
  meta.window_T = window.window_T;
  meta.dt = 0.1;
  meta.rt = rt;
  const TrainResult tr = train(LabeledFeatures::from_windows(train_w, rt), cfg, meta);
  const double direct_test = evaluate(tr.model, test_w, 1, mix_seed(cfg.seed, 0x65ULL)).accuracy;
  CHECK(sr.cells[0].test_accs[0] == direct_test);
}

TEST_CASE("sweep: 2x2 grid with 2 repetitions runs 8 cells deterministically") {
  const Dataset raw = raw_sequences_for_sweep(2, 5, 29);
  const auto [raw_train, raw_test] = split_dataset(raw, 0.6, 2);

  SweepSpec spec;
  spec.axes = {{"Q", {1.0, 2.0}}, {"M", {1.0, 2.0}}};
  spec.repetitions = 2;
  spec.seed = 7;

  TrainingConfig base;
  base.n_outer = 1;
  base.n_inner = 2;
  base.n_final_em = 2;
  const ResampleConfig window{10.0, 0.0};

  const SweepResult a = sweep(spec, raw_train, raw_test, base, window, {});
  CHECK(a.runs_attempted == 8);
  REQUIRE(a.cells.size() == 4);
  for (const auto& c : a.cells) {
    CHECK(c.train_accs.size() + c.errors.size() == 2);
    CHECK(c.coords.size() == 2);
  }
  const SweepResult b = sweep(spec, raw_train, raw_test, base, window, {});
  for (std::size_t i = 0; i < a.cells.size(); ++i)
    CHECK(a.cells[i].mean_test_acc() == doctest::Approx(b.cells[i].mean_test_acc()));
}

TEST_CASE("sweep records cell failures without aborting") {
  const Dataset raw = raw_sequences_for_sweep(2, 4, 31);
  const auto [raw_train, raw_test] = split_dataset(raw, 0.6, 3);
  SweepSpec spec;
  spec.axes = {{"Q", {1.0, 5000.0}}};  // second cell asks for more states than samples
  spec.repetitions = 1;
  TrainingConfig base;
  base.n_outer = 1;
  base.n_inner = 2;
  base.n_final_em = 2;
  const SweepResult r = sweep(spec, raw_train, raw_test, base, {10.0, 0.0}, {});
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[0].errors.empty());
  CHECK(r.cells[1].errors.size() == 1);
  CHECK(std::isnan(r.cells[1].mean_test_acc()));
}

TEST_CASE("sweep applies overlap and n_sequences axes") {
  const Dataset raw = raw_sequences_for_sweep(2, 6, 37);
  const auto [raw_train, raw_test] = split_dataset(raw, 0.7, 4);

  SweepSpec spec;
  spec.axes = {{"overlap", {0.0, 0.5}}, {"n_sequences", {1.0, 2.0}}};
  spec.repetitions = 1;
  spec.seed = 3;
  TrainingConfig base;
  base.M = 2;
  base.Q = 2;
  base.n_outer = 1;
  base.n_inner = 2;
  base.n_final_em = 3;
  const SweepResult r = sweep(spec, raw_train, raw_test, base, {10.0, 0.0}, {});
  REQUIRE(r.cells.size() == 4);
  for (const auto& c : r.cells) {
    INFO("cell overlap=", c.coords[0], " n=", c.coords[1],
         (c.errors.empty() ? "" : c.errors[0]));
    CHECK(c.errors.empty());
  }
  for (const auto& c : r.cells) {
    CHECK(c.mean_train_acc() >= 0.0);
    CHECK(c.mean_train_acc() <= 1.0);
    CHECK(c.mean_test_acc() >= 0.0);
    CHECK(c.mean_test_acc() <= 1.0);
  }
}

// Desk-scale analogue of the observation that keeping all eight dimensions
// (M = 8, no bottleneck) generalizes worse than a projected model on the
// overlapping-parameter preset. Directional, pinned to this seed schedule.
TEST_CASE("hard8 sweep: M=8 underperforms the best M<8 on test accuracy") {
  ScenarioSpec sc;
  sc.duration_min = 30.0;
  sc.duration_max = 90.0;
  sc.seed = 2026;
  const Dataset corpus = generate_corpus(preset_drivers("hard8"), sc, 25);
  const auto [raw_train, raw_test] = split_dataset(corpus, 0.8, 3);

  SweepSpec spec;
  spec.axes = {{"M", {2.0, 3.0, 4.0, 8.0}}};
  spec.repetitions = 4;
  spec.seed = 17;
  TrainingConfig base;
  base.Q = 16;
  base.n_outer = 8;
  base.n_inner = 10;
  base.n_final_em = 50;
  const SweepResult r = sweep(spec, raw_train, raw_test, base, {15.0, 0.0}, {});

  double best_reduced = 0.0, full = 0.0;
  for (const auto& c : r.cells) {
    REQUIRE(c.errors.empty());
    if (c.coords[0] < 8.0)
      best_reduced = std::max(best_reduced, c.mean_test_acc());
    else
      full = c.mean_test_acc();
  }
  CHECK(full < best_reduced);
  CHECK(best_reduced > 1.0 / 8.0);  // better than chance on eight drivers
}

TEST_CASE("sweep spec json parsing") {
  const auto spec = sweep_spec_from_json_string(
      R"({"axes":[{"name":"Q","values":[8,16]},{"name":"M","values":[2,4]}],)"
      R"("repetitions":3,"seed":11})");
  CHECK(spec.axes.size() == 2);
  CHECK(spec.axes[0].values == std::vector<double>{8.0, 16.0});
  CHECK(spec.repetitions == 3);
  CHECK_THROWS_AS(sweep_spec_from_json_string(R"({"axes":[]})"), ValidationError);
  CHECK_THROWS_AS(sweep_spec_from_json_string(R"({"axes":[{"name":"bogus","values":[1]}]})"),
                  ValidationError);
}

#include "cfid/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/QR>

#include "cfid/errors.hpp"

namespace cfid {

void TrainingConfig::validate() const {
  if (M < 1 || M > kNumRawFeatures)
    throw ValidationError("training: M must lie in [1, 8]");
  if (Q < 1) throw ValidationError("training: Q must be >= 1");
  if (n_outer < 0) throw ValidationError("training: n_outer must be >= 0");
  if (n_inner < 1) throw ValidationError("training: n_inner must be >= 1");
  if (n_final_em < 0) throw ValidationError("training: n_final_em must be >= 0");
  if (!(lr_up > 1.0 && lr_down < 1.0 && lr_down > 0.0))
    throw ValidationError("training: need lr_up > 1 > lr_down > 0");
  if (!(lr_max > 0.0)) throw ValidationError("training: lr_max must be > 0");
  if (!(lr >= 0.0 && lr <= lr_max))
    throw ValidationError("training: need 0 <= lr <= lr_max");
}

LabeledFeatures LabeledFeatures::from_windows(const Dataset& windows,
                                              const ReactionTimeConfig& rt) {
  windows.require_labeled();
  std::map<std::string, std::vector<RawFeatureVector>> groups;
  for (const auto& w : windows.sequences)
    groups[w.driver_id].push_back(extract_features(w, rt));
  LabeledFeatures out;
  for (auto& [id, feats] : groups) {
    out.driver_ids.push_back(id);
    out.features.push_back(std::move(feats));
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 over seed xor salt
  std::uint64_t z = seed ^ (salt + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Per-sample scoring shared by loss, gradient and accuracy: driver
// log-densities and, when requested, the within-driver responsibilities.
struct SampleScore {
  Eigen::VectorXd log_p;       // K
  Eigen::MatrixXd gamma_tilde; // K x Q, row k = responsibilities under driver k
};

SampleScore score_sample(const Eigen::VectorXd& x, const EmParams& params,
                         const StateDensity& density, bool with_gamma) {
  const auto K = static_cast<Eigen::Index>(params.profiles.size());
  const Eigen::Index Q = density.num_states();
  const Eigen::VectorXd log_pdf = density.log_pdf_all(x);

  SampleScore s;
  s.log_p.resize(K);
  if (with_gamma) s.gamma_tilde.setZero(K, Q);
  Eigen::VectorXd terms(Q);
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::VectorXd& w = params.profiles[static_cast<std::size_t>(k)].omega;
    for (Eigen::Index q = 0; q < Q; ++q)
      terms(q) = w(q) > 0.0 ? std::log(w(q)) + log_pdf(q)
                            : -std::numeric_limits<double>::infinity();
    const double lse = log_sum_exp(terms);
    s.log_p(k) = lse;
    if (with_gamma && std::isfinite(lse))
      for (Eigen::Index q = 0; q < Q; ++q)
        s.gamma_tilde(k, q) = std::exp(terms(q) - lse);
  }
  return s;
}

}  // namespace

double training_loss(const DriverFeatureSet& projected, const EmParams& params) {
  StateDensity density(params.states);
  double total = 0.0;
  for (std::size_t k = 0; k < projected.features.size(); ++k) {
    const auto& X = projected.features[k];
    for (Eigen::Index n = 0; n < X.cols(); ++n) {
      const SampleScore s = score_sample(X.col(n), params, density, false);
      const double log_post = s.log_p(static_cast<Eigen::Index>(k)) - log_sum_exp(s.log_p);
      if (!std::isfinite(log_post))
        throw NumericalError("loss: non-finite term for sample " +
                             projected.driver_ids[k] + ":" + std::to_string(n));
      total -= log_post;
    }
  }
  return total;
}

Eigen::MatrixXd training_loss_gradient(
    const std::vector<Eigen::MatrixXd>& standardized,
    const ProjectionModel& projection, const EmParams& params) {
  StateDensity density(params.states);
  const Eigen::Index M = projection.A.rows();
  const Eigen::Index Q = density.num_states();
  const auto K = static_cast<Eigen::Index>(params.profiles.size());
  if (static_cast<Eigen::Index>(standardized.size()) != K)
    throw ValidationError("gradient: feature groups disagree with profiles");

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(M, kNumRawFeatures);
  Eigen::MatrixXd whitened(M, Q);  // sigma_q^{-1} (x - mu_q), shared across drivers
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& Xs = standardized[static_cast<std::size_t>(k)];
    for (Eigen::Index n = 0; n < Xs.cols(); ++n) {
      const Eigen::VectorXd x = projection.A * Xs.col(n);
      const SampleScore s = score_sample(x, params, density, true);
      const double lse = log_sum_exp(s.log_p);
      if (!std::isfinite(lse))
        throw NumericalError("gradient: non-finite term for sample " +
                             std::to_string(n) + " of driver " + std::to_string(k));

      for (Eigen::Index q = 0; q < Q; ++q)
        whitened.col(q) = density.solve(static_cast<int>(q), x - density.mean(static_cast<int>(q)));

      Eigen::VectorXd dldx = Eigen::VectorXd::Zero(M);
      for (Eigen::Index kp = 0; kp < K; ++kp) {
        const double post = std::exp(s.log_p(kp) - lse);
        const double coef = (kp == k ? 1.0 : 0.0) - post;
        if (coef == 0.0) continue;
        dldx.noalias() += coef * (whitened * s.gamma_tilde.row(kp).transpose());
      }
      grad.noalias() += dldx * Xs.col(n).transpose();
    }
  }
  return grad;
}

double training_accuracy(const DriverFeatureSet& projected, const EmParams& params) {
  StateDensity density(params.states);
  long correct = 0, total = 0;
  for (std::size_t k = 0; k < projected.features.size(); ++k) {
    const auto& X = projected.features[k];
    for (Eigen::Index n = 0; n < X.cols(); ++n) {
      const SampleScore s = score_sample(X.col(n), params, density, false);
      if (argmax_index(s.log_p) == static_cast<int>(k)) ++correct;
      ++total;
    }
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

namespace {

std::vector<Eigen::MatrixXd> standardize_groups(const LabeledFeatures& data,
                                                const Standardizer& s) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(data.features.size());
  for (const auto& group : data.features) {
    Eigen::MatrixXd X(kNumRawFeatures, static_cast<Eigen::Index>(group.size()));
    for (std::size_t n = 0; n < group.size(); ++n)
      X.col(static_cast<Eigen::Index>(n)) = standardize(group[n], s);
    out.push_back(std::move(X));
  }
  return out;
}

DriverFeatureSet project_groups(const std::vector<Eigen::MatrixXd>& standardized,
                                const std::vector<std::string>& ids,
                                const Eigen::MatrixXd& A) {
  DriverFeatureSet out;
  out.driver_ids = ids;
  out.features.reserve(standardized.size());
  for (const auto& X : standardized) out.features.push_back(A * X);
  return out;
}

Eigen::MatrixXd random_orthonormal_rows(int m, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd G(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Qthin = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  return Qthin.transpose();
}

}  // namespace

double loss(const GenerativeModel& model, const LabeledFeatures& data) {
  if (data.driver_ids != model.driver_ids)
    throw ValidationError("loss: sample labels disagree with model drivers");
  const auto standardized = standardize_groups(data, model.standardizer);
  const auto projected = project_groups(standardized, data.driver_ids, model.projection.A);
  return training_loss(projected, EmParams{model.states, model.profiles});
}

Eigen::MatrixXd loss_gradient_wrt_A(const GenerativeModel& model,
                                    const LabeledFeatures& data) {
  if (data.driver_ids != model.driver_ids)
    throw ValidationError("gradient: sample labels disagree with model drivers");
  const auto standardized = standardize_groups(data, model.standardizer);
  return training_loss_gradient(standardized, model.projection,
                                EmParams{model.states, model.profiles});
}

TrainResult train(const LabeledFeatures& data, const TrainingConfig& cfg,
                  const ModelHyper& window_meta) {
  cfg.validate();
  if (data.driver_ids.size() < 2)
    throw ValidationError("train: need at least two drivers");
  for (std::size_t i = 1; i < data.driver_ids.size(); ++i)
    if (!(data.driver_ids[i - 1] < data.driver_ids[i]))
      throw ValidationError("train: driver ids must be sorted and unique");

  std::vector<RawFeatureVector> all;
  for (const auto& group : data.features)
    all.insert(all.end(), group.begin(), group.end());
  const Standardizer standardizer = fit_standardizer(all);
  const auto standardized = standardize_groups(data, standardizer);

  std::mt19937_64 rng_proj(mix_seed(cfg.seed, kProjSeedSalt));
  std::mt19937_64 rng_em(mix_seed(cfg.seed, kEmSeedSalt));

  Eigen::MatrixXd A = random_orthonormal_rows(cfg.M, kNumRawFeatures, rng_proj);

  auto run_em = [&](const Eigen::MatrixXd& A_now, const EmParams* warm, int iters) {
    const auto projected = project_groups(standardized, data.driver_ids, A_now);
    EmResult em = em_fit(projected, cfg.Q, warm, iters, rng_em, cfg.em);
    const double l = training_loss(projected, em.params);
    const double acc = training_accuracy(projected, em.params);
    return std::tuple<EmParams, double, double>(std::move(em.params), l, acc);
  };

  auto [params, loss_prev, acc] = run_em(A, nullptr, cfg.n_inner);

  struct Best {
    Eigen::MatrixXd A;
    EmParams params;
    double loss;
  } best{A, params, loss_prev};

  double rate = cfg.lr;
  TrainingTrace trace;
  trace.rows.push_back({0, loss_prev, acc, rate, true});

  for (int i = 1; i <= cfg.n_outer; ++i) {
    if (rate != 0.0) {  // rate 0 means pure EM, leave A bitwise untouched
      const Eigen::MatrixXd grad =
          training_loss_gradient(standardized, ProjectionModel{A}, params);
      A -= rate * grad;
      normalize_rows(A);
    }

    auto [params_new, loss_now, acc_now] = run_em(A, &params, cfg.n_inner);
    params = std::move(params_new);

    rate = loss_now < loss_prev ? std::min(cfg.lr_up * rate, cfg.lr_max)
                                : cfg.lr_down * rate;
    const bool is_best = loss_now < best.loss;
    if (is_best) best = {A, params, loss_now};
    trace.rows.push_back({i, loss_now, acc_now, rate, is_best});
    loss_prev = loss_now;
  }

  // long EM refit from the cached best parameters
  A = best.A;
  params = best.params;
  auto [params_final, loss_final, acc_final] = run_em(A, &params, cfg.n_final_em);

  trace.final_loss = loss_final;
  trace.final_train_acc = acc_final;

  TrainResult out;
  out.model.projection = ProjectionModel{A};
  out.model.standardizer = standardizer;
  out.model.states = std::move(params_final.states);
  out.model.driver_ids = data.driver_ids;
  out.model.profiles = std::move(params_final.profiles);
  out.model.hyper = window_meta;
  out.model.hyper.M = cfg.M;
  out.model.hyper.Q = cfg.Q;
  out.model.hyper.seed = cfg.seed;
  out.model.validate();
  out.trace = std::move(trace);
  return out;
}

}  // namespace cfid

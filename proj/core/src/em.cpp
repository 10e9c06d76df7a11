#include "cfid/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfid/errors.hpp"

namespace cfid {

static long total_samples(const DriverFeatureSet& data) {
  long n = 0;
  for (const auto& f : data.features) n += f.cols();
  return n;
}

static void check_data(const DriverFeatureSet& data, int Q) {
  if (data.driver_ids.size() != data.features.size())
    throw ValidationError("em: driver ids and feature groups out of step");
  if (data.driver_ids.empty()) throw ValidationError("em: no drivers");
  if (Q < 1) throw ValidationError("em: Q must be >= 1");
  const auto dim = data.features.front().rows();
  for (std::size_t k = 0; k < data.features.size(); ++k) {
    if (data.features[k].cols() < 1)
      throw ValidationError("em: driver " + data.driver_ids[k] + " has no samples");
    if (data.features[k].rows() != dim)
      throw ValidationError("em: inconsistent feature dimension");
  }
  if (Q > total_samples(data))
    throw ValidationError("em: Q exceeds the total sample count");
}

EmParams em_random_init(const DriverFeatureSet& data, int Q, std::mt19937_64& rng) {
  check_data(data, Q);
  const long n_total = total_samples(data);
  const auto dim = data.features.front().rows();

  // partial Fisher-Yates over the pooled sample indices
  std::vector<long> idx(static_cast<std::size_t>(n_total));
  std::iota(idx.begin(), idx.end(), 0L);
  for (int q = 0; q < Q; ++q) {
    std::uniform_int_distribution<long> pick(q, n_total - 1);
    std::swap(idx[static_cast<std::size_t>(q)], idx[static_cast<std::size_t>(pick(rng))]);
  }

  auto pooled_column = [&](long flat) -> Eigen::VectorXd {
    for (const auto& f : data.features) {
      if (flat < f.cols()) return f.col(flat);
      flat -= f.cols();
    }
    throw ValidationError("em: sample index out of range");
  };

  EmParams params;
  params.states.reserve(static_cast<std::size_t>(Q));
  for (int q = 0; q < Q; ++q)
    params.states.push_back(
        {pooled_column(idx[static_cast<std::size_t>(q)]),
         Eigen::MatrixXd::Identity(dim, dim)});
  const auto K = data.driver_ids.size();
  params.profiles.assign(
      K, DriverProfile{Eigen::VectorXd::Constant(Q, 1.0 / static_cast<double>(Q))});
  return params;
}

Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& features,
                                 const Eigen::VectorXd& omega,
                                 const StateDensity& density) {
  const Eigen::Index N = features.cols();
  const Eigen::Index Q = omega.size();
  Eigen::VectorXd log_w(Q);
  for (Eigen::Index q = 0; q < Q; ++q)
    log_w(q) = omega(q) > 0.0 ? std::log(omega(q))
                              : -std::numeric_limits<double>::infinity();

  Eigen::MatrixXd gamma(N, Q);
  Eigen::VectorXd terms(Q);
  for (Eigen::Index n = 0; n < N; ++n) {
    terms = log_w + density.log_pdf_all(features.col(n));
    const double lse = log_sum_exp(terms);
    if (!std::isfinite(lse))
      throw NumericalError("em: responsibilities degenerate at sample " +
                           std::to_string(n));
    for (Eigen::Index q = 0; q < Q; ++q) gamma(n, q) = std::exp(terms(q) - lse);
  }
  return gamma;
}

double em_log_likelihood(const DriverFeatureSet& data, const EmParams& params) {
  StateDensity density(params.states);
  double ll = 0.0;
  for (std::size_t k = 0; k < data.features.size(); ++k) {
    const auto& X = data.features[k];
    for (Eigen::Index n = 0; n < X.cols(); ++n)
      ll += log_mixture_density(X.col(n), params.profiles[k], density);
  }
  return ll;
}

EmResult em_fit(const DriverFeatureSet& data, int Q, const EmParams* warm_start,
                int n_iter, std::mt19937_64& rng, const EmOptions& opts) {
  check_data(data, Q);
  const auto dim = data.features.front().rows();
  const auto K = data.driver_ids.size();

  EmResult result;
  result.params = warm_start ? *warm_start : em_random_init(data, Q, rng);
  if (static_cast<int>(result.params.states.size()) != Q ||
      result.params.profiles.size() != K)
    throw ValidationError("em: warm start shape disagrees with data/Q");

  result.log_likelihood.reserve(static_cast<std::size_t>(n_iter) + 1);
  result.log_likelihood.push_back(em_log_likelihood(data, result.params));

  const long n_total = total_samples(data);
  std::vector<Eigen::MatrixXd> gamma(K);  // per driver: N_k x Q

  for (int it = 0; it < n_iter; ++it) {
    // E-step
    StateDensity density(result.params.states);
    for (std::size_t k = 0; k < K; ++k)
      gamma[k] =
          responsibilities(data.features[k], result.params.profiles[k].omega, density);

    // M-step: per-driver weights, pooled means, pooled covariances
    Eigen::VectorXd M_q = Eigen::VectorXd::Zero(Q);
    Eigen::MatrixXd mu_acc = Eigen::MatrixXd::Zero(dim, Q);
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::VectorXd M_kq = gamma[k].colwise().sum();
      M_q += M_kq;
      Eigen::VectorXd omega = M_kq / static_cast<double>(data.features[k].cols());
      result.params.profiles[k].omega = omega / omega.sum();  // exact simplex
      mu_acc += data.features[k] * gamma[k];  // dim x Q
    }

    std::vector<int> reseeded;
    for (int q = 0; q < Q; ++q) {
      DriverState& s = result.params.states[static_cast<std::size_t>(q)];
      if (M_q(q) < opts.empty_state_tol) {
        reseeded.push_back(q);
        continue;
      }
      s.mu = mu_acc.col(q) / M_q(q);
      Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(dim, dim);
      for (std::size_t k = 0; k < K; ++k) {
        const auto& X = data.features[k];
        for (Eigen::Index n = 0; n < X.cols(); ++n) {
          const Eigen::VectorXd d = X.col(n) - s.mu;
          scatter.noalias() += gamma[k](n, q) * (d * d.transpose());
        }
      }
      s.sigma = scatter / M_q(q) +
                opts.cov_reg * Eigen::MatrixXd::Identity(dim, dim);
    }

    // Dead states restart at a random training point with unit covariance;
    // their weights stay where the M-step put them (about zero), so the
    // likelihood is unaffected.
    for (int q : reseeded) {
      std::uniform_int_distribution<long> pick(0, n_total - 1);
      long flat = pick(rng);
      for (const auto& X : data.features) {
        if (flat < X.cols()) {
          result.params.states[static_cast<std::size_t>(q)].mu = X.col(flat);
          break;
        }
        flat -= X.cols();
      }
      result.params.states[static_cast<std::size_t>(q)].sigma =
          Eigen::MatrixXd::Identity(dim, dim);
    }

    const double ll = em_log_likelihood(data, result.params);
    if (!std::isfinite(ll))
      throw NumericalError("em: log-likelihood became non-finite at iteration " +
                           std::to_string(it + 1));
    result.log_likelihood.push_back(ll);
  }
  return result;
}

GenerativeModel register_driver(const GenerativeModel& model,
                                const std::string& new_driver_id,
                                const std::vector<RawFeatureVector>& new_features,
                                const RegisterOptions& opts) {
  if (new_driver_id.empty())
    throw ValidationError("register: driver id must be non-empty");
  if (model.driver_index(new_driver_id) >= 0)
    throw ValidationError("register: driver id '" + new_driver_id +
                          "' already present in the model");
  if (new_features.empty())
    throw ValidationError("register: need at least one feature vector");

  const Eigen::Index N = static_cast<Eigen::Index>(new_features.size());
  Eigen::MatrixXd X(model.hyper.M, N);
  for (Eigen::Index n = 0; n < N; ++n) X.col(n) = embed(model, new_features[static_cast<std::size_t>(n)]);

  // E/M iterations with states frozen: only the new driver's weights move.
  StateDensity density(model.states);
  const int Q = model.hyper.Q;
  Eigen::VectorXd omega = Eigen::VectorXd::Constant(Q, 1.0 / static_cast<double>(Q));
  for (int it = 0; it < opts.n_iter; ++it) {
    const Eigen::MatrixXd gamma = responsibilities(X, omega, density);
    omega = gamma.colwise().sum() / static_cast<double>(N);
    omega /= omega.sum();
  }

  GenerativeModel out = model;
  const auto pos = std::lower_bound(out.driver_ids.begin(), out.driver_ids.end(),
                                    new_driver_id) -
                   out.driver_ids.begin();
  out.driver_ids.insert(out.driver_ids.begin() + pos, new_driver_id);
  out.profiles.insert(out.profiles.begin() + pos, DriverProfile{omega});
  return out;
}

}  // namespace cfid

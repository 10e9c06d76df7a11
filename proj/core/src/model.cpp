#include "cfid/model.hpp"

#include <cmath>
#include <limits>

#include "cfid/errors.hpp"

namespace cfid {

void DriverProfile::validate() const {
  if (omega.size() == 0) throw ValidationError("profile: empty weight vector");
  if (omega.minCoeff() < 0.0) throw ValidationError("profile: negative weight");
  if (std::abs(omega.sum() - 1.0) > 1e-12)
    throw ValidationError("profile: weights do not sum to 1");
}

int GenerativeModel::driver_index(const std::string& id) const {
  for (std::size_t i = 0; i < driver_ids.size(); ++i)
    if (driver_ids[i] == id) return static_cast<int>(i);
  return -1;
}

void GenerativeModel::validate() const {
  projection.validate();
  if (projection.output_dim() != hyper.M)
    throw ValidationError("model: projection rows disagree with hyper.M");
  if (static_cast<int>(states.size()) != hyper.Q)
    throw ValidationError("model: state count disagrees with hyper.Q");
  for (const auto& s : states)
    if (s.mu.size() != hyper.M || s.sigma.rows() != hyper.M || s.sigma.cols() != hyper.M)
      throw ValidationError("model: state dimension disagrees with hyper.M");
  if (driver_ids.size() != profiles.size())
    throw ValidationError("model: driver ids and profiles out of step");
  if (driver_ids.empty()) throw ValidationError("model: no drivers");
  for (const auto& p : profiles) {
    p.validate();
    if (p.omega.size() != hyper.Q)
      throw ValidationError("model: profile length disagrees with hyper.Q");
  }
  for (std::size_t i = 1; i < driver_ids.size(); ++i)
    if (!(driver_ids[i - 1] < driver_ids[i]))
      throw ValidationError("model: driver ids not sorted and unique");
  hyper.rt.validate();
}

Eigen::VectorXd embed(const GenerativeModel& model, const RawFeatureVector& x) {
  return project(standardize(x, model.standardizer), model.projection);
}

double log_mixture_density(const Eigen::VectorXd& x, const DriverProfile& profile,
                           const StateDensity& density) {
  if (profile.omega.size() != density.num_states())
    throw ValidationError("mixture: profile length disagrees with state pool");
  Eigen::VectorXd terms(profile.omega.size());
  for (Eigen::Index q = 0; q < profile.omega.size(); ++q) {
    const double w = profile.omega(q);
    terms(q) = w > 0.0 ? std::log(w) + density.log_pdf(static_cast<int>(q), x)
                       : -std::numeric_limits<double>::infinity();
  }
  return log_sum_exp(terms);
}

Eigen::VectorXd driver_log_densities(const Eigen::VectorXd& x,
                                     const std::vector<DriverProfile>& profiles,
                                     const StateDensity& density) {
  // component densities are shared across drivers, evaluate them once
  const Eigen::VectorXd log_pdf = density.log_pdf_all(x);
  Eigen::VectorXd out(static_cast<Eigen::Index>(profiles.size()));
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const Eigen::VectorXd& w = profiles[k].omega;
    Eigen::VectorXd terms(w.size());
    for (Eigen::Index q = 0; q < w.size(); ++q)
      terms(q) = w(q) > 0.0 ? std::log(w(q)) + log_pdf(q)
                            : -std::numeric_limits<double>::infinity();
    out(static_cast<Eigen::Index>(k)) = log_sum_exp(terms);
  }
  return out;
}

Eigen::VectorXd posterior_from_embedded(const Eigen::VectorXd& x,
                                        const std::vector<DriverProfile>& profiles,
                                        const StateDensity& density,
                                        bool* underflow) {
  const Eigen::VectorXd logp = driver_log_densities(x, profiles, density);
  const Eigen::Index K = logp.size();
  const double m = logp.maxCoeff();
  if (underflow) *underflow = false;
  if (!std::isfinite(m)) {
    // every driver's density vanished; report a flat posterior
    if (underflow) *underflow = true;
    return Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  }
  Eigen::VectorXd p(K);
  for (Eigen::Index k = 0; k < K; ++k) p(k) = std::exp(logp(k) - m);
  p /= p.sum();
  return p;
}

PosteriorResult posterior_over_drivers(const Eigen::VectorXd& x,
                                       const GenerativeModel& model,
                                       const StateDensity& density) {
  PosteriorResult r;
  r.p = posterior_from_embedded(x, model.profiles, density, &r.underflow);
  return r;
}

PosteriorResult posterior_over_drivers(const Eigen::VectorXd& x,
                                       const GenerativeModel& model) {
  StateDensity density(model.states);
  return posterior_over_drivers(x, model, density);
}

int argmax_index(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

SingleInference infer_single(const CarFollowingSequence& seq,
                             const GenerativeModel& model) {
  const RawFeatureVector f = extract_features(seq, model.hyper.rt);
  StateDensity density(model.states);
  SingleInference out;
  out.posterior =
      posterior_from_embedded(embed(model, f), model.profiles, density, &out.underflow);
  out.driver_id = model.driver_ids[static_cast<std::size_t>(argmax_index(out.posterior))];
  return out;
}

MultiInference infer_multi(const std::vector<CarFollowingSequence>& seqs,
                           const GenerativeModel& model) {
  if (seqs.empty()) throw ValidationError("infer_multi: no sequences given");
  StateDensity density(model.states);
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(model.num_drivers());
  MultiInference out;
  for (const auto& seq : seqs) {
    const Eigen::VectorXd logp = driver_log_densities(
        embed(model, extract_features(seq, model.hyper.rt)), model.profiles, density);
    const double lse = log_sum_exp(logp);
    if (std::isfinite(lse)) {
      scores += (logp.array() - lse).matrix();  // log P(k | S_n)
    } else {
      // vanished densities carry no evidence: flat posterior for this window
      scores.array() -= std::log(static_cast<double>(model.num_drivers()));
      out.underflow = true;
    }
  }
  out.log_scores = scores;
  out.driver_id = model.driver_ids[static_cast<std::size_t>(argmax_index(scores))];
  return out;
}

}  // namespace cfid

#include "cfid/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cfid/errors.hpp"

namespace cfid {

static constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

StateDensity::StateDensity(const StatePool& states) {
  if (states.empty()) throw ValidationError("state pool is empty");
  dim_ = static_cast<int>(states.front().mu.size());
  means_.reserve(states.size());
  llt_.reserve(states.size());
  log_norm_.reserve(states.size());

  for (std::size_t q = 0; q < states.size(); ++q) {
    const DriverState& s = states[q];
    if (s.mu.size() != dim_ || s.sigma.rows() != dim_ || s.sigma.cols() != dim_)
      throw ValidationError("state " + std::to_string(q) + ": inconsistent dimensions");
    const double asym = (s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, s.sigma.cwiseAbs().maxCoeff()))
      throw ValidationError("state " + std::to_string(q) + ": covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(s.sigma);
    if (llt.info() != Eigen::Success)
      throw NumericalError("state " + std::to_string(q) +
                           ": covariance not positive definite");
    double log_det = 0.0;
    const auto& L = llt.matrixLLT();
    for (int i = 0; i < dim_; ++i) log_det += 2.0 * std::log(L(i, i));
    means_.push_back(s.mu);
    llt_.push_back(std::move(llt));
    log_norm_.push_back(-0.5 * (dim_ * kLog2Pi + log_det));
  }
}

double StateDensity::log_pdf(int q, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = x - means_[q];
  // quadratic form via the triangular solve: ||L^{-1} d||^2
  const Eigen::VectorXd y = llt_[q].matrixL().solve(d);
  return log_norm_[q] - 0.5 * y.squaredNorm();
}

Eigen::VectorXd StateDensity::log_pdf_all(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(num_states());
  for (int q = 0; q < num_states(); ++q) out(q) = log_pdf(q, x);
  return out;
}

Eigen::VectorXd StateDensity::solve(int q, const Eigen::VectorXd& d) const {
  return llt_[q].solve(d);
}

double log_gaussian_pdf(const Eigen::VectorXd& x, const DriverState& state) {
  StateDensity dens(StatePool{state});
  return dens.log_pdf(0, x);
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // -inf (all terms vanish) or propagated inf/nan
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

}  // namespace cfid

#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace cfid {

// One shared driver state: a full-covariance Gaussian in the projected
// feature space.
struct DriverState {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;  // symmetric positive definite
};

using StatePool = std::vector<DriverState>;

// Cholesky-backed evaluator for a state pool. Factorizations are computed
// once at construction; EM rebuilds the evaluator after each M-step.
class StateDensity {
 public:
  explicit StateDensity(const StatePool& states);  // throws NumericalError on non-PD sigma

  int num_states() const { return static_cast<int>(llt_.size()); }
  int dim() const { return dim_; }

  double log_pdf(int q, const Eigen::VectorXd& x) const;
  // All Q component log-densities at x.
  Eigen::VectorXd log_pdf_all(const Eigen::VectorXd& x) const;
  // sigma_q^{-1} * d via the cached factorization.
  Eigen::VectorXd solve(int q, const Eigen::VectorXd& d) const;
  const Eigen::VectorXd& mean(int q) const { return means_[q]; }

 private:
  int dim_ = 0;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt_;
  std::vector<double> log_norm_;  // -(M/2) log 2pi - (1/2) log det sigma
};

// One-shot evaluation of the Gaussian log-density; use StateDensity for
// anything repeated.
double log_gaussian_pdf(const Eigen::VectorXd& x, const DriverState& state);

// log(sum_i exp(v_i)) without overflow; -inf for an all--inf input.
double log_sum_exp(const Eigen::VectorXd& v);

}  // namespace cfid

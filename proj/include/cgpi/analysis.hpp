#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cgpi/envs.hpp"
#include "cgpi/policy.hpp"
#include "cgpi/rng.hpp"

namespace cgpi {

using CriticFn = std::function<double(const Eigen::VectorXd& state, const Eigen::VectorXd& action)>;
using PolicyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& state)>;

// Symmetrized central finite-difference Hessian of Q w.r.t. the action.
Eigen::MatrixXd action_hessian(const CriticFn& q, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& action, double eps);

// Gap between the Gaussian-policy and deterministic objectives, measured by
// Monte Carlo and predicted by the curvature term (sigma^2 / 2) * E[tr H].
struct TaylorReport {
  double j_d = 0.0;
  double j_r = 0.0;
  double predicted_residual = 0.0;
  double measured_residual = 0.0;
  double mc_standard_error = 0.0;
  double sigma = 0.0;
  std::int64_t state_count = 0;
  std::int64_t sample_count = 0;
};

// antithetic = true draws eta in +/- pairs, which cancels the first-order
// Taylor term exactly sample-by-sample.
TaylorReport taylor_residual(const CriticFn& q, const PolicyFn& mu, double sigma,
                             const std::vector<Eigen::VectorXd>& states, std::int64_t mc_samples,
                             Rng& rng, bool antithetic = false, double hessian_eps = 1e-3);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;  // two-tailed
};

// Unequal-variance two-sample t-test with Welch-Satterthwaite dof.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

// P(T <= t) for Student's t with `dof` degrees of freedom, via the
// regularized incomplete beta function.
double student_t_cdf(double t, double dof);
double regularized_incomplete_beta(double a, double b, double x);

struct VarianceTrace {
  std::vector<std::pair<std::int64_t, double>> points;  // (env_step, mean policy std)
};

VarianceTrace variance_trace(
    const std::vector<std::pair<std::int64_t, GaussianPolicy>>& snapshots,
    const Eigen::MatrixXd& probe_states);

// Constant trace for fixed-noise rollout policies.
VarianceTrace variance_trace_constant(const std::vector<std::int64_t>& steps, double sigma);

// Mean and sample std of undiscounted returns over deterministic-action episodes.
std::pair<double, double> evaluate(Env& env, const PolicyFn& policy, int episodes, Rng& rng);

}  // namespace cgpi

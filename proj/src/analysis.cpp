#include "cgpi/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace cgpi {

Eigen::MatrixXd action_hessian(const CriticFn& q, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& action, double eps) {
  // Wide steps are legitimate for piecewise-linear (ReLU) critics, where the
  // effective curvature only shows up when the stencil straddles kinks.
  if (eps < 1e-5 || eps > 1.0)
    throw std::invalid_argument("analysis: hessian eps must lie in [1e-5, 1]");
  const int d = static_cast<int>(action.size());
  Eigen::MatrixXd h(d, d);
  const double f0 = q(state, action);
  if (!std::isfinite(f0)) throw std::runtime_error("analysis: non-finite critic value");
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd ap = action, am = action;
    ap[i] += eps;
    am[i] -= eps;
    h(i, i) = (q(state, ap) - 2.0 * f0 + q(state, am)) / (eps * eps);
    for (int j = i + 1; j < d; ++j) {
      Eigen::VectorXd app = action, apm = action, amp = action, amm = action;
      app[i] += eps; app[j] += eps;
      apm[i] += eps; apm[j] -= eps;
      amp[i] -= eps; amp[j] += eps;
      amm[i] -= eps; amm[j] -= eps;
      const double v = (q(state, app) - q(state, apm) - q(state, amp) + q(state, amm)) /
                       (4.0 * eps * eps);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  if (!h.allFinite()) throw std::runtime_error("analysis: non-finite Hessian entry");
  return 0.5 * (h + h.transpose());
}

TaylorReport taylor_residual(const CriticFn& q, const PolicyFn& mu, double sigma,
                             const std::vector<Eigen::VectorXd>& states, std::int64_t mc_samples,
                             Rng& rng, bool antithetic, double hessian_eps) {
  if (states.empty()) throw std::invalid_argument("analysis: empty state set");
  if (sigma <= 0.0) throw std::invalid_argument("analysis: sigma must be positive");

  TaylorReport rep;
  rep.sigma = sigma;
  rep.state_count = static_cast<std::int64_t>(states.size());

  // Deterministic objective and curvature prediction over the fixed state set.
  std::vector<Eigen::VectorXd> means;
  std::vector<double> q_at_mean;
  means.reserve(states.size());
  double jd = 0.0, trace_sum = 0.0;
  for (const auto& s : states) {
    means.push_back(mu(s));
    q_at_mean.push_back(q(s, means.back()));
    jd += q_at_mean.back();
    trace_sum += action_hessian(q, s, means.back(), hessian_eps).trace();
  }
  rep.j_d = jd / static_cast<double>(states.size());
  rep.predicted_residual = 0.5 * sigma * sigma * trace_sum / static_cast<double>(states.size());

  // Per-sample residual q(s, mu + sigma*eta) - q(s, mu): stratified over states,
  // so the standard error reflects only the action noise.
  const int adim = static_cast<int>(means.front().size());
  const std::int64_t draws = antithetic ? mc_samples / 2 : mc_samples;
  if (draws < 1) throw std::invalid_argument("analysis: too few Monte Carlo samples");
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t k = 0; k < draws; ++k) {
    const std::size_t si = static_cast<std::size_t>(k % rep.state_count);
    const Eigen::VectorXd eta = rng.normal_vector(adim);
    double r;
    if (antithetic) {
      r = 0.5 * (q(states[si], means[si] + sigma * eta) +
                 q(states[si], means[si] - sigma * eta)) -
          q_at_mean[si];
    } else {
      r = q(states[si], means[si] + sigma * eta) - q_at_mean[si];
    }
    sum += r;
    sum_sq += r * r;
  }
  const double nd = static_cast<double>(draws);
  rep.measured_residual = sum / nd;
  rep.j_r = rep.j_d + rep.measured_residual;
  const double var = draws > 1 ? (sum_sq - sum * sum / nd) / (nd - 1.0) : 0.0;
  rep.mc_standard_error = std::sqrt(std::max(var, 0.0) / nd);
  rep.sample_count = antithetic ? 2 * draws : draws;
  return rep;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("analysis: ibeta x out of [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);

  // Lentz's continued fraction for the incomplete beta.
  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 500; ++m) {
    const double md = static_cast<double>(m);
    // Even step.
    double num = md * (b - md) * x / ((a + 2.0 * md - 1.0) * (a + 2.0 * md));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= d * c;
    // Odd step.
    num = -(a + md) * (a + b + md) * x / ((a + 2.0 * md) * (a + 2.0 * md + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(ln_front) * f / a;
}

double student_t_cdf(double t, double dof) {
  if (dof <= 0.0) throw std::invalid_argument("analysis: dof must be positive");
  if (t == 0.0) return 0.5;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("analysis: welch_t_test needs at least 2 samples per group");
  const auto stats = [](std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    return std::pair<double, double>{mean, var};
  };
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na, sb = vb / nb;

  WelchResult r;
  if (sa + sb == 0.0) {
    // Degenerate: no variance at all. Equal means define t = 0, p = 1.
    r.dof = na + nb - 2.0;
    if (ma == mb) return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p = 2.0 * (1.0 - student_t_cdf(std::abs(r.t), r.dof));
  return r;
}

VarianceTrace variance_trace(
    const std::vector<std::pair<std::int64_t, GaussianPolicy>>& snapshots,
    const Eigen::MatrixXd& probe_states) {
  VarianceTrace trace;
  trace.points.reserve(snapshots.size());
  for (const auto& [step, policy] : snapshots)
    trace.points.emplace_back(step, policy_std(policy, probe_states).mean());
  return trace;
}

VarianceTrace variance_trace_constant(const std::vector<std::int64_t>& steps, double sigma) {
  VarianceTrace trace;
  trace.points.reserve(steps.size());
  for (std::int64_t s : steps) trace.points.emplace_back(s, sigma);
  return trace;
}

std::pair<double, double> evaluate(Env& env, const PolicyFn& policy, int episodes, Rng& rng) {
  if (episodes < 1) throw std::invalid_argument("analysis: episodes must be >= 1");
  Eigen::VectorXd returns(episodes);
  for (int e = 0; e < episodes; ++e) {
    Eigen::VectorXd s = env.reset(rng);
    double total = 0.0;
    while (true) {
      const StepResult r = env.step(policy(s));
      total += r.reward;
      if (r.episode_over()) break;
      s = r.next_state;
    }
    returns[e] = total;
  }
  const double mean = returns.mean();
  const double sd = episodes > 1
                        ? std::sqrt((returns.array() - mean).square().sum() / (episodes - 1))
                        : 0.0;
  return {mean, sd};
}

}  // namespace cgpi

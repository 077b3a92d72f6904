#pragma once

#include <memory>
#include <string>

#include <Eigen/Core>

#include "cgpi/rng.hpp"

namespace cgpi {

struct EnvSpec {
  int state_dim = 0;
  int action_dim = 0;
  int max_episode_steps = 0;
  std::string name;
};

struct StepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool terminal = false;   // true environment termination (never, for these envs)
  bool truncated = false;  // horizon reached; the critic bootstraps through it

  bool episode_over() const { return terminal || truncated; }
};

// Deterministic desk-scale continuous-control environment. Actions live in
// [-1, 1]^action_dim; out-of-range inputs are clamped before the dynamics.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Eigen::VectorXd reset(Rng& rng) = 0;
  virtual StepResult step(const Eigen::VectorXd& action) = 0;
};

// s' = s + u, r = -(s^2 + u^2), s0 ~ U[-1,1], horizon 200.
class Lqr1d final : public Env {
 public:
  Lqr1d();
  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(Rng& rng) override;
  StepResult step(const Eigen::VectorXd& action) override;

 private:
  EnvSpec spec_;
  double state_ = 0.0;
  int steps_ = 0;
};

// Torque-limited pendulum swing-up, semi-implicit Euler with dt = 0.05.
// State (cos t, sin t, tdot); torque = 2 * action; tdot clipped to [-8, 8];
// reward -(wrap(t)^2 + 0.1 tdot^2 + 0.001 torque^2) on the pre-step state.
class Pendulum final : public Env {
 public:
  Pendulum();
  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(Rng& rng) override;
  StepResult step(const Eigen::VectorXd& action) override;

 private:
  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  int steps_ = 0;

  Eigen::VectorXd observation() const;
};

// 2-D double integrator toward a fixed goal, dt = 0.05, velocity clip +/-2,
// reward -(|pos - goal|^2 + 0.01 |action|^2), horizon 150.
class PointMass2d final : public Env {
 public:
  PointMass2d();
  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(Rng& rng) override;
  StepResult step(const Eigen::VectorXd& action) override;

 private:
  EnvSpec spec_;
  Eigen::Vector2d pos_, vel_, goal_;
  int steps_ = 0;

  Eigen::VectorXd observation() const;
};

std::unique_ptr<Env> make_env(const std::string& name);

// Discounted discrete-time Riccati fixed point for the 1-D LQR environment:
// P = 1 + gamma P - (gamma P)^2 / (1 + gamma P), gain K = gamma P / (1 + gamma P).
// Optimal value V*(s) = -P s^2, optimal policy u = -K s.
struct LqrSolution {
  double p = 0.0;
  double k = 0.0;

  double optimal_value(double s) const { return -p * s * s; }
  double optimal_action(double s) const { return -k * s; }
};

LqrSolution lqr_optimal(double gamma);

}  // namespace cgpi

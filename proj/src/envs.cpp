#include "cgpi/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace cgpi {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp_action(double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("envs: non-finite action");
  return std::clamp(a, -1.0, 1.0);
}

double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t < 0.0) t += 2.0 * kPi;
  return t - kPi;
}

}  // namespace

Lqr1d::Lqr1d() { spec_ = {1, 1, 200, "lqr1d"}; }

Eigen::VectorXd Lqr1d::reset(Rng& rng) {
  state_ = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  return Eigen::VectorXd::Constant(1, state_);
}

StepResult Lqr1d::step(const Eigen::VectorXd& action) {
  if (action.size() != 1) throw std::invalid_argument("envs: lqr1d expects a 1-D action");
  const double u = clamp_action(action[0]);
  StepResult r;
  r.reward = -(state_ * state_ + u * u);
  state_ = state_ + u;
  ++steps_;
  r.next_state = Eigen::VectorXd::Constant(1, state_);
  r.truncated = steps_ >= spec_.max_episode_steps;
  return r;
}

Pendulum::Pendulum() { spec_ = {3, 1, 200, "pendulum"}; }

Eigen::VectorXd Pendulum::observation() const {
  Eigen::VectorXd s(3);
  s << std::cos(theta_), std::sin(theta_), theta_dot_;
  return s;
}

Eigen::VectorXd Pendulum::reset(Rng& rng) {
  theta_ = rng.uniform(-kPi, kPi);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  steps_ = 0;
  return observation();
}

StepResult Pendulum::step(const Eigen::VectorXd& action) {
  if (action.size() != 1) throw std::invalid_argument("envs: pendulum expects a 1-D action");
  constexpr double g = 10.0, m = 1.0, l = 1.0, dt = 0.05;
  const double torque = 2.0 * clamp_action(action[0]);

  StepResult r;
  const double wrapped = wrap_angle(theta_);
  r.reward = -(wrapped * wrapped + 0.1 * theta_dot_ * theta_dot_ + 0.001 * torque * torque);

  const double accel = (3.0 * g / (2.0 * l)) * std::sin(theta_) + (3.0 / (m * l * l)) * torque;
  theta_dot_ = std::clamp(theta_dot_ + accel * dt, -8.0, 8.0);
  theta_ = theta_ + theta_dot_ * dt;
  ++steps_;
  r.next_state = observation();
  r.truncated = steps_ >= spec_.max_episode_steps;
  return r;
}

PointMass2d::PointMass2d() {
  spec_ = {4, 2, 150, "pointmass2d"};
  goal_ = Eigen::Vector2d(1.0, 1.0);
  pos_.setZero();
  vel_.setZero();
}

Eigen::VectorXd PointMass2d::observation() const {
  Eigen::VectorXd s(4);
  s << pos_[0], pos_[1], vel_[0], vel_[1];
  return s;
}

Eigen::VectorXd PointMass2d::reset(Rng& rng) {
  pos_ = Eigen::Vector2d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  vel_.setZero();
  steps_ = 0;
  return observation();
}

StepResult PointMass2d::step(const Eigen::VectorXd& action) {
  if (action.size() != 2) throw std::invalid_argument("envs: pointmass2d expects a 2-D action");
  constexpr double dt = 0.05;
  Eigen::Vector2d u(clamp_action(action[0]), clamp_action(action[1]));

  StepResult r;
  r.reward = -((pos_ - goal_).squaredNorm() + 0.01 * u.squaredNorm());

  vel_ = (vel_ + u * dt).cwiseMax(-2.0).cwiseMin(2.0);
  pos_ = pos_ + vel_ * dt;
  ++steps_;
  r.next_state = observation();
  r.truncated = steps_ >= spec_.max_episode_steps;
  return r;
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "lqr1d") return std::make_unique<Lqr1d>();
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "pointmass2d") return std::make_unique<PointMass2d>();
  throw std::invalid_argument("envs: unknown environment '" + name + "'");
}

LqrSolution lqr_optimal(double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("envs: gamma must be in [0, 1)");
  double p = 1.0;
  for (int i = 0; i < 1000000; ++i) {
    const double gp = gamma * p;
    const double next = 1.0 + gp - gp * gp / (1.0 + gp);
    if (std::abs(next - p) < 1e-12) {
      p = next;
      const double gpp = gamma * p;
      return {p, gpp / (1.0 + gpp)};
    }
    p = next;
  }
  throw std::runtime_error("envs: Riccati iteration did not converge");
}

}  // namespace cgpi

#include <doctest.h>

#include <cmath>

#include "cgpi/policy.hpp"

using namespace cgpi;

TEST_CASE("act_deterministic: zero-weight net maps everything to the zero action") {
  Rng rng(1);
  DeterministicPolicy p = DeterministicPolicy::make(3, 2, {8}, rng);
  p.net.params().setZero();
  const Eigen::VectorXd a = act_deterministic(p, rng.normal_vector(3));
  CHECK(a.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("act_deterministic: outputs always lie in [-1, 1]") {
  Rng rng(2);
  DeterministicPolicy p = DeterministicPolicy::make(4, 3, {16, 16}, rng);
  p.net.params() *= 50.0;  // force saturation
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd s = 10.0 * rng.normal_vector(4);
    const Eigen::VectorXd a = act_deterministic(p, s);
    CHECK(a.maxCoeff() <= 1.0);
    CHECK(a.minCoeff() >= -1.0);
  }
}

TEST_CASE("act_deterministic: hand-set single-layer net matches hand computation") {
  Rng rng(3);
  DeterministicPolicy p;
  p.net = Mlp({2, 1}, 1, rng);
  p.action_dim = 1;
  p.net.weight(0) << 0.5, -0.25;
  p.net.bias(0) << 0.1;
  Eigen::VectorXd s(2);
  s << 1.0, 2.0;
  CHECK(act_deterministic(p, s)[0] == doctest::Approx(std::tanh(0.5 - 0.5 + 0.1)).epsilon(1e-12));
}

TEST_CASE("rollout_noise: degenerate sigma returns the input") {
  Rng rng(4);
  NoiseSpec spec;
  spec.rollout_sigma = 0.0;
  Eigen::VectorXd a(2);
  a << 0.3, -0.7;
  const Eigen::VectorXd out = rollout_noise(a, spec, rng);
  CHECK((out - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rollout_noise: sum is clipped into the action bounds") {
  Rng rng(5);
  NoiseSpec spec;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd out = rollout_noise(Eigen::VectorXd::Constant(1, 0.95), spec, rng);
    CHECK(out[0] <= 1.0);
    CHECK(out[0] >= -1.0);
  }
}

TEST_CASE("rollout_noise: empirical std of the perturbation is 0.1 within 2 percent") {
  Rng rng(6);
  NoiseSpec spec;  // rollout sigma 0.1
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = rollout_noise(zero, spec, rng)[0];
    sum += d;
    sum_sq += d * d;
  }
  const double std_dev = std::sqrt((sum_sq - sum * sum / n) / (n - 1));
  CHECK(std_dev == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("target_smoothing: raw noise beyond the clip range is inner-clipped to 0.5") {
  // Find an rng state whose next normal draw exceeds 3 sigma, then verify the
  // applied perturbation is exactly the clip bound.
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng probe(seed);
    const double raw = 0.2 * probe.normal();
    if (raw > 0.55) {
      Rng rng(seed);
      NoiseSpec spec;
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
      const Eigen::VectorXd out = target_smoothing(zero, spec, rng);
      CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
      return;
    }
  }
  FAIL("no 3-sigma draw found in seed sweep");
}

TEST_CASE("target_smoothing: outer clip into the action bounds") {
  // action 0.8 plus a maximal inner-clipped noise 0.5 would be 1.3 -> 1.0.
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng probe(seed);
    if (0.2 * probe.normal() > 0.55) {
      Rng rng(seed);
      NoiseSpec spec;
      const Eigen::VectorXd base = Eigen::VectorXd::Constant(1, 0.8);
      const Eigen::VectorXd out = target_smoothing(base, spec, rng);
      CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-12));
      return;
    }
  }
  FAIL("no 3-sigma draw found in seed sweep");
}

TEST_CASE("target_smoothing: zero noise draw leaves the action unchanged") {
  Rng rng(8);
  NoiseSpec spec;
  spec.target_sigma = 0.0;
  Eigen::VectorXd a(3);
  a << 0.1, -0.2, 0.9;
  CHECK((target_smoothing(a, spec, rng) - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_squashed: zero head, zero eta gives the standard-normal log-density at 0") {
  Rng rng(9);
  GaussianPolicy p = GaussianPolicy::make(2, 1, {4}, rng);
  p.net.params().setZero();  // mean 0, log_std 0
  const auto [action, log_prob] = sample_squashed(p, Eigen::VectorXd::Zero(2).eval(),
                                                  Eigen::VectorXd::Zero(1).eval());
  CHECK(action[0] == doctest::Approx(0.0));
  CHECK(log_prob == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("sample_squashed: parameter gradient of a fixed-eta draw matches finite differences") {
  Rng rng(10);
  GaussianPolicy p = GaussianPolicy::make(2, 2, {6}, rng);
  const Eigen::MatrixXd states = rng.normal_matrix(2, 3);
  const Eigen::MatrixXd eta = rng.normal_matrix(2, 3);
  const Eigen::MatrixXd g_action = rng.normal_matrix(2, 3);
  const Eigen::VectorXd g_logprob = rng.normal_vector(3);

  const SquashedSample sample = sample_squashed(p, states, eta);
  const Eigen::VectorXd analytic = squashed_param_grads(p, sample, g_action, g_logprob);

  const auto objective = [&](const GaussianPolicy& pol) {
    const SquashedSample s = sample_squashed(pol, states, eta);
    double v = 0.0;
    for (int j = 0; j < 3; ++j) v += g_action.col(j).dot(s.actions.col(j));
    v += g_logprob.dot(s.log_probs);
    return v;
  };
  const double h = 1e-6;
  GaussianPolicy probe = p;
  for (Eigen::Index i = 0; i < p.net.param_count(); ++i) {
    const double orig = probe.net.params()[i];
    probe.net.params()[i] = orig + h;
    const double fp = objective(probe);
    probe.net.params()[i] = orig - h;
    const double fm = objective(probe);
    probe.net.params()[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(std::abs(analytic[i] - fd) / std::max(1e-5, std::abs(fd)) < 1e-5);
  }
}

TEST_CASE("sample_squashed: density integrates to 1 over the 1-D action interval") {
  Rng rng(11);
  GaussianPolicy p = GaussianPolicy::make(2, 1, {8}, rng);
  const Eigen::VectorXd state = rng.normal_vector(2);

  // Quadrature over actions a in (-1, 1): recover eta from a for the fixed
  // state, evaluate exp(log_prob), integrate by midpoint rule.
  const Eigen::VectorXd head = p.net.forward(state);
  const double mean = head[0];
  const double sigma = std::exp(std::clamp(head[1], p.log_std_min, p.log_std_max));
  const int n = 20000;
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = -1.0 + (2.0 * i + 1.0) / n;
    const double u = std::atanh(a);
    Eigen::VectorXd eta(1);
    eta << (u - mean) / sigma;
    const auto [action, log_prob] = sample_squashed(p, state, eta);
    CHECK(action[0] == doctest::Approx(a).epsilon(1e-9));
    integral += std::exp(log_prob) * (2.0 / n);
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample_squashed: actions bounded and log-std clamp respected") {
  Rng rng(12);
  GaussianPolicy p = GaussianPolicy::make(3, 2, {8}, rng);
  p.net.params() *= 100.0;  // push heads to extremes
  for (int i = 0; i < 200; ++i) {
    const Eigen::MatrixXd states = 5.0 * rng.normal_matrix(3, 1);
    const Eigen::MatrixXd eta = rng.normal_matrix(2, 1);
    const SquashedSample s = sample_squashed(p, states, eta);
    CHECK(s.actions.cwiseAbs().maxCoeff() <= 1.0);  // tanh rounds to 1.0 for huge u
    CHECK(s.sigma.maxCoeff() <= std::exp(2.0));
    CHECK(s.sigma.minCoeff() >= std::exp(-20.0));
  }
}

TEST_CASE("sample_squashed: non-finite eta is rejected") {
  Rng rng(13);
  GaussianPolicy p = GaussianPolicy::make(2, 1, {4}, rng);
  Eigen::VectorXd eta(1);
  eta << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)sample_squashed(p, rng.normal_vector(2).eval(), eta),
                  std::invalid_argument);
}

TEST_CASE("sample_squashed: empirical pre-squash mean matches the head mean") {
  Rng rng(14);
  GaussianPolicy p = GaussianPolicy::make(2, 1, {8}, rng);
  const Eigen::VectorXd state = rng.normal_vector(2);
  const Eigen::VectorXd head = p.net.forward(state);
  const double sigma = std::exp(std::clamp(head[1], p.log_std_min, p.log_std_max));
  const int n = 20000;
  double sum = 0.0;
  const Eigen::MatrixXd states = state.replicate(1, 1);
  for (int i = 0; i < n; ++i)
    sum += sample_squashed(p, states, rng.normal_matrix(1, 1)).pre_squash(0, 0);
  const double se = sigma / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n - head[0]) < 3.0 * se);
}

TEST_CASE("gaussian_entropy: reference values and monotonicity") {
  CHECK(gaussian_entropy(0.1) == doctest::Approx(-0.8836).epsilon(1e-3));
  CHECK(gaussian_entropy(1.0) == doctest::Approx(1.4189).epsilon(1e-4));
  CHECK_THROWS_AS((void)gaussian_entropy(0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)gaussian_entropy(-1.0), std::invalid_argument);
  double prev = gaussian_entropy(0.01);
  for (double s = 0.02; s < 3.0; s += 0.07) {
    const double h = gaussian_entropy(s);
    CHECK(h > prev);
    prev = h;
  }
}

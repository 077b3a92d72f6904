#include <doctest.h>

#include <cmath>

#include "cgpi/critic.hpp"

using namespace cgpi;

TEST_CASE("TwinCritic: targets start as exact copies, twins are independent draws") {
  Rng rng(21);
  TwinCritic c = TwinCritic::make(3, 2, {16, 16}, rng);
  CHECK(c.q1.params() == c.q1_target.params());
  CHECK(c.q2.params() == c.q2_target.params());
  CHECK(c.q1.params() != c.q2.params());
  CHECK(c.q1.input_dim() == 5);
  CHECK(c.q1.output_dim() == 1);
}

TEST_CASE("pack_input: states stacked above actions, column for column") {
  Rng rng(22);
  TwinCritic c = TwinCritic::make(2, 1, {4}, rng);
  Eigen::MatrixXd s(2, 2), a(1, 2);
  s << 1, 3, 2, 4;
  a << 5, 6;
  const Eigen::MatrixXd packed = c.pack_input(s, a);
  CHECK(packed.rows() == 3);
  CHECK(packed(0, 0) == 1);
  CHECK(packed(1, 0) == 2);
  CHECK(packed(2, 0) == 5);
  CHECK(packed(2, 1) == 6);
}

TEST_CASE("twin_eval: zeroed nets output zero; scaling weights scales outputs") {
  Rng rng(23);
  TwinCritic c = TwinCritic::make(2, 1, {8}, rng);
  const Eigen::VectorXd s = rng.normal_vector(2);
  const Eigen::VectorXd a = rng.normal_vector(1);
  const auto [q1, q2] = twin_eval(c, s, a, CriticSet::Online);
  CHECK(q1 != q2);

  TwinCritic zeroed = c;
  zeroed.q1.params().setZero();
  zeroed.q2.params().setZero();
  const auto [z1, z2] = twin_eval(zeroed, s, a, CriticSet::Online);
  CHECK(z1 == 0.0);
  CHECK(z2 == 0.0);
  // targets untouched by zeroing the online nets
  const auto [t1, t2] = twin_eval(zeroed, s, a, CriticSet::Target);
  CHECK(t1 == doctest::Approx(q1).epsilon(1e-15));
  CHECK(t2 == doctest::Approx(q2).epsilon(1e-15));
}

TEST_CASE("min_q: componentwise minimum and exchange symmetry") {
  Eigen::VectorXd a(3), b(3);
  a << 1, -2, 5;
  b << 0, 3, 5;
  const Eigen::VectorXd m = min_q(a, b);
  CHECK(m[0] == 0.0);
  CHECK(m[1] == -2.0);
  CHECK(m[2] == 5.0);
  CHECK(min_q(a, b) == min_q(b, a));
  CHECK(min_q(2.0, 3.0) == 2.0);
  CHECK(min_q(3.0, 2.0) == 2.0);
}

TEST_CASE("bellman_target: hand arithmetic, terminal cut, vector form") {
  CHECK(bellman_target(1.0, 0.0, 0.99, 10.0) == doctest::Approx(10.9).epsilon(1e-12));
  CHECK(bellman_target(1.0, 1.0, 0.99, 10.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bellman_target(-2.0, 0.0, 0.0, 100.0) == doctest::Approx(-2.0).epsilon(1e-15));

  Eigen::VectorXd r(2), d(2), v(2);
  r << 1.0, 2.0;
  d << 0.0, 1.0;
  v << 5.0, 7.0;
  const Eigen::VectorXd y = bellman_target(r, d, 0.5, v);
  CHECK(y[0] == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("soft_value: q_min minus alpha * log_prob") {
  CHECK(soft_value(3.0, 0.2, -1.5) == doctest::Approx(3.3).epsilon(1e-12));
  CHECK(soft_value(3.0, 0.0, -1.5) == doctest::Approx(3.0).epsilon(1e-15));
  Eigen::VectorXd q(2), lp(2);
  q << 1.0, 2.0;
  lp << -1.0, 4.0;
  const Eigen::VectorXd v = soft_value(q, 0.5, lp);
  CHECK(v[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("critic_loss_and_grads: loss is zero at a fit, positive elsewhere") {
  Rng rng(24);
  TwinCritic c = TwinCritic::make(2, 1, {8}, rng);
  const Eigen::MatrixXd s = rng.normal_matrix(2, 5);
  const Eigen::MatrixXd a = rng.normal_matrix(1, 5);
  const auto [q1, q2] = twin_eval(c, s, a, CriticSet::Online);

  // q2's own outputs are not a fit for q1's, so loss > 0 against q1's values.
  const CriticGrads off = critic_loss_and_grads(c, s, a, q1);
  CHECK(off.loss > 0.0);

  // hand check: loss = mse(q1,y) + mse(q2,y)
  Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
  const CriticGrads g = critic_loss_and_grads(c, s, a, y);
  const double expected =
      q1.array().square().mean() + q2.array().square().mean();
  CHECK(g.loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("critic_loss_and_grads: gradients match finite differences of the mse") {
  Rng rng(25);
  TwinCritic c = TwinCritic::make(2, 1, {6}, rng);
  const Eigen::MatrixXd s = rng.normal_matrix(2, 4);
  const Eigen::MatrixXd a = rng.normal_matrix(1, 4);
  const Eigen::VectorXd y = rng.normal_vector(4);
  const CriticGrads g = critic_loss_and_grads(c, s, a, y);

  const double h = 1e-6;
  TwinCritic probe = c;
  for (int which = 0; which < 2; ++which) {
    Mlp& net = which == 0 ? probe.q1 : probe.q2;
    const Eigen::VectorXd& analytic = which == 0 ? g.q1_grads : g.q2_grads;
    for (Eigen::Index i = 0; i < net.param_count(); ++i) {
      const double orig = net.params()[i];
      net.params()[i] = orig + h;
      const double lp = critic_loss_and_grads(probe, s, a, y).loss;
      net.params()[i] = orig - h;
      const double lm = critic_loss_and_grads(probe, s, a, y).loss;
      net.params()[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      CHECK(std::abs(analytic[i] - fd) / std::max(1e-5, std::abs(fd)) < 1e-4);
    }
  }
}

TEST_CASE("critic_loss_and_grads: targets are constants, non-finite targets rejected") {
  Rng rng(26);
  TwinCritic c = TwinCritic::make(2, 1, {4}, rng);
  const Eigen::MatrixXd s = rng.normal_matrix(2, 3);
  const Eigen::MatrixXd a = rng.normal_matrix(1, 3);
  Eigen::VectorXd y(3);
  y << 1.0, std::numeric_limits<double>::infinity(), 0.0;
  CHECK_THROWS_AS((void)critic_loss_and_grads(c, s, a, y), std::invalid_argument);
}

TEST_CASE("polyak_update: convex blend, tau=1 hard copy, geometric contraction") {
  Rng rng(27);
  TwinCritic c = TwinCritic::make(2, 1, {8}, rng);
  // make targets differ from online first
  const Eigen::VectorXd online1 = c.q1.params();
  c.q1_target.params().setZero();
  c.q2_target.params().setZero();
  const Eigen::VectorXd online2 = c.q2.params();

  TwinCritic hard = c;
  polyak_update(hard, 1.0);
  CHECK(hard.q1_target.params() == online1);
  CHECK(hard.q2_target.params() == online2);

  const double tau = 0.005;
  TwinCritic soft = c;
  const int k = 10;
  for (int i = 0; i < k; ++i) polyak_update(soft, tau);
  // target_k = (1 - (1-tau)^k) * online when starting from zero
  const double blend = 1.0 - std::pow(1.0 - tau, k);
  CHECK((soft.q1_target.params() - blend * online1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((soft.q2_target.params() - blend * online2).cwiseAbs().maxCoeff() < 1e-12);
  // online nets never touched
  CHECK(soft.q1.params() == online1);
  CHECK(soft.q2.params() == online2);
}

TEST_CASE("twin_eval: batch and single-sample paths agree bit for bit") {
  Rng rng(28);
  TwinCritic c = TwinCritic::make(3, 2, {8, 8}, rng);
  const Eigen::MatrixXd s = rng.normal_matrix(3, 4);
  const Eigen::MatrixXd a = rng.normal_matrix(2, 4);
  const auto [q1, q2] = twin_eval(c, s, a, CriticSet::Online);
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd sj = s.col(j);
    const Eigen::VectorXd aj = a.col(j);
    const auto [s1, s2] = twin_eval(c, sj, aj, CriticSet::Online);
    CHECK(s1 == doctest::Approx(q1[j]).epsilon(1e-14));
    CHECK(s2 == doctest::Approx(q2[j]).epsilon(1e-14));
  }
}

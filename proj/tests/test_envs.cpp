#include "ofe/envs/env.hpp"
#include "ofe/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ofe;

TEST(WrapAngle, RangeIsHalfOpen) {
  EXPECT_DOUBLE_EQ(wrap_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(0.3 + 8 * std::numbers::pi), 0.3, 1e-12);
}

TEST(Pendulum, OneStepMatchesClosedForm) {
  Pendulum env;
  env.set_state(0.5, -0.2);
  Vector u(1);
  u << 1.5;
  const Transition t = env.step(u);
  const double cost = 0.25 + 0.1 * 0.04 + 0.001 * 2.25;
  EXPECT_DOUBLE_EQ(t.reward, -cost);
  const double thdot = -0.2 + (15.0 * std::sin(0.5) + 3.0 * 1.5) * 0.05;
  EXPECT_DOUBLE_EQ(env.theta_dot(), thdot);
  EXPECT_DOUBLE_EQ(env.theta(), 0.5 + thdot * 0.05);
  EXPECT_DOUBLE_EQ(t.next_obs(0), std::cos(env.theta()));
  EXPECT_DOUBLE_EQ(t.next_obs(1), std::sin(env.theta()));
}

TEST(Pendulum, ActionsAreClippedAndSpeedIsBounded) {
  Pendulum env;
  env.set_state(std::numbers::pi / 2, 7.9);
  Vector u(1);
  u << 100.0;
  const Transition t = env.step(u);
  EXPECT_DOUBLE_EQ(t.action(0), 2.0);
  EXPECT_DOUBLE_EQ(env.theta_dot(), 8.0);
}

TEST(Pendulum, UprightAtRestIsAnEquilibriumWithZeroReward) {
  Pendulum env;
  env.set_state(0.0, 0.0);
  const Transition t = env.step(Vector::Zero(1));
  EXPECT_DOUBLE_EQ(t.reward, 0.0);
  EXPECT_DOUBLE_EQ(env.theta(), 0.0);
}

TEST(Pendulum, TruncatesAfter200StepsAndThenRefusesToStep) {
  Pendulum env;
  env.reset(1);
  Transition t;
  for (int i = 0; i < 200; ++i) t = env.step(Vector::Zero(1));
  EXPECT_TRUE(t.truncated);
  EXPECT_FALSE(t.done);
  EXPECT_THROW(env.step(Vector::Zero(1)), UsageError);
}

TEST(Env, SameSeedSameTrajectory) {
  for (const auto& name : env_names()) {
    auto a = make_env(name), b = make_env(name);
    Vector oa = a->reset(42), ob = b->reset(42);
    ASSERT_EQ(oa, ob) << name;
    Rng rng(3);
    for (int i = 0; i < 50 && !a->episode_over(); ++i) {
      Vector act = normal_matrix(a->spec().action_dim, 1, 1.0, rng);
      EXPECT_EQ(a->step(act).next_obs, b->step(act).next_obs) << name;
    }
  }
}

TEST(Env, WrongActionSizeIsConfigError) {
  auto env = make_env("pointmass");
  env->reset(0);
  EXPECT_THROW(env->step(Vector::Zero(3)), ConfigError);
}

TEST(Env, UnknownNameIsConfigError) { EXPECT_THROW(make_env("ant"), ConfigError); }

TEST(PointMass, ReachingGoalTerminates) {
  PointMass env;
  env.set_state({0.0, 0.0}, {0.0, 0.0}, {0.001, 0.0});
  const Transition t = env.step(Vector::Zero(2));
  EXPECT_TRUE(t.done);
  EXPECT_FALSE(t.truncated);
  EXPECT_NEAR(t.reward, -0.001, 1e-12);
}

TEST(PointMass, DoubleIntegratorStep) {
  PointMass env;
  env.set_state({0.5, -0.5}, {0.1, 0.2}, {1.0, 1.0});
  Vector u(2);
  u << 1.0, -1.0;
  const Transition t = env.step(u);
  EXPECT_NEAR(t.next_obs(2), 0.15, 1e-15);
  EXPECT_NEAR(t.next_obs(3), 0.15, 1e-15);
  EXPECT_NEAR(t.next_obs(0), 0.5 + 0.15 * 0.05, 1e-15);
  EXPECT_NEAR(t.next_obs(1), -0.5 + 0.15 * 0.05, 1e-15);
}

TEST(LinearSystem, DynamicsAreExactlyLinear) {
  LinearSystem env;
  EXPECT_NEAR(spectral_radius(env.a()), 0.9, 1e-12);
  Vector x(4);
  x << 0.1, -0.2, 0.3, 0.4;
  env.set_state(x);
  Vector u(2);
  u << 0.5, -0.25;
  const Transition t = env.step(u);
  EXPECT_TRUE(t.next_obs.isApprox(env.a() * x + env.b() * u, 1e-14));
  EXPECT_DOUBLE_EQ(t.reward, -x.squaredNorm());
}

TEST(LinearSystem, PaddedVariantMasksNoiseCoordinates) {
  auto env = make_env("linsys-padded");
  EXPECT_EQ(env->spec().obs_dim, 6);
  EXPECT_EQ(env->external_force_mask(), (std::vector<Eigen::Index>{4, 5}));
  EXPECT_TRUE(make_env("linsys")->external_force_mask().empty());
}

TEST(LinearSystem, CustomMatricesValidated) {
  EXPECT_THROW(LinearSystem(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Ones(2, 1)),
               ConfigError);
  LinearSystem ok(Eigen::MatrixXd::Identity(2, 2) * 0.5, Eigen::MatrixXd::Ones(2, 1));
  EXPECT_EQ(ok.spec().action_dim, 1);
}

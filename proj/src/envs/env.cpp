#include "ofe/envs/env.hpp"

#include "ofe/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ofe {

Vector Env::reset(std::uint64_t seed) {
  rng_.seed(seed);
  obs_ = do_reset(rng_);
  steps_ = 0;
  over_ = false;
  return obs_;
}

void Env::restart_from_state() {
  obs_ = observe();
  steps_ = 0;
  over_ = false;
}

Transition Env::step(const Vector& action) {
  if (over_) throw UsageError(spec_.name + ": step called after the episode ended");
  if (action.size() != spec_.action_dim) {
    throw ConfigError(spec_.name + ": action has " + std::to_string(action.size()) +
                      " entries, expected " + std::to_string(spec_.action_dim));
  }
  Transition t;
  t.obs = obs_;
  t.action = action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
  bool done = false;
  t.reward = do_step(t.action, done);
  ++steps_;
  t.next_obs = observe();
  t.done = done;
  t.truncated = !done && steps_ >= spec_.max_episode_steps;
  over_ = t.done || t.truncated;
  obs_ = t.next_obs;
  return t;
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = theta - two_pi * std::floor((theta + std::numbers::pi) / two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- pendulum

Pendulum::Pendulum()
    : Env(EnvSpec{"pendulum", 3, 1, Vector::Constant(1, -kMaxTorque),
                  Vector::Constant(1, kMaxTorque), 200, 0.05}) {}

void Pendulum::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  restart_from_state();
}

Vector Pendulum::do_reset(Rng& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  theta_ = angle(rng);
  theta_dot_ = speed(rng);
  return observe();
}

double Pendulum::do_step(const Vector& action, bool& done) {
  const double u = action(0);
  const double th = wrap_angle(theta_);
  const double cost = th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;
  const double accel =
      3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) + 3.0 / (kMass * kLength * kLength) * u;
  theta_dot_ = std::clamp(theta_dot_ + accel * spec_.dt, -kMaxSpeed, kMaxSpeed);
  theta_ = theta_ + theta_dot_ * spec_.dt;
  done = false;
  return -cost;
}

Vector Pendulum::observe() const {
  Vector o(3);
  o << std::cos(theta_), std::sin(theta_), theta_dot_;
  return o;
}

// -------------------------------------------------------------- point mass

PointMass::PointMass()
    : Env(EnvSpec{"pointmass", 6, 2, Vector::Constant(2, -1.0), Vector::Constant(2, 1.0), 200,
                  0.05}) {}

void PointMass::set_state(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity,
                          const Eigen::Vector2d& goal) {
  pos_ = position;
  vel_ = velocity;
  goal_ = goal;
  restart_from_state();
}

Vector PointMass::do_reset(Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  pos_ = Eigen::Vector2d(unit(rng), unit(rng));
  goal_ = Eigen::Vector2d(unit(rng), unit(rng));
  vel_.setZero();
  return observe();
}

double PointMass::do_step(const Vector& action, bool& done) {
  const Eigen::Vector2d accel = action.head<2>();
  vel_ += accel * spec_.dt;
  pos_ += vel_ * spec_.dt;
  const double dist = (pos_ - goal_).norm();
  done = dist < kGoalRadius;
  return -dist - 0.01 * accel.squaredNorm();
}

Vector PointMass::observe() const {
  Vector o(6);
  o << pos_, vel_, goal_;
  return o;
}

// ----------------------------------------------------------- linear system

EnvSpec LinearSystem::make_spec(Eigen::Index n, Eigen::Index m, Eigen::Index pad) {
  if (n <= 0 || m <= 0 || pad < 0) throw ConfigError("linsys: dimensions must be positive");
  return EnvSpec{pad > 0 ? "linsys-padded" : "linsys", n + pad, m, Vector::Constant(m, -1.0),
                 Vector::Constant(m, 1.0), 100, 1.0};
}

LinearSystem::LinearSystem(Eigen::Index state_dim, Eigen::Index action_dim, Eigen::Index pad_dims,
                           std::uint64_t system_seed)
    : Env(make_spec(state_dim, action_dim, pad_dims)), pad_(pad_dims) {
  Rng rng(system_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  a_.resize(state_dim, state_dim);
  b_.resize(state_dim, action_dim);
  for (Eigen::Index i = 0; i < a_.size(); ++i) a_.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < b_.size(); ++i) b_.data()[i] = normal(rng);
  a_ *= 0.9 / spectral_radius(a_);
  b_ /= std::sqrt(static_cast<double>(action_dim));
  x_ = Vector::Zero(state_dim);
  noise_ = Vector::Zero(pad_);
}

LinearSystem::LinearSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::Index pad_dims)
    : Env(make_spec(a.rows(), b.cols(), pad_dims)), a_(std::move(a)), b_(std::move(b)),
      pad_(pad_dims) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows()) {
    throw ConfigError("linsys: A must be square and B must have as many rows as A");
  }
  x_ = Vector::Zero(a_.rows());
  noise_ = Vector::Zero(pad_);
}

void LinearSystem::set_state(const Vector& x) {
  if (x.size() != state_dim()) throw ConfigError("linsys: state dimension mismatch");
  x_ = x;
  noise_.setZero();
  restart_from_state();
}

std::vector<Eigen::Index> LinearSystem::external_force_mask() const {
  std::vector<Eigen::Index> mask;
  for (Eigen::Index i = 0; i < pad_; ++i) mask.push_back(state_dim() + i);
  return mask;
}

Vector LinearSystem::do_reset(Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (Eigen::Index i = 0; i < x_.size(); ++i) x_(i) = unit(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < pad_; ++i) noise_(i) = normal(rng);
  return observe();
}

double LinearSystem::do_step(const Vector& action, bool& done) {
  const double reward = -x_.squaredNorm();
  x_ = a_ * x_ + b_ * action;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < pad_; ++i) noise_(i) = normal(rng_);
  done = false;
  return reward;
}

Vector LinearSystem::observe() const {
  Vector o(x_.size() + pad_);
  o << x_, noise_;
  return o;
}

// ---------------------------------------------------------------- registry

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "pointmass") return std::make_unique<PointMass>();
  if (name == "linsys") return std::make_unique<LinearSystem>();
  if (name == "linsys-padded") return std::make_unique<LinearSystem>(4, 2, 2);
  throw ConfigError("unknown environment '" + name + "'");
}

std::vector<std::string> env_names() { return {"pendulum", "pointmass", "linsys", "linsys-padded"}; }

}  // namespace ofe

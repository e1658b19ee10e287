#pragma once

#include "ofe/gradkit/tensor.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ofe {

struct EnvSpec {
  std::string name;
  Eigen::Index obs_dim = 0;
  Eigen::Index action_dim = 0;
  Vector action_low;
  Vector action_high;
  int max_episode_steps = 0;
  double dt = 0.0;
};

/// One environment step. `done` marks true terminal states only; hitting the
/// time limit sets `truncated` instead.
struct Transition {
  Vector obs;
  Vector action;
  Vector next_obs;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
};

/// Deterministic continuous-control environment. Identical reset seed and
/// action sequence reproduce the trajectory bit for bit.
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }

  Vector reset(std::uint64_t seed);
  /// Actions are clipped to the action box. Throws UsageError once the episode
  /// has terminated or been truncated.
  Transition step(const Vector& action);

  /// Observation indices excluded from the auxiliary prediction target.
  virtual std::vector<Eigen::Index> external_force_mask() const { return {}; }

  bool episode_over() const { return over_; }
  int elapsed_steps() const { return steps_; }
  const Vector& observation() const { return obs_; }

 protected:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}

  virtual Vector do_reset(Rng& rng) = 0;
  /// Advances internal state with a clipped action; returns reward and sets `done`.
  virtual double do_step(const Vector& action, bool& done) = 0;
  virtual Vector observe() const = 0;

  /// Restarts bookkeeping after a subclass sets its state by hand.
  void restart_from_state();

  EnvSpec spec_;
  Rng rng_;

 private:
  Vector obs_;
  int steps_ = 0;
  bool over_ = true;
};

/// Swing-up pendulum with g = 10, m = l = 1, dt = 0.05. Observation
/// [cos(theta), sin(theta), theta_dot]; theta = 0 is upright.
class Pendulum final : public Env {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;

  Pendulum();
  void set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

 protected:
  Vector do_reset(Rng& rng) override;
  double do_step(const Vector& action, bool& done) override;
  Vector observe() const override;

 private:
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

/// Planar double integrator reaching a random goal. Observation
/// [px, py, vx, vy, gx, gy]; terminal once within 0.05 of the goal.
class PointMass final : public Env {
 public:
  static constexpr double kGoalRadius = 0.05;

  PointMass();
  void set_state(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity,
                 const Eigen::Vector2d& goal);

 protected:
  Vector do_reset(Rng& rng) override;
  double do_step(const Vector& action, bool& done) override;
  Vector observe() const override;

 private:
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal_ = Eigen::Vector2d::Zero();
};

/// x' = A x + B u with reward -|x|^2 and a 100-step limit. Optional pad
/// coordinates of i.i.d. N(0, 1) noise are appended to the observation and
/// reported by external_force_mask().
class LinearSystem final : public Env {
 public:
  static constexpr std::uint64_t kDefaultSystemSeed = 20200101;

  /// Random stable A (spectral radius 0.9) and B drawn from `system_seed`.
  LinearSystem(Eigen::Index state_dim = 4, Eigen::Index action_dim = 2, Eigen::Index pad_dims = 0,
               std::uint64_t system_seed = kDefaultSystemSeed);
  LinearSystem(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::Index pad_dims = 0);

  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& b() const { return b_; }
  Eigen::Index state_dim() const { return a_.rows(); }
  Eigen::Index pad_dims() const { return pad_; }
  void set_state(const Vector& x);

  std::vector<Eigen::Index> external_force_mask() const override;

 protected:
  Vector do_reset(Rng& rng) override;
  double do_step(const Vector& action, bool& done) override;
  Vector observe() const override;

 private:
  static EnvSpec make_spec(Eigen::Index n, Eigen::Index m, Eigen::Index pad);

  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
  Eigen::Index pad_ = 0;
  Vector x_;
  Vector noise_;
};

/// Spectral radius of a square matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Names: "pendulum", "pointmass", "linsys", "linsys-padded". Throws ConfigError otherwise.
std::unique_ptr<Env> make_env(const std::string& name);
std::vector<std::string> env_names();

}  // namespace ofe

#pragma once

#include "ofe/envs/env.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ofe {

/// Column-stacked mini-batch; row i of every member belongs to one transition.
struct Batch {
  Matrix obs;
  Matrix actions;
  Matrix next_obs;
  Vector rewards;
  Vector dones;

  Eigen::Index size() const { return obs.rows(); }
};

/// Ring buffer of transitions with uniform sampling. Logical index 0 is the
/// oldest stored transition, size() - 1 the newest.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, Eigen::Index obs_dim, Eigen::Index action_dim);

  /// Throws ConfigError when the transition's dimensions disagree with the buffer.
  void push(const Transition& t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  Eigen::Index obs_dim() const { return obs_dim_; }
  Eigen::Index action_dim() const { return action_dim_; }
  bool empty() const { return size_ == 0; }

  Transition at(std::size_t logical_index) const;
  Batch gather(std::span<const std::size_t> logical_indices) const;

  /// n independent uniform draws with replacement. Throws UsageError when empty.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  Batch sample(std::size_t n, Rng& rng) const;

  /// Everything stored, oldest first.
  Batch all() const;

  /// Flat binary dump: 8-byte magic "OFETRAN1", uint64 obs_dim, uint64
  /// action_dim, uint64 count, then `count` rows of float64
  /// [obs, action, next_obs, reward, done, truncated], native byte order.
  void save(const std::filesystem::path& path) const;
  /// Loads a dump into a buffer whose capacity equals the stored count (at least 1).
  static ReplayBuffer load(const std::filesystem::path& path);

 private:
  std::size_t physical(std::size_t logical_index) const;

  std::size_t capacity_;
  Eigen::Index obs_dim_;
  Eigen::Index action_dim_;
  Matrix obs_;
  Matrix actions_;
  Matrix next_obs_;
  Vector rewards_;
  Vector dones_;
  std::vector<std::uint8_t> truncated_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
};

/// Indices for step N of the online-learning simulation: uniform over the
/// first min(N, dataset_size) items. Throws UsageError for N == 0 or an empty dataset.
std::vector<std::size_t> growth_limited_indices(std::size_t dataset_size, std::size_t step_index,
                                                std::size_t n, Rng& rng);
Batch sample_growth_limited(const ReplayBuffer& dataset, std::size_t step_index, std::size_t n,
                            Rng& rng);

}  // namespace ofe

#include "ofe/replay/replay_buffer.hpp"

#include "ofe/errors.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace ofe {
namespace {

constexpr std::array<char, 8> kMagic = {'O', 'F', 'E', 'T', 'R', 'A', 'N', '1'};

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, Eigen::Index obs_dim, Eigen::Index action_dim)
    : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
  if (capacity == 0) throw ConfigError("replay: capacity must be positive");
  if (obs_dim <= 0 || action_dim <= 0) throw ConfigError("replay: dimensions must be positive");
  const auto cap = static_cast<Eigen::Index>(capacity);
  obs_.resize(cap, obs_dim);
  actions_.resize(cap, action_dim);
  next_obs_.resize(cap, obs_dim);
  rewards_.resize(cap);
  dones_.resize(cap);
  truncated_.assign(capacity, 0);
}

void ReplayBuffer::push(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_ ||
      t.action.size() != action_dim_) {
    throw ConfigError("replay: transition dimensions (" + std::to_string(t.obs.size()) + ", " +
                      std::to_string(t.action.size()) + ") do not match buffer (" +
                      std::to_string(obs_dim_) + ", " + std::to_string(action_dim_) + ")");
  }
  const auto row = static_cast<Eigen::Index>(cursor_);
  obs_.row(row) = t.obs.transpose();
  actions_.row(row) = t.action.transpose();
  next_obs_.row(row) = t.next_obs.transpose();
  rewards_(row) = t.reward;
  dones_(row) = t.done ? 1.0 : 0.0;
  truncated_[cursor_] = t.truncated ? 1 : 0;
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::size_t ReplayBuffer::physical(std::size_t logical_index) const {
  if (logical_index >= size_) throw UsageError("replay: index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
  return (oldest + logical_index) % capacity_;
}

Transition ReplayBuffer::at(std::size_t logical_index) const {
  const auto row = static_cast<Eigen::Index>(physical(logical_index));
  Transition t;
  t.obs = obs_.row(row).transpose();
  t.action = actions_.row(row).transpose();
  t.next_obs = next_obs_.row(row).transpose();
  t.reward = rewards_(row);
  t.done = dones_(row) != 0.0;
  t.truncated = truncated_[static_cast<std::size_t>(row)] != 0;
  return t;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> logical_indices) const {
  const auto n = static_cast<Eigen::Index>(logical_indices.size());
  Batch b;
  b.obs.resize(n, obs_dim_);
  b.actions.resize(n, action_dim_);
  b.next_obs.resize(n, obs_dim_);
  b.rewards.resize(n);
  b.dones.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(physical(logical_indices[static_cast<std::size_t>(i)]));
    b.obs.row(i) = obs_.row(row);
    b.actions.row(i) = actions_.row(row);
    b.next_obs.row(i) = next_obs_.row(row);
    b.rewards(i) = rewards_(row);
    b.dones(i) = dones_(row);
  }
  return b;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw UsageError("replay: cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  const auto idx = sample_indices(n, rng);
  return gather(idx);
}

Batch ReplayBuffer::all() const {
  std::vector<std::size_t> idx(size_);
  for (std::size_t i = 0; i < size_; ++i) idx[i] = i;
  return gather(idx);
}

void ReplayBuffer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("replay: cannot open '" + path.string() + "' for writing");
  out.write(kMagic.data(), kMagic.size());
  const std::uint64_t header[3] = {static_cast<std::uint64_t>(obs_dim_),
                                   static_cast<std::uint64_t>(action_dim_),
                                   static_cast<std::uint64_t>(size_)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<double> row(static_cast<std::size_t>(2 * obs_dim_ + action_dim_ + 3));
  for (std::size_t i = 0; i < size_; ++i) {
    const Transition t = at(i);
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < obs_dim_; ++j) row[k++] = t.obs(j);
    for (Eigen::Index j = 0; j < action_dim_; ++j) row[k++] = t.action(j);
    for (Eigen::Index j = 0; j < obs_dim_; ++j) row[k++] = t.next_obs(j);
    row[k++] = t.reward;
    row[k++] = t.done ? 1.0 : 0.0;
    row[k++] = t.truncated ? 1.0 : 0.0;
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw ConfigError("replay: write to '" + path.string() + "' failed");
}

ReplayBuffer ReplayBuffer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("replay: cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigError("replay: '" + path.string() + "' is not a transition dump");
  std::uint64_t header[3] = {0, 0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw ConfigError("replay: truncated header in '" + path.string() + "'");
  const auto od = static_cast<Eigen::Index>(header[0]);
  const auto ad = static_cast<Eigen::Index>(header[1]);
  const std::size_t count = header[2];
  ReplayBuffer buf(std::max<std::size_t>(count, 1), od, ad);
  std::vector<double> row(static_cast<std::size_t>(2 * od + ad + 3));
  for (std::size_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw ConfigError("replay: truncated body in '" + path.string() + "'");
    Transition t;
    std::size_t k = 0;
    t.obs.resize(od);
    t.action.resize(ad);
    t.next_obs.resize(od);
    for (Eigen::Index j = 0; j < od; ++j) t.obs(j) = row[k++];
    for (Eigen::Index j = 0; j < ad; ++j) t.action(j) = row[k++];
    for (Eigen::Index j = 0; j < od; ++j) t.next_obs(j) = row[k++];
    t.reward = row[k++];
    t.done = row[k++] != 0.0;
    t.truncated = row[k++] != 0.0;
    buf.push(t);
  }
  return buf;
}

std::vector<std::size_t> growth_limited_indices(std::size_t dataset_size, std::size_t step_index,
                                                std::size_t n, Rng& rng) {
  if (step_index == 0) throw UsageError("growth-limited sampling: step index must be >= 1");
  if (dataset_size == 0) throw UsageError("growth-limited sampling: empty dataset");
  const std::size_t limit = std::min(step_index, dataset_size);
  std::uniform_int_distribution<std::size_t> pick(0, limit - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch sample_growth_limited(const ReplayBuffer& dataset, std::size_t step_index, std::size_t n,
                            Rng& rng) {
  const auto idx = growth_limited_indices(dataset.size(), step_index, n, rng);
  return dataset.gather(idx);
}

}  // namespace ofe

#pragma once

#include "ofe/extractors/ofenet.hpp"
#include "ofe/replay/replay_buffer.hpp"

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace ofe {

/// Random-policy transitions split into disjoint train and test sets.
struct Corpus {
  std::string env_name;
  std::string policy = "random uniform in action box";
  std::uint64_t seed = 0;
  ReplayBuffer train;
  ReplayBuffer test;
  /// Observation indices excluded from the prediction target by the env.
  std::vector<Eigen::Index> external_force_mask;

  Eigen::Index obs_dim() const { return train.obs_dim(); }
  Eigen::Index action_dim() const { return train.action_dim(); }
};

/// Collects n_train + n_test transitions with uniform random actions, resetting
/// on termination or truncation, then splits them by a seeded shuffle.
/// Throws ConfigError when either size is zero.
Corpus collect_corpus(const std::string& env_name, std::size_t n_train, std::size_t n_test,
                      std::uint64_t seed);

/// Directory with train.bin, test.bin and corpus.txt.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

struct ScoreOptions {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t train_steps = 10000;
  std::size_t batch_size = 256;
  OfeOptions ofe{};
  /// 0 or 1 runs candidate-seed pairs sequentially; more uses worker threads.
  unsigned threads = 1;
};

struct CandidateScore {
  ArchSpec spec;
  std::vector<double> per_seed;  // +inf for a diverged seed
  std::vector<bool> diverged;
  double mean = std::numeric_limits<double>::infinity();
  /// Sample standard deviation over seeds (0 for a single seed).
  double stddev = 0.0;
};

struct ScoreReport {
  std::vector<std::uint64_t> seeds;
  std::vector<CandidateScore> candidates;
  /// Candidate indices by ascending mean, ties in declaration order.
  std::vector<std::size_t> ranking;
  std::size_t selected = 0;

  const ArchSpec& selected_spec() const { return candidates[selected].spec; }
  /// candidate_id,connectivity,layers,activation,seed,test_loss
  std::string per_seed_csv() const;
  /// Means, stds, rank and the selected flag per candidate.
  std::string summary_csv() const;
};

/// Test-set auxiliary loss of one extractor seed: trains `train_steps`
/// growth-limited mini-batches and evaluates in eval mode on the full test set.
/// Throws NumericError on divergence.
double auxiliary_test_loss(const ArchSpec& spec, const Corpus& corpus, std::uint64_t seed,
                           const ScoreOptions& options);

/// Auxiliary score over options.seeds; diverged seeds score +inf.
CandidateScore auxiliary_score(const ArchSpec& spec, const Corpus& corpus,
                               const ScoreOptions& options);

/// Scores every candidate and selects the argmin of the means. Throws
/// ConfigError for an empty list and NumericError when every candidate diverged.
ScoreReport select_architecture(const std::vector<ArchSpec>& candidates, const Corpus& corpus,
                                const ScoreOptions& options);

/// densenet x layers {2,4,6,8} x {relu, tanh, leaky_relu, swish, selu}.
std::vector<ArchSpec> default_grid(Eigen::Index obs_dim, Eigen::Index action_dim,
                                   int total_increment,
                                   const std::vector<Eigen::Index>& prediction_mask = {});
/// default_grid plus mlp layers {1,2,3,4} and resnet layers {2,4,6,8}.
std::vector<ArchSpec> comparison_grid(Eigen::Index obs_dim, Eigen::Index action_dim,
                                      int total_increment,
                                      const std::vector<Eigen::Index>& prediction_mask = {});

/// Prediction mask for an env: every index not in `excluded`.
std::vector<Eigen::Index> complement_mask(Eigen::Index obs_dim,
                                          const std::vector<Eigen::Index>& excluded);

}  // namespace ofe

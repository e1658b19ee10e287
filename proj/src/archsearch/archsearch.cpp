#include "ofe/archsearch/archsearch.hpp"

#include "ofe/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace ofe {
namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vector random_action(const EnvSpec& spec, Rng& rng) {
  Vector a(spec.action_dim);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = std::uniform_real_distribution<double>(spec.action_low(i), spec.action_high(i))(rng);
  }
  return a;
}

std::vector<Eigen::Index> parse_index_list(const std::string& text) {
  std::vector<Eigen::Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stol(item));
  }
  return out;
}

}  // namespace

Corpus collect_corpus(const std::string& env_name, std::size_t n_train, std::size_t n_test,
                      std::uint64_t seed) {
  if (n_train == 0 || n_test == 0) {
    throw ConfigError("collect_corpus: train and test sizes must be positive");
  }
  auto env = make_env(env_name);
  const EnvSpec& spec = env->spec();
  Rng rng(seed);
  const std::size_t total = n_train + n_test;
  std::vector<Transition> all;
  all.reserve(total);
  env->reset(rng());
  while (all.size() < total) {
    Transition t = env->step(random_action(spec, rng));
    const bool restart = t.done || t.truncated;
    all.push_back(std::move(t));
    if (restart) env->reset(rng());
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Corpus corpus{env_name,
                "random uniform in action box",
                seed,
                ReplayBuffer(n_train, spec.obs_dim, spec.action_dim),
                ReplayBuffer(n_test, spec.obs_dim, spec.action_dim),
                env->external_force_mask()};
  for (std::size_t i = 0; i < total; ++i) {
    (i < n_train ? corpus.train : corpus.test).push(all[order[i]]);
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  corpus.train.save(dir / "train.bin");
  corpus.test.save(dir / "test.bin");
  std::ofstream meta(dir / "corpus.txt");
  if (!meta) throw ConfigError("cannot write " + (dir / "corpus.txt").string());
  meta << "env=" << corpus.env_name << "\n"
       << "policy=" << corpus.policy << "\n"
       << "seed=" << corpus.seed << "\n"
       << "train=" << corpus.train.size() << "\n"
       << "test=" << corpus.test.size() << "\n"
       << "external_force_mask=";
  for (std::size_t i = 0; i < corpus.external_force_mask.size(); ++i) {
    meta << (i ? "," : "") << corpus.external_force_mask[i];
  }
  meta << "\n";
}

Corpus load_corpus(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "corpus.txt");
  if (!meta) throw ConfigError("missing corpus metadata in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  Corpus corpus{kv["env"],
                kv["policy"],
                kv.count("seed") ? std::stoull(kv["seed"]) : 0,
                ReplayBuffer::load(dir / "train.bin"),
                ReplayBuffer::load(dir / "test.bin"),
                parse_index_list(kv["external_force_mask"])};
  if (corpus.train.empty() || corpus.test.empty()) throw ConfigError("corpus is empty");
  return corpus;
}

double auxiliary_test_loss(const ArchSpec& spec, const Corpus& corpus, std::uint64_t seed,
                           const ScoreOptions& options) {
  if (corpus.train.empty() || corpus.test.empty()) throw ConfigError("auxiliary score: empty corpus");
  if (spec.obs_dim != corpus.obs_dim() || spec.action_dim != corpus.action_dim()) {
    throw ConfigError("auxiliary score: spec dimensions do not match the corpus");
  }
  OfeNet net(spec, seed, options.ofe);
  Rng rng(seed ^ 0x5deece66dULL);
  for (std::size_t n = 1; n <= options.train_steps; ++n) {
    net.train_step(sample_growth_limited(corpus.train, n, options.batch_size, rng));
  }
  const double loss = net.auxiliary_loss(corpus.test.all(), BnMode::eval);
  if (!std::isfinite(loss)) throw NumericError("auxiliary score: non-finite test loss");
  return loss;
}

namespace {

void finish_candidate(CandidateScore& c) {
  const std::size_t n = c.per_seed.size();
  double sum = 0.0;
  for (double v : c.per_seed) sum += v;
  c.mean = sum / static_cast<double>(n);
  c.stddev = 0.0;
  if (n > 1 && std::isfinite(c.mean)) {
    double ss = 0.0;
    for (double v : c.per_seed) ss += (v - c.mean) * (v - c.mean);
    c.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  } else if (!std::isfinite(c.mean)) {
    c.stddev = std::numeric_limits<double>::quiet_NaN();
  }
}

void score_slot(const std::vector<ArchSpec>& candidates, const Corpus& corpus,
                const ScoreOptions& options, std::vector<CandidateScore>& out, std::size_t job) {
  const std::size_t ci = job / options.seeds.size();
  const std::size_t si = job % options.seeds.size();
  try {
    out[ci].per_seed[si] = auxiliary_test_loss(candidates[ci], corpus, options.seeds[si], options);
  } catch (const NumericError&) {
    out[ci].per_seed[si] = std::numeric_limits<double>::infinity();
    out[ci].diverged[si] = true;
  }
}

}  // namespace

CandidateScore auxiliary_score(const ArchSpec& spec, const Corpus& corpus,
                               const ScoreOptions& options) {
  ScoreOptions one = options;
  one.threads = 1;
  return select_architecture({spec}, corpus, one).candidates.front();
}

ScoreReport select_architecture(const std::vector<ArchSpec>& candidates, const Corpus& corpus,
                                const ScoreOptions& options) {
  if (candidates.empty()) throw ConfigError("select_architecture: no candidates");
  if (options.seeds.empty()) throw ConfigError("select_architecture: no seeds");
  for (const auto& c : candidates) c.validate();

  ScoreReport report;
  report.seeds = options.seeds;
  report.candidates.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    report.candidates[i].spec = candidates[i];
    report.candidates[i].per_seed.assign(options.seeds.size(), 0.0);
    report.candidates[i].diverged.assign(options.seeds.size(), false);
  }

  const std::size_t jobs = candidates.size() * options.seeds.size();
  if (options.threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) score_slot(candidates, corpus, options, report.candidates, j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < options.threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
          try {
            score_slot(candidates, corpus, options, report.candidates, j);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (auto& c : report.candidates) finish_candidate(c);
  report.ranking.resize(candidates.size());
  std::iota(report.ranking.begin(), report.ranking.end(), 0);
  std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
    return report.candidates[a].mean < report.candidates[b].mean;
  });
  report.selected = report.ranking.front();
  if (!std::isfinite(report.candidates[report.selected].mean)) {
    throw NumericError("select_architecture: every candidate diverged");
  }
  return report;
}

std::string ScoreReport::per_seed_csv() const {
  std::ostringstream os;
  os << "candidate_id,connectivity,layers,activation,seed,test_loss\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      os << i << ',' << to_string(c.spec.connectivity) << ',' << c.spec.layers_per_block << ','
         << to_string(c.spec.activation) << ',' << seeds[s] << ',' << format_double(c.per_seed[s])
         << '\n';
    }
  }
  return os.str();
}

std::string ScoreReport::summary_csv() const {
  std::vector<std::size_t> rank_of(candidates.size());
  for (std::size_t r = 0; r < ranking.size(); ++r) rank_of[ranking[r]] = r + 1;
  std::ostringstream os;
  os << "candidate_id,connectivity,layers,activation,increment,batch_norm,mean_test_loss,"
        "std_test_loss,diverged_seeds,rank,selected\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto diverged = std::count(c.diverged.begin(), c.diverged.end(), true);
    os << i << ',' << to_string(c.spec.connectivity) << ',' << c.spec.layers_per_block << ','
       << to_string(c.spec.activation) << ',' << c.spec.total_increment << ','
       << (c.spec.use_batch_norm ? 1 : 0) << ',' << format_double(c.mean) << ','
       << format_double(c.stddev) << ',' << diverged << ',' << rank_of[i] << ','
       << (i == selected ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<Eigen::Index> complement_mask(Eigen::Index obs_dim,
                                          const std::vector<Eigen::Index>& excluded) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < obs_dim; ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) out.push_back(i);
  }
  return out;
}

namespace {

void append_grid(std::vector<ArchSpec>& out, Connectivity conn, std::initializer_list<int> layers,
                 Eigen::Index obs_dim, Eigen::Index action_dim, int increment,
                 const std::vector<Eigen::Index>& mask) {
  const Activation acts[] = {Activation::relu, Activation::tanh, Activation::leaky_relu,
                             Activation::swish, Activation::selu};
  for (int l : layers) {
    for (Activation a : acts) {
      ArchSpec s;
      s.connectivity = conn;
      s.layers_per_block = l;
      s.total_increment = increment;
      s.activation = a;
      s.use_batch_norm = true;
      s.obs_dim = obs_dim;
      s.action_dim = action_dim;
      s.prediction_mask = mask;
      s.validate();
      out.push_back(std::move(s));
    }
  }
}

}  // namespace

std::vector<ArchSpec> default_grid(Eigen::Index obs_dim, Eigen::Index action_dim,
                                   int total_increment,
                                   const std::vector<Eigen::Index>& prediction_mask) {
  std::vector<ArchSpec> out;
  append_grid(out, Connectivity::densenet, {2, 4, 6, 8}, obs_dim, action_dim, total_increment,
              prediction_mask);
  return out;
}

std::vector<ArchSpec> comparison_grid(Eigen::Index obs_dim, Eigen::Index action_dim,
                                      int total_increment,
                                      const std::vector<Eigen::Index>& prediction_mask) {
  auto out = default_grid(obs_dim, action_dim, total_increment, prediction_mask);
  append_grid(out, Connectivity::mlp, {1, 2, 3, 4}, obs_dim, action_dim, total_increment,
              prediction_mask);
  append_grid(out, Connectivity::resnet, {2, 4, 6, 8}, obs_dim, action_dim, total_increment,
              prediction_mask);
  return out;
}

}  // namespace ofe

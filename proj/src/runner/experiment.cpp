#include "ofe/runner/experiment.hpp"

#include "ofe/agents/sac.hpp"
#include "ofe/agents/td3.hpp"
#include "ofe/errors.hpp"
#include "ofe/ml/model_network.hpp"
#include "ofe/runner/snapshot.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace ofe {
namespace {

std::string cell(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

Vector random_action(const EnvSpec& spec, Rng& rng) {
  Vector a(spec.action_dim);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = std::uniform_real_distribution<double>(spec.action_low(i), spec.action_high(i))(rng);
  }
  return a;
}

ArchSpec manual_arch(const ExperimentConfig& c, const EnvSpec& env,
                     const std::vector<Eigen::Index>& excluded) {
  ArchSpec s;
  s.connectivity = c.connectivity;
  s.layers_per_block = c.layers;
  s.total_increment = c.increment;
  s.activation = c.activation;
  s.use_batch_norm = c.batch_norm;
  s.obs_dim = env.obs_dim;
  s.action_dim = env.action_dim;
  if (!excluded.empty()) s.prediction_mask = complement_mask(env.obs_dim, excluded);
  s.validate();
  return s;
}

std::string header_row() {
  return "env_step,step_score,actual_score,aux_loss,critic_loss,actor_loss,alpha,aux_updates,"
         "agent_updates";
}

std::string row_text(const MetricRow& r) {
  std::ostringstream os;
  os << r.env_step << ',' << cell(r.step_score) << ',' << cell(r.actual_score) << ','
     << cell(r.aux_loss) << ',' << cell(r.critic_loss) << ',' << cell(r.actor_loss) << ','
     << cell(r.alpha) << ',' << r.aux_updates << ',' << r.agent_updates;
  return os.str();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu),
                    static_cast<std::uint32_t>(master >> 32), static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

RunPlan apply_ablation(const ExperimentConfig& config) {
  config.validate();
  const Ablations& ab = config.ablations;
  const int flags = int(ab.no_bn) + int(ab.no_aux) + int(ab.same_params) + int(ab.freeze_ofe);
  if (flags > 1 && !ab.combine) {
    throw ConfigError("at most one of no_bn, no_aux, same_params, freeze_ofe unless combine_ablations is set");
  }
  RunPlan plan;
  plan.config = config;
  plan.extractor_kind = config.extractor;
  plan.agent_hidden = config.hidden;
  const bool ofe = config.extractor == "ofe";
  if (ab.no_bn) {
    if (!ofe) throw ConfigError("no_bn applies only to the ofe extractor");
    plan.config.batch_norm = false;
  }
  if (ab.no_aux) {
    if (config.extractor == "raw") throw ConfigError("no_aux needs an extractor with parameters");
    plan.aux_updates = false;
    plan.pretrain = false;
    plan.coupled_extractor = true;
  }
  if (ab.freeze_ofe) {
    if (!ofe) throw ConfigError("freeze_ofe applies only to the ofe extractor");
    plan.aux_updates = false;
  }
  if (ab.same_params && !ofe) throw ConfigError("same_params compares against the ofe extractor");
  if (config.extractor == "raw") {
    plan.aux_updates = false;
    plan.pretrain = false;
  }
  return plan;
}

ArchSpec resolve_arch(const ExperimentConfig& config, const EnvSpec& env) {
  auto probe = make_env(env.name);
  const auto excluded = probe->external_force_mask();
  if (!config.auto_arch) return manual_arch(config, env, excluded);
  if (config.increment % 24 != 0) {
    throw ConfigError("arch=auto needs an increment divisible by 2, 4, 6 and 8");
  }
  const Corpus corpus = collect_corpus(env.name, config.corpus_train, config.corpus_test, 0);
  ScoreOptions opts;
  opts.seeds.clear();
  for (int s = 0; s < config.arch_seeds; ++s) opts.seeds.push_back(static_cast<std::uint64_t>(s));
  opts.train_steps = config.arch_train_steps;
  opts.ofe.adam.learning_rate = config.ofe_learning_rate;
  const auto mask = complement_mask(env.obs_dim, excluded);
  auto grid = default_grid(env.obs_dim, env.action_dim, config.increment,
                           excluded.empty() ? std::vector<Eigen::Index>{} : mask);
  if (!config.batch_norm) {
    for (auto& s : grid) s.use_batch_norm = false;
  }
  return select_architecture(grid, corpus, opts).selected_spec();
}

std::unique_ptr<Extractor> build_extractor(const RunPlan& plan, const EnvSpec& env,
                                           const std::vector<Eigen::Index>& excluded,
                                           std::uint64_t seed) {
  const auto& kind = plan.extractor_kind;
  if (kind == "raw" || plan.config.ablations.same_params) {
    return std::make_unique<RawExtractor>(env.obs_dim, env.action_dim);
  }
  if (kind == "ofe") {
    ArchSpec spec = plan.arch ? *plan.arch : manual_arch(plan.config, env, excluded);
    OfeOptions opts;
    opts.adam.learning_rate = plan.config.ofe_learning_rate;
    return build_feature_extractor(spec, seed, opts);
  }
  const MlVariant variant = kind == "ml_third" ? MlVariant::third : MlVariant::ofe_like;
  return build_ml(env.obs_dim, env.action_dim, variant, seed, plan.config.increment);
}

std::unique_ptr<Agent> build_agent(const RunPlan& plan, const AgentDims& dims, std::uint64_t seed) {
  const auto& c = plan.config;
  if (c.agent == "sac") {
    SacOptions o;
    o.hidden = plan.agent_hidden;
    o.gamma = c.gamma;
    o.tau = c.tau;
    o.learning_rate = c.learning_rate;
    return std::make_unique<SacAgent>(dims, seed, o);
  }
  Td3Options o;
  o.hidden = plan.agent_hidden;
  o.gamma = c.gamma;
  o.tau = c.tau;
  o.learning_rate = c.learning_rate;
  return std::make_unique<Td3Agent>(dims, seed, o);
}

std::string metrics_csv(const std::string& label, const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << "# ofe-metrics v1\n# label=" << label << "\n" << header_row() << "\n";
  for (const auto& r : rows) os << row_text(r) << "\n";
  return os.str();
}

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         const std::filesystem::path& run_dir) {
  RunPlan plan = apply_ablation(config);
  const ExperimentConfig& c = plan.config;
  auto env = make_env(c.env);
  auto eval_env = make_env(c.env);
  const EnvSpec& spec = env->spec();
  const auto excluded = env->external_force_mask();

  if (c.extractor == "ofe") plan.arch = resolve_arch(c, spec);

  std::filesystem::create_directories(run_dir);
  const std::string label = config.effective_label();
  {
    std::ofstream cfg(run_dir / "config.txt");
    cfg << to_config_text(config);
  }
  if (plan.arch) {
    std::ofstream arch(run_dir / "arch.txt");
    arch << to_config_text(*plan.arch);
  }

  if (c.ablations.same_params) {
    OfeNet reference(*plan.arch, 0);
    const std::size_t phi_o = reference.param_count().phi_o_total;
    plan.same_params_target =
        policy_param_count(reference.z_o_dim(), c.hidden, spec.action_dim) + phi_o;
    const Eigen::Index w = same_params_width(spec.obs_dim, spec.action_dim, plan.same_params_target,
                                             static_cast<int>(c.hidden.size()));
    plan.agent_hidden.assign(c.hidden.size(), w);
  }

  auto extractor = build_extractor(plan, spec, excluded, derive_seed(seed, Stream::extractor));
  const AgentDims dims = agent_dims(*extractor, spec);
  auto agent = build_agent(plan, dims, derive_seed(seed, Stream::agent));

  std::unique_ptr<Adam> coupled_opt;
  if (plan.coupled_extractor) {
    coupled_opt = std::make_unique<Adam>(extractor->representation_parameters(),
                                         AdamOptions{c.ofe_learning_rate, 0.9, 0.999, 1e-8});
  }

  Rng env_rng(derive_seed(seed, Stream::env));
  Rng explore_rng(derive_seed(seed, Stream::explore));
  Rng sample_rng(derive_seed(seed, Stream::sample));
  Rng agent_rng(derive_seed(seed, Stream::agent) ^ 0x9e3779b97f4a7c15ULL);
  const std::uint64_t eval_base = derive_seed(seed, Stream::eval);

  ReplayBuffer buffer(c.buffer_capacity, spec.obs_dim, spec.action_dim);

  RunResult result;
  result.run_dir = run_dir;
  result.agent_params = agent->param_count();
  result.extractor_params = count_parameters(extractor->parameters());
  result.agent_hidden = plan.agent_hidden;
  result.same_params_target = plan.same_params_target;

  std::ofstream csv(run_dir / "metrics.csv", std::ios::trunc);
  std::ofstream timing(run_dir / "timing.csv", std::ios::trunc);
  if (!csv || !timing) throw ConfigError("cannot write metrics into " + run_dir.string());
  csv << "# ofe-metrics v1\n# label=" << label << "\n" << header_row() << "\n";
  timing << "env_step,wall_seconds\n";
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<double> aux_losses, critic_losses, actor_losses, step_scores;
  double last_alpha = std::numeric_limits<double>::quiet_NaN();
  const std::size_t window_evals = c.actual_score_window / c.eval_interval;
  std::size_t eval_index = 0;

  auto save_snapshots = [&] {
    write_snapshot(run_dir / "extractor.snap", extractor->state());
    write_snapshot(run_dir / "agent.snap", agent->state());
  };

  Vector obs = env->reset(env_rng());
  std::size_t step = 0;
  try {
    for (step = 1; step <= c.total_steps; ++step) {
      Vector action;
      if (step <= c.warmup_steps) {
        action = random_action(spec, explore_rng);
      } else {
        const Matrix z = extractor->encode_obs_values(obs.transpose(), BnMode::eval);
        action = agent->act(z, ActMode::explore, explore_rng).row(0).transpose();
      }
      const Transition t = env->step(action);
      buffer.push(t);
      obs = (t.done || t.truncated) ? env->reset(env_rng()) : t.next_obs;

      if (step == c.warmup_steps) {
        if (plan.pretrain && extractor->has_auxiliary_task()) {
          for (std::size_t k = 0; k < c.effective_pretrain_steps(); ++k) {
            extractor->train_step(buffer.sample(c.batch_size, sample_rng));
          }
        }
        result.extractor_after_pretrain = extractor->state();
      }
      if (step > c.warmup_steps) {
        if (plan.aux_updates && extractor->has_auxiliary_task()) {
          aux_losses.push_back(extractor->train_step(buffer.sample(c.batch_size, sample_rng)));
        }
        const Batch batch = buffer.sample(c.batch_size, sample_rng);
        const UpdateDiagnostics d = agent->update(*extractor, batch, agent_rng, coupled_opt.get());
        critic_losses.push_back(d.critic_loss);
        if (d.actor_updated) actor_losses.push_back(d.actor_loss);
        if (c.agent == "sac") last_alpha = d.alpha;
      }

      if (step % c.eval_interval == 0) {
        MetricRow row;
        row.env_step = step;
        row.step_score = evaluate_policy(*agent, *extractor, *eval_env, c.eval_episodes,
                                         eval_base + eval_index * static_cast<std::uint64_t>(c.eval_episodes));
        ++eval_index;
        if (!std::isfinite(row.step_score)) throw NumericError("non-finite step score");
        step_scores.push_back(row.step_score);
        if (step_scores.size() >= window_evals) {
          double s = 0.0;
          for (std::size_t i = step_scores.size() - window_evals; i < step_scores.size(); ++i) s += step_scores[i];
          row.actual_score = s / static_cast<double>(window_evals);
        }
        row.aux_loss = mean_of(aux_losses);
        row.critic_loss = mean_of(critic_losses);
        row.actor_loss = mean_of(actor_losses);
        row.alpha = last_alpha;
        row.aux_updates = extractor->train_steps();
        row.agent_updates = agent->updates();
        aux_losses.clear();
        critic_losses.clear();
        actor_losses.clear();
        csv << row_text(row) << "\n" << std::flush;
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timing << step << ',' << cell(secs) << "\n" << std::flush;
        result.rows.push_back(row);
        save_snapshots();
        if (!std::isnan(c.target_score) && row.step_score >= c.target_score) {
          result.reached_target_at = step;
          break;
        }
      }
    }
  } catch (const NumericError& e) {
    csv << "# diverged at env_step " << step << ": " << e.what() << "\n" << std::flush;
    throw NumericError("run " + label + " seed " + std::to_string(seed) + " diverged at env_step " +
                       std::to_string(step) + ": " + e.what());
  }

  result.env_steps = std::min(step, c.total_steps);
  result.aux_updates = extractor->train_steps();
  result.agent_updates = agent->updates();
  result.extractor_final = extractor->state();
  return result;
}

std::vector<RunResult> run_all_seeds(const ExperimentConfig& config, unsigned jobs) {
  config.validate();
  ExperimentConfig resolved = config;
  if (config.auto_arch && config.extractor == "ofe") {
    auto env = make_env(config.env);
    const ArchSpec spec = resolve_arch(config, env->spec());
    resolved.auto_arch = false;
    resolved.connectivity = spec.connectivity;
    resolved.layers = spec.layers_per_block;
    resolved.activation = spec.activation;
  }
  const auto base = config.output_dir / config.effective_label();
  std::vector<RunResult> results(config.seeds.size());
  auto run_one = [&](std::size_t i) {
    const auto seed = config.seeds[i];
    results[i] = run_experiment(resolved, seed, base / ("seed" + std::to_string(seed)));
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i) run_one(i);
    return results;
  }
  std::vector<std::thread> workers;
  std::mutex m;
  std::exception_ptr failure;
  std::size_t next = 0;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      while (true) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(m);
          if (next >= config.seeds.size()) return;
          i = next++;
        }
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<DimSweepRow> dim_sweep(const ExperimentConfig& config, const std::vector<int>& widths,
                                   unsigned jobs) {
  if (widths.empty()) throw ConfigError("dim_sweep: no widths given");
  std::vector<DimSweepRow> out;
  auto env = make_env(config.env);
  for (int w : widths) {
    if (w <= 0) throw ConfigError("dim_sweep: widths must be positive");
    ExperimentConfig c = config;
    c.extractor = "ofe";
    c.auto_arch = false;
    c.connectivity = Connectivity::densenet;
    c.layers = 8;
    c.increment = 8 * w;
    c.label = config.effective_label() + "-w" + std::to_string(w);
    DimSweepRow row;
    row.width = w;
    row.z_o_dim = env->spec().obs_dim + 8 * w;
    for (const auto& r : run_all_seeds(c, jobs)) {
      row.final_step_scores.push_back(r.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                     : r.rows.back().step_score);
    }
    out.push_back(std::move(row));
  }
  std::filesystem::create_directories(config.output_dir);
  std::ofstream csv(config.output_dir / "dim_sweep.csv", std::ios::trunc);
  csv << "width,z_o_dim,seeds,mean_final_step_score,std_final_step_score\n";
  for (const auto& r : out) {
    const double m = mean_of(r.final_step_scores);
    double ss = 0.0;
    for (double v : r.final_step_scores) ss += (v - m) * (v - m);
    const double sd = r.final_step_scores.size() > 1
                          ? std::sqrt(ss / static_cast<double>(r.final_step_scores.size() - 1))
                          : 0.0;
    csv << r.width << ',' << r.z_o_dim << ',' << r.final_step_scores.size() << ',' << cell(m) << ','
        << cell(sd) << "\n";
  }
  return out;
}

}  // namespace ofe

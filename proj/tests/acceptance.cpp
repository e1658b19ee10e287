// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit status
// is the number of failed criteria. Pass criterion numbers as arguments to run
// a subset.

#include "ofe/agents/sac.hpp"
#include "ofe/agents/td3.hpp"
#include "ofe/archsearch/archsearch.hpp"
#include "ofe/envs/env.hpp"
#include "ofe/errors.hpp"
#include "ofe/extractors/ofenet.hpp"
#include "ofe/gradkit/grad_check.hpp"
#include "ofe/gradkit/layers.hpp"
#include "ofe/ml/model_network.hpp"
#include "ofe/replay/replay_buffer.hpp"
#include "ofe/runner/config.hpp"
#include "ofe/runner/experiment.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ofe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

fs::path work_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / "ofe_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig desk_config() { return load_config(fs::path(OFE_SOURCE_DIR) / "configs/desk_pendulum.cfg"); }

Batch random_batch(Eigen::Index n, Eigen::Index od, Eigen::Index ad, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.obs = normal_matrix(n, od, 1.0, rng);
  b.actions = uniform_matrix(n, ad, 2.0, rng);
  b.next_obs = normal_matrix(n, od, 1.0, rng);
  b.rewards = normal_matrix(n, 1, 1.0, rng);
  b.dones = Vector::Zero(n);
  b.dones(0) = 1.0;
  return b;
}

EnvSpec box_spec(Eigen::Index od, Eigen::Index ad) {
  EnvSpec s;
  s.name = "box";
  s.obs_dim = od;
  s.action_dim = ad;
  s.action_low = Vector::Constant(ad, -2.0);
  s.action_high = Vector::Constant(ad, 2.0);
  s.max_episode_steps = 10;
  return s;
}

ArchSpec arch(Connectivity c, int layers, int inc, Eigen::Index od, Eigen::Index ad,
              Activation a = Activation::swish, bool bn = true) {
  ArchSpec s;
  s.connectivity = c;
  s.layers_per_block = layers;
  s.total_increment = inc;
  s.activation = a;
  s.use_batch_norm = bn;
  s.obs_dim = od;
  s.action_dim = ad;
  return s;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  std::vector<std::pair<std::string, GradCheckReport>> reports;
  constexpr double tol = 1e-4;

  // one dense layer per activation; inputs pushed off the kinks
  for (Activation a : {Activation::identity, Activation::relu, Activation::tanh,
                       Activation::leaky_relu, Activation::swish, Activation::selu}) {
    Rng rng(1);
    DenseLayer layer("dense", 4, 3, a, rng);
    Matrix xv = normal_matrix(5, 4, 1.0, rng);
    Parameter x("x", xv);
    for (int tries = 0; tries < 50; ++tries) {
      Matrix pre = (xv * layer.parameters()[0]->value.transpose()).rowwise() +
                   RowVector(layer.parameters()[1]->value.row(0));
      if (pre.cwiseAbs().minCoeff() > 1e-3) break;
      xv = normal_matrix(5, 4, 1.0, rng);
      x.value = xv;
    }
    auto params = layer.parameters();
    params.push_back(&x);
    const Matrix w = normal_matrix(5, 3, 1.0, rng);
    reports.emplace_back("dense/" + std::string(to_string(a)),
                         grad_check([&](Tape& t) { return sum(mul(layer.forward(t, t.parameter(x)), t.constant(w))); },
                                    params, tol, 1e-5, 1e-7));
  }
  {
    Rng rng(2);
    Parameter a("a", normal_matrix(4, 3, 1.0, rng)), b("b", normal_matrix(4, 2, 1.0, rng));
    const Matrix w = normal_matrix(4, 5, 1.0, rng);
    reports.emplace_back("concat", grad_check([&](Tape& t) {
                           return sum(mul(concat(t.parameter(a), t.parameter(b)), t.constant(w)));
                         }, {&a, &b}, tol, 1e-5, 1e-7));
  }
  for (BnMode mode : {BnMode::train, BnMode::eval}) {
    Rng rng(3);
    BatchNorm bn("bn", 3);
    bn.gamma().value = uniform_matrix(1, 3, 2.0, rng);
    bn.beta().value = uniform_matrix(1, 3, 2.0, rng);
    bn.moving_var() = uniform_matrix(1, 3, 0.5, rng).array() + 1.0;
    Parameter x("x", normal_matrix(6, 3, 1.0, rng));
    const Matrix w = normal_matrix(6, 3, 1.0, rng);
    auto params = bn.parameters();
    params.push_back(&x);
    reports.emplace_back(mode == BnMode::train ? "batchnorm/train" : "batchnorm/eval",
                         grad_check([&](Tape& t) {
                           return sum(mul(bn.forward(t, t.parameter(x), mode, true, false), t.constant(w)));
                         }, params, tol, 1e-5, 1e-7));
  }
  {
    Rng rng(4);
    Parameter p("p", normal_matrix(5, 3, 1.0, rng));
    const Matrix target = normal_matrix(5, 3, 1.0, rng);
    reports.emplace_back("mse", grad_check([&](Tape& t) {
                           return squared_error(t.parameter(p), t.constant(target));
                         }, {&p}, tol, 1e-5, 1e-7));
  }
  for (auto conn : {Connectivity::densenet, Connectivity::mlp, Connectivity::resnet}) {
    OfeNet net(arch(conn, 2, 4, 3, 2, Activation::tanh), 3);
    const Batch b = random_batch(6, 3, 2, 5);
    reports.emplace_back("aux/" + std::string(to_string(conn)),
                         grad_check([&](Tape& t) { return net.aux_loss(t, b, EncodeOptions{BnMode::train, true, false}); },
                                    net.parameters(), tol, 1e-5, 1e-5));
  }
  {
    MlOptions o;
    o.hidden = 6;
    MlModelNetwork ml(4, 2, 3, 1, o);
    const Batch b = random_batch(5, 4, 2, 2);
    const auto params = ml.parameters();
    std::vector<Parameter*> predictor(params.begin() + 4, params.end());
    reports.emplace_back("ml_model", grad_check([&](Tape& t) { return ml.ml_loss(t, b, true); }, predictor,
                                                tol, 1e-5, 1e-5));
  }

  auto small_ofe = [] { return build_feature_extractor(arch(Connectivity::densenet, 2, 4, 3, 1), 11); };
  {
    auto ofe = small_ofe();
    SacOptions so;
    so.hidden = {6, 5};
    SacAgent agent(agent_dims(*ofe, box_spec(3, 1)), 5, so);
    const Batch b = random_batch(6, 3, 1, 8);
    Rng rng(4);
    const Matrix y = agent.critic_targets(*ofe, b, normal_matrix(6, 1, 1.0, rng));
    auto params = agent.critic(0).parameters();
    for (auto* p : agent.critic(1).parameters()) params.push_back(p);
    for (auto* p : ofe->representation_parameters()) params.push_back(p);
    reports.emplace_back("sac/critic", grad_check([&](Tape& t) {
                           return agent.critic_loss(t, *ofe, b, y, EncodeOptions{BnMode::train, true, false});
                         }, params, tol, 1e-5, 1e-5));
    const Matrix noise = normal_matrix(6, 1, 1.0, rng);
    reports.emplace_back("sac/actor", grad_check([&](Tape& t) { return agent.actor_loss(t, *ofe, b.obs, noise); },
                                                 agent.actor().parameters(), tol, 1e-5, 1e-5));
  }
  {
    auto ofe = small_ofe();
    Td3Options to;
    to.hidden = {6, 5};
    Td3Agent agent(agent_dims(*ofe, box_spec(3, 1)), 5, to);
    const Batch b = random_batch(6, 3, 1, 8);
    Rng rng(4);
    const Matrix y = agent.critic_targets(*ofe, b, normal_matrix(6, 1, 1.0, rng));
    auto params = agent.critic(0).parameters();
    for (auto* p : agent.critic(1).parameters()) params.push_back(p);
    for (auto* p : ofe->representation_parameters()) params.push_back(p);
    reports.emplace_back("td3/critic", grad_check([&](Tape& t) {
                           return agent.critic_loss(t, *ofe, b, y, EncodeOptions{BnMode::train, true, false});
                         }, params, tol, 1e-5, 1e-5));
    reports.emplace_back("td3/actor", grad_check([&](Tape& t) { return agent.actor_loss(t, *ofe, b.obs); },
                                                 agent.actor().parameters(), tol, 1e-5, 1e-5));
  }

  Outcome o{true, ""};
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, r] : reports) {
    if (!r.passed) {
      o.pass = false;
      o.detail += name + " failed at " + r.worst_entry + "; ";
    }
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = name;
    }
  }
  o.detail += std::to_string(reports.size()) + " checks, max rel error " + fmt("%.2e", worst) + " (" +
              worst_name + ")";
  return o;
}

Outcome ant_structure() {
  const ArchSpec s = arch(Connectivity::densenet, 6, 240, 111, 8);
  OfeNet net(s, 0);
  const auto c = net.param_count();
  const std::vector<std::size_t> expected{4640, 6240, 7840, 9440, 11040, 12640};
  bool ok = c.phi_o.size() == expected.size() && c.phi_o_total == 51840 && net.z_o_dim() == 351;
  std::string layers;
  for (std::size_t i = 0; i < c.phi_o.size(); ++i) {
    layers += (i ? "," : "") + std::to_string(c.phi_o[i].params);
    if (i < expected.size()) ok = ok && c.phi_o[i].params == expected[i];
  }
  EnvSpec env = box_spec(111, 8);
  env.action_low = Vector::Constant(8, -1.0);
  env.action_high = Vector::Constant(8, 1.0);
  SacAgent agent(agent_dims(net, env), 0);
  const auto& actor = agent.actor().layers();
  ok = ok && actor[0].in_features() == 351 && actor[0].param_count() == 90112 &&
       actor[1].param_count() == 65792;
  return {ok, "phi_o layers " + layers + ", total " + std::to_string(c.phi_o_total) + "; SAC input " +
                  std::to_string(actor[0].in_features()) + ", layers " +
                  std::to_string(actor[0].param_count()) + "/" + std::to_string(actor[1].param_count())};
}

Outcome walker_dims() {
  bool ok = true;
  std::string detail;
  for (int layers : {2, 4, 6, 8}) {
    OfeNet net(arch(Connectivity::densenet, layers, 120, 17, 6), 0);
    const Batch b = random_batch(4, 17, 6, 1);
    Tape t;
    const EncodeOptions eo{BnMode::train, false, false};
    Var zo = net.encode_obs(t, t.constant(b.obs), eo);
    Var zoa = net.encode_obs_action(t, zo, t.constant(b.actions), eo);
    ok = ok && zo.cols() == 137 && zoa.cols() == 263 && net.z_o_dim() == 137 && net.z_oa_dim() == 263;
    if (layers == 6) detail = "z_o " + std::to_string(zo.cols()) + ", z_oa " + std::to_string(zoa.cols());
  }
  return {ok, detail + " (layers 2, 4, 6, 8)"};
}

Outcome linear_oracle() {
  const Corpus corpus = collect_corpus("linsys", 10000, 2000, 0);
  LinearSystem sys;  // same default system as the registered env
  const Batch test = corpus.test.all();

  // least-squares fit of o' on [o, a]
  Matrix x(test.size(), test.obs.cols() + test.actions.cols());
  x << test.obs, test.actions;
  const Matrix coef = x.colPivHouseholderQr().solve(test.next_obs);
  const double ls_residual = (x * coef - test.next_obs).rowwise().squaredNorm().mean();
  Matrix ab(sys.a().rows(), sys.a().cols() + sys.b().cols());
  ab << sys.a(), sys.b();
  const double coef_err = (coef.transpose() - ab).cwiseAbs().maxCoeff();

  ScoreOptions opts;
  opts.train_steps = 5000;
  const auto t0 = std::chrono::steady_clock::now();
  const double loss = auxiliary_test_loss(arch(Connectivity::densenet, 2, 32, 4, 2), corpus, 0, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool ls_ok = ls_residual <= 1e-8 && coef_err <= 1e-8;
  const bool ok = ls_ok && loss <= 1e-6 && std::abs(loss - ls_residual) <= 1e-8 && secs < 60.0;
  return {ok, "test L_aux " + fmt("%.3e", loss) + " after 5000 steps (" + fmt("%.1f", secs) +
                  " s); least-squares residual " + fmt("%.1e", ls_residual) + ", max |[A B] - fit| " +
                  fmt("%.1e", coef_err)};
}

Outcome behavioral_smoke() {
  const ExperimentConfig base = desk_config();
  const auto out = work_dir("smoke");
  std::string detail;
  bool ok = true;
  double slowest = 0.0;
  for (const std::string kind : {"raw", "ofe"}) {
    int reached = 0;
    std::string steps;
    for (std::uint64_t seed : {0, 1, 2}) {
      ExperimentConfig c = base;
      c.extractor = kind;
      c.total_steps = kind == "raw" ? 30000 : 40000;
      c.target_score = -250.0;
      c.label = kind;
      const auto t0 = std::chrono::steady_clock::now();
      const RunResult r = run_experiment(c, seed, out / kind / ("seed" + std::to_string(seed)));
      slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      if (r.reached_target_at) {
        ++reached;
        steps += (steps.empty() ? "" : ",") + std::to_string(*r.reached_target_at);
      } else {
        steps += (steps.empty() ? "" : ",") + std::string("-");
      }
    }
    ok = ok && reached >= 2;
    detail += kind + " " + std::to_string(reached) + "/3 (steps " + steps + "); ";
  }
  ok = ok && slowest < 15 * 60;
  return {ok, detail + "slowest run " + fmt("%.0f", slowest) + " s"};
}

Outcome masking() {
  auto env = make_env("linsys-padded");
  const auto excluded = env->external_force_mask();
  ArchSpec s = arch(Connectivity::densenet, 2, 8, env->spec().obs_dim, env->spec().action_dim);
  s.prediction_mask = complement_mask(s.obs_dim, excluded);
  OfeNet net(s, 0);
  const Corpus corpus = collect_corpus("linsys-padded", 64, 1, 0);
  Batch b = corpus.train.all();
  Batch perturbed = b;
  Rng rng(7);
  for (auto j : excluded) perturbed.next_obs.col(j) = normal_matrix(b.size(), 1, 1e3, rng);
  double max_diff = 0.0;
  for (BnMode mode : {BnMode::train, BnMode::eval}) {
    max_diff = std::max(max_diff, std::abs(net.auxiliary_loss(b, mode) - net.auxiliary_loss(perturbed, mode)));
  }
  return {max_diff == 0.0 && !excluded.empty(),
          std::to_string(excluded.size()) + " masked coordinates, |delta L_aux| = " + fmt("%g", max_diff)};
}

Outcome ablation_wiring() {
  ExperimentConfig base = desk_config();
  base.total_steps = 1200;
  base.eval_interval = 200;
  base.actual_score_window = 200;
  base.eval_episodes = 1;
  const auto out = work_dir("ablations");
  auto run = [&](const std::string& name, auto tweak) {
    ExperimentConfig c = base;
    tweak(c);
    return run_experiment(c, 0, out / name);
  };

  const RunResult frozen = run("freeze_ofe", [](ExperimentConfig& c) { c.ablations.freeze_ofe = true; });
  bool freeze_ok = frozen.extractor_after_pretrain.size() == frozen.extractor_final.size();
  for (std::size_t i = 0; freeze_ok && i < frozen.extractor_final.size(); ++i) {
    freeze_ok = frozen.extractor_after_pretrain[i].value == frozen.extractor_final[i].value;
  }
  freeze_ok = freeze_ok && frozen.aux_updates == base.warmup_steps;

  const RunResult noaux = run("no_aux", [](ExperimentConfig& c) { c.ablations.no_aux = true; });
  bool changed = false;
  for (std::size_t i = 0; i < noaux.extractor_final.size(); ++i) {
    if (noaux.extractor_final[i].name.rfind("ofe.phi_o", 0) == 0 &&
        noaux.extractor_final[i].value != noaux.extractor_after_pretrain[i].value) {
      changed = true;
    }
  }
  const bool noaux_ok = noaux.aux_updates == 0 && changed;

  run("no_bn", [](ExperimentConfig& c) { c.ablations.no_bn = true; });
  const auto with_bn = OfeNet(parse_arch_spec(slurp(out / "freeze_ofe" / "arch.txt")), 0).param_count().total;
  const auto without_bn = OfeNet(parse_arch_spec(slurp(out / "no_bn" / "arch.txt")), 0).param_count().total;
  const std::size_t normalized_units = 2 * static_cast<std::size_t>(base.increment);
  const bool nobn_ok = with_bn - without_bn == 4 * normalized_units;

  const RunResult same = run("same_params", [](ExperimentConfig& c) { c.ablations.same_params = true; });
  const auto w = same.agent_hidden.at(0);
  const std::size_t count = policy_param_count(3, same.agent_hidden, 1);
  const std::size_t diff = same.same_params_target - count;
  const bool same_ok = count <= same.same_params_target && diff <= static_cast<std::size_t>(w);

  // Ant-scale figure for reference; not gated.
  const std::size_t ant_target = 209800;
  const auto ant_w = same_params_width(111, 8, ant_target);
  const std::size_t ant_diff = ant_target - policy_param_count(111, {ant_w, ant_w}, 8);

  auto flag = [](bool b) { return b ? "ok" : "FAILED"; };
  return {freeze_ok && noaux_ok && nobn_ok && same_ok,
          std::string("freeze_ofe ") + flag(freeze_ok) + "; no_aux " + flag(noaux_ok) + " (aux updates " +
              std::to_string(noaux.aux_updates) + "); no_bn " + flag(nobn_ok) + " (-" +
              std::to_string(with_bn - without_bn) + " for " + std::to_string(normalized_units) +
              " units); same_params " + flag(same_ok) + " (w=" + std::to_string(w) + ", target " +
              std::to_string(same.same_params_target) + ", diff " + std::to_string(diff) +
              "; Ant scale w=" + std::to_string(ant_w) + " diff " + std::to_string(ant_diff) + ")"};
}

Outcome selection_determinism() {
  const Corpus corpus = collect_corpus("pendulum", 2000, 500, 0);
  auto s = [&](Connectivity c, int l, Activation a) { return arch(c, l, 24, 3, 1, a); };
  const std::vector<ArchSpec> candidates{
      s(Connectivity::densenet, 2, Activation::relu),  s(Connectivity::densenet, 4, Activation::tanh),
      s(Connectivity::densenet, 6, Activation::swish), s(Connectivity::densenet, 8, Activation::selu),
      s(Connectivity::mlp, 2, Activation::leaky_relu), s(Connectivity::resnet, 2, Activation::swish)};
  ScoreOptions opts;
  opts.seeds = {0, 1, 2};
  opts.train_steps = 300;
  opts.batch_size = 64;
  const auto a = select_architecture(candidates, corpus, opts);
  const auto b = select_architecture(candidates, corpus, opts);
  const std::size_t ha = std::hash<std::string>{}(a.per_seed_csv() + a.summary_csv());
  const std::size_t hb = std::hash<std::string>{}(b.per_seed_csv() + b.summary_csv());
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < a.candidates.size(); ++i) {
    if (a.candidates[i].mean < a.candidates[argmin].mean) argmin = i;
  }
  const bool ok = ha == hb && a.selected == argmin && a.selected_spec() == candidates[argmin];
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016zx", ha);
  return {ok, std::string("csv hash ") + hex + (ha == hb ? " on both runs" : " differs") + "; selected " +
                  a.selected_spec().label() + " (argmin " + candidates[argmin].label() + ")"};
}

Outcome replay_statistics() {
  ReplayBuffer buf(10, 1, 1);
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.obs = Vector::Constant(1, i);
    t.action = Vector::Zero(1);
    t.next_obs = Vector::Zero(1);
    buf.push(t);
  }
  Rng rng(12345);
  std::vector<int> counts(10, 0);
  for (auto i : buf.sample_indices(100000, rng)) ++counts[i];
  double worst = 0.0;
  for (int c : counts) worst = std::max(worst, std::abs(c - 10000) / 10000.0);

  bool growth_ok = true;
  std::size_t draws = 0;
  for (std::size_t n = 1; n <= 3000; n += 13) {
    for (auto i : growth_limited_indices(2000, n, 64, rng)) {
      growth_ok = growth_ok && i < std::min<std::size_t>(n, 2000);
      ++draws;
    }
  }
  return {worst <= 0.05 && growth_ok, "max frequency deviation " + fmt("%.2f%%", 100 * worst) +
                                          "; growth-limited: " + std::to_string(draws) + " draws, " +
                                          (growth_ok ? "none" : "some") + " out of range"};
}

Outcome end_to_end_determinism() {
  const auto out = work_dir("determinism");
  const std::string cli = OFE_CLI_PATH;
  const std::string cfg = (fs::path(OFE_SOURCE_DIR) / "configs/desk_pendulum.cfg").string();
  std::vector<std::string> metrics;
  for (const char* rep : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" run -c \"" + cfg + "\" --set seeds=0 --set total_steps=2000 " +
                            "--set eval_interval=500 --set actual_score_window=1000 --set eval_episodes=2 " +
                            "--set label=det --set output_dir=\"" + (out / rep).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "ofe run exited with an error"};
    metrics.push_back(slurp(out / rep / "det" / "seed0" / "metrics.csv"));
  }
  const bool ok = !metrics[0].empty() && metrics[0] == metrics[1];
  return {ok, std::to_string(metrics[0].size()) + "-byte metrics.csv " +
                  (ok ? "identical across two invocations" : "differs between invocations")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"Ant-scale structure", ant_structure},
      {"Walker-scale dimensions", walker_dims},
      {"linear-system auxiliary oracle", linear_oracle},
      {"pendulum smoke test", behavioral_smoke},
      {"masking property", masking},
      {"ablation wiring", ablation_wiring},
      {"architecture selection determinism", selection_determinism},
      {"replay statistics", replay_statistics},
      {"end-to-end determinism", end_to_end_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail
              << " [" << fmt("%.1f", secs) << " s]" << std::endl;
  }
  return failed;
}

#include "ofe/agents/agent.hpp"
#include "ofe/errors.hpp"
#include "ofe/extractors/ofenet.hpp"
#include "ofe/runner/config.hpp"
#include "ofe/runner/experiment.hpp"
#include "ofe/runner/plots.hpp"
#include "ofe/runner/snapshot.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace ofe;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ofe_runner_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A few hundred pendulum steps with small networks.
ExperimentConfig tiny() {
  ExperimentConfig c;
  c.env = "pendulum";
  c.increment = 8;
  c.layers = 2;
  c.total_steps = 300;
  c.warmup_steps = 100;
  c.eval_interval = 100;
  c.eval_episodes = 1;
  c.actual_score_window = 200;
  c.batch_size = 16;
  c.buffer_capacity = 1000;
  c.hidden = {16, 16};
  return c;
}

bool same_arrays(const std::vector<NamedArray>& a, const std::vector<NamedArray>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].value != b[i].value) return false;
  }
  return true;
}

bool same_array_named(const std::vector<NamedArray>& a, const std::vector<NamedArray>& b,
                      const std::string& name) {
  for (const auto& x : a) {
    if (x.name != name) continue;
    for (const auto& y : b) {
      if (y.name == name) return x.value == y.value;
    }
  }
  ADD_FAILURE() << "no array " << name;
  return false;
}

void write_csv(const fs::path& p, const std::string& label, const std::vector<MetricRow>& rows) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << metrics_csv(label, rows);
}

MetricRow row(std::size_t step, double score) {
  MetricRow r;
  r.env_step = step;
  r.step_score = score;
  return r;
}

}  // namespace

TEST(Config, ParsesCommentsAndLists) {
  auto c = parse_config_text(
      "# comment\n"
      "env = linsys   # trailing\n"
      "agent=td3\n"
      "seeds = 3, 4,5\n"
      "hidden = 64,32\n"
      "target_score = -250\n"
      "arch = auto\n");
  EXPECT_EQ(c.env, "linsys");
  EXPECT_EQ(c.agent, "td3");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(c.hidden, (std::vector<Eigen::Index>{64, 32}));
  EXPECT_EQ(c.target_score, -250.0);
  EXPECT_TRUE(c.auto_arch);
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig c = tiny();
  c.ablations.no_aux = true;
  c.ablations.dim_sweep = {2, 4};
  c.ofe_learning_rate = 1.25e-3;
  c.label = "x";
  const std::string text = to_config_text(c);
  EXPECT_EQ(to_config_text(parse_config_text(text)), text);
}

TEST(Config, UnknownKeyAndBadValuesAreConfigErrors) {
  EXPECT_THROW(parse_config_text("learning_rat = 1"), ConfigError);
  EXPECT_THROW(parse_config_text("layers = two"), ConfigError);
  EXPECT_THROW(parse_config_text("agent = ppo"), ConfigError);
  EXPECT_THROW(parse_config_text("just words"), ConfigError);
  ExperimentConfig c;
  EXPECT_THROW(apply_overrides(c, {"gamma"}), ConfigError);
  apply_overrides(c, {"gamma=0.5"});
  EXPECT_EQ(c.gamma, 0.5);
}

TEST(Config, ValidateRejectsInconsistentSchedules) {
  ExperimentConfig c = tiny();
  EXPECT_NO_THROW(c.validate());
  c.eval_interval = 70;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.warmup_steps = 300;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.actual_score_window = 150;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, PretrainDefaultsToWarmup) {
  ExperimentConfig c = tiny();
  EXPECT_EQ(c.effective_pretrain_steps(), 100u);
  c.pretrain_steps = 7;
  EXPECT_EQ(c.effective_pretrain_steps(), 7u);
}

TEST(Seeds, StreamsDifferAndAreStable) {
  std::set<std::uint64_t> seen;
  for (auto s : {Stream::env, Stream::explore, Stream::sample, Stream::agent, Stream::extractor,
                 Stream::eval, Stream::init}) {
    seen.insert(derive_seed(0, s));
    EXPECT_EQ(derive_seed(42, s), derive_seed(42, s));
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_NE(derive_seed(1, Stream::env), derive_seed(2, Stream::env));
}

TEST(Ablation, PlanWiring) {
  ExperimentConfig c = tiny();
  auto p = apply_ablation(c);
  EXPECT_TRUE(p.aux_updates && p.pretrain && !p.coupled_extractor);

  c.ablations.no_aux = true;
  p = apply_ablation(c);
  EXPECT_TRUE(!p.aux_updates && !p.pretrain && p.coupled_extractor);

  c = tiny();
  c.ablations.freeze_ofe = true;
  p = apply_ablation(c);
  EXPECT_TRUE(!p.aux_updates && p.pretrain);

  c = tiny();
  c.ablations.no_bn = true;
  EXPECT_FALSE(apply_ablation(c).config.batch_norm);
}

TEST(Ablation, InvalidCombinationsAreConfigErrors) {
  ExperimentConfig c = tiny();
  c.ablations.no_bn = c.ablations.freeze_ofe = true;
  EXPECT_THROW(apply_ablation(c), ConfigError);
  c.ablations.combine = true;
  EXPECT_NO_THROW(apply_ablation(c));

  c = tiny();
  c.extractor = "raw";
  c.ablations.no_bn = true;
  EXPECT_THROW(apply_ablation(c), ConfigError);
  c.ablations.no_bn = false;
  c.ablations.no_aux = true;
  EXPECT_THROW(apply_ablation(c), ConfigError);
}

TEST(Run, StructureOfOutputs) {
  auto dir = scratch("structure");
  auto r = run_experiment(tiny(), 0, dir);
  ASSERT_EQ(r.rows.size(), 3u);
  for (std::size_t i = 0; i < r.rows.size(); ++i) EXPECT_EQ(r.rows[i].env_step, 100 * (i + 1));
  EXPECT_TRUE(std::isnan(r.rows[0].actual_score));
  EXPECT_NEAR(r.rows[2].actual_score, (r.rows[1].step_score + r.rows[2].step_score) / 2, 1e-12);
  // pretraining (100) plus one aux step per env step after warmup (200)
  EXPECT_EQ(r.aux_updates, 300u);
  EXPECT_EQ(r.agent_updates, 200u);
  EXPECT_EQ(r.rows[0].agent_updates, 0u);
  for (const char* f : {"metrics.csv", "timing.csv", "config.txt", "arch.txt", "extractor.snap",
                        "agent.snap"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const std::string csv = slurp(dir / "metrics.csv");
  EXPECT_EQ(csv.rfind("# ofe-metrics v1\n# label=pendulum-sac-ofe\nenv_step,step_score", 0), 0u);
  EXPECT_EQ(csv.find("wall"), std::string::npos);
  EXPECT_EQ(csv, metrics_csv("pendulum-sac-ofe", r.rows));
  EXPECT_TRUE(same_arrays(read_snapshot(dir / "extractor.snap"), r.extractor_final));
  fs::remove_all(dir);
}

TEST(Run, RepeatIsByteIdentical) {
  auto a = scratch("det_a"), b = scratch("det_b");
  ExperimentConfig c = tiny();
  c.agent = "td3";
  run_experiment(c, 5, a);
  run_experiment(c, 5, b);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, EarlyStopAtTargetScore) {
  auto dir = scratch("early");
  ExperimentConfig c = tiny();
  c.target_score = -1e9;
  auto r = run_experiment(c, 0, dir);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.reached_target_at, std::optional<std::size_t>(100));
  fs::remove_all(dir);
}

TEST(Run, FreezeOfeKeepsPretrainedParameters) {
  auto dir = scratch("freeze");
  ExperimentConfig c = tiny();
  c.ablations.freeze_ofe = true;
  auto r = run_experiment(c, 0, dir);
  EXPECT_EQ(r.aux_updates, 100u);  // pretraining only
  EXPECT_TRUE(same_arrays(r.extractor_after_pretrain, r.extractor_final));
  fs::remove_all(dir);
}

TEST(Run, NoAuxTrainsExtractorThroughCriticOnly) {
  auto dir = scratch("noaux");
  ExperimentConfig c = tiny();
  c.ablations.no_aux = true;
  auto r = run_experiment(c, 0, dir);
  EXPECT_EQ(r.aux_updates, 0u);
  for (const auto& row : r.rows) EXPECT_TRUE(std::isnan(row.aux_loss));
  EXPECT_FALSE(same_array_named(r.extractor_after_pretrain, r.extractor_final, "ofe.phi_o.l0.weight"));
  // the prediction head is not part of the critic's graph
  EXPECT_TRUE(same_array_named(r.extractor_after_pretrain, r.extractor_final, "ofe.pred.weight"));
  fs::remove_all(dir);
}

TEST(Run, NoBnRemovesFourParametersPerNormalizedUnit) {
  auto a = scratch("bn"), b = scratch("nobn");
  ExperimentConfig c = tiny();
  c.total_steps = 200;
  c.actual_score_window = 100;
  auto with = run_experiment(c, 0, a);
  c.ablations.no_bn = true;
  auto without = run_experiment(c, 0, b);
  // counts include the moving statistics; two densenet layers of 4 units in each of two blocks
  const auto full = OfeNet(parse_arch_spec(slurp(a / "arch.txt")), 0).param_count().total;
  const auto reduced = OfeNet(parse_arch_spec(slurp(b / "arch.txt")), 0).param_count().total;
  EXPECT_EQ(full - reduced, 4u * 16u);
  EXPECT_EQ(with.extractor_params - without.extractor_params, 2u * 16u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, SameParamsWidensRawAgent) {
  auto dir = scratch("same");
  ExperimentConfig c = tiny();
  c.total_steps = 200;
  c.actual_score_window = 100;
  c.ablations.same_params = true;
  auto r = run_experiment(c, 0, dir);
  EXPECT_EQ(r.aux_updates, 0u);
  ASSERT_EQ(r.agent_hidden.size(), 2u);
  const Eigen::Index w = r.agent_hidden[0];
  EXPECT_EQ(r.agent_hidden[1], w);
  // OFE-side policy (input 3 + 8, hidden 16x16) plus phi_o
  OfeNet ofe(parse_arch_spec(slurp(dir / "arch.txt")), 0);
  EXPECT_EQ(r.same_params_target,
            policy_param_count(11, {16, 16}, 1) + ofe.param_count().phi_o_total);
  EXPECT_LE(policy_param_count(3, {w, w}, 1), r.same_params_target);
  EXPECT_GT(policy_param_count(3, {w + 1, w + 1}, 1), r.same_params_target);
  fs::remove_all(dir);
}

TEST(Run, RunAllSeedsLayout) {
  auto out = scratch("layout");
  ExperimentConfig c = tiny();
  c.total_steps = 200;
  c.actual_score_window = 100;
  c.extractor = "raw";
  c.seeds = {0, 1};
  c.output_dir = out;
  c.label = "lbl";
  auto rs = run_all_seeds(c, 2);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_TRUE(fs::exists(out / "lbl" / "seed0" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(out / "lbl" / "seed1" / "metrics.csv"));
  EXPECT_NE(slurp(out / "lbl" / "seed0" / "metrics.csv"), slurp(out / "lbl" / "seed1" / "metrics.csv"));
  fs::remove_all(out);
}

TEST(Run, DimSweepWritesOneRowPerWidth) {
  auto out = scratch("dims");
  ExperimentConfig c = tiny();
  c.total_steps = 200;
  c.actual_score_window = 100;
  c.output_dir = out;
  auto rows = dim_sweep(c, {1, 2});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].z_o_dim, 3 + 16);
  const std::string csv = slurp(out / "dim_sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("width,z_o_dim,seeds,mean_final_step_score,std_final_step_score\n", 0), 0u);
  fs::remove_all(out);
}

TEST(Snapshot, RoundTripAndGarbage) {
  auto dir = scratch("snap");
  fs::create_directories(dir);
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, -6.5e-300;
  std::vector<NamedArray> arrays{{"a", m}, {"b.c", Matrix::Constant(1, 1, 7.0)}};
  write_snapshot(dir / "x.snap", arrays);
  EXPECT_TRUE(same_arrays(read_snapshot(dir / "x.snap"), arrays));
  std::ofstream(dir / "bad.snap") << "NOTASNAP";
  EXPECT_THROW(read_snapshot(dir / "bad.snap"), ConfigError);
  fs::remove_all(dir);
}

TEST(Plots, DeterministicSvgPerMetric) {
  auto dir = scratch("plots");
  write_csv(dir / "a" / "s0.csv", "A", {row(100, -10), row(200, -5)});
  write_csv(dir / "a" / "s1.csv", "A", {row(100, -12), row(200, -3)});
  write_csv(dir / "b" / "s0.csv", "B", {row(100, -20), row(200, -20)});
  std::vector<fs::path> in{dir / "a" / "s0.csv", dir / "a" / "s1.csv", dir / "b" / "s0.csv"};
  auto first = emit_plots(in, dir / "out1");
  auto second = emit_plots(in, dir / "out2");
  ASSERT_FALSE(first.empty());
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(slurp(first[i]), slurp(second[i]));
  const std::string svg = slurp(dir / "out1" / "step_score.svg");
  EXPECT_NE(svg.find(">A<"), std::string::npos);
  EXPECT_NE(svg.find(">B<"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 5, true);
  fs::remove_all(dir);
}

TEST(Plots, ConstantMetricIsFlatLine) {
  auto dir = scratch("flat");
  write_csv(dir / "c.csv", "C", {row(100, -7), row(200, -7), row(300, -7)});
  emit_plots({dir / "c.csv"}, dir / "out");
  const std::string svg = slurp(dir / "out" / "step_score.svg");
  const auto at = svg.find("<polyline points=\"");
  ASSERT_NE(at, std::string::npos);
  std::istringstream pts(svg.substr(at + 18, svg.find('"', at + 18) - at - 18));
  std::set<std::string> ys;
  std::string pt;
  while (pts >> pt) ys.insert(pt.substr(pt.find(',') + 1));
  EXPECT_EQ(ys.size(), 1u);
  fs::remove_all(dir);
}

TEST(Plots, MismatchedGridNamesOffendingFile) {
  auto dir = scratch("grid");
  write_csv(dir / "a.csv", "A", {row(100, 1), row(200, 2)});
  write_csv(dir / "b.csv", "B", {row(100, 1), row(300, 2)});
  try {
    emit_plots({dir / "a.csv", dir / "b.csv"}, dir / "out");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("b.csv"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Plots, ReadsEmptyCellsAsNan) {
  auto dir = scratch("read");
  write_csv(dir / "r.csv", "R", {row(100, 1)});
  auto t = read_metrics_csv(dir / "r.csv");
  EXPECT_EQ(t.label, "R");
  EXPECT_TRUE(std::isnan(t.column("actual_score")[0]));
  EXPECT_EQ(t.column("step_score")[0], 1.0);
  fs::remove_all(dir);
}

// Command-line front end: run, ablate, sweep-arch, sweep-dim, plot, collect-corpus.

#include "ofe/archsearch/archsearch.hpp"
#include "ofe/errors.hpp"
#include "ofe/runner/experiment.hpp"
#include "ofe/runner/plots.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

ofe::ExperimentConfig make_config(const std::string& path, const std::vector<std::string>& sets) {
  ofe::ExperimentConfig c = path.empty() ? ofe::ExperimentConfig{} : ofe::load_config(path);
  ofe::apply_overrides(c, sets);
  c.validate();
  return c;
}

void print_runs(const std::vector<ofe::RunResult>& runs) {
  for (const auto& r : runs) {
    std::cout << r.run_dir.string() << ": " << r.env_steps << " steps";
    if (!r.rows.empty()) std::cout << ", final step score " << r.rows.back().step_score;
    if (r.reached_target_at) std::cout << ", target reached at " << *r.reached_target_at;
    std::cout << "\n";
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ofe::ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OFENet reinforcement-learning lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  unsigned jobs = 1;

  auto* run = app.add_subcommand("run", "train every seed of a configuration");
  run->add_option("-c,--config", config_path, "flat key = value config file");
  run->add_option("--set", sets, "override, key=value (repeatable)");
  run->add_option("-j,--jobs", jobs, "seeds run concurrently");

  std::string ablation;
  auto* ablate = app.add_subcommand("ablate", "run with one ablation switched on");
  ablate->add_option("-c,--config", config_path, "config file");
  ablate->add_option("--set", sets, "override, key=value");
  ablate->add_option("-j,--jobs", jobs, "seeds run concurrently");
  ablate->add_option("ablation", ablation, "no_bn | no_aux | same_params | freeze_ofe")->required();

  std::vector<int> widths;
  auto* sweep_dim = app.add_subcommand("sweep-dim", "8-layer densenet per-layer width sweep");
  sweep_dim->add_option("-c,--config", config_path, "config file");
  sweep_dim->add_option("--set", sets, "override, key=value");
  sweep_dim->add_option("-j,--jobs", jobs, "seeds run concurrently");
  sweep_dim->add_option("--widths", widths, "per-layer widths (default: dim_sweep key)")->delimiter(',');

  std::string corpus_dir, env_name = "pendulum", grid = "default", out_dir = "arch_search";
  std::size_t n_train = 10000, n_test = 2000, train_steps = 10000;
  std::uint64_t corpus_seed = 0;
  int n_seeds = 5, increment = 48;
  unsigned threads = 1;
  auto* sweep_arch = app.add_subcommand("sweep-arch", "score candidate architectures");
  sweep_arch->add_option("--corpus", corpus_dir, "corpus directory (collected when omitted)");
  sweep_arch->add_option("--env", env_name, "environment when collecting");
  sweep_arch->add_option("--train", n_train, "train transitions when collecting");
  sweep_arch->add_option("--test", n_test, "test transitions when collecting");
  sweep_arch->add_option("--corpus-seed", corpus_seed, "seed when collecting");
  sweep_arch->add_option("--grid", grid, "default | comparison")->check(CLI::IsMember({"default", "comparison"}));
  sweep_arch->add_option("--increment", increment, "total increment per block");
  sweep_arch->add_option("--train-steps", train_steps, "training steps per candidate and seed");
  sweep_arch->add_option("--seeds", n_seeds, "seeds 0..n-1 per candidate");
  sweep_arch->add_option("--threads", threads, "worker threads");
  sweep_arch->add_option("-o,--out", out_dir, "output directory");

  std::vector<std::string> csvs;
  std::string plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "learning curves from metrics CSVs");
  plot->add_option("csv", csvs, "metrics.csv files")->required();
  plot->add_option("-o,--out", plot_out, "output directory");

  std::string corpus_out = "corpus";
  auto* collect = app.add_subcommand("collect-corpus", "random-policy transitions for sweep-arch");
  collect->add_option("--env", env_name, "environment");
  collect->add_option("--train", n_train, "train transitions");
  collect->add_option("--test", n_test, "test transitions");
  collect->add_option("--seed", corpus_seed, "collection seed");
  collect->add_option("-o,--out", corpus_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      print_runs(ofe::run_all_seeds(make_config(config_path, sets), jobs));
    } else if (*ablate) {
      sets.push_back(ablation + "=true");
      print_runs(ofe::run_all_seeds(make_config(config_path, sets), jobs));
    } else if (*sweep_dim) {
      auto c = make_config(config_path, sets);
      if (widths.empty()) widths = c.ablations.dim_sweep;
      for (const auto& row : ofe::dim_sweep(c, widths, jobs)) {
        std::cout << "width " << row.width << " (dim z_o " << row.z_o_dim << "):";
        for (double s : row.final_step_scores) std::cout << ' ' << s;
        std::cout << "\n";
      }
    } else if (*sweep_arch) {
      const ofe::Corpus corpus = corpus_dir.empty()
                                     ? ofe::collect_corpus(env_name, n_train, n_test, corpus_seed)
                                     : ofe::load_corpus(corpus_dir);
      const auto mask = corpus.external_force_mask.empty()
                            ? std::vector<Eigen::Index>{}
                            : ofe::complement_mask(corpus.obs_dim(), corpus.external_force_mask);
      const auto candidates =
          grid == "default" ? ofe::default_grid(corpus.obs_dim(), corpus.action_dim(), increment, mask)
                            : ofe::comparison_grid(corpus.obs_dim(), corpus.action_dim(), increment, mask);
      ofe::ScoreOptions opts;
      opts.seeds.clear();
      for (int s = 0; s < n_seeds; ++s) opts.seeds.push_back(static_cast<std::uint64_t>(s));
      opts.train_steps = train_steps;
      opts.threads = threads;
      const auto report = ofe::select_architecture(candidates, corpus, opts);
      std::filesystem::create_directories(out_dir);
      write_file(std::filesystem::path(out_dir) / "scores.csv", report.per_seed_csv());
      write_file(std::filesystem::path(out_dir) / "summary.csv", report.summary_csv());
      write_file(std::filesystem::path(out_dir) / "selected.txt", ofe::to_config_text(report.selected_spec()));
      std::cout << "selected " << report.selected_spec().label() << " (mean test loss "
                << report.candidates[report.selected].mean << ")\n";
    } else if (*plot) {
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      for (const auto& p : ofe::emit_plots(paths, plot_out)) std::cout << p.string() << "\n";
    } else if (*collect) {
      const auto corpus = ofe::collect_corpus(env_name, n_train, n_test, corpus_seed);
      ofe::save_corpus(corpus, corpus_out);
      std::cout << "wrote " << corpus.train.size() << " train / " << corpus.test.size()
                << " test transitions to " << corpus_out << "\n";
    }
  } catch (const ofe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ofe::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const ofe::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

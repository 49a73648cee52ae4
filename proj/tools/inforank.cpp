#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inforank/commands.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_override;
  std::vector<std::uint64_t> seed_override;
  std::vector<std::string> trainer_override;
  double eta_override = -1.0;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  cmd->add_option("--out", opts.out_override, "output root (overrides [run] output_dir)");
  cmd->add_option("--seed", opts.seed_override, "seed override (may repeat)");
  cmd->add_option("--trainer", opts.trainer_override, "trainer filter (may repeat)");
  cmd->add_option("--eta", opts.eta_override, "regularizer weight override");
  cmd->add_flag("--force", opts.force, "overwrite non-empty output directories");
}

struct Resolved {
  inforank::experiment::ExperimentConfig cfg;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> trainers;
  std::filesystem::path out;
};

Resolved resolve(const CommonOpts& opts) {
  Resolved r;
  r.cfg = inforank::experiment::load_config(opts.config_path);
  if (opts.eta_override >= 0.0) r.cfg.tcfg.eta = opts.eta_override;
  r.seeds = opts.seed_override.empty() ? r.cfg.seeds : opts.seed_override;
  r.trainers = opts.trainer_override.empty() ? r.cfg.trainers : opts.trainer_override;
  for (const auto& t : r.trainers)
    if (t != "inforank" && t != "click" && t != "labeled" && t != "ipw")
      throw inforank::ConfigError("unknown trainer '" + t + "'");
  r.out = opts.out_override.empty() ? r.cfg.output_dir : opts.out_override;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biased-click simulation, unbiased ranker training, and identity checks"};
  app.require_subcommand(1);

  CommonOpts generate_opts, simulate_opts, train_opts, evaluate_opts, sweep_opts, oracle_opts;
  std::string sweep_kind = "all";

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(generate, generate_opts);
  auto* simulate = app.add_subcommand("simulate", "rank with the warm-start model and sample clicks");
  add_common(simulate, simulate_opts);
  auto* train = app.add_subcommand("train", "fit the configured trainers");
  add_common(train, train_opts);
  auto* evaluate = app.add_subcommand("evaluate", "score checkpoints against true labels");
  add_common(evaluate, evaluate_opts);
  auto* sweep = app.add_subcommand("sweep", "eta / bias-degree / data-fraction grids");
  add_common(sweep, sweep_opts);
  sweep->add_option("--kind", sweep_kind, "eta | bias | fraction | all");
  auto* oracle = app.add_subcommand("oracle-check", "machine-check the probability identities");
  add_common(oracle, oracle_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      const auto r = resolve(generate_opts);
      for (auto seed : r.seeds)
        inforank::commands::cmd_generate(r.cfg, seed, r.out, generate_opts.force);
    } else if (simulate->parsed()) {
      const auto r = resolve(simulate_opts);
      inforank::commands::cmd_simulate(r.cfg, r.seeds, r.out, simulate_opts.force);
    } else if (train->parsed()) {
      const auto r = resolve(train_opts);
      inforank::commands::cmd_train(r.cfg, r.seeds, r.out, train_opts.force, r.trainers);
    } else if (evaluate->parsed()) {
      const auto r = resolve(evaluate_opts);
      inforank::commands::cmd_evaluate(r.cfg, r.seeds, r.out, evaluate_opts.force, r.trainers);
    } else if (sweep->parsed()) {
      const auto r = resolve(sweep_opts);
      inforank::commands::cmd_sweep(r.cfg, r.out, sweep_opts.force, sweep_kind);
    } else if (oracle->parsed()) {
      const auto r = resolve(oracle_opts);
      inforank::commands::cmd_oracle_check(r.cfg, r.seeds.front(), r.out, oracle_opts.force);
    }
  } catch (const inforank::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const inforank::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const inforank::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

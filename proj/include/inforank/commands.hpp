#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "inforank/experiment.hpp"
#include "inforank/oracle.hpp"

namespace inforank::commands {

namespace fs = std::filesystem;
using experiment::ExperimentConfig;

// Creates the directory, refusing to clobber existing artifacts unless
// forced.
inline void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw ConfigError("output directory not empty (use --force): " + dir.string());
  fs::create_directories(dir);
}

// Every artifact directory gets a manifest tying it to the exact config text
// and seeds. No timestamps: re-running a manifest must reproduce artifacts
// byte for byte.
inline void write_manifest(const fs::path& dir, const std::string& command,
                           const ExperimentConfig& cfg,
                           const std::vector<std::uint64_t>& seeds) {
  nlohmann::json j;
  j["tool"] = "inforank";
  j["version"] = 1;
  j["command"] = command;
  j["config_hash"] = cfg.hash;
  j["config"] = cfg.raw;
  j["seeds"] = seeds;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ConfigError("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

inline void write_csv(const fs::path& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

inline void write_curve_csv(const fs::path& path, const eval::Curve& curve) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < curve.x.size(); ++i)
    rows.push_back({fmt_double(curve.x[i]), fmt_double(curve.y[i]),
                    fmt_double(i < curve.err.size() ? curve.err[i] : 0.0)});
  write_csv(path, "x,y,stderr", rows);
}

inline std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

// --- generate ---------------------------------------------------------------------

inline fs::path cmd_generate(const ExperimentConfig& cfg, std::uint64_t seed,
                             const fs::path& out_dir, bool force) {
  const fs::path dir = out_dir / "dataset";
  prepare_dir(dir, force);
  const Dataset ds = experiment::make_dataset(cfg, seed);
  save_sparse_text(ds, (dir / ("dataset_" + seed_tag(seed) + ".txt")).string());
  save_dataset_cache(ds, (dir / ("dataset_" + seed_tag(seed) + ".bin")).string());
  write_manifest(dir, "generate", cfg, {seed});
  return dir;
}

// --- simulate ----------------------------------------------------------------------

inline fs::path cmd_simulate(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                             const fs::path& out_dir, bool force) {
  const fs::path dir = out_dir / "logs";
  prepare_dir(dir, force);
  for (auto seed : seeds) {
    const Dataset ds = experiment::make_dataset(cfg, seed);
    const auto sim = experiment::simulate(ds, cfg, seed);
    click_sim::save_click_log(sim.records,
                              (dir / ("clicks_" + seed_tag(seed) + ".jsonl")).string());
  }
  write_manifest(dir, "simulate", cfg, seeds);
  return dir;
}

// --- train -------------------------------------------------------------------------

inline void write_history_csv(const fs::path& path,
                              const std::vector<training::HistoryRow>& history) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& h : history)
    rows.push_back({std::to_string(h.epoch), fmt_double(h.click), fmt_double(h.cmi),
                    fmt_double(h.l2), fmt_double(h.total), fmt_double(h.val_ndcg10),
                    fmt_double(h.val_delta_ci)});
  write_csv(path, "epoch,L,I,L2,total,val_ndcg10,val_delta_ci", rows);
}

inline fs::path cmd_train(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                          const fs::path& out_dir, bool force,
                          const std::vector<std::string>& trainers) {
  const fs::path dir = out_dir / "train";
  prepare_dir(dir, force);
  for (auto seed : seeds) {
    const Dataset ds = experiment::make_dataset(cfg, seed);
    const auto sim = experiment::simulate(ds, cfg, seed);
    const auto split = experiment::split_queries(ds.groups.size(), seed);
    for (const auto& trainer : trainers) {
      const auto run = experiment::run_trainer(trainer, ds, sim, split, cfg, seed);
      if (run.result.diverged)
        throw NumericError("training diverged: " + trainer + " " + seed_tag(seed));
      const std::string stem = trainer + "_" + seed_tag(seed);
      model::save_checkpoint(run.result.params, trainer,
                             (dir / ("checkpoint_" + stem + ".json")).string());
      write_history_csv(dir / ("history_" + stem + ".csv"), run.result.history);
    }
  }
  write_manifest(dir, "train", cfg, seeds);
  return dir;
}

// --- evaluate ----------------------------------------------------------------------

inline nlohmann::json report_to_json(const eval::MetricsReport& rep) {
  nlohmann::json j;
  j["map10"] = rep.map10;
  for (const auto& [k, v] : rep.ndcg) j["ndcg"][std::to_string(k)] = v;
  j["delta_ci"] = rep.delta_ci;
  j["seed"] = rep.seed;
  j["config_hash"] = rep.config_hash;
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& [qid, v] : rep.per_query_ndcg10)
    per_query.push_back({{"query_id", qid}, {"ndcg10", v}});
  j["per_query_ndcg10"] = per_query;
  return j;
}

inline fs::path cmd_evaluate(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                             const fs::path& out_dir, bool force,
                             const std::vector<std::string>& trainers) {
  const fs::path train_dir = out_dir / "train";
  const fs::path dir = out_dir / "eval";
  prepare_dir(dir, force);

  std::vector<std::vector<std::string>> summary_rows;
  for (const auto& trainer : trainers) {
    Vec ndcg10s, dcis;
    for (auto seed : seeds) {
      const Dataset ds = experiment::make_dataset(cfg, seed);
      const auto sim = experiment::simulate(ds, cfg, seed);
      const auto split = experiment::split_queries(ds.groups.size(), seed);

      const std::string stem = trainer + "_" + seed_tag(seed);
      const fs::path ckpt = train_dir / ("checkpoint_" + stem + ".json");
      if (!fs::exists(ckpt)) throw ConfigError("missing checkpoint: " + ckpt.string());
      std::string kind;
      experiment::TrainerRun run;
      run.trainer = trainer;
      run.seed = seed;
      run.result.params = model::load_checkpoint(ckpt.string(), &kind);
      run.full_model = kind == "inforank";
      if (run.result.params.schema.size() != sim.combined.size())
        throw ConfigError("checkpoint schema does not match the dataset: " + ckpt.string());

      const auto rep = experiment::evaluate_run(run, ds, sim, split, cfg);
      std::ofstream rf(dir / ("metrics_" + stem + ".json"));
      rf << report_to_json(rep).dump(2) << '\n';
      ndcg10s.push_back(rep.ndcg.at(10));
      dcis.push_back(rep.delta_ci);

      if (seed == seeds.front()) {
        const auto triple = experiment::rankings_for(run, sim, split);
        write_curve_csv(dir / ("position_shift_" + trainer + ".csv"),
                        eval::position_shift_curve(triple.initial, triple.model));
        write_curve_csv(dir / ("position_shift_reference_" + seed_tag(seed) + ".csv"),
                        eval::position_shift_curve(triple.initial, triple.relevance));
        try {
          const auto freq = eval::frequency_curve(triple.model_items);
          write_curve_csv(dir / ("frequency_position_" + trainer + ".csv"), freq.mean_position);
          write_curve_csv(dir / ("frequency_recommend_" + trainer + ".csv"), freq.recommendation);
        } catch (const ConfigError&) {
          // Loaded datasets may have no recurring items; the curve is skipped.
        }
      }
    }
    const auto mean = [](const Vec& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    const auto stderr_of = [&](const Vec& v) {
      if (v.size() < 2) return 0.0;
      const double m = mean(v);
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::sqrt(ss / static_cast<double>(v.size() - 1) /
                       static_cast<double>(v.size()));
    };
    summary_rows.push_back({trainer, fmt_double(mean(ndcg10s)), fmt_double(stderr_of(ndcg10s)),
                            fmt_double(mean(dcis)), fmt_double(stderr_of(dcis))});
  }
  write_csv(dir / "metrics_summary.csv", "trainer,ndcg10_mean,ndcg10_stderr,delta_ci_mean,delta_ci_stderr",
            summary_rows);
  write_manifest(dir, "evaluate", cfg, seeds);
  return dir;
}

// --- sweep -------------------------------------------------------------------------

inline void write_cells_csv(const fs::path& path, const std::string& x_name,
                            const std::vector<experiment::SweepCell>& cells) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : cells)
    rows.push_back({fmt_double(c.x), c.trainer, std::to_string(c.seed), fmt_double(c.ndcg10),
                    fmt_double(c.delta_ci)});
  write_csv(path, x_name + ",trainer,seed,ndcg10,delta_ci", rows);
}

inline fs::path cmd_sweep(const ExperimentConfig& cfg, const fs::path& out_dir, bool force,
                          const std::string& kind) {
  const fs::path dir = out_dir / "sweep";
  prepare_dir(dir, force);
  std::vector<std::uint64_t> seeds(cfg.seeds.begin(),
                                   cfg.seeds.begin() +
                                       std::min<std::size_t>(cfg.seeds.size(),
                                                             static_cast<std::size_t>(
                                                                 cfg.sweep_seed_count)));
  const Dataset ds = experiment::make_dataset(cfg, cfg.seeds.front());
  if (kind == "eta" || kind == "all")
    write_cells_csv(dir / "sweep_eta.csv", "eta",
                    experiment::eta_sweep(ds, cfg, cfg.sweep_etas, seeds));
  if (kind == "bias" || kind == "all")
    write_cells_csv(dir / "sweep_bias.csv", "degree",
                    experiment::bias_sweep(ds, cfg, cfg.sweep_degrees, cfg.trainers, seeds));
  if (kind == "fraction" || kind == "all")
    write_cells_csv(dir / "sweep_fraction.csv", "fraction",
                    experiment::fraction_sweep(ds, cfg, cfg.sweep_fractions, cfg.trainers, seeds));
  if (kind != "eta" && kind != "bias" && kind != "fraction" && kind != "all")
    throw ConfigError("unknown sweep kind '" + kind + "'");
  write_manifest(dir, "sweep", cfg, seeds);
  return dir;
}

// --- oracle-check -------------------------------------------------------------------

// Machine-checks the identities the estimator relies on and emits a JSON
// verdict per identity.
inline nlohmann::json oracle_check_report(std::uint64_t seed) {
  nlohmann::json j;
  Rng rng(mix_seed(seed, 0x0bac1e));

  {
    std::size_t agree = 0, total = 0;
    for (int w = 0; w < 1000; ++w) {
      const auto world = oracle::random_mixed_world(rng, 8);
      for (const auto& row : oracle::check_prop1(world, 1e-9)) {
        ++total;
        agree += row.agree ? 1 : 0;
      }
    }
    j["independence_equivalence"] = {{"worlds", 1000},
                                     {"points", total},
                                     {"agree", agree},
                                     {"pass", agree == total}};
  }
  {
    double worst_indep = 0.0, best_dep = 1e300;
    for (int w = 0; w < 200; ++w) {
      worst_indep = std::max(worst_indep, oracle::verify_click_factorization(
                                              oracle::random_world(rng, 6, true)));
      best_dep = std::min(best_dep, oracle::verify_click_factorization(
                                        oracle::random_world(rng, 6, false)));
    }
    j["click_factorization"] = {{"max_residual_independent", worst_indep},
                                {"min_residual_dependent", best_dep},
                                {"pass", worst_indep <= 1e-12 && best_dep > 1e-12}};
  }
  {
    double worst = 0.0;
    for (int w = 0; w < 100; ++w) {
      const auto world = oracle::random_indep_world(rng, 6);
      Vec scores(world.size());
      for (auto& s : scores) s = rng.uniform(0.0, 1.0);
      const auto cmp = oracle::verify_prop2(
          world, [&](std::size_t i) { return scores[i]; },
          [](double s, int label) { return label == 1 ? (1.0 - s) * (1.0 - s) : 0.0; });
      worst = std::max(worst, cmp.residual);
    }
    j["ipw_unbiasedness"] = {{"max_residual", worst}, {"pass", worst <= 1e-12}};
  }
  {
    double worst = 0.0;
    for (int w = 0; w < 100; ++w) {
      const auto world = oracle::random_history_world(rng, 6);
      worst = std::max(worst, oracle::verify_popularity_identity(world).max_residual);
    }
    j["popularity_identity"] = {{"max_residual", worst}, {"pass", worst <= 1e-12}};
  }
  bool all = true;
  for (const auto& [k, v] : j.items())
    if (v.contains("pass") && !v["pass"].get<bool>()) all = false;
  j["pass"] = all;
  return j;
}

inline fs::path cmd_oracle_check(const ExperimentConfig& cfg, std::uint64_t seed,
                                 const fs::path& out_dir, bool force) {
  const fs::path dir = out_dir / "oracle";
  prepare_dir(dir, force);
  const auto report = oracle_check_report(seed);
  std::ofstream out(dir / "oracle_report.json");
  out << report.dump(2) << '\n';
  write_manifest(dir, "oracle-check", cfg, {seed});
  if (!report["pass"].get<bool>()) throw NumericError("oracle identity check failed");
  return dir;
}

}  // namespace inforank::commands

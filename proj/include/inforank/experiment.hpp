#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inforank/checkpoint.hpp"
#include "inforank/click_sim.hpp"
#include "inforank/common.hpp"
#include "inforank/core_data.hpp"
#include "inforank/eval.hpp"
#include "inforank/training.hpp"

namespace inforank::experiment {

namespace fs = std::filesystem;

// --- config file ----------------------------------------------------------------
//
// Plain sectioned key=value text; '#' and ';' start comments. The raw text is
// hashed into every manifest so artifacts can be audited.

struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string raw;

  static IniFile parse(const std::string& text) {
    IniFile ini;
    ini.raw = text;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto cut = line.find_first_of("#;");
      if (cut != std::string::npos) line.resize(cut);
      const auto strip = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      line = strip(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
        section = strip(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
      ini.sections[section][strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    }
    return ini;
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

  std::string get_str(const std::string& s, const std::string& k, const std::string& dflt) const {
    return get(s, k).value_or(dflt);
  }
  double get_num(const std::string& s, const std::string& k, double dflt) const {
    const auto v = get(s, k);
    if (!v) return dflt;
    try {
      return std::stod(*v);
    } catch (...) {
      throw ConfigError("config [" + s + "] " + k + ": not a number: '" + *v + "'");
    }
  }
  int get_int(const std::string& s, const std::string& k, int dflt) const {
    return static_cast<int>(get_num(s, k, dflt));
  }
  bool get_bool(const std::string& s, const std::string& k, bool dflt) const {
    const auto v = get(s, k);
    if (!v) return dflt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config [" + s + "] " + k + ": not a boolean: '" + *v + "'");
  }
  template <typename T>
  std::vector<T> get_list(const std::string& s, const std::string& k,
                          const std::vector<T>& dflt) const {
    const auto v = get(s, k);
    if (!v) return dflt;
    std::vector<T> out;
    std::istringstream in(*v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      if (tok.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        if constexpr (std::is_same_v<T, std::string>) {
          const auto b = tok.find_first_not_of(" \t");
          const auto e = tok.find_last_not_of(" \t");
          out.push_back(tok.substr(b, e - b + 1));
        } else {
          out.push_back(static_cast<T>(std::stod(tok)));
        }
      } catch (...) {
        throw ConfigError("config [" + s + "] " + k + ": bad list element '" + tok + "'");
      }
    }
    return out;
  }
};

struct ExperimentConfig {
  std::string raw;
  std::string hash;

  // dataset
  std::string dataset_kind = "synthetic";  // or "file"
  SynthConfig synth;
  std::string dataset_path;
  int y_max_file = 4;
  int filter_max_len = 50;

  // click simulation
  std::string click_family = "pbm";  // pbm | ubm | ccm
  double tau = 1.0;
  double gamma1 = 0.5, gamma2 = 0.10, gamma3 = 0.04;
  double epsilon = 0.1;
  double label_fraction = 0.01;
  int sessions = 1;

  // training
  std::vector<std::string> trainers = {"inforank", "click", "labeled"};
  training::TrainConfig tcfg;

  // eval
  std::vector<int> cutoffs = {3, 5, 10};

  // sweeps
  std::vector<double> sweep_etas = {0.0, 0.2, 0.5, 1.0};
  std::vector<double> sweep_degrees = {0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> sweep_fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  int sweep_seed_count = 3;

  // run
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "out";
};

inline ExperimentConfig parse_config(const std::string& text) {
  const IniFile ini = IniFile::parse(text);
  ExperimentConfig cfg;
  cfg.raw = text;
  cfg.hash = hex64(fnv1a(text));

  cfg.dataset_kind = ini.get_str("dataset", "kind", cfg.dataset_kind);
  cfg.synth.n_queries = ini.get_int("dataset", "n_queries", cfg.synth.n_queries);
  cfg.synth.docs_per_query = ini.get_int("dataset", "docs_per_query", cfg.synth.docs_per_query);
  cfg.synth.n_items = ini.get_int("dataset", "n_items", cfg.synth.n_items);
  cfg.synth.n_categorical = ini.get_int("dataset", "n_categorical", cfg.synth.n_categorical);
  cfg.synth.vocab_sizes = ini.get_list<int>("dataset", "vocab_sizes", cfg.synth.vocab_sizes);
  cfg.synth.n_real = ini.get_int("dataset", "n_real", cfg.synth.n_real);
  cfg.synth.user_dim = ini.get_int("dataset", "user_dim", cfg.synth.user_dim);
  cfg.synth.y_max = ini.get_int("dataset", "y_max", cfg.synth.y_max);
  cfg.synth.noise = ini.get_num("dataset", "noise", cfg.synth.noise);
  cfg.dataset_path = ini.get_str("dataset", "path", "");
  cfg.y_max_file = ini.get_int("dataset", "y_max", 4);
  cfg.filter_max_len = ini.get_int("dataset", "max_sequence_len", cfg.filter_max_len);

  cfg.click_family = ini.get_str("click", "family", cfg.click_family);
  cfg.tau = ini.get_num("click", "tau", cfg.tau);
  cfg.gamma1 = ini.get_num("click", "gamma1", cfg.gamma1);
  cfg.gamma2 = ini.get_num("click", "gamma2", cfg.gamma2);
  cfg.gamma3 = ini.get_num("click", "gamma3", cfg.gamma3);
  cfg.epsilon = ini.get_num("click", "epsilon", cfg.epsilon);
  cfg.label_fraction = ini.get_num("click", "label_fraction", cfg.label_fraction);
  cfg.sessions = ini.get_int("click", "sessions", cfg.sessions);

  cfg.trainers = ini.get_list<std::string>("train", "trainers", cfg.trainers);
  cfg.tcfg.learning_rate = ini.get_num("train", "learning_rate", cfg.tcfg.learning_rate);
  cfg.tcfg.batch_size = ini.get_int("train", "batch_size", cfg.tcfg.batch_size);
  cfg.tcfg.eta = ini.get_num("train", "eta", cfg.tcfg.eta);
  cfg.tcfg.l2_weight = ini.get_num("train", "l2_weight", cfg.tcfg.l2_weight);
  cfg.tcfg.max_epochs = ini.get_int("train", "max_epochs", cfg.tcfg.max_epochs);
  cfg.tcfg.patience = ini.get_int("train", "patience", cfg.tcfg.patience);
  cfg.tcfg.observation_supervision =
      ini.get_bool("train", "observation_supervision", cfg.tcfg.observation_supervision);
  cfg.tcfg.dims.d = ini.get_int("train", "d", cfg.tcfg.dims.d);
  cfg.tcfg.dims.heads = ini.get_int("train", "heads", cfg.tcfg.dims.heads);
  cfg.tcfg.dims.iota = ini.get_num("train", "iota", cfg.tcfg.dims.iota);

  cfg.cutoffs = ini.get_list<int>("eval", "ndcg_cutoffs", cfg.cutoffs);

  cfg.sweep_etas = ini.get_list<double>("sweep", "etas", cfg.sweep_etas);
  cfg.sweep_degrees = ini.get_list<double>("sweep", "degrees", cfg.sweep_degrees);
  cfg.sweep_fractions = ini.get_list<double>("sweep", "fractions", cfg.sweep_fractions);
  cfg.sweep_seed_count = ini.get_int("sweep", "seed_count", cfg.sweep_seed_count);

  {
    const auto s = ini.get_list<double>("run", "seeds", {});
    if (!s.empty()) {
      cfg.seeds.clear();
      for (double v : s) cfg.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  cfg.output_dir = ini.get_str("run", "output_dir", cfg.output_dir);

  if (cfg.trainers.empty()) throw ConfigError("config: at least one trainer is required");
  if (cfg.seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  if (cfg.dataset_kind == "file") {
    if (cfg.dataset_path.empty()) throw ConfigError("config: dataset path required for kind=file");
    if (!fs::exists(cfg.dataset_path))
      throw ConfigError("config: dataset file does not exist: " + cfg.dataset_path);
  } else if (cfg.dataset_kind != "synthetic") {
    throw ConfigError("config: unknown dataset kind '" + cfg.dataset_kind + "'");
  }
  if (cfg.click_family != "pbm" && cfg.click_family != "ubm" && cfg.click_family != "ccm")
    throw ConfigError("config: unknown click family '" + cfg.click_family + "'");
  for (const auto& t : cfg.trainers)
    if (t != "inforank" && t != "click" && t != "labeled" && t != "ipw")
      throw ConfigError("config: unknown trainer '" + t + "'");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// --- dataset and split -------------------------------------------------------------

inline Dataset make_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  Dataset ds;
  if (cfg.dataset_kind == "file") {
    // Generic sparse loader: schema defaults to all-real slots sized by the
    // widest line. Two passes keeps it simple.
    std::ifstream in(cfg.dataset_path);
    if (!in) throw ConfigError("cannot open dataset file: " + cfg.dataset_path);
    std::size_t max_idx = 0;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos || tok.rfind("qid:", 0) == 0) continue;
        try {
          max_idx = std::max(max_idx, static_cast<std::size_t>(std::stoll(tok.substr(0, colon))));
        } catch (...) {
        }
      }
    }
    FeatureSchema schema(max_idx, FeatureSlot{SlotKind::real, 0});
    ds = load_sparse_text(cfg.dataset_path, schema, cfg.y_max_file);
  } else {
    ds = generate_synthetic(cfg.synth, seed);
  }
  return filter_dataset(ds, cfg.filter_max_len);
}

struct Split {
  std::vector<std::size_t> train, val, test;
};

// 70/15/15 by query, derived from the seed.
inline Split split_queries(std::size_t n_groups, std::uint64_t seed) {
  std::vector<std::size_t> order(n_groups);
  for (std::size_t i = 0; i < n_groups; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x59717));
  rng.shuffle(order);
  Split s;
  const auto n_train = static_cast<std::size_t>(0.7 * static_cast<double>(n_groups));
  const auto n_val = static_cast<std::size_t>(0.15 * static_cast<double>(n_groups));
  for (std::size_t i = 0; i < n_groups; ++i) {
    if (i < n_train)
      s.train.push_back(order[i]);
    else if (i < n_train + n_val)
      s.val.push_back(order[i]);
    else
      s.test.push_back(order[i]);
  }
  return s;
}

// --- simulation --------------------------------------------------------------------

struct SimOutput {
  // Presented (initial-ranker) order per group index, aligned with dataset.groups.
  std::vector<QueryGroup> presented;
  std::vector<click_sim::ImpressionRecord> records;  // all sessions, all queries
  int max_rank = 0;
  FeatureSchema combined;
  click_sim::InitialRanker ranker;
};

inline Vec rel_probs_for(const QueryGroup& g, int y_max, double epsilon) {
  Vec probs;
  probs.reserve(g.documents.size());
  for (const auto& d : g.documents)
    probs.push_back(binarize_relevance(d.graded_relevance, y_max, epsilon));
  return probs;
}

// Ranks every group with the warm-start ranker and samples clicks with the
// configured browsing model. Per-query rng streams keyed by (query_id,
// session) make the output independent of scheduling.
inline SimOutput simulate(const Dataset& ds, const ExperimentConfig& cfg, std::uint64_t seed) {
  SimOutput out;
  int max_len = 0;
  for (const auto& g : ds.groups) max_len = std::max(max_len, static_cast<int>(g.documents.size()));
  out.max_rank = max_len;
  out.combined = click_sim::combined_schema(ds.doc_schema, ds.user_dim, out.max_rank);
  out.ranker = click_sim::train_initial_ranker(ds, cfg.label_fraction, seed);

  const auto pbm = click_sim::default_pbm(out.max_rank, cfg.tau);
  const auto ubm = click_sim::default_ubm(out.max_rank);
  const click_sim::CCMParams ccm{cfg.gamma1, cfg.gamma2, cfg.gamma3};

  out.presented.reserve(ds.groups.size());
  for (const auto& g : ds.groups) {
    QueryGroup ranked = g;
    ranked.documents = click_sim::rank_initial(out.ranker, g);
    const Vec probs = rel_probs_for(ranked, ds.y_max, cfg.epsilon);
    for (int session = 0; session < cfg.sessions; ++session) {
      Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(g.query_id)),
                       0xce55 + static_cast<std::uint64_t>(session)));
      std::vector<click_sim::ImpressionRecord> recs;
      if (cfg.click_family == "pbm")
        recs = click_sim::simulate_pbm(ranked, probs, pbm, rng, out.max_rank);
      else if (cfg.click_family == "ubm")
        recs = click_sim::simulate_ubm(ranked, probs, ubm, rng, out.max_rank);
      else
        recs = click_sim::simulate_ccm(ranked, probs, ccm, rng, out.max_rank);
      out.records.insert(out.records.end(), recs.begin(), recs.end());
    }
    out.presented.push_back(std::move(ranked));
  }
  return out;
}

// --- trainer dispatch -----------------------------------------------------------------

inline std::vector<training::PresentedGroup> presented_groups(const SimOutput& sim,
                                                              const std::vector<std::size_t>& idx) {
  std::vector<training::PresentedGroup> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back({sim.presented[i], sim.max_rank});
  return out;
}

inline std::vector<click_sim::ImpressionRecord> records_for(
    const SimOutput& sim, const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<bool> keep(ds.groups.size() + 1, false);
  std::map<int, bool> by_qid;
  for (auto i : idx) by_qid[ds.groups[i].query_id] = true;
  std::vector<click_sim::ImpressionRecord> out;
  for (const auto& r : sim.records)
    if (by_qid.count(r.query_id)) out.push_back(r);
  return out;
}

struct TrainerRun {
  std::string trainer;
  std::uint64_t seed = 0;
  bool full_model = false;  // ranks by marginal relevance vs the single head
  training::TrainResult result;
};

inline TrainerRun run_trainer(const std::string& name, const Dataset& ds, const SimOutput& sim,
                              const Split& split, const ExperimentConfig& cfg,
                              std::uint64_t seed, std::optional<double> eta_override = {}) {
  training::TrainConfig tcfg = cfg.tcfg;
  tcfg.seed = seed;
  if (eta_override) tcfg.eta = *eta_override;

  const auto train_recs = records_for(sim, ds, split.train);
  const auto val_recs = records_for(sim, ds, split.val);
  const auto val_groups = presented_groups(sim, split.val);

  TrainerRun run;
  run.trainer = name;
  run.seed = seed;
  if (name == "inforank") {
    run.full_model = true;
    run.result = training::train(train_recs, val_recs, val_groups, sim.combined, tcfg);
    return run;
  }

  const auto label_clicks = [](const std::vector<click_sim::ImpressionRecord>& recs) {
    std::vector<int> labels;
    labels.reserve(recs.size());
    for (const auto& r : recs) labels.push_back(r.clicked);
    return labels;
  };

  if (name == "click") {
    run.result = training::train_single_head(train_recs, label_clicks(train_recs), {},
                                             val_recs, label_clicks(val_recs), val_groups,
                                             sim.combined, tcfg);
    return run;
  }
  if (name == "ipw") {
    // Oracle-propensity baseline: click BCE weighted by the inverse of the
    // simulator's examination marginals (floored).
    const auto weights_of = [](const std::vector<click_sim::ImpressionRecord>& recs) {
      Vec w;
      w.reserve(recs.size());
      for (const auto& r : recs)
        w.push_back(1.0 / std::max(r.obs_prob, training::kPropensityFloor));
      return w;
    };
    run.result = training::train_single_head(train_recs, label_clicks(train_recs),
                                             weights_of(train_recs), val_recs,
                                             label_clicks(val_recs), val_groups, sim.combined,
                                             tcfg);
    return run;
  }
  if (name == "labeled") {
    // Upper bound: supervise on binary relevance sampled from the graded
    // labels, one deterministic draw per impression.
    std::map<std::pair<int, int>, double> prob_of;  // (query_id, doc_id) -> P(r)
    for (const auto& g : ds.groups)
      for (const auto& d : g.documents)
        prob_of[{g.query_id, d.doc_id}] = binarize_relevance(d.graded_relevance, ds.y_max,
                                                             cfg.epsilon);
    const auto sample_labels = [&](const std::vector<click_sim::ImpressionRecord>& recs) {
      Rng rng(mix_seed(seed, 0x1abe1));
      std::vector<int> labels;
      labels.reserve(recs.size());
      for (const auto& r : recs)
        labels.push_back(rng.bernoulli(prob_of.at({r.query_id, r.doc_id})) ? 1 : 0);
      return labels;
    };
    run.result = training::train_single_head(train_recs, sample_labels(train_recs), {},
                                             val_recs, sample_labels(val_recs), val_groups,
                                             sim.combined, tcfg);
    return run;
  }
  throw ConfigError("unknown trainer '" + name + "'");
}

// --- evaluation -------------------------------------------------------------------------

inline eval::MetricsReport evaluate_run(const TrainerRun& run, const Dataset& ds,
                                        const SimOutput& sim, const Split& split,
                                        const ExperimentConfig& cfg) {
  eval::MetricsReport rep;
  rep.seed = run.seed;
  rep.config_hash = cfg.hash;
  const auto groups = presented_groups(sim, split.test);
  std::vector<std::vector<int>> ranked;
  ranked.reserve(groups.size());
  for (const auto& g : groups) {
    ranked.push_back(training::rank_labels(run.result.params, g, run.full_model));
    const auto v = eval::ndcg_at_k(ranked.back(), 10);
    rep.per_query_ndcg10.emplace_back(g.group.query_id, v.value_or(0.0));
  }
  for (int k : cfg.cutoffs) rep.ndcg[k] = eval::mean_ndcg_at_k(ranked, k);
  rep.map10 = eval::map_at_10(ranked);
  rep.delta_ci = run.full_model
                     ? training::validation_delta_ci(run.result.params,
                                                     records_for(sim, ds, split.test))
                     : 0.0;
  return rep;
}

// Re-ranked doc ids per test group under a trained model, the initial order,
// and the true-relevance order; inputs to the analysis curves.
struct RankingTriple {
  std::vector<std::vector<int>> initial, model, relevance;
  std::vector<std::vector<int>> model_items;  // item ids, for frequency curves
};

inline RankingTriple rankings_for(const TrainerRun& run, const SimOutput& sim,
                                  const Split& split) {
  RankingTriple out;
  for (auto gi : split.test) {
    const auto& g = sim.presented[gi];
    std::vector<int> initial_ids, item_ids;
    std::vector<double> model_scores, rel_scores;
    for (std::size_t i = 0; i < g.documents.size(); ++i) {
      const auto& d = g.documents[i];
      initial_ids.push_back(d.doc_id);
      const auto x = click_sim::build_feature_vector(g.user_features, d,
                                                     static_cast<int>(i) + 1, sim.max_rank);
      model_scores.push_back(run.full_model
                                 ? model::marginal_relevance(run.result.params, x)
                                 : model::predict_single(run.result.params, x));
      rel_scores.push_back(static_cast<double>(d.graded_relevance));
    }
    const auto model_order = model::order_by_score(model_scores, initial_ids);
    const auto rel_order = model::order_by_score(rel_scores, initial_ids);
    std::vector<int> model_ids, rel_ids;
    for (auto i : model_order) {
      model_ids.push_back(g.documents[i].doc_id);
      item_ids.push_back(g.documents[i].item_id);
    }
    for (auto i : rel_order) rel_ids.push_back(g.documents[i].doc_id);
    out.initial.push_back(std::move(initial_ids));
    out.model.push_back(std::move(model_ids));
    out.relevance.push_back(std::move(rel_ids));
    out.model_items.push_back(std::move(item_ids));
  }
  return out;
}

// --- sweeps ------------------------------------------------------------------------------

struct SweepCell {
  double x = 0.0;  // degree / eta / fraction
  std::string trainer;
  std::uint64_t seed = 0;
  double ndcg10 = 0.0;
  double delta_ci = 0.0;
};

// Regenerates clicks at each bias degree (tau for the position model, the
// continuation parameter for the cascade), trains each trainer, and scores
// test NDCG@10 against the true labels.
inline std::vector<SweepCell> bias_sweep(const Dataset& ds, const ExperimentConfig& base,
                                         const std::vector<double>& degrees,
                                         const std::vector<std::string>& trainers,
                                         const std::vector<std::uint64_t>& seeds) {
  if (degrees.empty()) throw ConfigError("bias_sweep: empty degree grid");
  std::vector<SweepCell> cells;
  for (double degree : degrees) {
    ExperimentConfig cfg = base;
    if (cfg.click_family == "ccm")
      cfg.gamma1 = degree;
    else
      cfg.tau = degree;
    for (auto seed : seeds) {
      const auto sim = simulate(ds, cfg, seed);
      const auto split = split_queries(ds.groups.size(), seed);
      for (const auto& trainer : trainers) {
        const auto run = run_trainer(trainer, ds, sim, split, cfg, seed);
        const auto rep = evaluate_run(run, ds, sim, split, cfg);
        cells.push_back({degree, trainer, seed, rep.ndcg.at(10), rep.delta_ci});
      }
    }
  }
  return cells;
}

inline std::vector<SweepCell> eta_sweep(const Dataset& ds, const ExperimentConfig& cfg,
                                        const std::vector<double>& etas,
                                        const std::vector<std::uint64_t>& seeds) {
  if (etas.empty()) throw ConfigError("eta_sweep: empty grid");
  std::vector<SweepCell> cells;
  for (auto seed : seeds) {
    const auto sim = simulate(ds, cfg, seed);
    const auto split = split_queries(ds.groups.size(), seed);
    for (double eta : etas) {
      const auto run = run_trainer("inforank", ds, sim, split, cfg, seed, eta);
      const auto rep = evaluate_run(run, ds, sim, split, cfg);
      // Validation dependence score from the kept (best) checkpoint.
      const double val_dci = training::validation_delta_ci(
          run.result.params, records_for(sim, ds, split.val));
      cells.push_back({eta, "inforank", seed, rep.ndcg.at(10), val_dci});
    }
  }
  return cells;
}

inline std::vector<SweepCell> fraction_sweep(const Dataset& ds, const ExperimentConfig& cfg,
                                             const std::vector<double>& fractions,
                                             const std::vector<std::string>& trainers,
                                             const std::vector<std::uint64_t>& seeds) {
  if (fractions.empty()) throw ConfigError("fraction_sweep: empty grid");
  std::vector<SweepCell> cells;
  for (auto seed : seeds) {
    const auto sim = simulate(ds, cfg, seed);
    const auto full = split_queries(ds.groups.size(), seed);
    for (double frac : fractions) {
      Split split = full;
      const auto keep = static_cast<std::size_t>(
          std::max(1.0, frac * static_cast<double>(full.train.size())));
      split.train.resize(std::min(keep, full.train.size()));
      for (const auto& trainer : trainers) {
        const auto run = run_trainer(trainer, ds, sim, split, cfg, seed);
        const auto rep = evaluate_run(run, ds, sim, split, cfg);
        cells.push_back({frac, trainer, seed, rep.ndcg.at(10), rep.delta_ci});
      }
    }
  }
  return cells;
}

}  // namespace inforank::experiment

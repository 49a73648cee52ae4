#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inforank/common.hpp"
#include "inforank/core_data.hpp"
#include "inforank/features.hpp"

namespace inforank::click_sim {

// --- initial ranker ------------------------------------------------------------

// Linear scorer over [user | document] raw values, fit with a pairwise
// logistic objective on a small labeled sample. Plays the role of the weak
// production ranker whose lists get logged.
struct InitialRanker {
  Vec weights;
  double bias = 0.0;
  Vec mean, scale;  // per-dimension standardization fitted on the sample

  double score(const Vec& user_features, const Document& doc) const {
    double s = bias;
    std::size_t k = 0;
    for (double v : user_features) {
      s += weights[k] * (v - mean[k]) / scale[k];
      ++k;
    }
    for (double v : doc.features) {
      s += weights[k] * (v - mean[k]) / scale[k];
      ++k;
    }
    return s;
  }
};

inline InitialRanker train_initial_ranker(const Dataset& dataset, double label_fraction,
                                          std::uint64_t seed) {
  if (label_fraction <= 0.0 || label_fraction > 1.0)
    throw ConfigError("train_initial_ranker: label_fraction must be in (0, 1]");
  if (dataset.groups.empty()) throw ConfigError("train_initial_ranker: empty dataset");

  const auto n_sample = static_cast<std::size_t>(
      std::ceil(label_fraction * static_cast<double>(dataset.groups.size())));
  std::vector<std::size_t> order(dataset.groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x5eed));
  rng.shuffle(order);
  order.resize(std::min(n_sample, order.size()));

  const std::size_t dim = static_cast<std::size_t>(dataset.user_dim) + dataset.doc_schema.size();
  std::vector<Vec> feats;
  std::vector<int> labels;
  std::vector<std::size_t> group_start;
  for (std::size_t gi : order) {
    const auto& g = dataset.groups[gi];
    group_start.push_back(feats.size());
    for (const auto& d : g.documents) {
      Vec f;
      f.reserve(dim);
      f.insert(f.end(), g.user_features.begin(), g.user_features.end());
      f.insert(f.end(), d.features.begin(), d.features.end());
      feats.push_back(std::move(f));
      labels.push_back(d.graded_relevance);
    }
  }
  group_start.push_back(feats.size());

  InitialRanker ranker;
  ranker.mean.assign(dim, 0.0);
  ranker.scale.assign(dim, 1.0);
  for (const auto& f : feats)
    for (std::size_t k = 0; k < dim; ++k) ranker.mean[k] += f[k];
  for (auto& m : ranker.mean) m /= static_cast<double>(std::max<std::size_t>(feats.size(), 1));
  for (const auto& f : feats)
    for (std::size_t k = 0; k < dim; ++k) {
      const double c = f[k] - ranker.mean[k];
      ranker.scale[k] += c * c;
    }
  for (auto& s : ranker.scale)
    s = std::sqrt(s / static_cast<double>(std::max<std::size_t>(feats.size(), 1)));

  // Collect preference pairs within each sampled group.
  struct Pair {
    std::size_t hi, lo;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
    for (std::size_t i = group_start[g]; i < group_start[g + 1]; ++i)
      for (std::size_t j = group_start[g]; j < group_start[g + 1]; ++j)
        if (labels[i] > labels[j]) pairs.push_back({i, j});
  }
  if (pairs.empty())
    throw ConfigError(
        "train_initial_ranker: sampled subset has no preference pair; "
        "increase label_fraction");

  const auto std_feat = [&](std::size_t i, std::size_t k) {
    return (feats[i][k] - ranker.mean[k]) / ranker.scale[k];
  };

  ranker.weights.assign(dim, 0.0);
  const int iters = 200;
  const double lr = 0.5;
  for (int it = 0; it < iters; ++it) {
    Vec grad(dim, 0.0);
    for (const auto& pr : pairs) {
      double margin = 0.0;
      for (std::size_t k = 0; k < dim; ++k)
        margin += ranker.weights[k] * (std_feat(pr.hi, k) - std_feat(pr.lo, k));
      const double coeff = -sigmoid(-margin);  // d/dm log(1+exp(-m))
      for (std::size_t k = 0; k < dim; ++k)
        grad[k] += coeff * (std_feat(pr.hi, k) - std_feat(pr.lo, k));
    }
    for (std::size_t k = 0; k < dim; ++k)
      ranker.weights[k] -= lr * (grad[k] / static_cast<double>(pairs.size()) +
                                 1e-4 * ranker.weights[k]);
  }
  return ranker;
}

// Documents sorted by descending score, ties by ascending doc_id.
inline std::vector<Document> rank_initial(const InitialRanker& ranker, const QueryGroup& group) {
  std::vector<double> scores;
  std::vector<int> ids;
  scores.reserve(group.documents.size());
  for (const auto& d : group.documents) {
    scores.push_back(ranker.score(group.user_features, d));
    ids.push_back(d.doc_id);
  }
  const auto order = order_by_score(scores, ids);
  std::vector<Document> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(group.documents[i]);
  return out;
}

// --- browsing models ------------------------------------------------------------

struct PBMParams {
  Vec rho;           // per-rank examination probability, non-increasing
  double tau = 1.0;  // bias degree; 0 disables position bias
};

// Inverse-rank table, the usual simulation convention when no measured
// table is supplied.
inline PBMParams default_pbm(int max_rank, double tau = 1.0) {
  PBMParams p;
  p.tau = tau;
  p.rho.resize(static_cast<std::size_t>(max_rank));
  for (int i = 1; i <= max_rank; ++i) p.rho[static_cast<std::size_t>(i - 1)] = 1.0 / i;
  return p;
}

struct UBMParams {
  // gamma[i-1][i'] = examination probability at rank i given the last click
  // was at rank i' (i' = 0 means no click yet). Row i-1 has length i.
  std::vector<Vec> gamma;
};

// Distance-decay stand-in: gamma = 1 / (i - i')^0.7 clamped into (0, 1].
inline UBMParams default_ubm(int max_rank) {
  UBMParams p;
  p.gamma.resize(static_cast<std::size_t>(max_rank));
  for (int i = 1; i <= max_rank; ++i) {
    auto& row = p.gamma[static_cast<std::size_t>(i - 1)];
    row.resize(static_cast<std::size_t>(i));
    for (int last = 0; last < i; ++last) {
      const double dist = static_cast<double>(i - last);
      row[static_cast<std::size_t>(last)] = clamp(std::pow(dist, -0.7), 1e-12, 1.0);
    }
  }
  return p;
}

struct CCMParams {
  double gamma1 = 0.5;   // continue after a skipped (observed, unclicked) item
  double gamma2 = 0.10;  // continue after a click, weighted by irrelevance
  double gamma3 = 0.04;  // continue after a click, weighted by relevance
};

// One presented item. clicked == 1 implies observed == 1 in every browsing
// model here.
struct ImpressionRecord {
  int query_id = 0;
  int doc_id = 0;
  int item_id = 0;
  int position = 0;  // 1-based
  int observed = 0;
  int clicked = 0;
  // Marginal examination probability at this position under the generating
  // model; the oracle-propensity trainers divide by it.
  double obs_prob = 1.0;
  Vec features;
};

namespace detail {

inline ImpressionRecord make_record(const QueryGroup& group, const Document& doc, int position,
                                    int max_rank) {
  ImpressionRecord rec;
  rec.query_id = group.query_id;
  rec.doc_id = doc.doc_id;
  rec.item_id = doc.item_id;
  rec.position = position;
  rec.features = build_feature_vector(group.user_features, doc, position, max_rank);
  return rec;
}

}  // namespace detail

// Closed-form per-position examination marginals.

inline Vec pbm_observation_marginals(const PBMParams& params, std::size_t n) {
  if (n > params.rho.size()) throw ConfigError("pbm: list longer than the position-bias table");
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(params.rho[i], params.tau);
  return out;
}

inline Vec ubm_observation_marginals(const UBMParams& params, const Vec& rel_probs) {
  const std::size_t n = rel_probs.size();
  if (n > params.gamma.size()) throw ConfigError("ubm: list longer than the gamma table");
  // State: distribution over the last-clicked rank (0 = none).
  Vec state(n + 1, 0.0);
  state[0] = 1.0;
  Vec out(n, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const auto& row = params.gamma[i - 1];
    if (row.size() < i) throw ConfigError("ubm: gamma table row too short");
    Vec next(n + 1, 0.0);
    for (std::size_t last = 0; last < i; ++last) {
      const double pi = state[last];
      if (pi == 0.0) continue;
      const double g = row[last];
      out[i - 1] += pi * g;
      const double p_click = g * rel_probs[i - 1];
      next[i] += pi * p_click;
      next[last] += pi * (1.0 - p_click);
    }
    state = std::move(next);
  }
  return out;
}

inline Vec ccm_observation_marginals(const CCMParams& params, const Vec& rel_probs) {
  const std::size_t n = rel_probs.size();
  Vec out(n, 0.0);
  double p_examine = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = p_examine;
    const double pr = rel_probs[i];
    const double cont = (1.0 - pr) * params.gamma1 +
                        pr * (params.gamma2 * (1.0 - pr) + params.gamma3 * pr);
    p_examine *= cont;
  }
  return out;
}

// Position-based model: every rank examined independently with rho_i^tau.
inline std::vector<ImpressionRecord> simulate_pbm(const QueryGroup& ranked, const Vec& rel_probs,
                                                  const PBMParams& params, Rng& rng,
                                                  int max_rank) {
  const std::size_t n = ranked.documents.size();
  if (rel_probs.size() != n) throw ConfigError("simulate_pbm: rel_probs size mismatch");
  const Vec marg = pbm_observation_marginals(params, n);
  std::vector<ImpressionRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rec = detail::make_record(ranked, ranked.documents[i], static_cast<int>(i) + 1, max_rank);
    rec.obs_prob = marg[i];
    rec.observed = rng.bernoulli(marg[i]) ? 1 : 0;
    const int rel = rng.bernoulli(rel_probs[i]) ? 1 : 0;
    rec.clicked = rec.observed & rel;
    out.push_back(std::move(rec));
  }
  return out;
}

// User browsing model: examination depends on the rank and the rank of the
// previous click.
inline std::vector<ImpressionRecord> simulate_ubm(const QueryGroup& ranked, const Vec& rel_probs,
                                                  const UBMParams& params, Rng& rng,
                                                  int max_rank) {
  const std::size_t n = ranked.documents.size();
  if (rel_probs.size() != n) throw ConfigError("simulate_ubm: rel_probs size mismatch");
  if (n > params.gamma.size()) throw ConfigError("simulate_ubm: gamma table too short");
  const Vec marg = ubm_observation_marginals(params, rel_probs);
  std::vector<ImpressionRecord> out;
  out.reserve(n);
  std::size_t last_click = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto& row = params.gamma[i - 1];
    if (row.size() < i) throw ConfigError("simulate_ubm: gamma table row too short");
    auto rec = detail::make_record(ranked, ranked.documents[i - 1], static_cast<int>(i), max_rank);
    rec.obs_prob = marg[i - 1];
    rec.observed = rng.bernoulli(row[last_click]) ? 1 : 0;
    const int rel = rng.bernoulli(rel_probs[i - 1]) ? 1 : 0;
    rec.clicked = rec.observed & rel;
    if (rec.clicked) last_click = i;
    out.push_back(std::move(rec));
  }
  return out;
}

// Cascade model: sequential scan from the top; once the user leaves, nothing
// below is observed.
inline std::vector<ImpressionRecord> simulate_ccm(const QueryGroup& ranked, const Vec& rel_probs,
                                                  const CCMParams& params, Rng& rng,
                                                  int max_rank) {
  const std::size_t n = ranked.documents.size();
  if (rel_probs.size() != n) throw ConfigError("simulate_ccm: rel_probs size mismatch");
  const Vec marg = ccm_observation_marginals(params, rel_probs);
  std::vector<ImpressionRecord> out;
  out.reserve(n);
  bool examining = true;
  for (std::size_t i = 0; i < n; ++i) {
    auto rec = detail::make_record(ranked, ranked.documents[i], static_cast<int>(i) + 1, max_rank);
    rec.obs_prob = marg[i];
    rec.observed = examining ? 1 : 0;
    if (examining) {
      const double pr = rel_probs[i];
      rec.clicked = rng.bernoulli(pr) ? 1 : 0;
      const double cont = rec.clicked
                              ? params.gamma2 * (1.0 - pr) + params.gamma3 * pr
                              : params.gamma1;
      examining = rng.bernoulli(cont);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// --- JSON-lines click log --------------------------------------------------------

inline void save_click_log(const std::vector<ImpressionRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write click log: " + path);
  nlohmann::json header = {{"schema", "inforank.clicklog"}, {"version", 1}};
  out << header.dump() << '\n';
  for (const auto& r : records) {
    nlohmann::json j = {{"query_id", r.query_id},   {"doc_id", r.doc_id},
                        {"item_id", r.item_id},     {"position", r.position},
                        {"observed", r.observed},   {"clicked", r.clicked},
                        {"obs_prob", r.obs_prob},   {"features", r.features}};
    out << j.dump() << '\n';
  }
}

inline std::vector<ImpressionRecord> load_click_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open click log: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("click log is empty: " + path);
  const auto header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("schema", "") != "inforank.clicklog" ||
      header.value("version", 0) != 1)
    throw ParseError("not an inforank click log: " + path);
  std::vector<ImpressionRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad JSON record");
    ImpressionRecord r;
    r.query_id = j.at("query_id").get<int>();
    r.doc_id = j.at("doc_id").get<int>();
    r.item_id = j.value("item_id", r.doc_id);
    r.position = j.at("position").get<int>();
    r.observed = j.at("observed").get<int>();
    r.clicked = j.at("clicked").get<int>();
    r.obs_prob = j.value("obs_prob", 1.0);
    r.features = j.at("features").get<Vec>();
    if (r.clicked == 1 && r.observed == 0)
      throw ParseError(path + ":" + std::to_string(line_no) + ": clicked record not observed");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace inforank::click_sim

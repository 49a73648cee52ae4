#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inforank/common.hpp"

namespace inforank::eval {

// DCG with exponential gain and log2(rank+1) discount, normalized by the
// ideal ordering. Queries whose ideal DCG is zero carry no signal and are
// excluded from means (nullopt).
inline std::optional<double> ndcg_at_k(const std::vector<int>& ranked_labels, int k) {
  if (k < 1) throw NumericError("ndcg_at_k: k must be >= 1");
  const auto cutoff = std::min<std::size_t>(static_cast<std::size_t>(k), ranked_labels.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < cutoff; ++i)
    dcg += (std::pow(2.0, ranked_labels[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  std::vector<int> ideal = ranked_labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < cutoff; ++i)
    idcg += (std::pow(2.0, ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  if (idcg <= 0.0) return std::nullopt;
  return dcg / idcg;
}

// Average precision truncated at rank k over binary labels; nullopt when the
// query has no relevant document.
inline std::optional<double> average_precision_at(const std::vector<int>& ranked_binary, int k) {
  int n_rel = 0;
  for (int v : ranked_binary) n_rel += v > 0 ? 1 : 0;
  if (n_rel == 0) return std::nullopt;
  const auto cutoff = std::min<std::size_t>(static_cast<std::size_t>(k), ranked_binary.size());
  double sum = 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < cutoff; ++i) {
    if (ranked_binary[i] > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / std::min(n_rel, k);
}

inline double mean_ndcg_at_k(const std::vector<std::vector<int>>& ranked_labels_per_query, int k) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& labels : ranked_labels_per_query) {
    if (const auto v = ndcg_at_k(labels, k)) {
      sum += *v;
      ++counted;
    }
  }
  if (counted == 0) return 0.0;
  return sum / static_cast<double>(counted);
}

// Mean average precision at 10; graded labels are binarized as label > 0.
inline double map_at_10(const std::vector<std::vector<int>>& ranked_labels_per_query) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& labels : ranked_labels_per_query) {
    std::vector<int> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = labels[i] > 0 ? 1 : 0;
    if (const auto v = average_precision_at(binary, 10)) {
      sum += *v;
      ++counted;
    }
  }
  if (counted == 0) return 0.0;
  return sum / static_cast<double>(counted);
}

struct MetricsReport {
  double map10 = 0.0;
  std::map<int, double> ndcg;  // cutoff -> value
  double delta_ci = 0.0;
  std::vector<std::pair<int, double>> per_query_ndcg10;  // query_id -> value
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct Curve {
  Vec x, y, err;
};

// Mean post-re-ranking position per original position. `initial` and
// `reranked` list the same doc ids per query, in presented order and in
// re-ranked order respectively.
inline Curve position_shift_curve(const std::vector<std::vector<int>>& initial,
                                  const std::vector<std::vector<int>>& reranked) {
  if (initial.size() != reranked.size())
    throw NumericError("position_shift_curve: query count mismatch");
  std::size_t max_len = 0;
  for (const auto& q : initial) max_len = std::max(max_len, q.size());
  Vec sum(max_len, 0.0), sumsq(max_len, 0.0);
  std::vector<std::size_t> count(max_len, 0);
  for (std::size_t q = 0; q < initial.size(); ++q) {
    const auto& before = initial[q];
    const auto& after = reranked[q];
    if (before.size() != after.size())
      throw NumericError("position_shift_curve: document sets differ in size");
    std::map<int, std::size_t> new_pos;
    for (std::size_t i = 0; i < after.size(); ++i) new_pos[after[i]] = i + 1;
    for (std::size_t i = 0; i < before.size(); ++i) {
      const auto it = new_pos.find(before[i]);
      if (it == new_pos.end())
        throw NumericError("position_shift_curve: document sets differ");
      sum[i] += static_cast<double>(it->second);
      sumsq[i] += static_cast<double>(it->second) * static_cast<double>(it->second);
      ++count[i];
    }
  }
  Curve c;
  for (std::size_t i = 0; i < max_len; ++i) {
    if (count[i] == 0) continue;
    const double n = static_cast<double>(count[i]);
    const double mean = sum[i] / n;
    c.x.push_back(static_cast<double>(i + 1));
    c.y.push_back(mean);
    const double var = std::max(0.0, sumsq[i] / n - mean * mean);
    c.err.push_back(n > 1 ? std::sqrt(var / (n - 1)) : 0.0);
  }
  return c;
}

struct FrequencyCurves {
  Curve mean_position;      // x: normalized item frequency bucket, y: mean rank
  Curve recommendation;     // x: same buckets, y: mean top-10 appearances per item
};

// Buckets items by how often they appear across queries (frequency
// normalized by the maximum) and reports, per bucket, the mean assigned rank
// and the mean number of top-10 appearances.
inline FrequencyCurves frequency_curve(const std::vector<std::vector<int>>& ranked_item_ids,
                                       int n_buckets = 10) {
  std::map<int, int> freq;
  for (const auto& q : ranked_item_ids)
    for (int id : q) ++freq[id];
  int max_freq = 0;
  for (const auto& [id, f] : freq) max_freq = std::max(max_freq, f);
  if (max_freq <= 1)
    throw ConfigError(
        "frequency_curve: no repeated items; use a synthetic config with a shared item pool");

  const auto bucket_of = [&](int id) {
    const double norm = static_cast<double>(freq[id]) / max_freq;
    int b = static_cast<int>(norm * n_buckets);
    return std::min(b, n_buckets - 1);
  };

  Vec rank_sum(static_cast<std::size_t>(n_buckets), 0.0);
  std::vector<std::size_t> rank_count(static_cast<std::size_t>(n_buckets), 0);
  std::map<int, int> top10_hits;
  for (const auto& q : ranked_item_ids) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto b = static_cast<std::size_t>(bucket_of(q[i]));
      rank_sum[b] += static_cast<double>(i + 1);
      ++rank_count[b];
      if (i < 10) ++top10_hits[q[i]];
    }
  }
  Vec rec_sum(static_cast<std::size_t>(n_buckets), 0.0);
  std::vector<std::size_t> rec_count(static_cast<std::size_t>(n_buckets), 0);
  for (const auto& [id, f] : freq) {
    const auto b = static_cast<std::size_t>(bucket_of(id));
    rec_sum[b] += static_cast<double>(top10_hits.count(id) ? top10_hits[id] : 0);
    ++rec_count[b];
  }

  FrequencyCurves out;
  for (int b = 0; b < n_buckets; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    if (rank_count[bi] == 0) continue;
    const double x = (b + 0.5) / n_buckets;
    out.mean_position.x.push_back(x);
    out.mean_position.y.push_back(rank_sum[bi] / static_cast<double>(rank_count[bi]));
    out.mean_position.err.push_back(0.0);
    out.recommendation.x.push_back(x);
    out.recommendation.y.push_back(rec_count[bi] > 0
                                       ? rec_sum[bi] / static_cast<double>(rec_count[bi])
                                       : 0.0);
    out.recommendation.err.push_back(0.0);
  }
  return out;
}

}  // namespace inforank::eval

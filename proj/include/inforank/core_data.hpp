#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "inforank/common.hpp"

namespace inforank {

enum class SlotKind { categorical, real };

struct FeatureSlot {
  SlotKind kind = SlotKind::real;
  int vocab = 0;  // categorical only
};

using FeatureSchema = std::vector<FeatureSlot>;

inline std::string schema_fingerprint(const FeatureSchema& schema) {
  std::string s;
  for (const auto& slot : schema) {
    s += slot.kind == SlotKind::categorical ? 'c' : 'r';
    s += std::to_string(slot.vocab);
    s += ';';
  }
  return hex64(fnv1a(s));
}

struct Document {
  int doc_id = 0;
  // Persistent id shared across queries; lets popularity be measured.
  // Equals doc_id for data loaded from flat files.
  int item_id = 0;
  Vec features;  // one value per schema slot; categorical slots hold codes
  int graded_relevance = 0;
};

struct QueryGroup {
  int query_id = 0;
  Vec user_features;
  std::vector<Document> documents;
};

struct Dataset {
  std::vector<QueryGroup> groups;
  int y_max = 0;
  FeatureSchema doc_schema;
  int user_dim = 0;
};

// Graded label -> probability of binary relevance. Exponential gain scaled
// into [epsilon, 1].
inline double binarize_relevance(int y, int y_max, double epsilon) {
  if (y < 0 || y > y_max) {
    throw std::domain_error("binarize_relevance: label " + std::to_string(y) +
                            " outside [0, " + std::to_string(y_max) + "]");
  }
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw std::domain_error("binarize_relevance: epsilon must be in [0, 1)");
  }
  const double num = std::pow(2.0, y) - 1.0;
  const double den = std::pow(2.0, y_max) - 1.0;
  return epsilon + (1.0 - epsilon) * num / den;
}

// Drops groups with no positive label and groups longer than max_len.
// Group order is preserved; idempotent.
inline Dataset filter_dataset(const Dataset& dataset, int max_len = 50) {
  if (max_len < 1) throw ConfigError("filter_dataset: max_len must be >= 1");
  Dataset out;
  out.y_max = dataset.y_max;
  out.doc_schema = dataset.doc_schema;
  out.user_dim = dataset.user_dim;
  for (const auto& g : dataset.groups) {
    if (g.documents.size() > static_cast<std::size_t>(max_len)) continue;
    const bool has_positive =
        std::any_of(g.documents.begin(), g.documents.end(),
                    [](const Document& d) { return d.graded_relevance > 0; });
    if (!has_positive) continue;
    out.groups.push_back(g);
  }
  return out;
}

// --- SVMLight-style sparse text ------------------------------------------
//
// One document per line: "<label> qid:<q> <idx>:<val> ...", indices 1-based
// strictly increasing, '#' starts a comment. Missing indices default to 0.

namespace detail {

inline bool parse_int(const std::string& tok, long long& out) {
  if (tok.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(tok, &pos);
  } catch (...) {
    return false;
  }
  return pos == tok.size();
}

inline bool parse_float(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(tok, &pos);
  } catch (...) {
    return false;
  }
  return pos == tok.size();
}

}  // namespace detail

inline Dataset load_sparse_text(const std::string& path, const FeatureSchema& schema,
                                int y_max) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);

  Dataset ds;
  ds.doc_schema = schema;
  ds.y_max = y_max;
  ds.user_dim = 0;

  std::map<long long, std::size_t> group_of_qid;  // built by key
  std::string line;
  int line_no = 0;
  int next_doc_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line

    const auto fail = [&](const std::string& why) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + why);
    };

    long long label = 0;
    if (!detail::parse_int(tok, label)) fail("label is not an integer: '" + tok + "'");
    if (label < 0 || label > y_max) fail("label out of range: " + std::to_string(label));

    if (!(ls >> tok) || tok.rfind("qid:", 0) != 0) fail("missing qid field");
    long long qid = 0;
    if (!detail::parse_int(tok.substr(4), qid)) fail("bad qid: '" + tok + "'");

    Document doc;
    doc.graded_relevance = static_cast<int>(label);
    doc.features.assign(schema.size(), 0.0);
    long long prev_idx = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) fail("bad feature token: '" + tok + "'");
      long long idx = 0;
      double val = 0.0;
      if (!detail::parse_int(tok.substr(0, colon), idx)) fail("bad feature index: '" + tok + "'");
      if (!detail::parse_float(tok.substr(colon + 1), val)) fail("bad feature value: '" + tok + "'");
      if (idx <= prev_idx) fail("feature indices must be strictly increasing");
      if (idx < 1 || idx > static_cast<long long>(schema.size()))
        fail("unknown feature index " + std::to_string(idx));
      const auto& slot = schema[static_cast<std::size_t>(idx - 1)];
      if (slot.kind == SlotKind::categorical) {
        const long long code = static_cast<long long>(val);
        if (static_cast<double>(code) != val || code < 0 || code >= slot.vocab)
          fail("categorical code out of vocabulary at index " + std::to_string(idx));
      }
      doc.features[static_cast<std::size_t>(idx - 1)] = val;
      prev_idx = idx;
    }

    auto it = group_of_qid.find(qid);
    if (it == group_of_qid.end()) {
      it = group_of_qid.emplace(qid, ds.groups.size()).first;
      QueryGroup g;
      g.query_id = static_cast<int>(qid);
      ds.groups.push_back(std::move(g));
    }
    doc.doc_id = next_doc_id;
    doc.item_id = next_doc_id;
    ++next_doc_id;
    ds.groups[it->second].documents.push_back(std::move(doc));
  }
  return ds;
}

inline void save_sparse_text(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file: " + path);
  for (const auto& g : ds.groups) {
    for (const auto& d : g.documents) {
      out << d.graded_relevance << " qid:" << g.query_id;
      for (std::size_t i = 0; i < d.features.size(); ++i) {
        if (d.features[i] != 0.0) out << ' ' << (i + 1) << ':' << fmt_double(d.features[i]);
      }
      out << '\n';
    }
  }
}

// --- binary cache ----------------------------------------------------------
//
// Raw little-endian dump; round-trips doubles exactly.

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ParseError("dataset cache truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

inline double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace detail

inline void save_dataset_cache(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write dataset cache: " + path);
  out.write("IRDS", 4);
  detail::put_u64(out, 1);  // version
  detail::put_u64(out, static_cast<std::uint64_t>(ds.y_max));
  detail::put_u64(out, static_cast<std::uint64_t>(ds.user_dim));
  detail::put_u64(out, ds.doc_schema.size());
  for (const auto& slot : ds.doc_schema) {
    detail::put_u64(out, slot.kind == SlotKind::categorical ? 1 : 0);
    detail::put_u64(out, static_cast<std::uint64_t>(slot.vocab));
  }
  detail::put_u64(out, ds.groups.size());
  for (const auto& g : ds.groups) {
    detail::put_u64(out, static_cast<std::uint64_t>(g.query_id));
    detail::put_u64(out, g.user_features.size());
    for (double v : g.user_features) detail::put_f64(out, v);
    detail::put_u64(out, g.documents.size());
    for (const auto& d : g.documents) {
      detail::put_u64(out, static_cast<std::uint64_t>(d.doc_id));
      detail::put_u64(out, static_cast<std::uint64_t>(d.item_id));
      detail::put_u64(out, static_cast<std::uint64_t>(d.graded_relevance));
      detail::put_u64(out, d.features.size());
      for (double v : d.features) detail::put_f64(out, v);
    }
  }
}

inline Dataset load_dataset_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset cache: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IRDS", 4) != 0) throw ParseError("not a dataset cache: " + path);
  const auto version = detail::get_u64(in);
  if (version != 1) throw ParseError("unsupported dataset cache version");
  Dataset ds;
  ds.y_max = static_cast<int>(detail::get_u64(in));
  ds.user_dim = static_cast<int>(detail::get_u64(in));
  const auto n_slots = detail::get_u64(in);
  ds.doc_schema.resize(n_slots);
  for (auto& slot : ds.doc_schema) {
    slot.kind = detail::get_u64(in) == 1 ? SlotKind::categorical : SlotKind::real;
    slot.vocab = static_cast<int>(detail::get_u64(in));
  }
  const auto n_groups = detail::get_u64(in);
  ds.groups.resize(n_groups);
  for (auto& g : ds.groups) {
    g.query_id = static_cast<int>(detail::get_u64(in));
    g.user_features.resize(detail::get_u64(in));
    for (double& v : g.user_features) v = detail::get_f64(in);
    g.documents.resize(detail::get_u64(in));
    for (auto& d : g.documents) {
      d.doc_id = static_cast<int>(detail::get_u64(in));
      d.item_id = static_cast<int>(detail::get_u64(in));
      d.graded_relevance = static_cast<int>(detail::get_u64(in));
      d.features.resize(detail::get_u64(in));
      for (double& v : d.features) v = detail::get_f64(in);
    }
  }
  return ds;
}

// --- synthetic generation ---------------------------------------------------

struct SynthConfig {
  int n_queries = 250;
  int docs_per_query = 20;
  // Item pool size; items recur across queries so frequency analyses have
  // something to measure.
  int n_items = 60;
  int n_categorical = 2;
  std::vector<int> vocab_sizes = {8, 8};  // one per categorical slot
  int n_real = 4;
  int user_dim = 4;
  int y_max = 4;
  double noise = 0.3;
};

// Draws users and a shared item pool, scores every (user, item) pair with a
// hidden bilinear utility plus noise, and quantizes utilities into grades by
// global quantiles (so each grade covers ~1/(y_max+1) of the documents).
//
// Pure function of (config, seed).
inline Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_queries < 1) throw ConfigError("generate_synthetic: n_queries must be >= 1");
  if (cfg.docs_per_query < 1) throw ConfigError("generate_synthetic: docs_per_query must be >= 1");
  if (cfg.n_items < cfg.docs_per_query)
    throw ConfigError("generate_synthetic: n_items must be >= docs_per_query");
  if (static_cast<int>(cfg.vocab_sizes.size()) != cfg.n_categorical)
    throw ConfigError("generate_synthetic: vocab_sizes must list one size per categorical slot");
  if (cfg.y_max < 1) throw ConfigError("generate_synthetic: y_max must be >= 1");

  Dataset ds;
  ds.y_max = cfg.y_max;
  ds.user_dim = cfg.user_dim;
  for (int s = 0; s < cfg.n_categorical; ++s)
    ds.doc_schema.push_back({SlotKind::categorical, cfg.vocab_sizes[static_cast<std::size_t>(s)]});
  for (int s = 0; s < cfg.n_real; ++s) ds.doc_schema.push_back({SlotKind::real, 0});

  const int latent_dim = cfg.n_categorical + cfg.n_real;

  // Per-(slot, code) latent values: categorical codes influence relevance
  // through a hidden lookup the model has to discover.
  Rng code_rng(mix_seed(seed, 1));
  std::vector<Vec> code_value(static_cast<std::size_t>(cfg.n_categorical));
  for (int s = 0; s < cfg.n_categorical; ++s) {
    auto& tbl = code_value[static_cast<std::size_t>(s)];
    tbl.resize(static_cast<std::size_t>(cfg.vocab_sizes[static_cast<std::size_t>(s)]));
    for (auto& v : tbl) v = code_rng.uniform(-1.0, 1.0);
  }

  Rng item_rng(mix_seed(seed, 2));
  struct Item {
    Vec features;
    Vec latent;
  };
  std::vector<Item> items(static_cast<std::size_t>(cfg.n_items));
  for (auto& item : items) {
    item.features.reserve(static_cast<std::size_t>(cfg.n_categorical + cfg.n_real));
    item.latent.reserve(static_cast<std::size_t>(latent_dim));
    for (int s = 0; s < cfg.n_categorical; ++s) {
      const auto code = item_rng.uniform_int(0, cfg.vocab_sizes[static_cast<std::size_t>(s)] - 1);
      item.features.push_back(static_cast<double>(code));
      item.latent.push_back(code_value[static_cast<std::size_t>(s)][static_cast<std::size_t>(code)]);
    }
    for (int s = 0; s < cfg.n_real; ++s) {
      const double v = item_rng.normal();
      item.features.push_back(v);
      item.latent.push_back(v);
    }
  }

  // Hidden bilinear interaction matrix.
  Rng inter_rng(mix_seed(seed, 3));
  std::vector<Vec> interaction(static_cast<std::size_t>(cfg.user_dim),
                               Vec(static_cast<std::size_t>(latent_dim)));
  for (auto& row : interaction)
    for (auto& v : row) v = inter_rng.normal() / std::sqrt(static_cast<double>(cfg.user_dim));

  Rng user_rng(mix_seed(seed, 4));
  Rng pick_rng(mix_seed(seed, 5));
  Rng noise_rng(mix_seed(seed, 6));

  std::vector<double> utilities;
  utilities.reserve(static_cast<std::size_t>(cfg.n_queries * cfg.docs_per_query));
  ds.groups.resize(static_cast<std::size_t>(cfg.n_queries));
  for (int q = 0; q < cfg.n_queries; ++q) {
    auto& g = ds.groups[static_cast<std::size_t>(q)];
    g.query_id = q;
    g.user_features.resize(static_cast<std::size_t>(cfg.user_dim));
    for (auto& v : g.user_features) v = user_rng.normal();

    // Sample docs_per_query distinct items.
    std::vector<int> ids(static_cast<std::size_t>(cfg.n_items));
    for (int i = 0; i < cfg.n_items; ++i) ids[static_cast<std::size_t>(i)] = i;
    pick_rng.shuffle(ids);
    ids.resize(static_cast<std::size_t>(cfg.docs_per_query));

    for (int item_id : ids) {
      const auto& item = items[static_cast<std::size_t>(item_id)];
      Document d;
      d.doc_id = item_id;
      d.item_id = item_id;
      d.features = item.features;
      double util = 0.0;
      for (int a = 0; a < cfg.user_dim; ++a)
        for (int b = 0; b < latent_dim; ++b)
          util += g.user_features[static_cast<std::size_t>(a)] *
                  interaction[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] *
                  item.latent[static_cast<std::size_t>(b)];
      util += cfg.noise * noise_rng.normal();
      d.graded_relevance = 0;  // assigned below
      d.features.shrink_to_fit();
      g.documents.push_back(std::move(d));
      utilities.push_back(util);
    }
  }

  // Quantile thresholds over the pooled utilities.
  std::vector<double> sorted = utilities;
  std::sort(sorted.begin(), sorted.end());
  const int n_grades = cfg.y_max + 1;
  std::vector<double> thresholds;  // grade g starts at thresholds[g-1]
  for (int gr = 1; gr < n_grades; ++gr) {
    const auto pos = static_cast<std::size_t>(
        static_cast<double>(sorted.size()) * gr / n_grades);
    thresholds.push_back(sorted[std::min(pos, sorted.size() - 1)]);
  }

  std::size_t k = 0;
  for (auto& g : ds.groups) {
    for (auto& d : g.documents) {
      const double util = utilities[k++];
      int grade = 0;
      while (grade < cfg.y_max && util >= thresholds[static_cast<std::size_t>(grade)]) ++grade;
      d.graded_relevance = grade;
    }
  }
  return ds;
}

}  // namespace inforank

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "inforank/common.hpp"
#include "inforank/core_data.hpp"
#include "inforank/infotheory.hpp"

namespace inforank::model {

struct ModelDims {
  int d = 8;          // embedding width
  int heads = 2;      // attention heads
  double iota = 1.0;  // attention temperature
};

// --- flat parameter storage --------------------------------------------------
//
// Every trainable tensor lives in one flat buffer, addressed by name through
// the layout. Gradients, optimizer moments and finite-difference probes then
// all share the same indexing.

struct ParamLayout {
  struct Entry {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;  // fan-in for matrices, 1 for vectors
    int cols = 0;
    bool is_bias = false;
  };
  std::vector<Entry> entries;
  std::map<std::string, std::size_t> index;
  std::size_t total = 0;

  void add(const std::string& name, int rows, int cols, bool is_bias = false) {
    index.emplace(name, entries.size());
    entries.push_back({name, total, rows, cols, is_bias});
    total += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  const Entry& at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw NumericError("unknown parameter tensor: " + name);
    return entries[it->second];
  }
};

inline std::shared_ptr<const ParamLayout> build_layout(const FeatureSchema& schema,
                                                       const ModelDims& dims) {
  auto layout = std::make_shared<ParamLayout>();
  const int d = dims.d;
  for (std::size_t s = 0; s < schema.size(); ++s) {
    if (schema[s].kind == SlotKind::categorical) {
      layout->add("emb[" + std::to_string(s) + "]", schema[s].vocab, d);
    } else {
      layout->add("proj_w[" + std::to_string(s) + "]", 1, d);
      layout->add("proj_b[" + std::to_string(s) + "]", 1, d, true);
    }
  }
  layout->add("obs_token", 2, d);
  for (int h = 0; h < dims.heads; ++h) {
    layout->add("W_T[" + std::to_string(h) + "]", d, d);
    layout->add("W_S[" + std::to_string(h) + "]", d, d);
    layout->add("W_C[" + std::to_string(h) + "]", d, d);
  }
  layout->add("W_q", d, d);
  layout->add("b_q", 1, d, true);
  layout->add("W_p", d, d);
  layout->add("b_p", 1, d, true);
  layout->add("attn_w", 1, d);
  for (const char* head : {"rel", "obs"}) {
    const std::string p(head);
    layout->add(p + ".W1", d, 2 * d);
    layout->add(p + ".b1", 1, 2 * d, true);
    layout->add(p + ".W2", 2 * d, d);
    layout->add(p + ".b2", 1, d, true);
    layout->add(p + ".w3", d, 1);
    layout->add(p + ".b3", 1, 1, true);
  }
  return layout;
}

struct ModelParams {
  FeatureSchema schema;  // combined schema the model consumes
  ModelDims dims;
  std::shared_ptr<const ParamLayout> layout;
  Vec values;

  std::span<double> tensor(const std::string& name) {
    const auto& e = layout->at(name);
    return {values.data() + e.offset,
            static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols)};
  }
  std::span<const double> tensor(const std::string& name) const {
    const auto& e = layout->at(name);
    return {values.data() + e.offset,
            static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols)};
  }
};

// Glorot-uniform weights, zero biases; a pure function of the seed.
inline ModelParams init_params(const FeatureSchema& schema, const ModelDims& dims,
                               std::uint64_t seed) {
  if (dims.d < 1 || dims.heads < 1) throw ConfigError("init_params: d and heads must be >= 1");
  ModelParams p;
  p.schema = schema;
  p.dims = dims;
  p.layout = build_layout(schema, dims);
  p.values.assign(p.layout->total, 0.0);
  Rng rng(mix_seed(seed, 0x9042));
  for (const auto& e : p.layout->entries) {
    if (e.is_bias) continue;
    const double s = std::sqrt(6.0 / static_cast<double>(e.rows + e.cols));
    double* v = p.values.data() + e.offset;
    const std::size_t n = static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(-s, s);
  }
  return p;
}

// --- embedding ----------------------------------------------------------------

// Categorical slot: table row lookup. Real slot: value * w + b, mapping the
// scalar into d dimensions.
inline std::vector<Vec> embed_features(const ModelParams& params, const Vec& x) {
  if (x.size() != params.schema.size())
    throw NumericError("embed_features: input length does not match schema");
  const int d = params.dims.d;
  std::vector<Vec> slots(x.size(), Vec(static_cast<std::size_t>(d)));
  for (std::size_t s = 0; s < x.size(); ++s) {
    if (params.schema[s].kind == SlotKind::categorical) {
      const auto code = static_cast<long long>(std::llround(x[s]));
      if (static_cast<double>(code) != x[s] || code < 0 || code >= params.schema[s].vocab)
        throw NumericError("embed_features: code " + fmt_double(x[s]) +
                           " out of vocabulary for slot " + std::to_string(s));
      const auto table = params.tensor("emb[" + std::to_string(s) + "]");
      for (int k = 0; k < d; ++k)
        slots[s][static_cast<std::size_t>(k)] = table[static_cast<std::size_t>(code) * d + k];
    } else {
      const auto w = params.tensor("proj_w[" + std::to_string(s) + "]");
      const auto b = params.tensor("proj_b[" + std::to_string(s) + "]");
      for (int k = 0; k < d; ++k)
        slots[s][static_cast<std::size_t>(k)] = x[s] * w[static_cast<std::size_t>(k)] +
                                                b[static_cast<std::size_t>(k)];
    }
  }
  return slots;
}

// --- attention encoder ---------------------------------------------------------
//
// Pairwise slot correlations per head, temperature softmax, head-averaged
// context, two nonlinear maps, mean pool gated by the attention vector.
// The trace keeps every intermediate the backward pass needs.

struct EncoderTrace {
  int n_slots = 0;
  std::vector<Vec> slots;              // inputs, n_slots x d
  std::vector<std::vector<Vec>> u, v, y;  // [head][slot] -> d
  std::vector<Vec> alpha;              // [head] -> n_slots * n_slots row-major
  std::vector<Vec> m, omega, t;        // [slot] -> d
  Vec p;                               // pooled embedding, d
};

namespace detail {

// y = x * W for a rows x cols matrix stored row-major.
inline void vec_mat(const double* x, std::span<const double> w, int rows, int cols, double* y) {
  for (int k = 0; k < cols; ++k) y[k] = 0.0;
  for (int l = 0; l < rows; ++l) {
    const double xl = x[l];
    if (xl == 0.0) continue;
    const double* row = w.data() + static_cast<std::size_t>(l) * cols;
    for (int k = 0; k < cols; ++k) y[k] += xl * row[k];
  }
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

inline Vec attention_encode(const ModelParams& params, const std::vector<Vec>& slot_vectors,
                            EncoderTrace* trace) {
  const int d = params.dims.d;
  const int H = params.dims.heads;
  const int n = static_cast<int>(slot_vectors.size());
  if (n < 1) throw NumericError("attention_encode: need at least one slot");

  EncoderTrace local;
  EncoderTrace& tr = trace ? *trace : local;
  tr.n_slots = n;
  tr.slots = slot_vectors;
  tr.u.assign(static_cast<std::size_t>(H), std::vector<Vec>(static_cast<std::size_t>(n)));
  tr.v = tr.u;
  tr.y = tr.u;
  tr.alpha.assign(static_cast<std::size_t>(H),
                  Vec(static_cast<std::size_t>(n) * static_cast<std::size_t>(n)));
  tr.m.assign(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d), 0.0));
  tr.omega.assign(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d)));
  tr.t = tr.omega;

  for (int h = 0; h < H; ++h) {
    const auto wt = params.tensor("W_T[" + std::to_string(h) + "]");
    const auto ws = params.tensor("W_S[" + std::to_string(h) + "]");
    const auto wc = params.tensor("W_C[" + std::to_string(h) + "]");
    for (int i = 0; i < n; ++i) {
      auto& ui = tr.u[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)];
      auto& vi = tr.v[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)];
      auto& yi = tr.y[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)];
      ui.resize(static_cast<std::size_t>(d));
      vi.resize(static_cast<std::size_t>(d));
      yi.resize(static_cast<std::size_t>(d));
      detail::vec_mat(slot_vectors[static_cast<std::size_t>(i)].data(), wt, d, d, ui.data());
      detail::vec_mat(slot_vectors[static_cast<std::size_t>(i)].data(), ws, d, d, vi.data());
      detail::vec_mat(slot_vectors[static_cast<std::size_t>(i)].data(), wc, d, d, yi.data());
    }
    auto& alpha = tr.alpha[static_cast<std::size_t>(h)];
    Vec beta_row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double mx = -1e300;
      for (int j = 0; j < n; ++j) {
        beta_row[static_cast<std::size_t>(j)] =
            detail::dot(tr.u[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)].data(),
                        tr.v[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)].data(), d) /
            params.dims.iota;
        mx = std::max(mx, beta_row[static_cast<std::size_t>(j)]);
      }
      double z = 0.0;
      for (int j = 0; j < n; ++j) {
        const double e = std::exp(beta_row[static_cast<std::size_t>(j)] - mx);
        alpha[static_cast<std::size_t>(i) * n + j] = e;
        z += e;
      }
      for (int j = 0; j < n; ++j) alpha[static_cast<std::size_t>(i) * n + j] /= z;
      // Head-averaged context for slot i.
      auto& mi = tr.m[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        const double a = alpha[static_cast<std::size_t>(i) * n + j];
        const auto& yj = tr.y[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
        for (int k = 0; k < d; ++k) mi[static_cast<std::size_t>(k)] += a * yj[static_cast<std::size_t>(k)] / H;
      }
    }
  }

  const auto wq = params.tensor("W_q");
  const auto bq = params.tensor("b_q");
  const auto wp = params.tensor("W_p");
  const auto bp = params.tensor("b_p");
  const auto aw = params.tensor("attn_w");
  Vec p(static_cast<std::size_t>(d), 0.0);
  Vec tmp(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    detail::vec_mat(tr.m[static_cast<std::size_t>(i)].data(), wq, d, d, tmp.data());
    for (int k = 0; k < d; ++k)
      tr.omega[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          sigmoid(tmp[static_cast<std::size_t>(k)] + bq[static_cast<std::size_t>(k)]);
    detail::vec_mat(tr.omega[static_cast<std::size_t>(i)].data(), wp, d, d, tmp.data());
    for (int k = 0; k < d; ++k)
      tr.t[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          std::tanh(tmp[static_cast<std::size_t>(k)] + bp[static_cast<std::size_t>(k)]);
    for (int k = 0; k < d; ++k)
      p[static_cast<std::size_t>(k)] += aw[static_cast<std::size_t>(k)] *
                                        tr.t[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] / n;
  }
  tr.p = p;
  return p;
}

// --- prediction heads ----------------------------------------------------------

struct MlpTrace {
  Vec input;   // d
  Vec h1;      // 2d, post-rectifier
  Vec h2;      // d, post-rectifier
  double logit = 0.0;
  double out = 0.5;
};

inline double mlp_forward(const ModelParams& params, const std::string& head, const Vec& input,
                          MlpTrace* trace) {
  const int d = params.dims.d;
  MlpTrace local;
  MlpTrace& tr = trace ? *trace : local;
  tr.input = input;
  tr.h1.assign(static_cast<std::size_t>(2 * d), 0.0);
  tr.h2.assign(static_cast<std::size_t>(d), 0.0);
  const auto w1 = params.tensor(head + ".W1");
  const auto b1 = params.tensor(head + ".b1");
  const auto w2 = params.tensor(head + ".W2");
  const auto b2 = params.tensor(head + ".b2");
  const auto w3 = params.tensor(head + ".w3");
  const auto b3 = params.tensor(head + ".b3");
  detail::vec_mat(input.data(), w1, d, 2 * d, tr.h1.data());
  for (int k = 0; k < 2 * d; ++k) {
    tr.h1[static_cast<std::size_t>(k)] += b1[static_cast<std::size_t>(k)];
    if (tr.h1[static_cast<std::size_t>(k)] < 0.0) tr.h1[static_cast<std::size_t>(k)] = 0.0;
  }
  detail::vec_mat(tr.h1.data(), w2, 2 * d, d, tr.h2.data());
  for (int k = 0; k < d; ++k) {
    tr.h2[static_cast<std::size_t>(k)] += b2[static_cast<std::size_t>(k)];
    if (tr.h2[static_cast<std::size_t>(k)] < 0.0) tr.h2[static_cast<std::size_t>(k)] = 0.0;
  }
  tr.logit = detail::dot(tr.h2.data(), w3.data(), d) + b3[0];
  tr.out = sigmoid(tr.logit);
  return tr.out;
}

// P(O=1 | x). The input is the plain feature vector; no token slot.
inline double predict_observation(const ModelParams& params, const Vec& x) {
  const auto slots = embed_features(params, x);
  const Vec p = attention_encode(params, slots, nullptr);
  return mlp_forward(params, "obs", p, nullptr);
}

inline std::vector<Vec> slots_with_token(const ModelParams& params, const Vec& x, int o) {
  if (o != 0 && o != 1) throw NumericError("observation value must be 0 or 1");
  const int d = params.dims.d;
  auto slots = embed_features(params, x);
  const auto tok = params.tensor("obs_token");
  Vec t(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    t[static_cast<std::size_t>(k)] = tok[static_cast<std::size_t>(o) * d + k];
  slots.insert(slots.begin(), std::move(t));
  return slots;
}

// P(R=1 | O=o, x). The observation enters as a learned token prepended to
// the slot sequence.
inline double predict_relevance(const ModelParams& params, const Vec& x, int o) {
  const auto slots = slots_with_token(params, x, o);
  const Vec p = attention_encode(params, slots, nullptr);
  return mlp_forward(params, "rel", p, nullptr);
}

// Hard estimate of the observation: 1 only when P(O=1|x) is strictly above
// one half.
inline int estimate_observation_label(const ModelParams& params, const Vec& x) {
  return predict_observation(params, x) > 0.5 ? 1 : 0;
}

// P(C=1 | x): a click requires the item to be observed and relevant.
inline double predict_click(const ModelParams& params, const Vec& x, int o) {
  return predict_relevance(params, x, o) * predict_observation(params, x);
}

// P(R=1 | x): sum over both observation outcomes.
inline double marginal_relevance(const ModelParams& params, const Vec& x) {
  const double q = predict_observation(params, x);
  return q * predict_relevance(params, x, 1) + (1.0 - q) * predict_relevance(params, x, 0);
}

inline infotheory::PointwiseHeads heads_at(const ModelParams& params, const Vec& x) {
  return {predict_relevance(params, x, 1), predict_relevance(params, x, 0),
          predict_observation(params, x)};
}

// Single-head score used by the plain click / labeled trainers: the "rel"
// head on the encoded features, no token slot.
inline double predict_single(const ModelParams& params, const Vec& x) {
  const auto slots = embed_features(params, x);
  const Vec p = attention_encode(params, slots, nullptr);
  return mlp_forward(params, "rel", p, nullptr);
}

// --- ranking --------------------------------------------------------------------

// Re-ranks a presented list by marginal relevance, descending; ties resolved
// by ascending doc id. The group's current document order is taken as the
// presented order (positions 1..n) when building each input.
inline std::vector<Document> rank_by_relevance(const ModelParams& params, const QueryGroup& group,
                                               int max_rank) {
  std::vector<double> scores;
  std::vector<int> ids;
  scores.reserve(group.documents.size());
  for (std::size_t i = 0; i < group.documents.size(); ++i) {
    const auto x = click_sim::build_feature_vector(group.user_features, group.documents[i],
                                                   static_cast<int>(i) + 1, max_rank);
    scores.push_back(marginal_relevance(params, x));
    ids.push_back(group.documents[i].doc_id);
  }
  const auto order = order_by_score(scores, ids);
  std::vector<Document> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(group.documents[i]);
  return out;
}

// --- checkpoints -----------------------------------------------------------------

inline std::string model_fingerprint(const ModelParams& p) {
  std::string s = schema_fingerprint(p.schema);
  s += "|d=" + std::to_string(p.dims.d) + "|h=" + std::to_string(p.dims.heads) +
       "|iota=" + fmt_double(p.dims.iota);
  return hex64(fnv1a(s));
}

// JSON checkpoint IO lives in checkpoint.hpp.

}  // namespace inforank::model

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inforank/click_sim.hpp"
#include "inforank/common.hpp"
#include "inforank/eval.hpp"
#include "inforank/infotheory.hpp"
#include "inforank/model.hpp"

namespace inforank::training {

using click_sim::ImpressionRecord;
using model::EncoderTrace;
using model::MlpTrace;
using model::ModelParams;

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 128;
  double eta = 0.5;        // weight of the independence regularizer
  double l2_weight = 0.01;
  int max_epochs = 100;
  int patience = 5;
  std::uint64_t seed = 1;
  bool observation_supervision = false;
  model::ModelDims dims;
};

// --- losses -----------------------------------------------------------------

inline constexpr double kBceClamp = 1e-6;

inline double bce_loss(double pred, int label) {
  const double p = clamp(pred, kBceClamp, 1.0 - kBceClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// d bce / d pred, zero outside the clamp.
inline double bce_grad(double pred, int label) {
  if (pred < kBceClamp || pred > 1.0 - kBceClamp) return 0.0;
  return (pred - static_cast<double>(label)) / (pred * (1.0 - pred));
}

// --- gradients ----------------------------------------------------------------

struct GradientSet {
  std::shared_ptr<const model::ParamLayout> layout;
  Vec values;

  explicit GradientSet(const ModelParams& params)
      : layout(params.layout), values(params.layout->total, 0.0) {}

  std::span<double> tensor(const std::string& name) {
    const auto& e = layout->at(name);
    return {values.data() + e.offset,
            static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols)};
  }
};

namespace detail {

// dW[l][k] += x[l] * dy[k];  dx[l] += sum_k W[l][k] dy[k]
inline void mat_backward(const double* x, std::span<const double> w, int rows, int cols,
                         const double* dy, std::span<double> dw, double* dx) {
  for (int l = 0; l < rows; ++l) {
    const double* wrow = w.data() + static_cast<std::size_t>(l) * cols;
    double* dwrow = dw.data() + static_cast<std::size_t>(l) * cols;
    const double xl = x[l];
    double acc = 0.0;
    for (int k = 0; k < cols; ++k) {
      dwrow[k] += xl * dy[k];
      acc += wrow[k] * dy[k];
    }
    if (dx) dx[l] += acc;
  }
}

}  // namespace detail

// Reverse pass through the attention encoder. `dslots` receives the
// gradient w.r.t. each input slot vector (assigned, not accumulated).
inline void attention_encode_backward(const ModelParams& params, const EncoderTrace& tr,
                                      const Vec& dp, GradientSet& grads,
                                      std::vector<Vec>& dslots) {
  const int d = params.dims.d;
  const int H = params.dims.heads;
  const int n = tr.n_slots;

  dslots.assign(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d), 0.0));

  const auto wq = params.tensor("W_q");
  const auto wp = params.tensor("W_p");
  const auto aw = params.tensor("attn_w");
  auto d_wq = grads.tensor("W_q");
  auto d_bq = grads.tensor("b_q");
  auto d_wp = grads.tensor("W_p");
  auto d_bp = grads.tensor("b_p");
  auto d_aw = grads.tensor("attn_w");

  std::vector<Vec> dm(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d), 0.0));
  Vec dt(static_cast<std::size_t>(d)), dz(static_cast<std::size_t>(d)),
      domega(static_cast<std::size_t>(d)), da(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    const auto& ti = tr.t[static_cast<std::size_t>(i)];
    const auto& omegai = tr.omega[static_cast<std::size_t>(i)];
    const auto& mi = tr.m[static_cast<std::size_t>(i)];
    for (int k = 0; k < d; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      dt[ks] = aw[ks] * dp[ks] / n;
      d_aw[ks] += ti[ks] * dp[ks] / n;
      dz[ks] = dt[ks] * (1.0 - ti[ks] * ti[ks]);
      d_bp[ks] += dz[ks];
    }
    std::fill(domega.begin(), domega.end(), 0.0);
    detail::mat_backward(omegai.data(), wp, d, d, dz.data(), d_wp, domega.data());
    for (int k = 0; k < d; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      da[ks] = domega[ks] * omegai[ks] * (1.0 - omegai[ks]);
      d_bq[ks] += da[ks];
    }
    detail::mat_backward(mi.data(), wq, d, d, da.data(), d_wq,
                         dm[static_cast<std::size_t>(i)].data());
  }

  Vec dalpha(static_cast<std::size_t>(n)), dbeta(static_cast<std::size_t>(n));
  std::vector<Vec> du(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d)));
  std::vector<Vec> dv(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d)));
  std::vector<Vec> dy(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d)));
  for (int h = 0; h < H; ++h) {
    const auto hs = static_cast<std::size_t>(h);
    const auto wt = params.tensor("W_T[" + std::to_string(h) + "]");
    const auto ws = params.tensor("W_S[" + std::to_string(h) + "]");
    const auto wc = params.tensor("W_C[" + std::to_string(h) + "]");
    auto d_wt = grads.tensor("W_T[" + std::to_string(h) + "]");
    auto d_ws = grads.tensor("W_S[" + std::to_string(h) + "]");
    auto d_wc = grads.tensor("W_C[" + std::to_string(h) + "]");
    const auto& alpha = tr.alpha[hs];

    for (auto& v : du) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : dv) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : dy) std::fill(v.begin(), v.end(), 0.0);

    for (int i = 0; i < n; ++i) {
      const auto is = static_cast<std::size_t>(i);
      // dm_i flows into this head scaled by 1/H.
      // d alpha_ij = (dm_i / H) . y_j ; dy_j += alpha_ij * dm_i / H
      for (int j = 0; j < n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const double a = alpha[is * static_cast<std::size_t>(n) + js];
        const auto& yj = tr.y[hs][js];
        double acc = 0.0;
        for (int k = 0; k < d; ++k) {
          const auto ks = static_cast<std::size_t>(k);
          const double g = dm[is][ks] / H;
          acc += g * yj[ks];
          dy[js][ks] += a * g;
        }
        dalpha[js] = acc;
      }
      // softmax backward (with temperature)
      double inner = 0.0;
      for (int j = 0; j < n; ++j)
        inner += dalpha[static_cast<std::size_t>(j)] *
                 alpha[is * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
      for (int j = 0; j < n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        dbeta[js] = alpha[is * static_cast<std::size_t>(n) + js] * (dalpha[js] - inner) /
                    params.dims.iota;
      }
      // beta_ij = u_i . v_j
      for (int j = 0; j < n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const double g = dbeta[js];
        if (g == 0.0) continue;
        const auto& vj = tr.v[hs][js];
        const auto& ui = tr.u[hs][is];
        for (int k = 0; k < d; ++k) {
          const auto ks = static_cast<std::size_t>(k);
          du[is][ks] += g * vj[ks];
          dv[js][ks] += g * ui[ks];
        }
      }
    }

    for (int i = 0; i < n; ++i) {
      const auto is = static_cast<std::size_t>(i);
      const double* s = tr.slots[is].data();
      detail::mat_backward(s, wt, d, d, du[is].data(), d_wt, dslots[is].data());
      detail::mat_backward(s, ws, d, d, dv[is].data(), d_ws, dslots[is].data());
      detail::mat_backward(s, wc, d, d, dy[is].data(), d_wc, dslots[is].data());
    }
  }
}

// Reverse pass through a prediction head; returns the gradient w.r.t. the
// pooled input.
inline Vec mlp_backward(const ModelParams& params, const std::string& head, const MlpTrace& tr,
                        double d_out, GradientSet& grads) {
  const int d = params.dims.d;
  const double d_logit = d_out * tr.out * (1.0 - tr.out);
  auto d_w1 = grads.tensor(head + ".W1");
  auto d_b1 = grads.tensor(head + ".b1");
  auto d_w2 = grads.tensor(head + ".W2");
  auto d_b2 = grads.tensor(head + ".b2");
  auto d_w3 = grads.tensor(head + ".w3");
  auto d_b3 = grads.tensor(head + ".b3");
  const auto w1 = params.tensor(head + ".W1");
  const auto w2 = params.tensor(head + ".W2");
  const auto w3 = params.tensor(head + ".w3");

  Vec dh2(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    d_w3[ks] += tr.h2[ks] * d_logit;
    dh2[ks] = w3[ks] * d_logit;
    if (tr.h2[ks] <= 0.0) dh2[ks] = 0.0;  // rectifier gate
    d_b2[ks] += dh2[ks];
  }
  d_b3[0] += d_logit;

  Vec dh1(static_cast<std::size_t>(2 * d), 0.0);
  detail::mat_backward(tr.h1.data(), w2, 2 * d, d, dh2.data(), d_w2, dh1.data());
  for (int k = 0; k < 2 * d; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (tr.h1[ks] <= 0.0) dh1[ks] = 0.0;
    d_b1[ks] += dh1[ks];
  }
  Vec dx(static_cast<std::size_t>(d), 0.0);
  detail::mat_backward(tr.input.data(), w1, d, 2 * d, dh1.data(), d_w1, dx.data());
  return dx;
}

// Scatters slot gradients back into embedding tables / projectors.
// `token_o` >= 0 marks slot 0 as the observation token of that value.
inline void scatter_slot_grads(const ModelParams& params, const Vec& x,
                               const std::vector<Vec>& dslots, int token_o, GradientSet& grads) {
  const int d = params.dims.d;
  std::size_t slot = 0;
  if (token_o >= 0) {
    auto d_tok = grads.tensor("obs_token");
    for (int k = 0; k < d; ++k)
      d_tok[static_cast<std::size_t>(token_o) * d + k] += dslots[0][static_cast<std::size_t>(k)];
    slot = 1;
  }
  for (std::size_t s = 0; s < x.size(); ++s, ++slot) {
    const auto& g = dslots[slot];
    if (params.schema[s].kind == SlotKind::categorical) {
      const auto code = static_cast<std::size_t>(std::llround(x[s]));
      auto d_emb = grads.tensor("emb[" + std::to_string(s) + "]");
      for (int k = 0; k < d; ++k) d_emb[code * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] += g[static_cast<std::size_t>(k)];
    } else {
      auto d_w = grads.tensor("proj_w[" + std::to_string(s) + "]");
      auto d_b = grads.tensor("proj_b[" + std::to_string(s) + "]");
      for (int k = 0; k < d; ++k) {
        d_w[static_cast<std::size_t>(k)] += x[s] * g[static_cast<std::size_t>(k)];
        d_b[static_cast<std::size_t>(k)] += g[static_cast<std::size_t>(k)];
      }
    }
  }
}

// --- per-record forward/backward ------------------------------------------------

// All three head evaluations for one input: P(O|x) from the plain pass,
// P(R|O=1,x) and P(R|O=0,x) from the token passes.
struct FullForward {
  EncoderTrace enc_obs, enc_rel1, enc_rel0;
  MlpTrace mlp_obs, mlp_rel1, mlp_rel0;
  double p_o = 0.5, p_r1 = 0.5, p_r0 = 0.5;
  int o_hat = 0;
};

inline void full_forward(const ModelParams& params, const Vec& x, FullForward& f) {
  const auto slots = model::embed_features(params, x);
  const Vec p_obs = model::attention_encode(params, slots, &f.enc_obs);
  f.p_o = model::mlp_forward(params, "obs", p_obs, &f.mlp_obs);
  f.o_hat = f.p_o > 0.5 ? 1 : 0;
  for (int o = 0; o <= 1; ++o) {
    auto with_tok = model::slots_with_token(params, x, o);
    auto& enc = o == 1 ? f.enc_rel1 : f.enc_rel0;
    auto& mlp = o == 1 ? f.mlp_rel1 : f.mlp_rel0;
    const Vec p = model::attention_encode(params, with_tok, &enc);
    (o == 1 ? f.p_r1 : f.p_r0) = model::mlp_forward(params, "rel", p, &mlp);
  }
}

inline void full_backward(const ModelParams& params, const Vec& x, const FullForward& f,
                          double d_po, double d_pr1, double d_pr0, GradientSet& grads,
                          std::vector<Vec>& scratch) {
  if (d_po != 0.0) {
    const Vec dp = mlp_backward(params, "obs", f.mlp_obs, d_po, grads);
    attention_encode_backward(params, f.enc_obs, dp, grads, scratch);
    scatter_slot_grads(params, x, scratch, -1, grads);
  }
  if (d_pr1 != 0.0) {
    const Vec dp = mlp_backward(params, "rel", f.mlp_rel1, d_pr1, grads);
    attention_encode_backward(params, f.enc_rel1, dp, grads, scratch);
    scatter_slot_grads(params, x, scratch, 1, grads);
  }
  if (d_pr0 != 0.0) {
    const Vec dp = mlp_backward(params, "rel", f.mlp_rel0, d_pr0, grads);
    attention_encode_backward(params, f.enc_rel0, dp, grads, scratch);
    scatter_slot_grads(params, x, scratch, 0, grads);
  }
}

// --- objective --------------------------------------------------------------------

struct LossBreakdown {
  double click = 0.0;  // supervision term (plus observation term when enabled)
  double cmi = 0.0;    // independence regularizer
  double l2 = 0.0;
  double total = 0.0;
};

// Full objective over a batch: mean click BCE (through the product of the
// relevance and observation heads), eta times the mean pointwise CMI, plus
// L2 over all parameters. When observation labels are not supervised the
// click term conditions the relevance head on the thresholded estimate,
// which is treated as a constant w.r.t. gradients.
inline LossBreakdown total_loss(const ModelParams& params,
                                const std::vector<ImpressionRecord>& batch,
                                const TrainConfig& cfg) {
  if (batch.empty()) throw NumericError("total_loss: empty batch");
  LossBreakdown out;
  FullForward f;
  for (const auto& rec : batch) {
    full_forward(params, rec.features, f);
    const int o_used = cfg.observation_supervision ? rec.observed : f.o_hat;
    const double p_r = o_used == 1 ? f.p_r1 : f.p_r0;
    out.click += bce_loss(p_r * f.p_o, rec.clicked);
    if (cfg.observation_supervision) out.click += bce_loss(f.p_o, rec.observed);
    out.cmi += infotheory::cmi_pointwise({f.p_r1, f.p_r0, f.p_o});
  }
  const double b = static_cast<double>(batch.size());
  out.click /= b;
  out.cmi /= b;
  for (double v : params.values) out.l2 += v * v;
  out.l2 *= cfg.l2_weight;
  out.total = out.click + cfg.eta * out.cmi + out.l2;
  return out;
}

// Exact gradient of total_loss. Also returns the loss so training does one
// pass per batch.
inline LossBreakdown grad(const ModelParams& params, const std::vector<ImpressionRecord>& batch,
                          const TrainConfig& cfg, GradientSet& grads) {
  if (batch.empty()) throw NumericError("grad: empty batch");
  std::fill(grads.values.begin(), grads.values.end(), 0.0);
  LossBreakdown out;
  const double b = static_cast<double>(batch.size());
  FullForward f;
  std::vector<Vec> scratch;
  for (const auto& rec : batch) {
    full_forward(params, rec.features, f);
    const int o_used = cfg.observation_supervision ? rec.observed : f.o_hat;
    const double p_r = o_used == 1 ? f.p_r1 : f.p_r0;
    const double click_pred = p_r * f.p_o;
    out.click += bce_loss(click_pred, rec.clicked);
    out.cmi += infotheory::cmi_pointwise({f.p_r1, f.p_r0, f.p_o});

    const double g_click = bce_grad(click_pred, rec.clicked) / b;
    double d_po = g_click * p_r;
    double d_pr1 = o_used == 1 ? g_click * f.p_o : 0.0;
    double d_pr0 = o_used == 0 ? g_click * f.p_o : 0.0;
    if (cfg.observation_supervision) {
      out.click += bce_loss(f.p_o, rec.observed);
      d_po += bce_grad(f.p_o, rec.observed) / b;
    }
    if (cfg.eta != 0.0) {
      const auto ig = infotheory::cmi_pointwise_grad({f.p_r1, f.p_r0, f.p_o});
      d_pr1 += cfg.eta * ig.d_p_r_given_o1 / b;
      d_pr0 += cfg.eta * ig.d_p_r_given_o0 / b;
      d_po += cfg.eta * ig.d_p_o1 / b;
    }
    full_backward(params, rec.features, f, d_po, d_pr1, d_pr0, grads, scratch);
  }
  out.click /= b;
  out.cmi /= b;
  for (double v : params.values) out.l2 += v * v;
  out.l2 *= cfg.l2_weight;
  out.total = out.click + cfg.eta * out.cmi + out.l2;
  for (std::size_t i = 0; i < grads.values.size(); ++i)
    grads.values[i] += 2.0 * cfg.l2_weight * params.values[i];

  for (const auto& e : grads.layout->entries) {
    const double* v = grads.values.data() + e.offset;
    const std::size_t sz = static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols);
    for (std::size_t i = 0; i < sz; ++i)
      if (!std::isfinite(v[i])) throw NumericError("non-finite gradient in " + e.name);
  }
  return out;
}

// Single-head objective used by the click / labeled / propensity-weighted
// baselines: weighted BCE of the score head on the given labels.
inline LossBreakdown single_head_loss(const ModelParams& params,
                                      const std::vector<ImpressionRecord>& batch,
                                      const std::vector<int>& labels, const Vec& weights,
                                      const TrainConfig& cfg) {
  if (batch.empty()) throw NumericError("single_head_loss: empty batch");
  LossBreakdown out;
  double wsum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    out.click += w * bce_loss(model::predict_single(params, batch[i].features), labels[i]);
    wsum += w;
  }
  out.click /= wsum;
  for (double v : params.values) out.l2 += v * v;
  out.l2 *= cfg.l2_weight;
  out.total = out.click + out.l2;
  return out;
}

inline LossBreakdown single_head_grad(const ModelParams& params,
                                      const std::vector<ImpressionRecord>& batch,
                                      const std::vector<int>& labels, const Vec& weights,
                                      const TrainConfig& cfg, GradientSet& grads) {
  if (batch.empty()) throw NumericError("single_head_grad: empty batch");
  std::fill(grads.values.begin(), grads.values.end(), 0.0);
  LossBreakdown out;
  double wsum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) wsum += weights.empty() ? 1.0 : weights[i];
  EncoderTrace enc;
  MlpTrace mlp;
  std::vector<Vec> scratch;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& x = batch[i].features;
    const double w = weights.empty() ? 1.0 : weights[i];
    const auto slots = model::embed_features(params, x);
    const Vec p = model::attention_encode(params, slots, &enc);
    const double pred = model::mlp_forward(params, "rel", p, &mlp);
    out.click += w * bce_loss(pred, labels[i]);
    const double d_out = w * bce_grad(pred, labels[i]) / wsum;
    if (d_out != 0.0) {
      const Vec dp = mlp_backward(params, "rel", mlp, d_out, grads);
      attention_encode_backward(params, enc, dp, grads, scratch);
      scatter_slot_grads(params, x, scratch, -1, grads);
    }
  }
  out.click /= wsum;
  for (double v : params.values) out.l2 += v * v;
  out.l2 *= cfg.l2_weight;
  out.total = out.click + out.l2;
  for (std::size_t i = 0; i < grads.values.size(); ++i)
    grads.values[i] += 2.0 * cfg.l2_weight * params.values[i];
  return out;
}

// --- optimizer ---------------------------------------------------------------------

struct OptimizerState {
  Vec m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit OptimizerState(const ModelParams& params)
      : m(params.values.size(), 0.0), v(params.values.size(), 0.0) {}
};

inline void adam_step(ModelParams& params, const GradientSet& grads, OptimizerState& state,
                      double lr) {
  if (grads.values.size() != params.values.size() || state.m.size() != params.values.size())
    throw NumericError("adam_step: shape mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double g = grads.values[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    params.values[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + state.eps);
  }
}

// --- training loops ------------------------------------------------------------------

struct HistoryRow {
  int epoch = 0;
  double click = 0.0, cmi = 0.0, l2 = 0.0, total = 0.0;
  double val_total = 0.0, val_ndcg10 = 0.0, val_delta_ci = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<HistoryRow> history;
  bool diverged = false;
};

// Presented list for validation ranking: documents in logged order with the
// graded labels needed for NDCG.
struct PresentedGroup {
  QueryGroup group;   // documents in presented order
  int max_rank = 0;   // position vocabulary of the combined schema
};

inline std::vector<int> rank_labels(const ModelParams& params, const PresentedGroup& pg,
                                    bool full_model) {
  std::vector<double> scores;
  std::vector<int> ids;
  scores.reserve(pg.group.documents.size());
  for (std::size_t i = 0; i < pg.group.documents.size(); ++i) {
    const auto x = click_sim::build_feature_vector(pg.group.user_features,
                                                   pg.group.documents[i],
                                                   static_cast<int>(i) + 1, pg.max_rank);
    scores.push_back(full_model ? model::marginal_relevance(params, x)
                                : model::predict_single(params, x));
    ids.push_back(pg.group.documents[i].doc_id);
  }
  const auto order = model::order_by_score(scores, ids);
  std::vector<int> labels;
  labels.reserve(order.size());
  for (auto i : order) labels.push_back(pg.group.documents[i].graded_relevance);
  return labels;
}

inline double validation_ndcg10(const ModelParams& params,
                                const std::vector<PresentedGroup>& groups, bool full_model) {
  std::vector<std::vector<int>> ranked;
  ranked.reserve(groups.size());
  for (const auto& g : groups) ranked.push_back(rank_labels(params, g, full_model));
  return eval::mean_ndcg_at_k(ranked, 10);
}

inline double validation_delta_ci(const ModelParams& params,
                                  const std::vector<ImpressionRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& rec : records)
    sum += infotheory::delta_ci_pointwise(model::heads_at(params, rec.features));
  return sum / static_cast<double>(records.size());
}

namespace detail {

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0xe90c + static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);
  return order;
}

}  // namespace detail

// Shared epoch driver. `batch_step` runs one optimizer step and returns the
// batch loss; `validate` returns (val_total, val_ndcg10, val_delta_ci).
template <typename BatchStep, typename Validate>
inline TrainResult run_training(ModelParams params, std::size_t n_records,
                                const TrainConfig& cfg, BatchStep&& batch_step,
                                Validate&& validate) {
  TrainResult result{params, {}, false};
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = detail::epoch_order(n_records, cfg.seed, epoch);
    double ep_click = 0.0, ep_cmi = 0.0, ep_l2 = 0.0, ep_total = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const LossBreakdown lb =
          batch_step(params, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                      order.begin() + static_cast<std::ptrdiff_t>(end)));
      ep_click += lb.click;
      ep_cmi += lb.cmi;
      ep_l2 += lb.l2;
      ep_total += lb.total;
      ++n_batches;
    }
    HistoryRow row;
    row.epoch = epoch;
    const double nb = static_cast<double>(std::max<std::size_t>(n_batches, 1));
    row.click = ep_click / nb;
    row.cmi = ep_cmi / nb;
    row.l2 = ep_l2 / nb;
    row.total = ep_total / nb;
    const auto [val_total, val_ndcg, val_dci] = validate(params);
    row.val_total = val_total;
    row.val_ndcg10 = val_ndcg;
    row.val_delta_ci = val_dci;
    result.history.push_back(row);

    if (!std::isfinite(row.total) || !std::isfinite(val_total)) {
      result.diverged = true;
      return result;
    }
    if (val_total < best_val - 1e-5) {
      best_val = val_total;
      result.params = params;
      stale = 0;
    } else {
      ++stale;
      if (stale >= cfg.patience) break;
    }
  }
  if (result.history.empty()) result.params = std::move(params);
  return result;
}

// Full estimator training: click supervision through the head product plus
// the independence regularizer, early-stopped on validation total loss.
inline TrainResult train(const std::vector<ImpressionRecord>& train_records,
                         const std::vector<ImpressionRecord>& val_records,
                         const std::vector<PresentedGroup>& val_groups,
                         const FeatureSchema& schema, const TrainConfig& cfg) {
  if (train_records.empty()) throw NumericError("train: empty click log");
  ModelParams init = model::init_params(schema, cfg.dims, cfg.seed);
  GradientSet grads(init);
  OptimizerState opt(init);
  return run_training(
      std::move(init), train_records.size(), cfg,
      [&](ModelParams& p, const std::vector<std::size_t>& idx) {
        std::vector<ImpressionRecord> batch;
        batch.reserve(idx.size());
        for (auto i : idx) batch.push_back(train_records[i]);
        const auto lb = grad(p, batch, cfg, grads);
        adam_step(p, grads, opt, cfg.learning_rate);
        return lb;
      },
      [&](const ModelParams& p) {
        const auto lb = val_records.empty() ? LossBreakdown{} : total_loss(p, val_records, cfg);
        return std::tuple{lb.total, validation_ndcg10(p, val_groups, true),
                          validation_delta_ci(p, val_records)};
      });
}

// Single-head trainer shared by the baselines.
inline TrainResult train_single_head(const std::vector<ImpressionRecord>& train_records,
                                     const std::vector<int>& train_labels,
                                     const Vec& train_weights,
                                     const std::vector<ImpressionRecord>& val_records,
                                     const std::vector<int>& val_labels,
                                     const std::vector<PresentedGroup>& val_groups,
                                     const FeatureSchema& schema, const TrainConfig& cfg) {
  if (train_records.empty()) throw NumericError("train_single_head: empty click log");
  if (train_labels.size() != train_records.size())
    throw NumericError("train_single_head: label count mismatch");
  ModelParams init = model::init_params(schema, cfg.dims, cfg.seed);
  GradientSet grads(init);
  OptimizerState opt(init);
  return run_training(
      std::move(init), train_records.size(), cfg,
      [&](ModelParams& p, const std::vector<std::size_t>& idx) {
        std::vector<ImpressionRecord> batch;
        std::vector<int> labels;
        Vec weights;
        batch.reserve(idx.size());
        for (auto i : idx) {
          batch.push_back(train_records[i]);
          labels.push_back(train_labels[i]);
          if (!train_weights.empty()) weights.push_back(train_weights[i]);
        }
        const auto lb = single_head_grad(p, batch, labels, weights, cfg, grads);
        adam_step(p, grads, opt, cfg.learning_rate);
        return lb;
      },
      [&](const ModelParams& p) {
        const auto lb = val_records.empty()
                            ? LossBreakdown{}
                            : single_head_loss(p, val_records, val_labels, {}, cfg);
        return std::tuple{lb.total, validation_ndcg10(p, val_groups, false), 0.0};
      });
}

// Raw-click baseline: the same encoder with one sigmoid head fit directly on
// clicks, no debiasing.
inline TrainResult train_click_baseline(const std::vector<ImpressionRecord>& train_records,
                                        const std::vector<ImpressionRecord>& val_records,
                                        const std::vector<PresentedGroup>& val_groups,
                                        const FeatureSchema& schema, const TrainConfig& cfg) {
  std::vector<int> labels, val_labels;
  for (const auto& r : train_records) labels.push_back(r.clicked);
  for (const auto& r : val_records) val_labels.push_back(r.clicked);
  return train_single_head(train_records, labels, {}, val_records, val_labels, val_groups,
                           schema, cfg);
}

// --- propensity-weighted risk -----------------------------------------------------

inline constexpr double kPropensityFloor = 1e-3;

// Sum over impressions of loss(score, clicked) / propensity. With a loss
// that vanishes on non-clicks this is an unbiased estimate of the relevance
// risk whenever relevance and observation are conditionally independent.
inline double ipw_risk(const std::vector<ImpressionRecord>& records, const Vec& propensities,
                       const std::function<double(const ImpressionRecord&)>& scorer,
                       const std::function<double(double, int)>& loss) {
  if (propensities.size() != records.size())
    throw NumericError("ipw_risk: propensity count mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (propensities[i] <= kPropensityFloor)
      throw NumericError("ipw_risk: propensity below floor at impression " + std::to_string(i));
    sum += loss(scorer(records[i]), records[i].clicked) / propensities[i];
  }
  return sum;
}

}  // namespace inforank::training

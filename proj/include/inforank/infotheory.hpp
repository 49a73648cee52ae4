#pragma once

#include <cmath>
#include <vector>

#include "inforank/common.hpp"

namespace inforank::infotheory {

// The three head outputs for one input: P(R=1|O=1,x), P(R=1|O=0,x), P(O=1|x).
struct PointwiseHeads {
  double p_r_given_o1 = 0.5;
  double p_r_given_o0 = 0.5;
  double p_o1 = 0.5;
};

// Probabilities are clamped away from {0,1} before any logarithm.
inline constexpr double kProbClamp = 1e-6;

inline double clamp_prob(double p) { return clamp(p, kProbClamp, 1.0 - kProbClamp); }

// Marginal relevance: sum over both observation outcomes.
inline double marginal_from_heads(double p_r_o1, double p_r_o0, double p_o1) {
  return p_o1 * p_r_o1 + (1.0 - p_o1) * p_r_o0;
}

// Conditional mutual information between the relevance and observation
// estimates at a single input, in nats. Evaluates the four-term sum over
// (r, o) in {0,1}^2 against the marginal relevance; never negative (tiny
// rounding residue is clipped to zero).
inline double cmi_pointwise(const PointwiseHeads& h) {
  const double a = clamp_prob(h.p_r_given_o1);
  const double b = clamp_prob(h.p_r_given_o0);
  const double q = clamp_prob(h.p_o1);
  const double rbar = marginal_from_heads(a, b, q);
  double sum = 0.0;
  for (int o = 0; o <= 1; ++o) {
    const double po = o == 1 ? q : 1.0 - q;
    const double pr1 = o == 1 ? a : b;
    for (int r = 0; r <= 1; ++r) {
      const double p_cond = r == 1 ? pr1 : 1.0 - pr1;
      const double p_marg = r == 1 ? rbar : 1.0 - rbar;
      sum += p_cond * po * std::log(p_cond / p_marg);
    }
  }
  return sum > 0.0 ? sum : 0.0;
}

inline double cmi_batch(const std::vector<PointwiseHeads>& heads) {
  if (heads.empty()) throw NumericError("cmi_batch: empty batch");
  double sum = 0.0;
  for (const auto& h : heads) sum += cmi_pointwise(h);
  return sum / static_cast<double>(heads.size());
}

// |P(R=1|O=1,x) - P(R=1|O=0,x)|; zero exactly when the model is pointwise
// conditionally independent.
inline double delta_ci_pointwise(const PointwiseHeads& h) {
  return std::abs(h.p_r_given_o1 - h.p_r_given_o0);
}

inline double delta_ci_mean(const std::vector<PointwiseHeads>& heads) {
  if (heads.empty()) throw NumericError("delta_ci_mean: empty set");
  double sum = 0.0;
  for (const auto& h : heads) sum += delta_ci_pointwise(h);
  return sum / static_cast<double>(heads.size());
}

// Exact partial derivatives of cmi_pointwise w.r.t. the three inputs.
//
// With a=P(R|O=1), b=P(R|O=0), q=P(O=1) and rbar = qa+(1-q)b the sum
// collapses to q*G(a) + (1-q)*G(b) - G(rbar), G(p) = p ln p + (1-p) ln(1-p),
// which gives
//   dI/da = q  * (logit(a) - logit(rbar))
//   dI/db = (1-q) * (logit(b) - logit(rbar))
//   dI/dq = G(a) - G(b) - logit(rbar) * (a - b).
// Inputs clamped outside [kProbClamp, 1-kProbClamp] get zero gradient, as
// does the clip at I = 0.
struct CmiGrad {
  double d_p_r_given_o1 = 0.0;
  double d_p_r_given_o0 = 0.0;
  double d_p_o1 = 0.0;
};

inline CmiGrad cmi_pointwise_grad(const PointwiseHeads& h) {
  const double a = clamp_prob(h.p_r_given_o1);
  const double b = clamp_prob(h.p_r_given_o0);
  const double q = clamp_prob(h.p_o1);
  CmiGrad g;
  if (cmi_pointwise(h) <= 0.0) return g;
  const double rbar = marginal_from_heads(a, b, q);
  const auto neg_entropy = [](double p) { return p * std::log(p) + (1.0 - p) * std::log(1.0 - p); };
  const double lr = logit(rbar);
  g.d_p_r_given_o1 = q * (logit(a) - lr);
  g.d_p_r_given_o0 = (1.0 - q) * (logit(b) - lr);
  g.d_p_o1 = neg_entropy(a) - neg_entropy(b) - lr * (a - b);
  if (h.p_r_given_o1 != a) g.d_p_r_given_o1 = 0.0;
  if (h.p_r_given_o0 != b) g.d_p_r_given_o0 = 0.0;
  if (h.p_o1 != q) g.d_p_o1 = 0.0;
  return g;
}

}  // namespace inforank::infotheory

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "inforank/common.hpp"

// Exact, enumeration-based checks of the probabilistic identities the rest
// of the library relies on. Everything here is closed-form arithmetic over
// small discrete worlds; no sampling, no shared code with the estimator or
// the regularizer it cross-checks.
namespace inforank::oracle {

// One context point x of a finite world over (X, R, O, C) with C = R * O.
struct WorldPoint {
  double p_x = 1.0;       // P(X = x)
  double p_o1 = 0.5;      // P(O=1 | x)
  double p_r_o1 = 0.5;    // P(R=1 | O=1, x)
  double p_r_o0 = 0.5;    // P(R=1 | O=0, x)
};

struct DiscreteWorld {
  std::vector<WorldPoint> points;
};

// Conditional mutual information at one x computed through the joint
// distribution route: build P(R,O|x), take marginals, sum
// P(r,o) ln[P(r,o) / (P(r)P(o))]. Deliberately a different algebraic path
// from the regularizer implementation so the two can cross-check.
inline double brute_force_cmi(double p_r_o1, double p_r_o0, double p_o1) {
  const double lo = 1e-6, hi = 1.0 - 1e-6;
  const double a = clamp(p_r_o1, lo, hi);
  const double b = clamp(p_r_o0, lo, hi);
  const double q = clamp(p_o1, lo, hi);
  double joint[2][2];  // [r][o]
  joint[1][1] = a * q;
  joint[0][1] = (1.0 - a) * q;
  joint[1][0] = b * (1.0 - q);
  joint[0][0] = (1.0 - b) * (1.0 - q);
  double pr[2] = {joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]};
  double po[2] = {joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]};
  double sum = 0.0;
  for (int r = 0; r <= 1; ++r)
    for (int o = 0; o <= 1; ++o) sum += joint[r][o] * std::log(joint[r][o] / (pr[r] * po[o]));
  return sum;
}

inline double brute_force_cmi(const WorldPoint& pt) {
  return brute_force_cmi(pt.p_r_o1, pt.p_r_o0, pt.p_o1);
}

// --- equivalence of the three independence statements -----------------------

struct IndependenceReport {
  double gap = 0.0;       // P(R=1|O=1,x) - P(R=1|O=0,x)
  double cmi = 0.0;
  double delta_ci = 0.0;  // |gap|
  bool agree = false;     // the three zero-tests classify identically
};

// For every x: the conditional-independence gap, the exact CMI, and the
// conditional-independence score must be zero together or nonzero together.
inline std::vector<IndependenceReport> check_prop1(const DiscreteWorld& world, double tol) {
  if (tol <= 0.0) throw NumericError("check_prop1: tol must be positive");
  std::vector<IndependenceReport> out;
  out.reserve(world.points.size());
  for (const auto& pt : world.points) {
    IndependenceReport r;
    r.gap = pt.p_r_o1 - pt.p_r_o0;
    r.cmi = brute_force_cmi(pt);
    r.delta_ci = std::abs(r.gap);
    const bool z1 = std::abs(r.gap) <= tol;
    const bool z2 = std::abs(r.cmi) <= tol;
    const bool z3 = r.delta_ci <= tol;
    r.agree = (z1 == z2) && (z2 == z3);
    out.push_back(r);
  }
  return out;
}

// --- click factorization -----------------------------------------------------

// Residual of P(C=1|x) = P(R=1|x) * P(O=1|x) per point. Since C = R*O,
// P(C=1|x) = P(R=1|O=1,x) P(O=1|x); the residual vanishes exactly on
// conditionally independent worlds (or when observation is degenerate).
inline double verify_click_factorization(const DiscreteWorld& world) {
  double worst = 0.0;
  for (const auto& pt : world.points) {
    const double p_click = pt.p_r_o1 * pt.p_o1;
    const double p_r = pt.p_o1 * pt.p_r_o1 + (1.0 - pt.p_o1) * pt.p_r_o0;
    worst = std::max(worst, std::abs(p_click - p_r * pt.p_o1));
  }
  return worst;
}

// --- unbiasedness of the propensity-weighted risk ---------------------------

// World point for a conditionally independent world (the risk identity's
// premise): relevance has a single conditional law.
struct IndepWorldPoint {
  double p_x = 1.0;
  double p_o1 = 0.5;  // must stay away from zero
  double p_r1 = 0.5;
};

struct RiskComparison {
  double ipw_expectation = 0.0;  // E over (r, o) draws of the weighted click risk
  double relevance_risk = 0.0;   // risk against relevance draws
  double residual = 0.0;
};

// Pointwise loss contract: loss(score, 0) must be 0 (only positives carry
// loss), which is what makes the inverse-weighted click risk an unbiased
// estimate of the relevance risk.
using PointwiseLoss = std::function<double(double score, int label)>;

inline RiskComparison verify_prop2(const std::vector<IndepWorldPoint>& world,
                                   const std::function<double(std::size_t)>& scorer,
                                   const PointwiseLoss& loss) {
  RiskComparison out;
  for (std::size_t i = 0; i < world.size(); ++i) {
    const auto& pt = world[i];
    if (pt.p_o1 < 1e-3)
      throw NumericError("verify_prop2: observation probability not bounded away from zero");
    const double s = scorer(i);
    double lhs = 0.0;
    for (int r = 0; r <= 1; ++r) {
      for (int o = 0; o <= 1; ++o) {
        const double pr = r == 1 ? pt.p_r1 : 1.0 - pt.p_r1;
        const double po = o == 1 ? pt.p_o1 : 1.0 - pt.p_o1;
        lhs += pr * po * loss(s, r * o) / pt.p_o1;
      }
    }
    double rhs = pt.p_r1 * loss(s, 1) + (1.0 - pt.p_r1) * loss(s, 0);
    out.ipw_expectation += pt.p_x * lhs;
    out.relevance_risk += pt.p_x * rhs;
  }
  out.residual = std::abs(out.ipw_expectation - out.relevance_risk);
  return out;
}

// Dependent variant used for counterexample searches: relevance law depends
// on the observation outcome, so the premise fails.
inline RiskComparison verify_prop2_dependent(const DiscreteWorld& world,
                                             const std::function<double(std::size_t)>& scorer,
                                             const PointwiseLoss& loss) {
  RiskComparison out;
  for (std::size_t i = 0; i < world.points.size(); ++i) {
    const auto& pt = world.points[i];
    if (pt.p_o1 < 1e-3)
      throw NumericError("verify_prop2: observation probability not bounded away from zero");
    const double s = scorer(i);
    double lhs = 0.0;
    double rhs = 0.0;
    for (int o = 0; o <= 1; ++o) {
      const double po = o == 1 ? pt.p_o1 : 1.0 - pt.p_o1;
      const double pr1 = o == 1 ? pt.p_r_o1 : pt.p_r_o0;
      for (int r = 0; r <= 1; ++r) {
        const double pr = r == 1 ? pr1 : 1.0 - pr1;
        lhs += pr * po * loss(s, r * o) / pt.p_o1;
        rhs += pr * po * loss(s, r);
      }
    }
    out.ipw_expectation += pt.p_x * lhs;
    out.relevance_risk += pt.p_x * rhs;
  }
  out.residual = std::abs(out.ipw_expectation - out.relevance_risk);
  return out;
}

// --- popularity identity -----------------------------------------------------

// World with one previous impression of the same item: history relevance HR
// and history observation HO, history click HC = HR & HO, with HR and HO
// independent given (R, x). The factorization precondition
// P(HC|.) = P(HR|.) P(HO|.) must hold both marginally and given R.
struct HistoryWorldPoint {
  double p_x = 1.0;
  double p_r1 = 0.5;           // P(R=1 | x)
  double p_hr_given_r[2] = {0.5, 0.5};  // P(HR=1 | R=r, x)
  double p_ho_given_r[2] = {0.5, 0.5};  // P(HO=1 | R=r, x)
};

struct HistoryWorld {
  std::vector<HistoryWorldPoint> points;
};

struct PopularityReport {
  double max_residual = 0.0;
};

inline PopularityReport verify_popularity_identity(const HistoryWorld& world,
                                                   double precondition_tol = 1e-9) {
  PopularityReport out;
  for (const auto& pt : world.points) {
    const double pr[2] = {1.0 - pt.p_r1, pt.p_r1};

    // Enumerate the joint over (R, HR, HO).
    double p_hc1 = 0.0, p_hr1 = 0.0, p_ho1 = 0.0;
    double p_r1_hc1 = 0.0, p_r1_hr1 = 0.0, p_r1_ho1 = 0.0;
    for (int r = 0; r <= 1; ++r) {
      for (int hr = 0; hr <= 1; ++hr) {
        for (int ho = 0; ho <= 1; ++ho) {
          const double phr = hr == 1 ? pt.p_hr_given_r[r] : 1.0 - pt.p_hr_given_r[r];
          const double pho = ho == 1 ? pt.p_ho_given_r[r] : 1.0 - pt.p_ho_given_r[r];
          const double p = pr[r] * phr * pho;
          const int hc = hr & ho;
          if (hc) p_hc1 += p;
          if (hr) p_hr1 += p;
          if (ho) p_ho1 += p;
          if (r == 1) {
            if (hc) p_r1_hc1 += p;
            if (hr) p_r1_hr1 += p;
            if (ho) p_r1_ho1 += p;
          }
        }
      }
    }

    // Precondition: history clicks factor into history relevance times
    // history observation. Given R it holds by construction; marginally it
    // constrains the world and can fail.
    if (std::abs(p_hc1 - p_hr1 * p_ho1) > precondition_tol)
      throw NumericError("verify_popularity_identity: world violates the history factorization");

    if (p_hc1 <= 0.0 || p_hr1 <= 0.0 || p_ho1 <= 0.0 || pt.p_r1 <= 0.0)
      throw NumericError("verify_popularity_identity: degenerate world (zero-probability event)");

    const double lhs = p_r1_hc1 / p_hc1;                          // P(R=1 | HC=1, x)
    const double p_r_given_ho = p_r1_ho1 / p_ho1;                 // P(R=1 | HO=1, x)
    const double p_r_given_hr = p_r1_hr1 / p_hr1;                 // P(R=1 | HR=1, x)
    const double rhs = p_r_given_ho / pt.p_r1 * p_r_given_hr;
    out.max_residual = std::max(out.max_residual, std::abs(lhs - rhs));
  }
  return out;
}

// --- random world generators -------------------------------------------------

// Probabilities kept in [0.05, 0.95] so denominators stay comfortably
// positive; dependent points get a gap of at least 0.01 so the zero-tests
// have no ambiguous middle ground.
inline DiscreteWorld random_world(Rng& rng, std::size_t n_points, bool independent) {
  DiscreteWorld w;
  w.points.resize(n_points);
  double mass = 0.0;
  for (auto& pt : w.points) {
    pt.p_x = rng.uniform(0.1, 1.0);
    mass += pt.p_x;
    pt.p_o1 = rng.uniform(0.05, 0.95);
    pt.p_r_o1 = rng.uniform(0.05, 0.95);
    if (independent) {
      pt.p_r_o0 = pt.p_r_o1;
    } else {
      double gap = rng.uniform(0.01, 0.5) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
      pt.p_r_o0 = clamp(pt.p_r_o1 + gap, 0.05, 0.95);
      if (std::abs(pt.p_r_o0 - pt.p_r_o1) < 0.01)
        pt.p_r_o0 = pt.p_r_o1 > 0.5 ? pt.p_r_o1 - 0.01 : pt.p_r_o1 + 0.01;
    }
  }
  for (auto& pt : w.points) pt.p_x /= mass;
  return w;
}

// Mixed worlds: each point independently chooses to be dependent or not.
inline DiscreteWorld random_mixed_world(Rng& rng, std::size_t n_points) {
  DiscreteWorld w;
  w.points.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const auto one = random_world(rng, 1, rng.bernoulli(0.5));
    w.points.push_back(one.points[0]);
  }
  double mass = 0.0;
  for (auto& pt : w.points) mass += pt.p_x;
  for (auto& pt : w.points) pt.p_x /= mass;
  return w;
}

inline std::vector<IndepWorldPoint> random_indep_world(Rng& rng, std::size_t n_points) {
  std::vector<IndepWorldPoint> w(n_points);
  double mass = 0.0;
  for (auto& pt : w) {
    pt.p_x = rng.uniform(0.1, 1.0);
    mass += pt.p_x;
    pt.p_o1 = rng.uniform(0.05, 0.95);
    pt.p_r1 = rng.uniform(0.05, 0.95);
  }
  for (auto& pt : w) pt.p_x /= mass;
  return w;
}

// Eq.-consistent history worlds: the factorization precondition pins the
// covariance between the two history channels to zero, so each point zeroes
// one of the two gaps (which one is a coin flip).
inline HistoryWorld random_history_world(Rng& rng, std::size_t n_points) {
  HistoryWorld w;
  w.points.resize(n_points);
  double mass = 0.0;
  for (auto& pt : w.points) {
    pt.p_x = rng.uniform(0.1, 1.0);
    mass += pt.p_x;
    pt.p_r1 = rng.uniform(0.05, 0.95);
    pt.p_hr_given_r[0] = rng.uniform(0.05, 0.95);
    pt.p_hr_given_r[1] = rng.uniform(0.05, 0.95);
    pt.p_ho_given_r[0] = rng.uniform(0.05, 0.95);
    pt.p_ho_given_r[1] = rng.uniform(0.05, 0.95);
    if (rng.bernoulli(0.5)) {
      pt.p_hr_given_r[0] = pt.p_hr_given_r[1];
    } else {
      pt.p_ho_given_r[0] = pt.p_ho_given_r[1];
    }
  }
  for (auto& pt : w.points) pt.p_x /= mass;
  return w;
}

}  // namespace inforank::oracle

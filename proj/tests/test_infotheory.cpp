#include <catch2/catch_amalgamated.hpp>

#include "inforank/infotheory.hpp"
#include "inforank/oracle.hpp"

using namespace inforank;
using infotheory::PointwiseHeads;

TEST_CASE("cmi is zero under tied conditionals") {
  for (double q : {0.1, 0.5, 0.9}) {
    CHECK(infotheory::cmi_pointwise({0.7, 0.7, q}) == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("cmi matches the joint-distribution evaluation") {
  // Frozen from the enumeration oracle: 0.9 ln 1.8 + 0.1 ln 0.2.
  const double expected = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(infotheory::cmi_pointwise({0.9, 0.1, 0.5}) == Catch::Approx(expected).margin(1e-12));
  CHECK(infotheory::cmi_pointwise({0.9, 0.1, 0.5}) ==
        Catch::Approx(oracle::brute_force_cmi(0.9, 0.1, 0.5)).margin(1e-12));

  Rng rng(101);
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(0.001, 0.999);
    const double b = rng.uniform(0.001, 0.999);
    const double q = rng.uniform(0.001, 0.999);
    const double impl = infotheory::cmi_pointwise({a, b, q});
    const double ref = oracle::brute_force_cmi(a, b, q);
    REQUIRE(std::abs(impl - ref) <= 1e-12);
  }
}

TEST_CASE("cmi is non-negative on random inputs") {
  Rng rng(7);
  for (int i = 0; i < 200000; ++i) {
    const PointwiseHeads h{rng.uniform(), rng.uniform(), rng.uniform()};
    REQUIRE(infotheory::cmi_pointwise(h) >= 0.0);
  }
}

// The CMI is quadratic in the conditional gap, so gaps inside
// (1e-6, ~1e-4) sit below the 1e-9 CMI resolution while still registering
// on the |gap| scale. Zero-vs-nonzero classification is only meaningful
// outside that band; the generator draws exact ties or gaps >= 1e-3.
TEST_CASE("cmi vanishes exactly when the conditional gap vanishes") {
  Rng rng(13);
  for (int i = 0; i < 100000; ++i) {
    PointwiseHeads h;
    h.p_o1 = rng.uniform(0.01, 0.99);
    h.p_r_given_o1 = rng.uniform(0.01, 0.99);
    if (i % 2 == 0) {
      h.p_r_given_o0 = h.p_r_given_o1;
    } else {
      h.p_r_given_o0 = rng.uniform(0.01, 0.99);
      if (std::abs(h.p_r_given_o0 - h.p_r_given_o1) < 1e-3)
        h.p_r_given_o0 = clamp(h.p_r_given_o1 + (rng.bernoulli(0.5) ? 1e-3 : -1e-3), 0.005, 0.995);
    }
    const bool cmi_zero = infotheory::cmi_pointwise(h) <= 1e-9;
    const bool gap_zero = infotheory::delta_ci_pointwise(h) <= 1e-6;
    REQUIRE(cmi_zero == gap_zero);
  }
}

TEST_CASE("cmi is symmetric under observation relabeling") {
  Rng rng(19);
  for (int i = 0; i < 20000; ++i) {
    const double a = rng.uniform(0.01, 0.99);
    const double b = rng.uniform(0.01, 0.99);
    const double q = rng.uniform(0.01, 0.99);
    const double lhs = infotheory::cmi_pointwise({a, b, q});
    const double rhs = infotheory::cmi_pointwise({b, a, 1.0 - q});
    REQUIRE(std::abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("cmi gradient matches central finite differences") {
  Rng rng(23);
  const double step = 1e-5;
  for (int i = 0; i < 2000; ++i) {
    PointwiseHeads h{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    if (std::abs(h.p_r_given_o1 - h.p_r_given_o0) < 0.01) continue;  // away from the clip
    const auto g = infotheory::cmi_pointwise_grad(h);
    const auto fd = [&](double PointwiseHeads::* field, double analytic) {
      PointwiseHeads hi = h, lo = h;
      hi.*field += step;
      lo.*field -= step;
      const double est =
          (infotheory::cmi_pointwise(hi) - infotheory::cmi_pointwise(lo)) / (2 * step);
      const double denom = std::max({std::abs(est), std::abs(analytic), 1e-8});
      REQUIRE(std::abs(est - analytic) / denom < 1e-4);
    };
    fd(&PointwiseHeads::p_r_given_o1, g.d_p_r_given_o1);
    fd(&PointwiseHeads::p_r_given_o0, g.d_p_r_given_o0);
    fd(&PointwiseHeads::p_o1, g.d_p_o1);
  }
}

TEST_CASE("cmi_batch averages pointwise values") {
  const PointwiseHeads h1{0.9, 0.1, 0.5};
  const PointwiseHeads h2{0.3, 0.8, 0.2};
  const double v1 = infotheory::cmi_pointwise(h1);
  const double v2 = infotheory::cmi_pointwise(h2);
  CHECK(infotheory::cmi_batch({h1}) == Catch::Approx(v1).margin(1e-15));
  CHECK(infotheory::cmi_batch({h1, h2}) == Catch::Approx((v1 + v2) / 2).margin(1e-15));
  CHECK(infotheory::cmi_batch({{0.4, 0.4, 0.7}, {0.6, 0.6, 0.1}}) ==
        Catch::Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(infotheory::cmi_batch({}), NumericError);
}

TEST_CASE("delta_ci pointwise and mean") {
  CHECK(infotheory::delta_ci_pointwise({0.9, 0.1, 0.3}) == Catch::Approx(0.8).margin(1e-15));
  CHECK(infotheory::delta_ci_pointwise({0.4, 0.4, 0.3}) == Catch::Approx(0.0).margin(1e-15));
  CHECK(infotheory::delta_ci_mean({{0.9, 0.1, 0.5}}) == Catch::Approx(0.8).margin(1e-15));
  CHECK(infotheory::delta_ci_mean({{0.9, 0.1, 0.5}, {0.5, 0.5, 0.5}}) ==
        Catch::Approx(0.4).margin(1e-15));
  CHECK_THROWS_AS(infotheory::delta_ci_mean({}), NumericError);
}

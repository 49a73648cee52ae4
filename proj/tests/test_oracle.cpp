#include <catch2/catch_amalgamated.hpp>

#include "inforank/infotheory.hpp"
#include "inforank/oracle.hpp"

using namespace inforank;

TEST_CASE("the three independence statements agree on constructed worlds") {
  oracle::DiscreteWorld tied;
  tied.points = {{0.5, 0.3, 0.7, 0.7}, {0.5, 0.9, 0.2, 0.2}};
  for (const auto& row : oracle::check_prop1(tied, 1e-9)) {
    CHECK(row.agree);
    CHECK(std::abs(row.gap) <= 1e-15);
    CHECK(std::abs(row.cmi) <= 1e-12);
    CHECK(row.delta_ci <= 1e-15);
  }

  oracle::DiscreteWorld gapped;
  gapped.points = {{1.0, 0.5, 0.9, 0.1}};
  const auto rows = oracle::check_prop1(gapped, 1e-9);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].agree);
  CHECK(rows[0].gap == Catch::Approx(0.8));
  CHECK(rows[0].cmi > 1e-3);
  CHECK(rows[0].delta_ci == Catch::Approx(0.8));
}

TEST_CASE("the three independence statements agree on 1000 random worlds") {
  Rng rng(31);
  std::size_t total = 0, agreed = 0;
  for (int w = 0; w < 1000; ++w) {
    const auto world = oracle::random_mixed_world(rng, 8);
    for (const auto& row : oracle::check_prop1(world, 1e-9)) {
      ++total;
      agreed += row.agree ? 1 : 0;
    }
  }
  CHECK(total == 8000);
  CHECK(agreed == total);
}

TEST_CASE("click factorization residual vanishes exactly under independence") {
  Rng rng(37);
  for (int w = 0; w < 300; ++w) {
    CHECK(oracle::verify_click_factorization(oracle::random_world(rng, 5, true)) <= 1e-12);
    CHECK(oracle::verify_click_factorization(oracle::random_world(rng, 5, false)) > 1e-12);
  }

  // Gap 0.8 with even observation odds: residual = q(1-q)|gap| = 0.2.
  oracle::DiscreteWorld dependent;
  dependent.points = {{1.0, 0.5, 0.9, 0.1}};
  CHECK(oracle::verify_click_factorization(dependent) == Catch::Approx(0.2).margin(1e-12));

  // Degenerate observation hides any dependence.
  oracle::DiscreteWorld always_observed;
  always_observed.points = {{1.0, 1.0, 0.9, 0.1}};
  CHECK(oracle::verify_click_factorization(always_observed) <= 1e-12);
}

namespace {

const oracle::PointwiseLoss kSquaredPositives = [](double s, int label) {
  return label == 1 ? (1.0 - s) * (1.0 - s) : 0.0;
};

}  // namespace

TEST_CASE("weighted click risk is unbiased for the relevance risk") {
  // Certain observation: weighting by 1 changes nothing.
  std::vector<oracle::IndepWorldPoint> certain = {{0.5, 1.0, 0.3}, {0.5, 1.0, 0.8}};
  const auto trivial = oracle::verify_prop2(
      certain, [](std::size_t i) { return 0.25 * static_cast<double>(i + 1); },
      kSquaredPositives);
  CHECK(trivial.residual <= 1e-15);

  Rng rng(41);
  for (int w = 0; w < 100; ++w) {
    const auto world = oracle::random_indep_world(rng, 6);
    Vec weights(3), feats(world.size());
    for (auto& v : weights) v = rng.uniform(-1.0, 1.0);
    for (auto& v : feats) v = rng.uniform(-1.0, 1.0);
    // Random linear scorer over a per-point feature.
    const auto scorer = [&](std::size_t i) {
      return weights[0] + weights[1] * feats[i] + weights[2] * feats[i] * feats[i];
    };
    const auto cmp = oracle::verify_prop2(world, scorer, kSquaredPositives);
    REQUIRE(cmp.residual <= 1e-12);
    const auto abs_loss = [](double s, int label) {
      return label == 1 ? std::abs(1.0 - s) : 0.0;
    };
    REQUIRE(oracle::verify_prop2(world, scorer, abs_loss).residual <= 1e-12);
  }
}

TEST_CASE("dependence generally breaks the weighted-risk identity") {
  Rng rng(43);
  int nonzero = 0;
  for (int w = 0; w < 50; ++w) {
    const auto world = oracle::random_world(rng, 6, false);
    const auto cmp = oracle::verify_prop2_dependent(
        world, [](std::size_t) { return 0.4; }, kSquaredPositives);
    if (cmp.residual > 1e-9) ++nonzero;
  }
  CHECK(nonzero == 50);
}

TEST_CASE("weighted risk rejects near-zero propensities") {
  std::vector<oracle::IndepWorldPoint> world = {{1.0, 5e-4, 0.5}};
  CHECK_THROWS_AS(
      oracle::verify_prop2(world, [](std::size_t) { return 0.5; }, kSquaredPositives),
      NumericError);
}

TEST_CASE("popularity identity holds on factorization-consistent worlds") {
  // History channels independent of the current relevance: the correction
  // ratio is 1 and both sides reduce to the history-relevance posterior.
  oracle::HistoryWorld plain;
  plain.points.push_back({1.0, 0.6, {0.4, 0.4}, {0.7, 0.7}});
  CHECK(oracle::verify_popularity_identity(plain).max_residual <= 1e-15);

  Rng rng(47);
  for (int w = 0; w < 100; ++w) {
    const auto world = oracle::random_history_world(rng, 6);
    REQUIRE(oracle::verify_popularity_identity(world).max_residual <= 1e-12);
  }
}

TEST_CASE("popularity identity rejects worlds violating the factorization") {
  oracle::HistoryWorldPoint bad;
  bad.p_x = 1.0;
  bad.p_r1 = 0.5;
  bad.p_hr_given_r[0] = 0.2;
  bad.p_hr_given_r[1] = 0.9;
  bad.p_ho_given_r[0] = 0.3;
  bad.p_ho_given_r[1] = 0.8;
  oracle::HistoryWorld world;
  world.points.push_back(bad);
  CHECK_THROWS_AS(oracle::verify_popularity_identity(world), NumericError);
}

TEST_CASE("brute-force cmi agrees with the regularizer and its symmetries") {
  CHECK(oracle::brute_force_cmi(0.5, 0.5, 0.3) == Catch::Approx(0.0).margin(1e-12));
  Rng rng(53);
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(0.001, 0.999);
    const double b = rng.uniform(0.001, 0.999);
    const double q = rng.uniform(0.001, 0.999);
    REQUIRE(std::abs(oracle::brute_force_cmi(a, b, q) -
                     infotheory::cmi_pointwise({a, b, q})) <= 1e-12);
  }
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.01, 0.99);
    const double b = rng.uniform(0.01, 0.99);
    const double q = rng.uniform(0.01, 0.99);
    REQUIRE(std::abs(oracle::brute_force_cmi(a, b, q) -
                     oracle::brute_force_cmi(b, a, 1.0 - q)) <= 1e-12);
  }
}

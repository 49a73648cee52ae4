#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "inforank/core_data.hpp"

using namespace inforank;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("binarize_relevance matches the closed form") {
  CHECK(binarize_relevance(0, 4, 0.1) == Catch::Approx(0.1).margin(1e-15));
  CHECK(binarize_relevance(4, 4, 0.1) == Catch::Approx(1.0).margin(1e-15));
  CHECK(binarize_relevance(2, 4, 0.1) == Catch::Approx(0.28).margin(1e-12));

  // Full table for y in 0..4, epsilon 0.1, against a direct evaluation.
  const double expected[5] = {0.1, 0.16, 0.28, 0.52, 1.0};
  for (int y = 0; y <= 4; ++y) {
    const double direct = 0.1 + 0.9 * (std::pow(2.0, y) - 1.0) / 15.0;
    CHECK(binarize_relevance(y, 4, 0.1) == Catch::Approx(direct).margin(1e-15));
    CHECK(binarize_relevance(y, 4, 0.1) == Catch::Approx(expected[y]).margin(1e-12));
  }
}

TEST_CASE("binarize_relevance is monotone and anchored") {
  for (int y_max : {1, 2, 4, 6}) {
    for (double eps : {0.0, 0.1, 0.3}) {
      double prev = -1.0;
      for (int y = 0; y <= y_max; ++y) {
        const double p = binarize_relevance(y, y_max, eps);
        CHECK(p >= prev);
        prev = p;
      }
      CHECK(binarize_relevance(0, y_max, eps) == Catch::Approx(eps).margin(1e-15));
      CHECK(binarize_relevance(y_max, y_max, eps) == Catch::Approx(1.0).margin(1e-15));
    }
  }
}

TEST_CASE("binarize_relevance rejects out-of-range labels") {
  CHECK_THROWS_AS(binarize_relevance(5, 4, 0.1), std::domain_error);
  CHECK_THROWS_AS(binarize_relevance(-1, 4, 0.1), std::domain_error);
  CHECK_THROWS_AS(binarize_relevance(1, 4, 1.0), std::domain_error);
}

TEST_CASE("filter_dataset drops all-zero and overlong groups") {
  Dataset ds;
  ds.y_max = 2;
  auto make_group = [](int qid, std::vector<int> labels) {
    QueryGroup g;
    g.query_id = qid;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      Document d;
      d.doc_id = static_cast<int>(i);
      d.graded_relevance = labels[i];
      g.documents.push_back(d);
    }
    return g;
  };
  ds.groups.push_back(make_group(1, {0, 0, 0}));
  ds.groups.push_back(make_group(2, {0, 2}));
  QueryGroup longg = make_group(3, {1});
  longg.documents.resize(51, longg.documents[0]);
  ds.groups.push_back(longg);

  const auto filtered = filter_dataset(ds, 50);
  REQUIRE(filtered.groups.size() == 1);
  CHECK(filtered.groups[0].query_id == 2);
  CHECK(filtered.groups[0].documents.size() == 2);

  // Idempotent.
  const auto twice = filter_dataset(filtered, 50);
  CHECK(twice.groups.size() == filtered.groups.size());
}

TEST_CASE("sparse text loader parses the line format") {
  FeatureSchema schema(3, FeatureSlot{SlotKind::real, 0});
  const auto path = write_temp("inforank_sparse_ok.txt",
                               "2 qid:1 1:0.5 3:1.0\n"
                               "0 qid:1 2:2.5  # trailing comment\n"
                               "1 qid:7 1:-1\n");
  const auto ds = load_sparse_text(path, schema, 4);
  REQUIRE(ds.groups.size() == 2);
  CHECK(ds.groups[0].query_id == 1);
  CHECK(ds.groups[0].documents[0].graded_relevance == 2);
  CHECK(ds.groups[0].documents[0].features == Vec{0.5, 0.0, 1.0});
  CHECK(ds.groups[0].documents[1].features == Vec{0.0, 2.5, 0.0});
  CHECK(ds.groups[1].query_id == 7);
}

TEST_CASE("sparse text loader reports malformed lines") {
  FeatureSchema schema(3, FeatureSlot{SlotKind::real, 0});
  const auto bad_label = write_temp("inforank_sparse_bad1.txt", "x qid:1 1:0.5\n");
  CHECK_THROWS_AS(load_sparse_text(bad_label, schema, 4), ParseError);
  const auto bad_idx = write_temp("inforank_sparse_bad2.txt", "1 qid:1 9:0.5\n");
  CHECK_THROWS_AS(load_sparse_text(bad_idx, schema, 4), ParseError);
  const auto bad_order = write_temp("inforank_sparse_bad3.txt", "1 qid:1 2:0.5 1:0.1\n");
  CHECK_THROWS_AS(load_sparse_text(bad_order, schema, 4), ParseError);

  const auto empty = write_temp("inforank_sparse_empty.txt", "");
  CHECK(load_sparse_text(empty, schema, 4).groups.empty());
}

TEST_CASE("sparse text round-trips through save and load") {
  SynthConfig cfg;
  cfg.n_queries = 12;
  cfg.docs_per_query = 6;
  cfg.n_items = 10;
  const auto ds = generate_synthetic(cfg, 11);
  const auto path = write_temp("inforank_roundtrip.txt", "");
  // Synthetic user features are not part of the flat format; compare the
  // document payload only.
  save_sparse_text(ds, path);
  const auto back = load_sparse_text(path, ds.doc_schema, ds.y_max);
  REQUIRE(back.groups.size() == ds.groups.size());
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    REQUIRE(back.groups[g].documents.size() == ds.groups[g].documents.size());
    for (std::size_t i = 0; i < ds.groups[g].documents.size(); ++i) {
      CHECK(back.groups[g].documents[i].graded_relevance ==
            ds.groups[g].documents[i].graded_relevance);
      for (std::size_t k = 0; k < ds.doc_schema.size(); ++k)
        CHECK(back.groups[g].documents[i].features[k] ==
              Catch::Approx(ds.groups[g].documents[i].features[k]).margin(1e-9));
    }
  }
}

TEST_CASE("binary cache round-trips exactly") {
  SynthConfig cfg;
  cfg.n_queries = 8;
  cfg.docs_per_query = 5;
  cfg.n_items = 9;
  const auto ds = generate_synthetic(cfg, 3);
  const auto path = write_temp("inforank_cache.bin", "");
  save_dataset_cache(ds, path);
  const auto back = load_dataset_cache(path);
  REQUIRE(back.groups.size() == ds.groups.size());
  CHECK(back.y_max == ds.y_max);
  CHECK(back.user_dim == ds.user_dim);
  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    CHECK(back.groups[g].user_features == ds.groups[g].user_features);
    REQUIRE(back.groups[g].documents.size() == ds.groups[g].documents.size());
    for (std::size_t i = 0; i < ds.groups[g].documents.size(); ++i) {
      CHECK(back.groups[g].documents[i].features == ds.groups[g].documents[i].features);
      CHECK(back.groups[g].documents[i].item_id == ds.groups[g].documents[i].item_id);
    }
  }
}

TEST_CASE("generate_synthetic is a pure function of config and seed") {
  SynthConfig cfg;
  cfg.n_queries = 2;
  cfg.docs_per_query = 3;
  cfg.n_items = 5;
  const auto a = generate_synthetic(cfg, 7);
  const auto b = generate_synthetic(cfg, 7);
  REQUIRE(a.groups.size() == b.groups.size());
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    CHECK(a.groups[g].user_features == b.groups[g].user_features);
    for (std::size_t i = 0; i < a.groups[g].documents.size(); ++i) {
      CHECK(a.groups[g].documents[i].features == b.groups[g].documents[i].features);
      CHECK(a.groups[g].documents[i].graded_relevance ==
            b.groups[g].documents[i].graded_relevance);
    }
  }
  const auto c = generate_synthetic(cfg, 8);
  bool any_diff = false;
  for (std::size_t g = 0; g < a.groups.size() && !any_diff; ++g)
    any_diff = a.groups[g].user_features != c.groups[g].user_features;
  CHECK(any_diff);
}

TEST_CASE("generate_synthetic quantile grades cover ~20% each") {
  SynthConfig cfg;
  cfg.n_queries = 500;
  cfg.docs_per_query = 20;
  cfg.n_items = 200;
  cfg.y_max = 4;
  const auto ds = generate_synthetic(cfg, 42);
  std::vector<int> counts(5, 0);
  int total = 0;
  for (const auto& g : ds.groups)
    for (const auto& d : g.documents) {
      ++counts[static_cast<std::size_t>(d.graded_relevance)];
      ++total;
    }
  REQUIRE(total == 10000);
  for (int grade = 0; grade <= 4; ++grade) {
    const double share = static_cast<double>(counts[static_cast<std::size_t>(grade)]) / total;
    CHECK(share == Catch::Approx(0.2).margin(0.02));
  }
}

TEST_CASE("generate_synthetic reuses items across queries") {
  SynthConfig cfg;
  cfg.n_queries = 30;
  cfg.docs_per_query = 10;
  cfg.n_items = 15;
  const auto ds = generate_synthetic(cfg, 5);
  std::map<int, int> freq;
  for (const auto& g : ds.groups)
    for (const auto& d : g.documents) ++freq[d.item_id];
  int max_freq = 0;
  for (const auto& [id, f] : freq) max_freq = std::max(max_freq, f);
  CHECK(max_freq > 1);
}

TEST_CASE("generate_synthetic rejects bad configs") {
  SynthConfig cfg;
  cfg.docs_per_query = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), ConfigError);
}

#pragma once

#include <string>

#include "inforank/common.hpp"
#include "inforank/core_data.hpp"

namespace inforank::click_sim {

// Layout of the combined input: [user reals | document slots | position
// code]. The position is a categorical slot with one code per rank
// (rank r -> code r-1).
inline FeatureSchema combined_schema(const FeatureSchema& doc_schema, int user_dim, int max_rank) {
  FeatureSchema schema;
  for (int i = 0; i < user_dim; ++i) schema.push_back({SlotKind::real, 0});
  schema.insert(schema.end(), doc_schema.begin(), doc_schema.end());
  schema.push_back({SlotKind::categorical, max_rank});
  return schema;
}

inline Vec build_feature_vector(const Vec& user_features, const Document& doc, int position,
                                int max_rank) {
  if (position < 1) throw NumericError("build_feature_vector: position must be >= 1");
  if (position > max_rank)
    throw NumericError("build_feature_vector: position " + std::to_string(position) +
                       " exceeds the position vocabulary (" + std::to_string(max_rank) + ")");
  Vec x;
  x.reserve(user_features.size() + doc.features.size() + 1);
  x.insert(x.end(), user_features.begin(), user_features.end());
  x.insert(x.end(), doc.features.begin(), doc.features.end());
  x.push_back(static_cast<double>(position - 1));
  return x;
}

}  // namespace inforank::click_sim

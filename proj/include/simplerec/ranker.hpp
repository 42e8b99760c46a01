/*
 * Copyright 2026 The SimpleRec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <map>
#include <unordered_set>
#include <vector>

#include "simplerec/gnn.hpp"

namespace simplerec {

struct RankedItem {
  NodeId item = -1;
  double score = 0.0;
};

struct RankedList {
  NodeId user = -1;
  std::vector<RankedItem> items; // scores non-increasing, ids break ties
};

// Inductive inference for a user absent from the training graph: propagate
// L layers over the user's revealed edges against the frozen warm-graph
// embeddings. Only the user's outgoing edges enter the computation, so every
// pre-existing node keeps its training-view embedding and no parameter is
// touched. A cold user whose revealed set equals a warm user's training
// items therefore reproduces that warm user's embedding exactly.
Eigen::VectorXd embed_cold_user(const std::vector<NodeId>& revealed_items,
                                const ModelParams& params, const CollabKG& kg,
                                const LayerEmbeddings& warm_embeddings);

/// Convenience wrapper computing the warm forward internally (full
/// neighborhoods on the training view).
Eigen::VectorXd embed_cold_user(const std::vector<NodeId>& revealed_items,
                                const ModelParams& params, const CollabKG& kg,
                                const SplitSpec& split, const FeatureMatrix& features);

/// Top-k items by dot-product score against `item_star` (one column per
/// item, items 0..n_items-1), minus exclusions. Ties break by ascending id.
RankedList rank_items(const Eigen::VectorXd& user_embedding, const Eigen::MatrixXd& item_star,
                      const std::unordered_set<NodeId>& exclude, int k);

enum class RecommendMode { Warm, Cold };

struct RecommendResult {
  std::map<NodeId, RankedList> lists;
  std::map<NodeId, std::string> errors; // users that could not be ranked
};

// Warm mode ranks every warm user with training+validation items excluded;
// cold mode embeds each cold user from its revealed items and excludes only
// those. Model parameters are read-only throughout.
RecommendResult recommend_all(const ModelParams& params, const CollabKG& kg,
                              const SplitSpec& split, const FeatureMatrix& features, int k,
                              RecommendMode mode);

void write_ranked_lists(const std::string& path, const CollabKG& kg,
                        const std::map<NodeId, RankedList>& lists);

}  // namespace simplerec

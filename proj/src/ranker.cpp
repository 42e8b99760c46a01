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

#include "simplerec/ranker.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

namespace simplerec {

Eigen::VectorXd embed_cold_user(const std::vector<NodeId>& revealed_items,
                                const ModelParams& params, const CollabKG& kg,
                                const LayerEmbeddings& warm_embeddings) {
  if (revealed_items.empty())
    throw DataError("embed_cold_user: a cold user needs at least one revealed interaction");

  std::vector<NodeId> items = revealed_items;
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  std::vector<Triple> edges;
  const int rel = kg.interaction_relation();
  const NodeId placeholder = -1; // the user is not a graph node
  for (NodeId item : items) {
    if (item < 0 || item >= kg.num_items())
      throw DataError(fmt::format("embed_cold_user: unknown item id {}", item));
    edges.push_back({placeholder, rel, item});
  }

  const int d = params.config.d_prime;
  const int layers = params.config.layers;
  Eigen::VectorXd own = Eigen::VectorXd::Zero(d); // users have no layer-0 content
  Eigen::VectorXd star(d * layers);
  for (int l = 1; l <= layers; ++l) {
    const Eigen::MatrixXd& prev =
        l == 1 ? warm_embeddings.layer0 : warm_embeddings.layers[l - 2];
    const Eigen::VectorXd ego = aggregate_edges(own, edges, prev, l, params);
    own = combine(params.config.aggregator, own, ego, l, params);
    star.segment((l - 1) * d, d) = own;
  }
  return star;
}

Eigen::VectorXd embed_cold_user(const std::vector<NodeId>& revealed_items,
                                const ModelParams& params, const CollabKG& kg,
                                const SplitSpec& split, const FeatureMatrix& features) {
  const GraphView view =
      GraphView::training(kg, split, params.config.variant == ModelVariant::Bipartite);
  const LayerPlan plan = full_plan(view, params.config.layers);
  const LayerEmbeddings warm = forward(view, plan, encode_layer0(features, params), params);
  return embed_cold_user(revealed_items, params, kg, warm);
}

RankedList rank_items(const Eigen::VectorXd& user_embedding, const Eigen::MatrixXd& item_star,
                      const std::unordered_set<NodeId>& exclude, int k) {
  const int n_items = static_cast<int>(item_star.cols());
  std::vector<RankedItem> candidates;
  candidates.reserve(n_items);
  for (NodeId i = 0; i < n_items; ++i) {
    if (exclude.contains(i)) continue;
    candidates.push_back({i, user_embedding.dot(item_star.col(i))});
  }
  if (k > static_cast<int>(candidates.size()))
    throw ConfigError(fmt::format("rank_items: k={} exceeds {} candidates", k, candidates.size()));

  std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end(),
                    [](const RankedItem& a, const RankedItem& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.item < b.item;
                    });
  candidates.resize(k);
  RankedList list;
  list.items = std::move(candidates);
  return list;
}

RecommendResult recommend_all(const ModelParams& params, const CollabKG& kg,
                              const SplitSpec& split, const FeatureMatrix& features, int k,
                              RecommendMode mode) {
  const GraphView view =
      GraphView::training(kg, split, params.config.variant == ModelVariant::Bipartite);
  const LayerPlan plan = full_plan(view, params.config.layers);
  const LayerEmbeddings warm = forward(view, plan, encode_layer0(features, params), params);
  const Eigen::MatrixXd star = warm.concatenated();
  const Eigen::MatrixXd item_star = star.leftCols(kg.num_items());

  RecommendResult result;
  const auto& users = mode == RecommendMode::Warm ? split.warm_users : split.cold_users;
  for (const NodeId u : users) {
    try {
      const UserSplit& us = split.per_user.at(u);
      std::unordered_set<NodeId> exclude(us.train.begin(), us.train.end());
      Eigen::VectorXd e_user;
      if (mode == RecommendMode::Warm) {
        exclude.insert(us.validation.begin(), us.validation.end());
        e_user = final_embedding(warm, u);
      } else {
        e_user = embed_cold_user(us.train, params, kg, warm);
      }
      RankedList list = rank_items(e_user, item_star, exclude, k);
      list.user = u;
      result.lists.emplace(u, std::move(list));
    } catch (const std::exception& e) {
      result.errors.emplace(u, e.what());
    }
  }
  return result;
}

void write_ranked_lists(const std::string& path, const CollabKG& kg,
                        const std::map<NodeId, RankedList>& lists) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write recommendations to '{}'", path));
  out << "# user\trank\titem\tscore\n";
  for (const auto& [user, list] : lists) {
    for (std::size_t r = 0; r < list.items.size(); ++r)
      out << kg.node_key(user) << '\t' << r + 1 << '\t' << kg.node_key(list.items[r].item)
          << '\t' << fmt::format("{}", list.items[r].score) << '\n';
  }
}

}  // namespace simplerec

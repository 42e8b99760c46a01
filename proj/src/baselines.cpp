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

#include "simplerec/baselines.hpp"

#include <algorithm>

namespace simplerec {

PopularityTable toppop_fit(const std::vector<std::pair<NodeId, NodeId>>& training_interactions,
                           int item_count) {
  if (training_interactions.empty()) throw DataError("toppop_fit: empty training set");
  PopularityTable table;
  table.counts.assign(item_count, 0);
  for (const auto& [user, item] : training_interactions) ++table.counts[item];
  table.order.resize(item_count);
  for (NodeId i = 0; i < item_count; ++i) table.order[i] = i;
  std::sort(table.order.begin(), table.order.end(), [&](NodeId a, NodeId b) {
    if (table.counts[a] != table.counts[b]) return table.counts[a] > table.counts[b];
    return a < b;
  });
  return table;
}

RankedList toppop_rank(const PopularityTable& popularity, NodeId user,
                       const std::unordered_set<NodeId>& seen, bool exclude_seen, int k) {
  RankedList list;
  list.user = user;
  for (const NodeId item : popularity.order) {
    if (exclude_seen && seen.contains(item)) continue;
    list.items.push_back({item, static_cast<double>(popularity.counts[item])});
    if (static_cast<int>(list.items.size()) == k) break;
  }
  if (static_cast<int>(list.items.size()) < k)
    throw ConfigError("toppop_rank: k exceeds available items");
  return list;
}

}  // namespace simplerec

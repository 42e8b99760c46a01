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

#include <unordered_set>
#include <vector>

#include "simplerec/ckg.hpp"
#include "simplerec/ranker.hpp"

namespace simplerec {

/// Per-item interaction counts over the training pairs, indexed by item id.
struct PopularityTable {
  std::vector<int> counts;
  std::vector<NodeId> order; // items sorted by count desc, id asc
};

PopularityTable toppop_fit(const std::vector<std::pair<NodeId, NodeId>>& training_interactions,
                           int item_count);

// Naive mode (exclude_seen=false) hands every user the identical global
// top-k, which pins Cov@k to exactly k/|I|.
RankedList toppop_rank(const PopularityTable& popularity, NodeId user,
                       const std::unordered_set<NodeId>& seen, bool exclude_seen, int k);

}  // namespace simplerec

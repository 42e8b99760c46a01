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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "simplerec/ckg.hpp"

namespace simplerec {

struct SyntheticData {
  std::vector<InteractionRecord> interactions;
  std::vector<TripleRecord> triples;
  // key -> feature vector, for all items and entities
  std::vector<std::pair<std::string, std::vector<double>>> features;

  void write(const std::string& dir) const; // ratings.tsv, triples.tsv, features.tsv
};

struct SyntheticOptions {
  int interactions_per_user = 12; // +- jitter below
  int interaction_jitter = 3;
  double in_block_fraction = 0.85;
  int feature_dim = 40;
  double block_signal = 1.5;       // entity features
  double item_block_signal = 1.5;  // item features may carry a weaker indicator
  double feature_noise = 0.5;
  int entities_per_item = 3; // 2 via "described_by", rest via "related_to"
  // Fraction of each block's entities whose features indicate the wrong
  // block (feature-level label noise). When positive, "related_to" links
  // target exactly these entities, so relation identity filters all of them
  // while content only reveals the marked subset below.
  double decoy_entity_fraction = 0.0;
  // Portion of decoy entities carrying a recognizable marker on the last
  // feature channel. Content-conditioned gates can veto those; the rest are
  // only identifiable through the relation type.
  double decoy_marker_fraction = 0.6;
  double decoy_marker_strength = 2.5;
  // Within-block popularity skew: head_probability of each user's in-block
  // interactions land on the first head_fraction of the block's items. The
  // defaults reproduce a uniform draw; pushing head_probability up starves
  // tail items of interactions so their ranking has to lean on the KG.
  double head_fraction = 0.5;
  double head_probability = 0.5;
};

// Block-structured desk-scale fixture. Users in block b rate mostly items in
// block b; items link only to entities of their own block through two
// relation types; features carry a noisy block indicator. Blocks are
// assigned round-robin (index mod n_blocks), so counts need not divide
// evenly. Deterministic under seed.
SyntheticData generate_synthetic(int n_users, int n_items, int n_entities, int n_blocks,
                                 std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace simplerec

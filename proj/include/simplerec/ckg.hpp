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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "simplerec/errors.hpp"

namespace simplerec {

using NodeId = std::int32_t;

enum class NodeKind { Item, Entity, User };

struct Relation {
  std::string name;
  int inverse = -1;            // index of the paired inverse relation
  bool is_interaction = false; // true only for rated / rated_by
};

struct Triple {
  NodeId head = -1;
  int relation = -1;
  NodeId tail = -1;

  bool operator==(const Triple&) const = default;
};

struct InteractionRecord {
  std::string user;
  std::string item;
  double rating = 0.0;
};

struct TripleRecord {
  std::string head;
  std::string relation;
  std::string tail;
};

struct BuildOptions {
  // Dangling KG triples are those not connected to any item through the KG.
  // Dropped with a warning by default; error_on_dangling turns them fatal.
  bool error_on_dangling = false;
};

// Interaction file: user<TAB>item<TAB>rating[<TAB>timestamp]. Lines starting
// with '#' are skipped. If positive_threshold is set, records rated below it
// are dropped; otherwise every record counts as a positive interaction.
std::vector<InteractionRecord> load_interactions(
    const std::string& path, std::optional<double> positive_threshold = std::nullopt);

// Triple file: head<TAB>relation<TAB>tail. '#' lines skipped.
std::vector<TripleRecord> load_triples(const std::string& path);

// Immutable heterogeneous graph over items, entities, and users. Dense node
// ids are assigned items first, then entities, then users. Every edge is
// stored together with its inverse, so the per-head adjacency enumerates the
// full edge set and out-degree equals total degree.
class CollabKG {
public:
  static CollabKG build(const std::vector<InteractionRecord>& interactions,
                        const std::vector<TripleRecord>& triples,
                        const BuildOptions& options = {});

  int num_items() const { return n_items_; }
  int num_entities() const { return n_entities_; }
  int num_users() const { return n_users_; }
  int num_nodes() const { return n_items_ + n_entities_ + n_users_; }

  NodeId item_id(int i) const { return i; }
  NodeId entity_id(int e) const { return n_items_ + e; }
  NodeId user_id(int u) const { return n_items_ + n_entities_ + u; }

  NodeKind kind_of(NodeId v) const {
    if (v < n_items_) return NodeKind::Item;
    if (v < n_items_ + n_entities_) return NodeKind::Entity;
    return NodeKind::User;
  }

  const std::vector<Relation>& relations() const { return relations_; }
  int interaction_relation() const { return rel_rated_; }
  int inverse_interaction_relation() const { return rel_rated_by_; }

  /// All directed edges grouped by head, each head's edges sorted by
  /// (relation, tail). Inverse edges are separate entries.
  const std::vector<Triple>& edges() const { return edges_; }

  std::span<const Triple> neighbors(NodeId v) const {
    return {edges_.data() + offsets_[v], static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
  }

  int edge_offset(NodeId v) const { return offsets_[v]; }
  int degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  const std::string& node_key(NodeId v) const { return keys_[v]; }
  std::optional<NodeId> find_item(const std::string& key) const;
  std::optional<NodeId> find_user(const std::string& key) const;
  std::optional<NodeId> find_entity(const std::string& key) const;

  /// Positive interactions as (user, item) node-id pairs, input order.
  const std::vector<std::pair<NodeId, NodeId>>& interactions() const { return interactions_; }

  int dropped_dangling_triples() const { return n_dangling_dropped_; }
  int duplicate_records() const { return n_duplicates_; }

  void save(const std::string& dir) const;
  static CollabKG load(const std::string& dir);

private:
  int n_items_ = 0, n_entities_ = 0, n_users_ = 0;
  int rel_rated_ = -1, rel_rated_by_ = -1;
  std::vector<Relation> relations_;
  std::vector<Triple> edges_;
  std::vector<int> offsets_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, NodeId> item_index_, entity_index_, user_index_;
  std::vector<std::pair<NodeId, NodeId>> interactions_;
  int n_dangling_dropped_ = 0;
  int n_duplicates_ = 0;

  void finalize_edges(std::vector<Triple> directed);
};

struct UserSplit {
  std::vector<NodeId> train;      // revealed items for cold users
  std::vector<NodeId> validation; // empty for cold users
  std::vector<NodeId> test;
};

// Warm/cold user partition plus per-user interaction partition. Cold users'
// interactions never enter the training view; their train vector holds the
// items revealed at inference time.
struct SplitSpec {
  std::vector<NodeId> warm_users;
  std::vector<NodeId> cold_users;
  std::unordered_map<NodeId, UserSplit> per_user;
  std::vector<NodeId> excluded_users; // too few interactions to be cold candidates

  bool is_cold(NodeId u) const {
    for (NodeId c : cold_users)
      if (c == u) return true;
    return false;
  }
};

struct SplitOptions {
  double warm_train_fraction = 0.8;
  double warm_validation_fraction = 0.1;
  // warm test = remainder
};

SplitSpec split_cold_start(const CollabKG& kg, double cold_fraction, double reveal_fraction,
                           int min_interactions, std::uint64_t seed,
                           const SplitOptions& options = {});

/// Ego-network of `node`: all its typed edges if degree <= fanout, otherwise
/// a uniform sample without replacement of size fanout.
std::vector<Triple> sample_neighbors(const CollabKG& kg, NodeId node, int fanout,
                                     std::uint64_t seed);

// Edge-filtered read view of a CollabKG. The training view drops every
// cold-user interaction, warm validation/test interactions, and (for the
// bipartite ablation) all KG edges and entity nodes.
class GraphView {
public:
  static GraphView full(const CollabKG& kg, bool bipartite = false);
  static GraphView training(const CollabKG& kg, const SplitSpec& split, bool bipartite = false);

  const CollabKG& kg() const { return *kg_; }
  bool edge_active(int edge_index) const { return edge_active_[edge_index] != 0; }
  bool node_active(NodeId v) const { return node_active_[v] != 0; }

  /// Active triples of v, in adjacency order (sorted by relation then tail).
  std::vector<Triple> neighbors(NodeId v) const;

  int active_edge_count() const;
  /// Relation ids with at least one active edge, ascending.
  std::vector<int> active_relations() const;

private:
  const CollabKG* kg_ = nullptr;
  std::vector<char> edge_active_;
  std::vector<char> node_active_;
};

}  // namespace simplerec

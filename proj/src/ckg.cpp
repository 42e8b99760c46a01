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

#include "simplerec/ckg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <fmt/format.h>

#include "simplerec/rng.hpp"

namespace simplerec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_rating(const std::string& s, const std::string& path, int lineno) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(fmt::format("{}:{}: invalid rating '{}'", path, lineno, s));
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<InteractionRecord> load_interactions(const std::string& path,
                                                 std::optional<double> positive_threshold) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open interaction file '{}'", path));

  std::vector<InteractionRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 3 || fields[0].empty() || fields[1].empty())
      throw DataError(fmt::format("{}:{}: expected user<TAB>item<TAB>rating", path, lineno));
    const double rating = parse_rating(fields[2], path, lineno);
    if (positive_threshold && rating < *positive_threshold) continue;
    records.push_back({fields[0], fields[1], rating});
  }
  if (lineno == 0) throw DataError(fmt::format("interaction file '{}' is empty", path));
  return records;
}

std::vector<TripleRecord> load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open triple file '{}'", path));

  std::vector<TripleRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw DataError(fmt::format("{}:{}: expected head<TAB>relation<TAB>tail", path, lineno));
    records.push_back({fields[0], fields[1], fields[2]});
  }
  return records;
}

CollabKG CollabKG::build(const std::vector<InteractionRecord>& interactions,
                         const std::vector<TripleRecord>& triples,
                         const BuildOptions& options) {
  CollabKG kg;

  // Item and user vocabularies come from the interaction columns, first-seen
  // order. Entities are every other key occurring in the KG triples.
  std::unordered_map<std::string, int> item_order, user_order;
  std::vector<std::string> item_keys, user_keys;
  for (const auto& rec : interactions) {
    if (item_order.emplace(rec.item, static_cast<int>(item_keys.size())).second)
      item_keys.push_back(rec.item);
    if (user_order.emplace(rec.user, static_cast<int>(user_keys.size())).second)
      user_keys.push_back(rec.user);
  }

  for (const auto& t : triples) {
    for (const std::string* key : {&t.head, &t.tail}) {
      if (user_order.contains(*key) && !item_order.contains(*key))
        throw DataError(fmt::format("triple references user key '{}'", *key));
    }
  }

  // A KG key is dangling when it cannot reach any item through the triple
  // set. Union-find over the triples, then test each component for an item.
  std::unordered_map<std::string, int> kg_index;
  std::vector<std::string> kg_keys;
  auto kg_id = [&](const std::string& key) {
    auto [it, inserted] = kg_index.emplace(key, static_cast<int>(kg_keys.size()));
    if (inserted) kg_keys.push_back(key);
    return it->second;
  };
  std::vector<std::pair<int, int>> triple_ids;
  triple_ids.reserve(triples.size());
  for (const auto& t : triples) triple_ids.emplace_back(kg_id(t.head), kg_id(t.tail));

  std::vector<int> parent(kg_keys.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [h, t] : triple_ids) parent[find(h)] = find(t);

  std::vector<char> component_has_item(kg_keys.size(), 0);
  for (std::size_t i = 0; i < kg_keys.size(); ++i)
    if (item_order.contains(kg_keys[i])) component_has_item[find(static_cast<int>(i))] = 1;

  std::unordered_map<std::string, int> entity_order;
  std::vector<std::string> entity_keys;
  std::vector<std::pair<const TripleRecord*, bool>> kept_triples;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const bool anchored = component_has_item[find(triple_ids[i].first)];
    if (!anchored) {
      if (options.error_on_dangling)
        throw DataError(fmt::format("dangling triple ({}, {}, {}) not connected to any item",
                                    triples[i].head, triples[i].relation, triples[i].tail));
      ++kg.n_dangling_dropped_;
      continue;
    }
    kept_triples.emplace_back(&triples[i], true);
    for (const std::string* key : {&triples[i].head, &triples[i].tail}) {
      if (item_order.contains(*key)) continue;
      if (entity_order.emplace(*key, static_cast<int>(entity_keys.size())).second)
        entity_keys.push_back(*key);
    }
  }
  if (kg.n_dangling_dropped_ > 0)
    std::cerr << "warning: dropped " << kg.n_dangling_dropped_
              << " dangling KG triple(s) not connected to any item\n";

  kg.n_items_ = static_cast<int>(item_keys.size());
  kg.n_entities_ = static_cast<int>(entity_keys.size());
  kg.n_users_ = static_cast<int>(user_keys.size());

  kg.keys_.reserve(kg.num_nodes());
  for (auto& k : item_keys) kg.keys_.push_back(k);
  for (auto& k : entity_keys) kg.keys_.push_back(k);
  for (auto& k : user_keys) kg.keys_.push_back(k);
  for (int i = 0; i < kg.n_items_; ++i) kg.item_index_[item_keys[i]] = kg.item_id(i);
  for (int e = 0; e < kg.n_entities_; ++e) kg.entity_index_[entity_keys[e]] = kg.entity_id(e);
  for (int u = 0; u < kg.n_users_; ++u) kg.user_index_[user_keys[u]] = kg.user_id(u);

  // Relation vocabulary: KG relations in first-seen order, each immediately
  // followed by its inverse, then the interaction pair.
  std::unordered_map<std::string, int> relation_index;
  auto add_relation_pair = [&](const std::string& name, bool is_interaction) {
    const int fwd = static_cast<int>(kg.relations_.size());
    kg.relations_.push_back({name, fwd + 1, is_interaction});
    kg.relations_.push_back({name + "_inv", fwd, is_interaction});
    relation_index[name] = fwd;
    return fwd;
  };

  std::vector<Triple> directed;
  std::set<std::tuple<NodeId, int, NodeId>> seen;
  auto add_edge_pair = [&](NodeId head, int rel, NodeId tail) {
    if (!seen.insert({head, rel, tail}).second) {
      ++kg.n_duplicates_;
      return;
    }
    directed.push_back({head, rel, tail});
    directed.push_back({tail, kg.relations_[rel].inverse, head});
  };

  for (const auto& [rec, _] : kept_triples) {
    auto it = relation_index.find(rec->relation);
    const int rel = it != relation_index.end() ? it->second : add_relation_pair(rec->relation, false);
    auto node_of = [&](const std::string& key) {
      auto item = kg.item_index_.find(key);
      return item != kg.item_index_.end() ? item->second : kg.entity_index_.at(key);
    };
    add_edge_pair(node_of(rec->head), rel, node_of(rec->tail));
  }

  kg.rel_rated_ = add_relation_pair("rated", true);
  kg.rel_rated_by_ = kg.rel_rated_ + 1;
  for (const auto& rec : interactions) {
    const NodeId u = kg.user_index_.at(rec.user);
    const NodeId i = kg.item_index_.at(rec.item);
    const auto before = directed.size();
    add_edge_pair(u, kg.rel_rated_, i);
    if (directed.size() > before) kg.interactions_.emplace_back(u, i);
  }

  kg.finalize_edges(std::move(directed));
  return kg;
}

void CollabKG::finalize_edges(std::vector<Triple> directed) {
  std::sort(directed.begin(), directed.end(), [](const Triple& a, const Triple& b) {
    if (a.head != b.head) return a.head < b.head;
    if (a.relation != b.relation) return a.relation < b.relation;
    return a.tail < b.tail;
  });
  edges_ = std::move(directed);
  offsets_.assign(num_nodes() + 1, 0);
  for (const Triple& t : edges_) ++offsets_[t.head + 1];
  for (int v = 0; v < num_nodes(); ++v) offsets_[v + 1] += offsets_[v];
}

std::optional<NodeId> CollabKG::find_item(const std::string& key) const {
  auto it = item_index_.find(key);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> CollabKG::find_user(const std::string& key) const {
  auto it = user_index_.find(key);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> CollabKG::find_entity(const std::string& key) const {
  auto it = entity_index_.find(key);
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

void CollabKG::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::ofstream nodes(fs::path(dir) / "nodes.tsv");
  if (!nodes) throw DataError(fmt::format("cannot write to '{}'", dir));
  nodes << "# index\tkind\tkey\n";
  for (NodeId v = 0; v < num_nodes(); ++v) {
    const char* kind = kind_of(v) == NodeKind::Item     ? "item"
                       : kind_of(v) == NodeKind::Entity ? "entity"
                                                        : "user";
    nodes << v << '\t' << kind << '\t' << keys_[v] << '\n';
  }

  std::ofstream rels(fs::path(dir) / "relations.tsv");
  rels << "# index\tname\tinverse\tis_interaction\n";
  for (std::size_t r = 0; r < relations_.size(); ++r)
    rels << r << '\t' << relations_[r].name << '\t' << relations_[r].inverse << '\t'
         << (relations_[r].is_interaction ? 1 : 0) << '\n';

  // Only forward edges are written; inverses are rebuilt on load.
  std::ofstream edges(fs::path(dir) / "edges.tsv");
  edges << "# head\trelation\ttail\n";
  for (const Triple& t : edges_) {
    if (relations_[t.relation].inverse < t.relation) continue;
    edges << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }

  std::ofstream meta(fs::path(dir) / "meta.tsv");
  meta << "items\t" << n_items_ << "\nentities\t" << n_entities_ << "\nusers\t" << n_users_
       << "\n";
}

CollabKG CollabKG::load(const std::string& dir) {
  namespace fs = std::filesystem;
  CollabKG kg;

  std::ifstream meta(fs::path(dir) / "meta.tsv");
  if (!meta) throw DataError(fmt::format("'{}' is not a graph directory (missing meta.tsv)", dir));
  std::string key;
  int value;
  while (meta >> key >> value) {
    if (key == "items") kg.n_items_ = value;
    else if (key == "entities") kg.n_entities_ = value;
    else if (key == "users") kg.n_users_ = value;
  }

  std::ifstream nodes(fs::path(dir) / "nodes.tsv");
  if (!nodes) throw DataError(fmt::format("missing nodes.tsv in '{}'", dir));
  kg.keys_.resize(kg.num_nodes());
  std::string line;
  while (std::getline(nodes, line)) {
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw DataError(fmt::format("malformed nodes.tsv line '{}'", line));
    const NodeId v = static_cast<NodeId>(std::stol(fields[0]));
    kg.keys_[v] = fields[2];
  }
  for (int i = 0; i < kg.n_items_; ++i) kg.item_index_[kg.keys_[kg.item_id(i)]] = kg.item_id(i);
  for (int e = 0; e < kg.n_entities_; ++e)
    kg.entity_index_[kg.keys_[kg.entity_id(e)]] = kg.entity_id(e);
  for (int u = 0; u < kg.n_users_; ++u) kg.user_index_[kg.keys_[kg.user_id(u)]] = kg.user_id(u);

  std::ifstream rels(fs::path(dir) / "relations.tsv");
  if (!rels) throw DataError(fmt::format("missing relations.tsv in '{}'", dir));
  while (std::getline(rels, line)) {
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) throw DataError(fmt::format("malformed relations.tsv line '{}'", line));
    Relation r;
    r.name = fields[1];
    r.inverse = std::stoi(fields[2]);
    r.is_interaction = fields[3] == "1";
    if (r.is_interaction) {
      if (r.name == "rated") kg.rel_rated_ = static_cast<int>(kg.relations_.size());
      else kg.rel_rated_by_ = static_cast<int>(kg.relations_.size());
    }
    kg.relations_.push_back(std::move(r));
  }

  std::ifstream edges(fs::path(dir) / "edges.tsv");
  if (!edges) throw DataError(fmt::format("missing edges.tsv in '{}'", dir));
  std::vector<Triple> directed;
  while (std::getline(edges, line)) {
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw DataError(fmt::format("malformed edges.tsv line '{}'", line));
    Triple t;
    t.head = static_cast<NodeId>(std::stol(fields[0]));
    t.relation = std::stoi(fields[1]);
    t.tail = static_cast<NodeId>(std::stol(fields[2]));
    directed.push_back(t);
    directed.push_back({t.tail, kg.relations_[t.relation].inverse, t.head});
    if (t.relation == kg.rel_rated_) kg.interactions_.emplace_back(t.head, t.tail);
  }
  kg.finalize_edges(std::move(directed));
  return kg;
}

SplitSpec split_cold_start(const CollabKG& kg, double cold_fraction, double reveal_fraction,
                           int min_interactions, std::uint64_t seed, const SplitOptions& options) {
  if (cold_fraction <= 0.0 || cold_fraction >= 1.0)
    throw ConfigError("cold_fraction must be in (0,1)");
  if (reveal_fraction <= 0.0 || reveal_fraction >= 1.0)
    throw ConfigError("reveal_fraction must be in (0,1)");

  // Per-user positive items, adjacency order (sorted by item id).
  std::vector<std::vector<NodeId>> user_items(kg.num_users());
  for (const auto& [u, i] : kg.interactions())
    user_items[u - kg.user_id(0)].push_back(i);
  for (auto& items : user_items) std::sort(items.begin(), items.end());

  SplitSpec spec;
  const int needed = std::max(2, min_interactions);
  std::vector<NodeId> candidates;
  for (int u = 0; u < kg.num_users(); ++u) {
    if (static_cast<int>(user_items[u].size()) >= needed)
      candidates.push_back(kg.user_id(u));
    else
      spec.excluded_users.push_back(kg.user_id(u));
  }

  const int n_cold = static_cast<int>(std::llround(cold_fraction * kg.num_users()));
  if (n_cold < 1 || n_cold > static_cast<int>(candidates.size()))
    throw ConfigError(fmt::format("cannot draw {} cold users from {} candidates with >= {} interactions",
                                  n_cold, candidates.size(), needed));

  Rng rng(seed);
  std::vector<NodeId> pool = candidates;
  rng.shuffle(pool);
  spec.cold_users.assign(pool.begin(), pool.begin() + n_cold);
  std::sort(spec.cold_users.begin(), spec.cold_users.end());

  std::unordered_set<NodeId> cold_set(spec.cold_users.begin(), spec.cold_users.end());
  for (int u = 0; u < kg.num_users(); ++u)
    if (!cold_set.contains(kg.user_id(u))) spec.warm_users.push_back(kg.user_id(u));

  for (int u = 0; u < kg.num_users(); ++u) {
    const NodeId uid = kg.user_id(u);
    std::vector<NodeId> items = user_items[u];
    if (items.empty()) {
      spec.per_user[uid] = {};
      continue;
    }
    Rng user_rng(Rng::mix(seed, static_cast<std::uint64_t>(uid)));
    user_rng.shuffle(items);
    const int n = static_cast<int>(items.size());
    UserSplit us;
    if (cold_set.contains(uid)) {
      int n_reveal = static_cast<int>(std::ceil(reveal_fraction * n));
      n_reveal = std::clamp(n_reveal, 1, n - 1); // both sides nonempty
      us.train.assign(items.begin(), items.begin() + n_reveal);
      us.test.assign(items.begin() + n_reveal, items.end());
    } else {
      const int n_val = static_cast<int>(std::floor(options.warm_validation_fraction * n));
      const int n_test = static_cast<int>(
          std::floor((1.0 - options.warm_train_fraction - options.warm_validation_fraction) * n));
      const int n_train = n - n_val - n_test;
      us.train.assign(items.begin(), items.begin() + n_train);
      us.validation.assign(items.begin() + n_train, items.begin() + n_train + n_val);
      us.test.assign(items.begin() + n_train + n_val, items.end());
    }
    std::sort(us.train.begin(), us.train.end());
    std::sort(us.validation.begin(), us.validation.end());
    std::sort(us.test.begin(), us.test.end());
    spec.per_user[uid] = std::move(us);
  }
  return spec;
}

namespace {

std::vector<Triple> sample_from(const std::vector<Triple>& pool, int fanout, std::uint64_t seed) {
  if (static_cast<int>(pool.size()) <= fanout) return pool;
  Rng rng(seed);
  const auto idx = rng.sample_without_replacement(static_cast<int>(pool.size()), fanout);
  std::vector<Triple> out;
  out.reserve(fanout);
  for (int j : idx) out.push_back(pool[j]);
  return out;
}

}  // namespace

std::vector<Triple> sample_neighbors(const CollabKG& kg, NodeId node, int fanout,
                                     std::uint64_t seed) {
  if (node < 0 || node >= kg.num_nodes()) throw ConfigError("sample_neighbors: unknown node");
  if (fanout <= 0) throw ConfigError("sample_neighbors: fanout must be positive");
  const auto nbrs = kg.neighbors(node);
  std::vector<Triple> pool(nbrs.begin(), nbrs.end());
  return sample_from(pool, fanout, seed);
}

GraphView GraphView::full(const CollabKG& kg, bool bipartite) {
  GraphView view;
  view.kg_ = &kg;
  view.node_active_.assign(kg.num_nodes(), 1);
  view.edge_active_.assign(kg.edges().size(), 1);
  if (bipartite) {
    for (int e = 0; e < kg.num_entities(); ++e) view.node_active_[kg.entity_id(e)] = 0;
    for (std::size_t i = 0; i < kg.edges().size(); ++i)
      if (!kg.relations()[kg.edges()[i].relation].is_interaction) view.edge_active_[i] = 0;
  }
  return view;
}

GraphView GraphView::training(const CollabKG& kg, const SplitSpec& split, bool bipartite) {
  GraphView view = full(kg, bipartite);
  std::unordered_map<NodeId, std::unordered_set<NodeId>> train_items;
  for (NodeId u : split.warm_users) {
    auto it = split.per_user.find(u);
    if (it != split.per_user.end())
      train_items[u] = {it->second.train.begin(), it->second.train.end()};
  }
  const auto& edges = kg.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Triple& t = edges[i];
    if (!kg.relations()[t.relation].is_interaction) continue;
    const NodeId user = t.relation == kg.interaction_relation() ? t.head : t.tail;
    const NodeId item = t.relation == kg.interaction_relation() ? t.tail : t.head;
    auto it = train_items.find(user);
    view.edge_active_[i] = it != train_items.end() && it->second.contains(item);
  }
  return view;
}

std::vector<Triple> GraphView::neighbors(NodeId v) const {
  std::vector<Triple> out;
  if (!node_active_[v]) return out;
  const int begin = kg_->edge_offset(v);
  const auto nbrs = kg_->neighbors(v);
  for (std::size_t j = 0; j < nbrs.size(); ++j)
    if (edge_active_[begin + static_cast<int>(j)] && node_active_[nbrs[j].tail])
      out.push_back(nbrs[j]);
  return out;
}

int GraphView::active_edge_count() const {
  int n = 0;
  const auto& edges = kg_->edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edge_active_[i] && node_active_[edges[i].head] && node_active_[edges[i].tail]) ++n;
  return n;
}

std::vector<int> GraphView::active_relations() const {
  std::vector<char> present(kg_->relations().size(), 0);
  const auto& edges = kg_->edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edge_active_[i] && node_active_[edges[i].head] && node_active_[edges[i].tail])
      present[edges[i].relation] = 1;
  std::vector<int> out;
  for (std::size_t r = 0; r < present.size(); ++r)
    if (present[r]) out.push_back(static_cast<int>(r));
  return out;
}

}  // namespace simplerec

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

#include "simplerec/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "simplerec/rng.hpp"

namespace simplerec {

namespace {

std::vector<std::vector<int>> block_members(int count, int n_blocks) {
  std::vector<std::vector<int>> blocks(n_blocks);
  for (int i = 0; i < count; ++i) blocks[i % n_blocks].push_back(i);
  return blocks;
}

}  // namespace

SyntheticData generate_synthetic(int n_users, int n_items, int n_entities, int n_blocks,
                                 std::uint64_t seed, const SyntheticOptions& options) {
  if (n_blocks < 1) throw ConfigError("n_blocks must be >= 1");
  if (n_blocks > std::min({n_users, n_items, n_entities}))
    throw ConfigError(fmt::format("n_blocks={} exceeds smallest node count", n_blocks));

  Rng rng(seed);
  SyntheticData data;
  const auto item_blocks = block_members(n_items, n_blocks);
  const auto entity_blocks = block_members(n_entities, n_blocks);

  // Interactions: each user rates a fixed number of distinct in-block items
  // and a small number of distinct out-of-block items, so the realized
  // in-block fraction tracks options.in_block_fraction exactly. In-block
  // draws split between the block's head and tail items per the popularity
  // skew options.
  for (int u = 0; u < n_users; ++u) {
    const int b = u % n_blocks;
    const auto& own = item_blocks[b];
    std::vector<int> others;
    for (int i = 0; i < n_items; ++i)
      if (i % n_blocks != b) others.push_back(i);

    int n_u = options.interactions_per_user +
              rng.uniform_int(options.interaction_jitter + 1);
    int k_in = static_cast<int>(std::llround(options.in_block_fraction * n_u));
    k_in = std::min(k_in, static_cast<int>(own.size()));
    k_in = std::max(k_in, 1);
    // keep the realized in-block ratio at or above the target even when the
    // block is smaller than the requested interaction count
    const int max_out = static_cast<int>(
        std::floor(k_in * (1.0 - options.in_block_fraction) / options.in_block_fraction));
    int k_out = std::min({n_u - k_in, max_out, static_cast<int>(others.size())});
    k_out = std::max(k_out, 0);

    std::vector<int> head(own.begin(),
                          own.begin() + std::max<std::size_t>(
                                            1, static_cast<std::size_t>(options.head_fraction *
                                                                        own.size())));
    std::vector<int> tail(own.begin() + head.size(), own.end());
    int k_head = static_cast<int>(std::llround(options.head_probability * k_in));
    k_head = std::min(k_head, static_cast<int>(head.size()));
    int k_tail = std::min(k_in - k_head, static_cast<int>(tail.size()));
    k_head = std::min(k_in - k_tail, static_cast<int>(head.size()));

    for (int j : rng.sample_without_replacement(static_cast<int>(head.size()), k_head))
      data.interactions.push_back({fmt::format("u{}", u), fmt::format("i{}", head[j]), 5.0});
    for (int j : rng.sample_without_replacement(static_cast<int>(tail.size()), k_tail))
      data.interactions.push_back({fmt::format("u{}", u), fmt::format("i{}", tail[j]), 5.0});
    for (int j : rng.sample_without_replacement(static_cast<int>(others.size()), k_out))
      data.interactions.push_back({fmt::format("u{}", u), fmt::format("i{}", others[j]), 3.0});
  }

  // KG: every item links to entities of its own block through two relation
  // types. With decoys enabled, each block's entity pool splits into a clean
  // part (reached via "described_by") and a mislabeled part (reached via
  // "related_to").
  std::vector<char> decoy_entity(n_entities, 0);
  std::vector<std::vector<int>> clean_pool(n_blocks), decoy_pool(n_blocks);
  for (int b = 0; b < n_blocks; ++b) {
    const auto& members = entity_blocks[b];
    const int n_decoy = options.decoy_entity_fraction > 0.0
                            ? std::min<int>(static_cast<int>(members.size()) - 1,
                                            static_cast<int>(std::ceil(
                                                options.decoy_entity_fraction * members.size())))
                            : 0;
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (static_cast<int>(members.size() - j) <= n_decoy) {
        decoy_pool[b].push_back(members[j]);
        decoy_entity[members[j]] = 1;
      } else {
        clean_pool[b].push_back(members[j]);
      }
    }
    if (decoy_pool[b].empty()) decoy_pool[b] = clean_pool[b];
  }

  for (int i = 0; i < n_items; ++i) {
    const int b = i % n_blocks;
    auto link = [&](const std::vector<int>& pool, int count, const char* rel) {
      const int n_links = std::min(count, static_cast<int>(pool.size()));
      const auto picks = rng.sample_without_replacement(static_cast<int>(pool.size()), n_links);
      for (int j = 0; j < n_links; ++j)
        data.triples.push_back({fmt::format("i{}", i), rel, fmt::format("e{}", pool[picks[j]])});
    };
    link(clean_pool[b], std::min(2, options.entities_per_item), "described_by");
    if (options.entities_per_item > 2)
      link(decoy_pool[b], options.entities_per_item - 2, "related_to");
  }

  // Features: noisy block indicator on the first n_blocks channels, with a
  // per-kind signal scale.
  auto make_feature = [&](int block, double signal) {
    std::vector<double> f(options.feature_dim);
    for (int d = 0; d < options.feature_dim; ++d) f[d] = options.feature_noise * rng.normal();
    f[block % options.feature_dim] += signal;
    return f;
  };
  for (int i = 0; i < n_items; ++i)
    data.features.emplace_back(fmt::format("i{}", i),
                               make_feature(i % n_blocks, options.item_block_signal));
  int marked = 0, decoys = 0;
  for (int e = 0; e < n_entities; ++e) {
    int label = e % n_blocks;
    // decoys of a block consistently impersonate the next block over, so
    // unfiltered aggregation is misdirected rather than merely blurred
    if (decoy_entity[e] && n_blocks > 1) label = (label + 1) % n_blocks;
    auto f = make_feature(label, options.block_signal);
    if (decoy_entity[e]) {
      ++decoys;
      if (rng.uniform() < options.decoy_marker_fraction) {
        f[options.feature_dim - 1] += options.decoy_marker_strength;
        ++marked;
      }
    }
    data.features.emplace_back(fmt::format("e{}", e), std::move(f));
  }

  return data;
}

void SyntheticData::write(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::ofstream ratings(fs::path(dir) / "ratings.tsv");
  if (!ratings) throw DataError(fmt::format("cannot write to '{}'", dir));
  for (const auto& r : interactions)
    ratings << r.user << '\t' << r.item << '\t' << fmt::format("{}", r.rating) << '\n';

  std::ofstream triples_out(fs::path(dir) / "triples.tsv");
  for (const auto& t : triples) triples_out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';

  std::ofstream feats(fs::path(dir) / "features.tsv");
  for (const auto& [key, vec] : features) {
    feats << key << '\t';
    for (std::size_t d = 0; d < vec.size(); ++d) {
      if (d) feats << ',';
      feats << fmt::format("{}", vec[d]);
    }
    feats << '\n';
  }
}

}  // namespace simplerec

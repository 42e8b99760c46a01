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

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "simplerec/ckg.hpp"

namespace simplerec {

/// Keyed fixed-width feature vectors, one source (text or KGE output).
struct FeatureTable {
  int dim = 0;
  std::vector<std::string> keys;                       // file order
  std::unordered_map<std::string, int> index;          // key -> row
  Eigen::MatrixXd values;                              // dim x n, column per key

  static FeatureTable load(const std::string& path);
  void save(const std::string& path) const;
};

enum class FeatureSource { Text, Kge, UserZero };

// Layer-0 node features: one column per node. Items and entities carry their
// source embedding with a log(1+degree) channel appended; users have no
// content features and are marked UserZero (the encoder emits zeros for
// them).
struct FeatureMatrix {
  int text_dim = 0; // includes the degree channel, 0 when source absent
  int kge_dim = 0;
  std::vector<FeatureSource> source;       // per node
  std::vector<int> column;                 // per node: column in its source block
  Eigen::MatrixXd text;                    // text_dim x n_text
  Eigen::MatrixXd kge;                     // kge_dim x n_kge

  int num_nodes() const { return static_cast<int>(source.size()); }
  /// Node ids holding a column in `src`, ascending (column j belongs to the
  /// j-th such node).
  std::vector<NodeId> nodes_of(FeatureSource src) const;
};

// text_table must cover every item; entities missing from it fall back to
// kge_features (pass nullptr when there is no KGE table). Text wins when a
// node is covered by both.
FeatureMatrix assemble_initial_features(const CollabKG& kg, const FeatureTable& text_table,
                                        const FeatureTable* kge_features = nullptr);

}  // namespace simplerec

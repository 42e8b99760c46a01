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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simplerec/ckg.hpp"
#include "simplerec/encoder.hpp"
#include "simplerec/features.hpp"

namespace simplerec {

enum class Aggregator { LightGcn, Gcn, GraphSage };
enum class ModelVariant { Full, NoGates, NoRelations, Bipartite };

Aggregator aggregator_from_string(const std::string& s);
std::string to_string(Aggregator a);
ModelVariant variant_from_string(const std::string& s);
std::string to_string(ModelVariant v);

struct GnnConfig {
  int d_prime = 32;
  int layers = 3;
  std::vector<int> fanouts = {10, 10, 10}; // one per layer; evaluation uses full neighborhoods
  Aggregator aggregator = Aggregator::LightGcn;
  ModelVariant variant = ModelVariant::Full;
  double leaky_slope = 0.01;
};

// Per-layer, per-relation gate factors. The concatenated gate weight
// W_r in R^{d x 2d} is stored as the pair (w_head, w_tail) acting on e_h and
// e_t respectively, which is what makes the per-(h,r)/(r,t) factorization
// possible. The no-relations ablation shares a single slot across all
// relations; no-gates has no factors at all.
struct GateParams {
  std::vector<int> relation_ids; // ascending; empty when shared or absent
  std::vector<std::vector<Eigen::MatrixXd>> w_head; // [layer][slot], d x d
  std::vector<std::vector<Eigen::MatrixXd>> w_tail;
};

/// Everything learnable, plus the architecture facts needed to run it.
struct ModelParams {
  GnnConfig config;
  std::optional<AeParams> ae_text;
  std::optional<AeParams> ae_kge;
  GateParams gates;
  std::vector<Eigen::MatrixXd> agg_weights; // per layer; GCN d x d, GraphSAGE d x 2d

  bool has_gates() const { return config.variant != ModelVariant::NoGates; }
  /// Gate slot for a relation; throws on relations the model was not built
  /// for.
  int gate_slot(int relation) const;
};

/// Fresh parameters for the variant: AEs for the feature sources present,
/// gate factors for every relation active in the view, aggregator weights
/// when the aggregator has any. Deterministic under seed.
ModelParams init_model_params(const GnnConfig& config, const std::vector<int>& active_relations,
                              int text_dim, int kge_dim, std::uint64_t seed);

/// Named views over every learnable matrix, in a stable order. This is the
/// parameter set Theta: the L2 term, Adam state, gradient checks, and the
/// checkpoint all iterate it.
std::vector<std::pair<std::string, Eigen::MatrixXd*>> parameter_registry(ModelParams& params);
std::vector<std::pair<std::string, const Eigen::MatrixXd*>> parameter_registry(
    const ModelParams& params);

// ---------------------------------------------------------------------------
// Sampling plans

// The edge multiset each layer aggregates over: either the full active
// adjacency (evaluation) or per-node uniform samples (training). Edges of a
// node are kept in adjacency order (relation, then tail id).
struct LayerPlan {
  struct Layer {
    std::vector<Triple> edges;
    std::vector<int> offsets; // per node, size num_nodes + 1
    std::span<const Triple> edges_of(NodeId v) const {
      return {edges.data() + offsets[v], static_cast<std::size_t>(offsets[v + 1] - offsets[v])};
    }
  };
  std::vector<Layer> layers;
};

LayerPlan full_plan(const GraphView& view, int layers);
LayerPlan sampled_plan(const GraphView& view, const std::vector<int>& fanouts, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Per-node operations (the unit of meaning; forward() composes them)

/// sigma(W1_r e_h + W2_r e_t), elementwise in (0,1).
Eigen::VectorXd gate(const Eigen::VectorXd& e_h, const Eigen::VectorXd& e_t, int relation,
                     int layer, const ModelParams& params);

/// Mean over `edges` of gate-masked tail embeddings, with e_head as the
/// gate's head input. Empty edge set yields the zero vector.
Eigen::VectorXd aggregate_edges(const Eigen::VectorXd& e_head, std::span<const Triple> edges,
                                const Eigen::MatrixXd& prev_embeddings, int layer,
                                const ModelParams& params);

/// aggregate_edges with the node's own previous-layer embedding as head.
Eigen::VectorXd aggregate_ego(NodeId node, std::span<const Triple> edges,
                              const Eigen::MatrixXd& prev_embeddings, int layer,
                              const ModelParams& params);

Eigen::VectorXd combine(Aggregator aggregator, const Eigen::VectorXd& e_h,
                        const Eigen::VectorXd& e_ego, int layer, const ModelParams& params);

// ---------------------------------------------------------------------------
// Full forward passes

struct LayerEmbeddings {
  Eigen::MatrixXd layer0;                // d' x V, encoder output (users zero)
  std::vector<Eigen::MatrixXd> layers;   // 1..L, d' x V each

  /// Layers 1..L concatenated per node (layer 0 excluded).
  Eigen::MatrixXd concatenated() const;
};

struct ForwardStats {
  long long gate_matvecs = 0;            // d x d matrix-vector products spent on gates
  std::vector<long long> per_layer;      // same count, split by layer
};

/// Encoder output for every node: source block encoded through its AE,
/// users all-zero columns.
Eigen::MatrixXd encode_layer0(const FeatureMatrix& features, const ModelParams& params);

/// Factorized forward: per layer, head/tail gate transforms are computed
/// once per unique (h,r) and (r,t) pair, bounding gate matvecs by 2|V||R|.
LayerEmbeddings forward(const GraphView& view, const LayerPlan& plan,
                        const Eigen::MatrixXd& layer0, const ModelParams& params,
                        ForwardStats* stats = nullptr);

/// Reference path: materializes W_r = [W1_r | W2_r] and applies it per edge
/// to the concatenated (e_h || e_t), costing 2|E| gate matvecs per layer.
LayerEmbeddings forward_naive(const GraphView& view, const LayerPlan& plan,
                              const Eigen::MatrixXd& layer0, const ModelParams& params,
                              ForwardStats* stats = nullptr);

/// Concatenation of a node's layer-1..L embeddings.
Eigen::VectorXd final_embedding(const LayerEmbeddings& embeddings, NodeId node);

/// Dot-product preference score over concatenated embeddings.
double score(const Eigen::VectorXd& user_embedding, const Eigen::VectorXd& item_embedding);

}  // namespace simplerec

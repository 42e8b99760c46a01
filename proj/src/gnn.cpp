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

#include "simplerec/gnn.hpp"

#include <cmath>

#include <fmt/format.h>

#include "simplerec/rng.hpp"

namespace simplerec {

Aggregator aggregator_from_string(const std::string& s) {
  if (s == "lightgcn") return Aggregator::LightGcn;
  if (s == "gcn") return Aggregator::Gcn;
  if (s == "graphsage") return Aggregator::GraphSage;
  throw ConfigError(fmt::format("unknown aggregator '{}'", s));
}

std::string to_string(Aggregator a) {
  switch (a) {
    case Aggregator::LightGcn: return "lightgcn";
    case Aggregator::Gcn: return "gcn";
    case Aggregator::GraphSage: return "graphsage";
  }
  return "?";
}

ModelVariant variant_from_string(const std::string& s) {
  if (s == "full") return ModelVariant::Full;
  if (s == "no-gates") return ModelVariant::NoGates;
  if (s == "no-relations") return ModelVariant::NoRelations;
  if (s == "bipartite") return ModelVariant::Bipartite;
  throw ConfigError(fmt::format("unknown model variant '{}'", s));
}

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Full: return "full";
    case ModelVariant::NoGates: return "no-gates";
    case ModelVariant::NoRelations: return "no-relations";
    case ModelVariant::Bipartite: return "bipartite";
  }
  return "?";
}

int ModelParams::gate_slot(int relation) const {
  if (config.variant == ModelVariant::NoRelations) return 0;
  const auto& ids = gates.relation_ids;
  const auto it = std::lower_bound(ids.begin(), ids.end(), relation);
  if (it == ids.end() || *it != relation)
    throw ConfigError(fmt::format("no gate parameters for relation {}", relation));
  return static_cast<int>(it - ids.begin());
}

ModelParams init_model_params(const GnnConfig& config, const std::vector<int>& active_relations,
                              int text_dim, int kge_dim, std::uint64_t seed) {
  if (config.layers < 1) throw ConfigError("layers must be >= 1");
  if (static_cast<int>(config.fanouts.size()) != config.layers)
    throw ConfigError(fmt::format("fanouts has {} entries for {} layers", config.fanouts.size(),
                                  config.layers));

  ModelParams p;
  p.config = config;
  Rng rng(seed);
  const int d = config.d_prime;

  if (text_dim > 0) p.ae_text = init_ae_params(text_dim, d, rng);
  if (kge_dim > 0) p.ae_kge = init_ae_params(kge_dim, d, rng);

  const double bound = std::sqrt(6.0 / static_cast<double>(d + d));
  auto init_mat = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
    return m;
  };

  if (config.variant != ModelVariant::NoGates) {
    const int slots =
        config.variant == ModelVariant::NoRelations ? 1 : static_cast<int>(active_relations.size());
    if (config.variant != ModelVariant::NoRelations) p.gates.relation_ids = active_relations;
    p.gates.w_head.resize(config.layers);
    p.gates.w_tail.resize(config.layers);
    for (int l = 0; l < config.layers; ++l) {
      for (int s = 0; s < slots; ++s) {
        p.gates.w_head[l].push_back(init_mat(d, d));
        p.gates.w_tail[l].push_back(init_mat(d, d));
      }
    }
  }

  if (config.aggregator != Aggregator::LightGcn) {
    const int cols = config.aggregator == Aggregator::Gcn ? d : 2 * d;
    for (int l = 0; l < config.layers; ++l) p.agg_weights.push_back(init_mat(d, cols));
  }
  return p;
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> parameter_registry(ModelParams& p) {
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> reg;
  auto add_ae = [&](const char* src, AeParams& ae) {
    reg.emplace_back(fmt::format("ae_{}.w_encode", src), &ae.w_encode);
    reg.emplace_back(fmt::format("ae_{}.b_encode", src), &ae.b_encode);
    reg.emplace_back(fmt::format("ae_{}.w_decode", src), &ae.w_decode);
    reg.emplace_back(fmt::format("ae_{}.b_decode", src), &ae.b_decode);
  };
  if (p.ae_text) add_ae("text", *p.ae_text);
  if (p.ae_kge) add_ae("kge", *p.ae_kge);
  for (std::size_t l = 0; l < p.gates.w_head.size(); ++l) {
    for (std::size_t s = 0; s < p.gates.w_head[l].size(); ++s) {
      const std::string tag = p.config.variant == ModelVariant::NoRelations
                                  ? std::string("shared")
                                  : fmt::format("r{}", p.gates.relation_ids[s]);
      reg.emplace_back(fmt::format("gate.l{}.{}.head", l + 1, tag), &p.gates.w_head[l][s]);
      reg.emplace_back(fmt::format("gate.l{}.{}.tail", l + 1, tag), &p.gates.w_tail[l][s]);
    }
  }
  for (std::size_t l = 0; l < p.agg_weights.size(); ++l)
    reg.emplace_back(fmt::format("agg.l{}", l + 1), &p.agg_weights[l]);
  return reg;
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> parameter_registry(
    const ModelParams& p) {
  auto mutable_reg = parameter_registry(const_cast<ModelParams&>(p));
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> reg;
  reg.reserve(mutable_reg.size());
  for (auto& [name, mat] : mutable_reg) reg.emplace_back(name, mat);
  return reg;
}

// ---------------------------------------------------------------------------

LayerPlan full_plan(const GraphView& view, int layers) {
  LayerPlan plan;
  const int n = view.kg().num_nodes();
  LayerPlan::Layer layer;
  layer.offsets.assign(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) {
    const auto nbrs = view.neighbors(v);
    layer.edges.insert(layer.edges.end(), nbrs.begin(), nbrs.end());
    layer.offsets[v + 1] = static_cast<int>(layer.edges.size());
  }
  plan.layers.assign(layers, layer);
  return plan;
}

LayerPlan sampled_plan(const GraphView& view, const std::vector<int>& fanouts,
                       std::uint64_t seed) {
  LayerPlan plan;
  const int n = view.kg().num_nodes();
  for (std::size_t l = 0; l < fanouts.size(); ++l) {
    LayerPlan::Layer layer;
    layer.offsets.assign(n + 1, 0);
    for (NodeId v = 0; v < n; ++v) {
      std::vector<Triple> pool = view.neighbors(v);
      if (static_cast<int>(pool.size()) > fanouts[l]) {
        Rng rng(Rng::mix(seed, Rng::mix(static_cast<std::uint64_t>(l),
                                        static_cast<std::uint64_t>(v))));
        const auto idx =
            rng.sample_without_replacement(static_cast<int>(pool.size()), fanouts[l]);
        std::vector<Triple> sampled;
        sampled.reserve(idx.size());
        for (int j : idx) sampled.push_back(pool[j]);
        pool = std::move(sampled);
      }
      layer.edges.insert(layer.edges.end(), pool.begin(), pool.end());
      layer.offsets[v + 1] = static_cast<int>(layer.edges.size());
    }
    plan.layers.push_back(std::move(layer));
  }
  return plan;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

Eigen::VectorXd leaky_relu_vec(const Eigen::VectorXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0 ? v : slope * v; });
}

}  // namespace

Eigen::VectorXd gate(const Eigen::VectorXd& e_h, const Eigen::VectorXd& e_t, int relation,
                     int layer, const ModelParams& params) {
  if (!params.has_gates())
    return Eigen::VectorXd::Ones(e_t.size());
  const int slot = params.gate_slot(relation);
  return sigmoid_vec(params.gates.w_head[layer - 1][slot] * e_h +
                     params.gates.w_tail[layer - 1][slot] * e_t);
}

Eigen::VectorXd aggregate_edges(const Eigen::VectorXd& e_head, std::span<const Triple> edges,
                                const Eigen::MatrixXd& prev_embeddings, int layer,
                                const ModelParams& params) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(prev_embeddings.rows());
  if (edges.empty()) return acc;
  for (const Triple& e : edges) {
    const Eigen::VectorXd e_t = prev_embeddings.col(e.tail);
    if (params.has_gates())
      acc += gate(e_head, e_t, e.relation, layer, params).cwiseProduct(e_t);
    else
      acc += e_t;
  }
  acc /= static_cast<double>(edges.size());
  return acc;
}

Eigen::VectorXd aggregate_ego(NodeId node, std::span<const Triple> edges,
                              const Eigen::MatrixXd& prev_embeddings, int layer,
                              const ModelParams& params) {
  for (const Triple& e : edges)
    if (e.head != node) throw ConfigError("aggregate_ego: edge head does not match node");
  return aggregate_edges(prev_embeddings.col(node), edges, prev_embeddings, layer, params);
}

Eigen::VectorXd combine(Aggregator aggregator, const Eigen::VectorXd& e_h,
                        const Eigen::VectorXd& e_ego, int layer, const ModelParams& params) {
  switch (aggregator) {
    case Aggregator::LightGcn: return e_ego;
    case Aggregator::Gcn:
      return leaky_relu_vec(params.agg_weights[layer - 1] * (e_h + e_ego), params.config.leaky_slope);
    case Aggregator::GraphSage: {
      Eigen::VectorXd cat(e_h.size() + e_ego.size());
      cat << e_h, e_ego;
      return leaky_relu_vec(params.agg_weights[layer - 1] * cat, params.config.leaky_slope);
    }
  }
  throw ConfigError("combine: unknown aggregator");
}

Eigen::MatrixXd encode_layer0(const FeatureMatrix& features, const ModelParams& params) {
  const int d = params.config.d_prime;
  Eigen::MatrixXd layer0 = Eigen::MatrixXd::Zero(d, features.num_nodes());
  auto place = [&](FeatureSource src, const Eigen::MatrixXd& block, const AeParams& ae) {
    const Eigen::MatrixXd encoded = encode(block, ae);
    for (NodeId v = 0; v < features.num_nodes(); ++v)
      if (features.source[v] == src) layer0.col(v) = encoded.col(features.column[v]);
  };
  if (features.text_dim > 0) {
    if (!params.ae_text) throw ConfigError("model has no text autoencoder but text features exist");
    place(FeatureSource::Text, features.text, *params.ae_text);
  }
  if (features.kge_dim > 0) {
    if (!params.ae_kge) throw ConfigError("model has no KGE autoencoder but KGE features exist");
    place(FeatureSource::Kge, features.kge, *params.ae_kge);
  }
  return layer0;
}

namespace {

// Lazily memoized gate-side transforms for one layer: each unique (h, r)
// and (r, t) pair is computed at most once. Computations go through the
// same Eigen matrix-vector product as gate()/aggregate_edges(), so results
// are bit-identical to the per-edge path.
class GateTransformCache {
public:
  GateTransformCache(const ModelParams& params, int layer, int n_nodes, int n_slots)
      : params_(params), layer_(layer), n_nodes_(n_nodes) {
    head_.resize(n_slots);
    tail_.resize(n_slots);
    head_ready_.assign(n_slots, std::vector<char>());
    tail_ready_.assign(n_slots, std::vector<char>());
  }

  const Eigen::VectorXd& head(int slot, NodeId v, const Eigen::MatrixXd& prev, long long* count) {
    return fetch(head_, head_ready_, params_.gates.w_head[layer_ - 1], slot, v, prev, count);
  }
  const Eigen::VectorXd& tail(int slot, NodeId v, const Eigen::MatrixXd& prev, long long* count) {
    return fetch(tail_, tail_ready_, params_.gates.w_tail[layer_ - 1], slot, v, prev, count);
  }

private:
  using Cache = std::vector<std::vector<Eigen::VectorXd>>;

  const Eigen::VectorXd& fetch(Cache& cache, std::vector<std::vector<char>>& ready,
                               const std::vector<Eigen::MatrixXd>& weights, int slot, NodeId v,
                               const Eigen::MatrixXd& prev, long long* count) {
    if (cache[slot].empty()) {
      cache[slot].assign(n_nodes_, Eigen::VectorXd());
      ready[slot].assign(n_nodes_, 0);
    }
    if (!ready[slot][v]) {
      cache[slot][v] = weights[slot] * prev.col(v);
      ready[slot][v] = 1;
      if (count) ++*count;
    }
    return cache[slot][v];
  }

  const ModelParams& params_;
  int layer_;
  int n_nodes_;
  Cache head_, tail_;
  std::vector<std::vector<char>> head_ready_, tail_ready_;
};

}  // namespace

LayerEmbeddings forward(const GraphView& view, const LayerPlan& plan,
                        const Eigen::MatrixXd& layer0, const ModelParams& params,
                        ForwardStats* stats) {
  const GnnConfig& cfg = params.config;
  if (static_cast<int>(plan.layers.size()) != cfg.layers)
    throw ConfigError(fmt::format("plan has {} layers, model expects {}", plan.layers.size(),
                                  cfg.layers));
  const int n = view.kg().num_nodes();
  const int n_slots = params.has_gates() ? static_cast<int>(params.gates.w_head[0].size()) : 0;

  LayerEmbeddings out;
  out.layer0 = layer0;
  const Eigen::MatrixXd* prev = &out.layer0;
  long long* counter = stats ? &stats->gate_matvecs : nullptr;

  for (int l = 1; l <= cfg.layers; ++l) {
    const long long layer_start = stats ? stats->gate_matvecs : 0;
    GateTransformCache cache(params, l, n, std::max(n_slots, 1));
    Eigen::MatrixXd next(cfg.d_prime, n);
    for (NodeId v = 0; v < n; ++v) {
      const auto edges = plan.layers[l - 1].edges_of(v);
      Eigen::VectorXd ego = Eigen::VectorXd::Zero(cfg.d_prime);
      if (!edges.empty()) {
        for (const Triple& e : edges) {
          const Eigen::VectorXd e_t = prev->col(e.tail);
          if (params.has_gates()) {
            const int slot = params.gate_slot(e.relation);
            const Eigen::VectorXd pre =
                cache.head(slot, v, *prev, counter) + cache.tail(slot, e.tail, *prev, counter);
            ego += sigmoid_vec(pre).cwiseProduct(e_t);
          } else {
            ego += e_t;
          }
        }
        ego /= static_cast<double>(edges.size());
      }
      next.col(v) = combine(cfg.aggregator, prev->col(v), ego, l, params);
    }
    if (stats) stats->per_layer.push_back(stats->gate_matvecs - layer_start);
    out.layers.push_back(std::move(next));
    prev = &out.layers.back();
  }
  return out;
}

LayerEmbeddings forward_naive(const GraphView& view, const LayerPlan& plan,
                              const Eigen::MatrixXd& layer0, const ModelParams& params,
                              ForwardStats* stats) {
  const GnnConfig& cfg = params.config;
  if (static_cast<int>(plan.layers.size()) != cfg.layers)
    throw ConfigError("plan layer count does not match model");
  const int n = view.kg().num_nodes();

  LayerEmbeddings out;
  out.layer0 = layer0;
  const Eigen::MatrixXd* prev = &out.layer0;

  for (int l = 1; l <= cfg.layers; ++l) {
    const long long layer_start = stats ? stats->gate_matvecs : 0;
    // Materialized concatenated weights W_r = [W1_r | W2_r].
    std::vector<Eigen::MatrixXd> concat;
    if (params.has_gates()) {
      const auto& heads = params.gates.w_head[l - 1];
      const auto& tails = params.gates.w_tail[l - 1];
      for (std::size_t s = 0; s < heads.size(); ++s) {
        Eigen::MatrixXd w(cfg.d_prime, 2 * cfg.d_prime);
        w.leftCols(cfg.d_prime) = heads[s];
        w.rightCols(cfg.d_prime) = tails[s];
        concat.push_back(std::move(w));
      }
    }
    Eigen::MatrixXd next(cfg.d_prime, n);
    for (NodeId v = 0; v < n; ++v) {
      const auto edges = plan.layers[l - 1].edges_of(v);
      Eigen::VectorXd ego = Eigen::VectorXd::Zero(cfg.d_prime);
      if (!edges.empty()) {
        for (const Triple& e : edges) {
          const Eigen::VectorXd e_t = prev->col(e.tail);
          if (params.has_gates()) {
            Eigen::VectorXd cat(2 * cfg.d_prime);
            cat << prev->col(v), e_t;
            const Eigen::VectorXd pre = concat[params.gate_slot(e.relation)] * cat;
            if (stats) stats->gate_matvecs += 2; // a d x 2d product is two d x d matvecs
            ego += sigmoid_vec(pre).cwiseProduct(e_t);
          } else {
            ego += e_t;
          }
        }
        ego /= static_cast<double>(edges.size());
      }
      next.col(v) = combine(cfg.aggregator, prev->col(v), ego, l, params);
    }
    if (stats) stats->per_layer.push_back(stats->gate_matvecs - layer_start);
    out.layers.push_back(std::move(next));
    prev = &out.layers.back();
  }
  return out;
}

Eigen::MatrixXd LayerEmbeddings::concatenated() const {
  const int d = static_cast<int>(layer0.rows());
  const int n = static_cast<int>(layer0.cols());
  Eigen::MatrixXd star(d * static_cast<int>(layers.size()), n);
  for (std::size_t l = 0; l < layers.size(); ++l)
    star.middleRows(static_cast<int>(l) * d, d) = layers[l];
  return star;
}

Eigen::VectorXd final_embedding(const LayerEmbeddings& embeddings, NodeId node) {
  const int d = static_cast<int>(embeddings.layer0.rows());
  Eigen::VectorXd out(d * static_cast<int>(embeddings.layers.size()));
  for (std::size_t l = 0; l < embeddings.layers.size(); ++l)
    out.segment(static_cast<int>(l) * d, d) = embeddings.layers[l].col(node);
  return out;
}

double score(const Eigen::VectorXd& user_embedding, const Eigen::VectorXd& item_embedding) {
  if (user_embedding.size() != item_embedding.size())
    throw ConfigError("score: embedding lengths differ");
  return user_embedding.dot(item_embedding);
}

}  // namespace simplerec

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

#include "simplerec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "simplerec/autodiff.hpp"
#include "simplerec/metrics.hpp"
#include "simplerec/ranker.hpp"
#include "simplerec/rng.hpp"

namespace simplerec {

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["d_prime"] = gnn.d_prime;
  j["layers"] = gnn.layers;
  j["fanouts"] = gnn.fanouts;
  j["aggregator"] = to_string(gnn.aggregator);
  j["variant"] = to_string(gnn.variant);
  j["leaky_slope"] = gnn.leaky_slope;
  j["lambda"] = lambda_ae;
  j["gamma"] = gamma_l2;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["eval_k"] = eval_k;
  j["seed"] = seed;
  j["cold_fraction"] = cold_fraction;
  j["reveal_fraction"] = reveal_fraction;
  j["min_interactions"] = min_interactions;
  j["warm_train_fraction"] = warm_train_fraction;
  j["warm_validation_fraction"] = warm_validation_fraction;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  c.gnn.d_prime = j.value("d_prime", c.gnn.d_prime);
  c.gnn.layers = j.value("layers", c.gnn.layers);
  if (j.contains("fanouts")) c.gnn.fanouts = j["fanouts"].get<std::vector<int>>();
  c.gnn.aggregator = aggregator_from_string(j.value("aggregator", "lightgcn"));
  c.gnn.variant = variant_from_string(j.value("variant", "full"));
  c.gnn.leaky_slope = j.value("leaky_slope", c.gnn.leaky_slope);
  c.lambda_ae = j.value("lambda", c.lambda_ae);
  c.gamma_l2 = j.value("gamma", c.gamma_l2);
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.eval_k = j.value("eval_k", c.eval_k);
  c.seed = j.value("seed", c.seed);
  c.cold_fraction = j.value("cold_fraction", c.cold_fraction);
  c.reveal_fraction = j.value("reveal_fraction", c.reveal_fraction);
  c.min_interactions = j.value("min_interactions", c.min_interactions);
  c.warm_train_fraction = j.value("warm_train_fraction", c.warm_train_fraction);
  c.warm_validation_fraction = j.value("warm_validation_fraction", c.warm_validation_fraction);
  return c;
}

TrainConfig load_train_config(const std::string& path, const TrainConfig& defaults) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open config file '{}'", path));
  TrainConfig c = defaults;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(fmt::format("{}:{}: expected key=value", path, lineno));
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "d_prime") c.gnn.d_prime = std::stoi(value);
      else if (key == "layers") c.gnn.layers = std::stoi(value);
      else if (key == "fanouts") {
        c.gnn.fanouts.clear();
        std::size_t start = 0;
        while (start <= value.size()) {
          std::size_t comma = value.find(',', start);
          if (comma == std::string::npos) comma = value.size();
          c.gnn.fanouts.push_back(std::stoi(value.substr(start, comma - start)));
          start = comma + 1;
        }
      } else if (key == "aggregator") c.gnn.aggregator = aggregator_from_string(value);
      else if (key == "variant") c.gnn.variant = variant_from_string(value);
      else if (key == "leaky_slope") c.gnn.leaky_slope = std::stod(value);
      else if (key == "lambda") c.lambda_ae = std::stod(value);
      else if (key == "gamma") c.gamma_l2 = std::stod(value);
      else if (key == "lr") c.lr = std::stod(value);
      else if (key == "batch_size") c.batch_size = std::stoi(value);
      else if (key == "max_epochs") c.max_epochs = std::stoi(value);
      else if (key == "patience") c.patience = std::stoi(value);
      else if (key == "eval_k") c.eval_k = std::stoi(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "cold_fraction") c.cold_fraction = std::stod(value);
      else if (key == "reveal_fraction") c.reveal_fraction = std::stod(value);
      else if (key == "min_interactions") c.min_interactions = std::stoi(value);
      else if (key == "warm_train_fraction") c.warm_train_fraction = std::stod(value);
      else if (key == "warm_validation_fraction") c.warm_validation_fraction = std::stod(value);
      else throw ConfigError(fmt::format("{}:{}: unknown config key '{}'", path, lineno, key));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError(fmt::format("{}:{}: invalid value '{}' for '{}'", path, lineno, value, key));
    }
  }
  if (static_cast<int>(c.gnn.fanouts.size()) != c.gnn.layers) {
    if (c.gnn.fanouts.size() == 1) c.gnn.fanouts.assign(c.gnn.layers, c.gnn.fanouts[0]);
    else if (c.gnn.fanouts.size() == 3 && c.gnn.layers != 3)
      c.gnn.fanouts.assign(c.gnn.layers, 10); // defaults retargeted to layer count
  }
  return c;
}

// ---------------------------------------------------------------------------

BprSampler::BprSampler(const CollabKG& kg, const SplitSpec& split) : kg_(&kg) {
  for (const NodeId u : split.warm_users) {
    const auto it = split.per_user.find(u);
    if (it == split.per_user.end()) continue;
    // users with the whole catalog rated admit no negative; their pairs are
    // skipped (resample-user semantics)
    if (static_cast<int>(it->second.train.size()) >= kg.num_items()) continue;
    for (const NodeId item : it->second.train) pairs_.emplace_back(u, item);
    train_sets_[u] = {it->second.train.begin(), it->second.train.end()};
  }
  if (pairs_.empty())
    throw DataError("BPR sampler: no warm training interaction with an available negative");
}

BprBatch BprSampler::sample(int batch_size, std::uint64_t seed) const {
  Rng rng(seed);
  BprBatch batch;
  batch.reserve(batch_size);
  const int n_items = kg_->num_items();
  while (static_cast<int>(batch.size()) < batch_size) {
    const auto& [user, positive] = pairs_[rng.uniform_int(static_cast<int>(pairs_.size()))];
    const auto& rated = train_sets_.at(user);
    NodeId negative = -1;
    do {
      negative = rng.uniform_int(n_items);
    } while (rated.contains(negative));
    batch.push_back({user, positive, negative});
  }
  return batch;
}

BprBatch sample_bpr_batch(const SplitSpec& split, const CollabKG& kg, int batch_size,
                          std::uint64_t seed) {
  return BprSampler(kg, split).sample(batch_size, seed);
}

double bpr_loss(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
  if (pos_scores.size() != neg_scores.size())
    throw ConfigError("bpr_loss: score lists differ in length");
  if (pos_scores.empty()) throw ConfigError("bpr_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < pos_scores.size(); ++i) {
    const double x = neg_scores[i] - pos_scores[i]; // -ln sigma(pos-neg) = softplus(neg-pos)
    total += x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return total / static_cast<double>(pos_scores.size());
}

// ---------------------------------------------------------------------------
// Loss tape

namespace {

struct ParamVars {
  // mirrors parameter_registry() order
  std::vector<std::pair<std::string, ad::Var>> ordered;
  ad::Var ae_text_w_en, ae_text_b_en, ae_text_w_de, ae_text_b_de;
  ad::Var ae_kge_w_en, ae_kge_b_en, ae_kge_w_de, ae_kge_b_de;
  std::vector<std::vector<ad::Var>> gate_head, gate_tail; // [layer][slot]
  std::vector<ad::Var> agg;
};

ParamVars make_param_vars(ad::Tape& tape, const ModelParams& p) {
  ParamVars vars;
  auto add = [&](const std::string& name, const Eigen::MatrixXd& m) {
    const ad::Var v = tape.param(m);
    vars.ordered.emplace_back(name, v);
    return v;
  };
  if (p.ae_text) {
    vars.ae_text_w_en = add("ae_text.w_encode", p.ae_text->w_encode);
    vars.ae_text_b_en = add("ae_text.b_encode", p.ae_text->b_encode);
    vars.ae_text_w_de = add("ae_text.w_decode", p.ae_text->w_decode);
    vars.ae_text_b_de = add("ae_text.b_decode", p.ae_text->b_decode);
  }
  if (p.ae_kge) {
    vars.ae_kge_w_en = add("ae_kge.w_encode", p.ae_kge->w_encode);
    vars.ae_kge_b_en = add("ae_kge.b_encode", p.ae_kge->b_encode);
    vars.ae_kge_w_de = add("ae_kge.w_decode", p.ae_kge->w_decode);
    vars.ae_kge_b_de = add("ae_kge.b_decode", p.ae_kge->b_decode);
  }
  vars.gate_head.resize(p.gates.w_head.size());
  vars.gate_tail.resize(p.gates.w_tail.size());
  for (std::size_t l = 0; l < p.gates.w_head.size(); ++l) {
    for (std::size_t s = 0; s < p.gates.w_head[l].size(); ++s) {
      const std::string tag = p.config.variant == ModelVariant::NoRelations
                                  ? std::string("shared")
                                  : fmt::format("r{}", p.gates.relation_ids[s]);
      vars.gate_head[l].push_back(
          add(fmt::format("gate.l{}.{}.head", l + 1, tag), p.gates.w_head[l][s]));
      vars.gate_tail[l].push_back(
          add(fmt::format("gate.l{}.{}.tail", l + 1, tag), p.gates.w_tail[l][s]));
    }
  }
  for (std::size_t l = 0; l < p.agg_weights.size(); ++l)
    vars.agg.push_back(add(fmt::format("agg.l{}", l + 1), p.agg_weights[l]));
  return vars;
}

struct LossTape {
  ad::Tape tape;
  ParamVars params;
  ad::Var bpr, ae, l2, total;
};

// Batched loss graph equivalent to the per-node forward: encoder, L gated
// propagation layers grouped by relation slot (unique head/tail transforms
// shared through the DAG), concatenated embeddings, BPR over the batch, AE
// reconstruction, and the L2 term over the full registry.
LossTape build_loss_tape(const BprBatch& batch, const GraphView& view, const LayerPlan& plan,
                         const FeatureMatrix& features, const ModelParams& p, double lambda_ae,
                         double gamma_l2) {
  if (batch.empty()) throw ConfigError("total_loss: empty batch");
  const GnnConfig& cfg = p.config;
  const int n = view.kg().num_nodes();
  const int d = cfg.d_prime;

  LossTape lt;
  ad::Tape& t = lt.tape;
  lt.params = make_param_vars(t, p);

  // Layer 0 + AE reconstruction per source.
  ad::Var e0;
  std::vector<ad::Var> ae_terms;
  auto encode_source = [&](FeatureSource src, const Eigen::MatrixXd& block, ad::Var w_en,
                           ad::Var b_en, ad::Var w_de, ad::Var b_de) {
    const ad::Var x = t.constant(block);
    const ad::Var hidden = t.tanh(t.add_colvec(t.matmul(w_en, x), b_en));
    const ad::Var reconstructed = t.add_colvec(t.matmul(w_de, hidden), b_de);
    ae_terms.push_back(
        t.scale(t.sum_squares(t.sub(reconstructed, x)), 1.0 / static_cast<double>(block.size())));
    std::vector<int> targets;
    for (const NodeId v : features.nodes_of(src)) targets.push_back(v);
    const ad::Var placed = t.scatter_cols(hidden, targets, n);
    e0 = e0.valid() ? t.add(e0, placed) : placed;
  };
  if (features.text_dim > 0)
    encode_source(FeatureSource::Text, features.text, lt.params.ae_text_w_en,
                  lt.params.ae_text_b_en, lt.params.ae_text_w_de, lt.params.ae_text_b_de);
  if (features.kge_dim > 0)
    encode_source(FeatureSource::Kge, features.kge, lt.params.ae_kge_w_en, lt.params.ae_kge_b_en,
                  lt.params.ae_kge_w_de, lt.params.ae_kge_b_de);
  if (!e0.valid()) throw ConfigError("model has no feature sources");
  lt.ae = t.scale(ae_terms[0], 1.0);
  for (std::size_t i = 1; i < ae_terms.size(); ++i) lt.ae = t.add(lt.ae, ae_terms[i]);
  lt.ae = t.scale(lt.ae, 1.0 / static_cast<double>(ae_terms.size()));

  // Propagation layers.
  const int n_slots = p.has_gates() ? static_cast<int>(p.gates.w_head[0].size()) : 1;
  ad::Var e_prev = e0;
  std::vector<ad::Var> layer_outputs;
  for (int l = 1; l <= cfg.layers; ++l) {
    const LayerPlan::Layer& layer = plan.layers[l - 1];
    std::vector<std::vector<int>> slot_heads(n_slots), slot_tails(n_slots);
    Eigen::VectorXd inv_count = Eigen::VectorXd::Zero(n);
    for (NodeId v = 0; v < n; ++v) {
      const auto edges = layer.edges_of(v);
      if (!edges.empty()) inv_count[v] = 1.0 / static_cast<double>(edges.size());
      for (const Triple& e : edges) {
        const int slot = p.has_gates() ? p.gate_slot(e.relation) : 0;
        slot_heads[slot].push_back(v);
        slot_tails[slot].push_back(e.tail);
      }
    }

    ad::Var summed;
    for (int s = 0; s < n_slots; ++s) {
      if (slot_heads[s].empty()) continue;
      const std::vector<int>& heads = slot_heads[s];
      const std::vector<int>& tails = slot_tails[s];
      ad::Var masked;
      if (p.has_gates()) {
        // unique (h, r): heads arrive ascending, dedupe consecutively
        std::vector<int> uniq_heads;
        std::vector<int> head_pos(heads.size());
        for (std::size_t j = 0; j < heads.size(); ++j) {
          if (uniq_heads.empty() || uniq_heads.back() != heads[j]) uniq_heads.push_back(heads[j]);
          head_pos[j] = static_cast<int>(uniq_heads.size()) - 1;
        }
        std::vector<int> uniq_tails = tails;
        std::sort(uniq_tails.begin(), uniq_tails.end());
        uniq_tails.erase(std::unique(uniq_tails.begin(), uniq_tails.end()), uniq_tails.end());
        std::vector<int> tail_pos(tails.size());
        for (std::size_t j = 0; j < tails.size(); ++j)
          tail_pos[j] = static_cast<int>(
              std::lower_bound(uniq_tails.begin(), uniq_tails.end(), tails[j]) -
              uniq_tails.begin());

        const ad::Var head_tf = t.matmul(lt.params.gate_head[l - 1][s],
                                         t.gather_cols(e_prev, uniq_heads));
        const ad::Var tail_tf = t.matmul(lt.params.gate_tail[l - 1][s],
                                         t.gather_cols(e_prev, uniq_tails));
        const ad::Var pre =
            t.add(t.gather_cols(head_tf, head_pos), t.gather_cols(tail_tf, tail_pos));
        masked = t.cwise_mul(t.sigmoid(pre), t.gather_cols(e_prev, tails));
      } else {
        masked = t.gather_cols(e_prev, tails);
      }
      const ad::Var scattered = t.scatter_cols(masked, heads, n);
      summed = summed.valid() ? t.add(summed, scattered) : scattered;
    }
    if (!summed.valid()) summed = t.constant(Eigen::MatrixXd::Zero(d, n));
    const ad::Var ego = t.colwise_scale(summed, inv_count);

    ad::Var next;
    switch (cfg.aggregator) {
      case Aggregator::LightGcn: next = ego; break;
      case Aggregator::Gcn:
        next = t.leaky_relu(t.matmul(lt.params.agg[l - 1], t.add(e_prev, ego)), cfg.leaky_slope);
        break;
      case Aggregator::GraphSage:
        next = t.leaky_relu(t.matmul(lt.params.agg[l - 1], t.vstack(e_prev, ego)),
                            cfg.leaky_slope);
        break;
    }
    layer_outputs.push_back(next);
    e_prev = next;
  }

  ad::Var star = layer_outputs[0];
  for (std::size_t l = 1; l < layer_outputs.size(); ++l) star = t.vstack(star, layer_outputs[l]);

  // BPR over the batch.
  std::vector<int> users, positives, negatives;
  for (const BprTriple& b : batch) {
    users.push_back(b.user);
    positives.push_back(b.positive);
    negatives.push_back(b.negative);
  }
  const ad::Var user_emb = t.gather_cols(star, users);
  const ad::Var pos_scores = t.col_dots(user_emb, t.gather_cols(star, positives));
  const ad::Var neg_scores = t.col_dots(user_emb, t.gather_cols(star, negatives));
  lt.bpr = t.mean_all(t.softplus(t.sub(neg_scores, pos_scores)));

  // L2 over every learnable parameter (optimizer state excluded by
  // construction).
  for (const auto& [name, var] : lt.params.ordered) {
    const ad::Var sq = t.sum_squares(var);
    lt.l2 = lt.l2.valid() ? t.add(lt.l2, sq) : sq;
  }

  lt.total = t.add(t.add(lt.bpr, t.scale(lt.ae, lambda_ae)), t.scale(lt.l2, gamma_l2));
  return lt;
}

}  // namespace

LossBreakdown total_loss(const BprBatch& batch, const GraphView& view, const LayerPlan& plan,
                         const FeatureMatrix& features, const ModelParams& params,
                         double lambda_ae, double gamma_l2) {
  LossTape lt = build_loss_tape(batch, view, plan, features, params, lambda_ae, gamma_l2);
  LossBreakdown out;
  out.total = lt.tape.value(lt.total)(0, 0);
  out.bpr = lt.tape.value(lt.bpr)(0, 0);
  out.ae = lt.tape.value(lt.ae)(0, 0);
  out.l2 = lt.tape.value(lt.l2)(0, 0);
  return out;
}

std::vector<std::pair<std::string, Eigen::MatrixXd>> compute_gradients(
    const BprBatch& batch, const GraphView& view, const LayerPlan& plan,
    const FeatureMatrix& features, const ModelParams& params, double lambda_ae, double gamma_l2,
    LossBreakdown* loss_out) {
  LossTape lt = build_loss_tape(batch, view, plan, features, params, lambda_ae, gamma_l2);
  lt.tape.backward(lt.total);
  if (loss_out) {
    loss_out->total = lt.tape.value(lt.total)(0, 0);
    loss_out->bpr = lt.tape.value(lt.bpr)(0, 0);
    loss_out->ae = lt.tape.value(lt.ae)(0, 0);
    loss_out->l2 = lt.tape.value(lt.l2)(0, 0);
  }
  std::vector<std::pair<std::string, Eigen::MatrixXd>> grads;
  grads.reserve(lt.params.ordered.size());
  for (const auto& [name, var] : lt.params.ordered) {
    Eigen::MatrixXd g = lt.tape.has_grad(var)
                            ? lt.tape.grad(var)
                            : Eigen::MatrixXd::Zero(lt.tape.value(var).rows(),
                                                    lt.tape.value(var).cols());
    if (!g.allFinite())
      throw NumericError(fmt::format("non-finite gradient for parameter '{}'", name));
    grads.emplace_back(name, std::move(g));
  }
  return grads;
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Eigen::MatrixXd*> params, const AdamConfig& config)
    : params_(std::move(params)), config_(config) {
  for (const Eigen::MatrixXd* p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
}

void Adam::step(const std::vector<std::pair<std::string, Eigen::MatrixXd>>& grads) {
  if (grads.size() != params_.size()) throw ConfigError("Adam: gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Eigen::MatrixXd& g = grads[i].second;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd m_hat = m_[i].array() / bc1;
    const Eigen::ArrayXXd v_hat = v_[i].array() / bc2;
    params_[i]->array() -= config_.lr * m_hat / (v_hat.sqrt() + config_.eps);
  }
}

// ---------------------------------------------------------------------------

namespace {

double validation_ndcg(const CollabKG& kg, const SplitSpec& split, const FeatureMatrix& features,
                       const ModelParams& params, int k) {
  const GraphView view =
      GraphView::training(kg, split, params.config.variant == ModelVariant::Bipartite);
  const LayerPlan plan = full_plan(view, params.config.layers);
  const LayerEmbeddings emb = forward(view, plan, encode_layer0(features, params), params);
  const Eigen::MatrixXd item_star = emb.concatenated().leftCols(kg.num_items());

  double total = 0.0;
  int n_users = 0;
  for (const NodeId u : split.warm_users) {
    const UserSplit& us = split.per_user.at(u);
    if (us.validation.empty()) continue;
    const std::unordered_set<NodeId> exclude(us.train.begin(), us.train.end());
    const int usable = kg.num_items() - static_cast<int>(exclude.size());
    if (usable < 1) continue;
    const RankedList ranked = rank_items(final_embedding(emb, u), item_star, exclude,
                                         std::min(k, usable));
    std::vector<NodeId> ids;
    ids.reserve(ranked.items.size());
    for (const RankedItem& it : ranked.items) ids.push_back(it.item);
    total += ndcg_at_k(ids, {us.validation.begin(), us.validation.end()}, k);
    ++n_users;
  }
  if (n_users == 0) throw DataError("fit: no warm users with validation interactions");
  return total / static_cast<double>(n_users);
}

}  // namespace

FitResult fit(const CollabKG& kg, const SplitSpec& split, const FeatureMatrix& features,
              const TrainConfig& config) {
  const bool bipartite = config.gnn.variant == ModelVariant::Bipartite;
  const GraphView view = GraphView::training(kg, split, bipartite);
  const std::vector<int> active_relations = view.active_relations();

  FitResult result;
  ModelParams params = init_model_params(config.gnn, active_relations, features.text_dim,
                                         features.kge_dim, config.seed);
  auto registry = parameter_registry(params);
  std::vector<Eigen::MatrixXd*> param_ptrs;
  for (auto& [name, mat] : registry) param_ptrs.push_back(mat);
  Adam adam(param_ptrs, {.lr = config.lr});

  BprSampler sampler(kg, split);
  const int batches_per_epoch =
      (sampler.num_training_pairs() + config.batch_size - 1) / config.batch_size;

  ModelParams best = params;
  double best_metric = -1.0;
  int best_epoch = -1;
  int no_improve_streak = 0;
  const int patience_limit = std::max(1, config.patience);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    bool finite = true;
    for (int b = 0; b < batches_per_epoch; ++b) {
      const std::uint64_t batch_seed =
          Rng::mix(Rng::mix(config.seed, static_cast<std::uint64_t>(epoch)),
                   static_cast<std::uint64_t>(b));
      const BprBatch batch = sampler.sample(config.batch_size, batch_seed);
      const LayerPlan plan = sampled_plan(view, config.gnn.fanouts, Rng::mix(batch_seed, 0x5eedULL));
      LossBreakdown loss;
      std::vector<std::pair<std::string, Eigen::MatrixXd>> grads;
      try {
        grads = compute_gradients(batch, view, plan, features, params, config.lambda_ae,
                                  config.gamma_l2, &loss);
      } catch (const NumericError&) {
        finite = false;
        break;
      }
      if (!std::isfinite(loss.total)) {
        finite = false;
        break;
      }
      adam.step(grads);
      log.loss += loss.total;
      log.bpr += loss.bpr;
      log.ae += loss.ae;
      log.l2 += loss.l2;
    }
    if (!finite) {
      // Divergence: return the best finite state seen so far.
      result.diverged = true;
      break;
    }
    log.loss /= batches_per_epoch;
    log.bpr /= batches_per_epoch;
    log.ae /= batches_per_epoch;
    log.l2 /= batches_per_epoch;
    log.validation_ndcg = validation_ndcg(kg, split, features, params, config.eval_k);
    result.log.push_back(log);
    result.epochs_run = epoch + 1;

    if (log.validation_ndcg > best_metric) {
      best_metric = log.validation_ndcg;
      best_epoch = epoch;
      best = params;
      no_improve_streak = 0;
    } else {
      ++no_improve_streak;
      if (no_improve_streak >= patience_limit) break;
    }
  }

  if (best_epoch < 0) {
    // No epoch completed; hand back the initial state.
    best = params;
    best_metric = 0.0;
  }
  result.params = std::move(best);
  result.best_epoch = best_epoch;
  result.best_metric = best_metric;
  return result;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw DataError("checkpoint matrix has inconsistent shape");
  Eigen::MatrixXd m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  nlohmann::ordered_json j;
  j["format_version"] = checkpoint.format_version;
  j["config"] = checkpoint.config.to_json();
  j["best_epoch"] = checkpoint.best_epoch;
  j["best_metric"] = checkpoint.best_metric;
  j["gate_relation_ids"] = checkpoint.params.gates.relation_ids;

  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  for (const auto& [name, mat] : parameter_registry(checkpoint.params)) {
    nlohmann::ordered_json entry = matrix_to_json(*mat);
    entry["name"] = name;
    params.push_back(std::move(entry));
  }
  j["params"] = std::move(params);

  const FeatureMatrix& f = checkpoint.features;
  nlohmann::ordered_json feats;
  feats["text_dim"] = f.text_dim;
  feats["kge_dim"] = f.kge_dim;
  std::vector<int> source_codes(f.source.size());
  for (std::size_t i = 0; i < f.source.size(); ++i) source_codes[i] = static_cast<int>(f.source[i]);
  feats["source"] = std::move(source_codes);
  feats["column"] = f.column;
  if (f.text_dim > 0) feats["text"] = matrix_to_json(f.text);
  if (f.kge_dim > 0) feats["kge"] = matrix_to_json(f.kge);
  j["features"] = std::move(feats);

  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write checkpoint '{}'", path));
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open checkpoint '{}'", path));
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError(fmt::format("malformed checkpoint '{}': {}", path, e.what()));
  }
  Checkpoint ckpt;
  ckpt.format_version = j.value("format_version", 0);
  if (ckpt.format_version != 1)
    throw DataError(fmt::format("unsupported checkpoint version {}", ckpt.format_version));
  ckpt.config = TrainConfig::from_json(j.at("config"));
  ckpt.best_epoch = j.value("best_epoch", -1);
  ckpt.best_metric = j.value("best_metric", 0.0);

  const FeatureMatrix& f = ckpt.features;
  auto& feats = j.at("features");
  ckpt.features.text_dim = feats.value("text_dim", 0);
  ckpt.features.kge_dim = feats.value("kge_dim", 0);
  for (const int code : feats.at("source").get<std::vector<int>>())
    ckpt.features.source.push_back(static_cast<FeatureSource>(code));
  ckpt.features.column = feats.at("column").get<std::vector<int>>();
  if (f.text_dim > 0) ckpt.features.text = matrix_from_json(feats.at("text"));
  if (f.kge_dim > 0) ckpt.features.kge = matrix_from_json(feats.at("kge"));

  const auto relation_ids = j.at("gate_relation_ids").get<std::vector<int>>();
  ckpt.params = init_model_params(ckpt.config.gnn, relation_ids, ckpt.features.text_dim,
                                  ckpt.features.kge_dim, /*seed=*/0);
  std::unordered_map<std::string, Eigen::MatrixXd*> by_name;
  for (auto& [name, mat] : parameter_registry(ckpt.params)) by_name[name] = mat;
  for (const auto& entry : j.at("params")) {
    const std::string name = entry.at("name").get<std::string>();
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw DataError(fmt::format("checkpoint parameter '{}' does not fit the model", name));
    *it->second = matrix_from_json(entry);
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw DataError(fmt::format("checkpoint is missing parameter '{}'", by_name.begin()->first));
  return ckpt;
}

}  // namespace simplerec

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

#include "simplerec/complex_kge.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "simplerec/rng.hpp"

namespace simplerec {

namespace {

double softplus(double x) {
  // log(1 + e^x) without overflow
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int col_of_node(const ComplexParams& p, NodeId v) {
  auto it = p.node_col.find(v);
  if (it == p.node_col.end())
    throw ConfigError(fmt::format("node {} not covered by ComplEx parameters", v));
  return it->second;
}

int col_of_rel(const ComplexParams& p, int r) {
  auto it = p.rel_col.find(r);
  if (it == p.rel_col.end())
    throw ConfigError(fmt::format("relation {} not covered by ComplEx parameters", r));
  return it->second;
}

}  // namespace

double complex_score(NodeId h, int r, NodeId t, const ComplexParams& p) {
  const int hc = col_of_node(p, h), tc = col_of_node(p, t), rc = col_of_rel(p, r);
  const auto hr = p.node_re.col(hc), hi = p.node_im.col(hc);
  const auto tr = p.node_re.col(tc), ti = p.node_im.col(tc);
  const auto rr = p.rel_re.col(rc), ri = p.rel_im.col(rc);
  return (rr.array() * (hr.array() * tr.array() + hi.array() * ti.array()) +
          ri.array() * (hr.array() * ti.array() - hi.array() * tr.array()))
      .sum();
}

double complex_logistic_loss(const std::vector<Triple>& positives,
                             const std::vector<Triple>& negatives, const ComplexParams& p,
                             ComplexGradients* grads) {
  const int total = static_cast<int>(positives.size() + negatives.size());
  if (total == 0) throw ConfigError("logistic loss over an empty example set");

  if (grads) {
    grads->node_re = Eigen::MatrixXd::Zero(p.dim, p.node_re.cols());
    grads->node_im = Eigen::MatrixXd::Zero(p.dim, p.node_im.cols());
    grads->rel_re = Eigen::MatrixXd::Zero(p.dim, p.rel_re.cols());
    grads->rel_im = Eigen::MatrixXd::Zero(p.dim, p.rel_im.cols());
  }

  double loss = 0.0;
  auto accumulate = [&](const Triple& triple, int label) {
    const double s = complex_score(triple.head, triple.relation, triple.tail, p);
    loss += softplus(-label * s);
    if (!grads) return;
    // d softplus(-y*s)/ds = -y * sigmoid(-y*s)
    const double ds = -label * sigmoid(-label * s) / total;
    const int hc = col_of_node(p, triple.head), tc = col_of_node(p, triple.tail),
              rc = col_of_rel(p, triple.relation);
    const Eigen::ArrayXd hr = p.node_re.col(hc), hi = p.node_im.col(hc);
    const Eigen::ArrayXd tr = p.node_re.col(tc), ti = p.node_im.col(tc);
    const Eigen::ArrayXd rr = p.rel_re.col(rc), ri = p.rel_im.col(rc);
    grads->node_re.col(hc).array() += ds * (rr * tr + ri * ti);
    grads->node_im.col(hc).array() += ds * (rr * ti - ri * tr);
    grads->node_re.col(tc).array() += ds * (rr * hr - ri * hi);
    grads->node_im.col(tc).array() += ds * (rr * hi + ri * hr);
    grads->rel_re.col(rc).array() += ds * (hr * tr + hi * ti);
    grads->rel_im.col(rc).array() += ds * (hr * ti - hi * tr);
  };
  for (const Triple& t : positives) accumulate(t, +1);
  for (const Triple& t : negatives) accumulate(t, -1);
  return loss / total;
}

ComplexParams train_complex(const std::vector<Triple>& triples, const ComplexTrainOptions& options,
                            ComplexTrainLog* log) {
  if (triples.empty()) throw DataError("train_complex: empty triple set");
  if (options.dim < 1) throw ConfigError("train_complex: dim must be >= 1");

  ComplexParams p;
  p.dim = options.dim;
  {
    std::set<NodeId> nodes;
    std::set<int> rels;
    for (const Triple& t : triples) {
      nodes.insert(t.head);
      nodes.insert(t.tail);
      rels.insert(t.relation);
    }
    p.covered.assign(nodes.begin(), nodes.end());
    p.rel_ids.assign(rels.begin(), rels.end());
  }
  for (std::size_t j = 0; j < p.covered.size(); ++j) p.node_col[p.covered[j]] = static_cast<int>(j);
  for (std::size_t j = 0; j < p.rel_ids.size(); ++j) p.rel_col[p.rel_ids[j]] = static_cast<int>(j);

  Rng init_rng(options.seed);
  auto init = [&](Eigen::MatrixXd& m, Eigen::Index cols) {
    m.resize(p.dim, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (int d = 0; d < p.dim; ++d) m(d, c) = 0.1 * init_rng.normal();
  };
  init(p.node_re, static_cast<Eigen::Index>(p.covered.size()));
  init(p.node_im, static_cast<Eigen::Index>(p.covered.size()));
  init(p.rel_re, static_cast<Eigen::Index>(p.rel_ids.size()));
  init(p.rel_im, static_cast<Eigen::Index>(p.rel_ids.size()));

  const int n_nodes = static_cast<int>(p.covered.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng(Rng::mix(options.seed, static_cast<std::uint64_t>(epoch) + 1));
    std::vector<Triple> negatives;
    negatives.reserve(triples.size() * 2 * options.negatives_per_positive);
    for (const Triple& t : triples) {
      for (int k = 0; k < options.negatives_per_positive; ++k) {
        negatives.push_back({p.covered[rng.uniform_int(n_nodes)], t.relation, t.tail});
        negatives.push_back({t.head, t.relation, p.covered[rng.uniform_int(n_nodes)]});
      }
    }
    ComplexGradients g;
    const double loss = complex_logistic_loss(triples, negatives, p, &g);
    if (!std::isfinite(loss)) throw NumericError("train_complex: loss diverged");
    if (log) log->epoch_loss.push_back(loss);
    p.node_re -= options.lr * g.node_re;
    p.node_im -= options.lr * g.node_im;
    p.rel_re -= options.lr * g.rel_re;
    p.rel_im -= options.lr * g.rel_im;
  }
  return p;
}

std::vector<Triple> kg_triples(const CollabKG& kg) {
  std::vector<Triple> out;
  for (const Triple& t : kg.edges()) {
    const Relation& r = kg.relations()[t.relation];
    if (r.is_interaction || r.inverse < t.relation) continue;
    out.push_back(t);
  }
  return out;
}

double complex_filtered_mrr(const ComplexParams& params, const std::vector<Triple>& test,
                            const std::vector<Triple>& known, int n_candidates,
                            std::uint64_t seed) {
  if (test.empty()) throw ConfigError("complex_filtered_mrr: empty test set");
  std::set<std::tuple<NodeId, int, NodeId>> known_set;
  for (const Triple& t : known) known_set.insert({t.head, t.relation, t.tail});

  const int n_nodes = static_cast<int>(params.covered.size());
  Rng rng(seed);
  double mrr = 0.0;
  for (const Triple& t : test) {
    const double true_score = complex_score(t.head, t.relation, t.tail, params);
    int rank = 1;
    int drawn = 0;
    int guard = 0;
    while (drawn < n_candidates - 1 && guard < 100 * n_candidates) {
      ++guard;
      const NodeId cand = params.covered[rng.uniform_int(n_nodes)];
      if (cand == t.tail || known_set.contains({t.head, t.relation, cand})) continue;
      ++drawn;
      const double s = complex_score(t.head, t.relation, cand, params);
      if (s > true_score || (s == true_score && cand < t.tail)) ++rank;
    }
    mrr += 1.0 / rank;
  }
  return mrr / static_cast<double>(test.size());
}

FeatureTable export_entity_features(const ComplexParams& params, const CollabKG& kg) {
  FeatureTable table;
  table.dim = 2 * params.dim;
  std::vector<NodeId> entities;
  for (NodeId v : params.covered)
    if (kg.kind_of(v) == NodeKind::Entity) entities.push_back(v);

  table.values.resize(table.dim, static_cast<Eigen::Index>(entities.size()));
  for (std::size_t j = 0; j < entities.size(); ++j) {
    const int c = params.node_col.at(entities[j]);
    table.values.col(static_cast<Eigen::Index>(j)).head(params.dim) = params.node_re.col(c);
    table.values.col(static_cast<Eigen::Index>(j)).tail(params.dim) = params.node_im.col(c);
    table.index[kg.node_key(entities[j])] = static_cast<int>(j);
    table.keys.push_back(kg.node_key(entities[j]));
  }
  return table;
}

}  // namespace simplerec

#include <doctest.h>

#include <cmath>

#include "simplerec/gnn.hpp"
#include "simplerec/rng.hpp"
#include "test_util.hpp"

using namespace simplerec;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

FeatureMatrix random_features(const CollabKG& kg, int dim, std::uint64_t seed) {
  Rng rng(seed);
  FeatureTable text;
  text.dim = dim;
  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < kg.num_nodes(); ++v)
    if (kg.kind_of(v) != NodeKind::User) nodes.push_back(v);
  text.values.resize(dim, static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    text.index[kg.node_key(nodes[j])] = static_cast<int>(j);
    text.keys.push_back(kg.node_key(nodes[j]));
    for (int d = 0; d < dim; ++d) text.values(d, static_cast<Eigen::Index>(j)) = rng.normal();
  }
  return assemble_initial_features(kg, text);
}

ModelParams make_params(const CollabKG& kg, const GnnConfig& config, std::uint64_t seed,
                        int assembled_dim = 0) {
  const GraphView view = GraphView::full(kg, config.variant == ModelVariant::Bipartite);
  const int dim = assembled_dim > 0 ? assembled_dim : config.d_prime + 3;
  return init_model_params(config, view.active_relations(), dim, 0, seed);
}

CollabKG random_graph(int n_users, int n_items, int n_entities, int n_relations,
                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<InteractionRecord> interactions;
  for (int u = 0; u < n_users; ++u) {
    const int n = 2 + rng.uniform_int(4);
    for (int k = 0; k < n; ++k)
      interactions.push_back(
          {"u" + std::to_string(u), "i" + std::to_string(rng.uniform_int(n_items)), 5});
  }
  std::vector<TripleRecord> triples;
  for (int i = 0; i < n_items; ++i) {
    const int n = 1 + rng.uniform_int(2);
    for (int k = 0; k < n; ++k)
      triples.push_back({"i" + std::to_string(i), "rel" + std::to_string(rng.uniform_int(n_relations)),
                         "e" + std::to_string(rng.uniform_int(n_entities))});
  }
  return CollabKG::build(interactions, triples);
}

}  // namespace

TEST_SUITE("gnn") {

TEST_CASE("zero gate weights output 0.5 everywhere") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 4;
  cfg.layers = 1;
  cfg.fanouts = {10};
  auto params = make_params(kg, cfg, 1);
  for (auto& layer : params.gates.w_head)
    for (auto& w : layer) w.setZero();
  for (auto& layer : params.gates.w_tail)
    for (auto& w : layer) w.setZero();
  const Eigen::VectorXd g = gate(Eigen::VectorXd::Random(4), Eigen::VectorXd::Random(4),
                                 kg.interaction_relation(), 1, params);
  for (int d = 0; d < 4; ++d) CHECK(g[d] == 0.5);
}

TEST_CASE("factorized gate equals the naive concatenated product") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 6;
  cfg.layers = 2;
  cfg.fanouts = {10, 10};
  const auto params = make_params(kg, cfg, 2);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd e_h(6), e_t(6);
    for (int d = 0; d < 6; ++d) {
      e_h[d] = rng.normal();
      e_t[d] = rng.normal();
    }
    const int rel = trial % 2 == 0 ? kg.interaction_relation() : 0;
    const int layer = 1 + trial % 2;
    const Eigen::VectorXd factorized = gate(e_h, e_t, rel, layer, params);

    const int slot = params.gate_slot(rel);
    Eigen::MatrixXd w_cat(6, 12);
    w_cat.leftCols(6) = params.gates.w_head[layer - 1][slot];
    w_cat.rightCols(6) = params.gates.w_tail[layer - 1][slot];
    Eigen::VectorXd cat(12);
    cat << e_h, e_t;
    const Eigen::VectorXd pre = w_cat * cat;
    for (int d = 0; d < 6; ++d) {
      CHECK(std::abs(factorized[d] - sigmoid(pre[d])) <= 1e-12);
      CHECK(factorized[d] > 0.0);
      CHECK(factorized[d] < 1.0);
    }
  }
}

TEST_CASE("zero head (user at layer 1) leaves only the tail term") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 5;
  cfg.layers = 1;
  cfg.fanouts = {10};
  const auto params = make_params(kg, cfg, 4);
  const Eigen::VectorXd e_t = Eigen::VectorXd::Random(5);
  const int rel = kg.interaction_relation();
  const Eigen::VectorXd g = gate(Eigen::VectorXd::Zero(5), e_t, rel, 1, params);
  const int slot = params.gate_slot(rel);
  const Eigen::VectorXd expected =
      (1.0 + (-(params.gates.w_tail[0][slot] * e_t).array()).exp()).inverse().matrix();
  CHECK((g - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("unknown relation raises") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 1;
  cfg.fanouts = {10};
  const auto params = make_params(kg, cfg, 5);
  CHECK_THROWS_AS(
      static_cast<void>(gate(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 99, 1, params)),
      ConfigError);
}

TEST_CASE("saturated gate passes a single neighbor through unchanged") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 1;
  cfg.fanouts = {10};
  auto params = make_params(kg, cfg, 6);
  for (auto& layer : params.gates.w_head)
    for (auto& w : layer) w.setZero();
  for (auto& layer : params.gates.w_tail)
    for (auto& w : layer) w.setConstant(1e6); // sigma saturates to 1 for positive tails

  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(3, kg.num_nodes());
  prev.col(0) << 0.25, 0.5, 0.75; // positive neighbor embedding
  const std::vector<Triple> edges = {{kg.user_id(1), kg.interaction_relation(), 0}};
  const Eigen::VectorXd ego = aggregate_ego(kg.user_id(1), edges, prev, 1, params);
  CHECK((ego - prev.col(0)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("zero gate weights halve the neighbor mean") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 2;
  cfg.layers = 1;
  cfg.fanouts = {10};
  auto params = make_params(kg, cfg, 7);
  for (auto& layer : params.gates.w_head)
    for (auto& w : layer) w.setZero();
  for (auto& layer : params.gates.w_tail)
    for (auto& w : layer) w.setZero();

  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(2, kg.num_nodes());
  prev.col(0) << 1.0, 2.0;
  prev.col(1) << 3.0, 4.0;
  const NodeId u = kg.user_id(0);
  const std::vector<Triple> edges = {{u, kg.interaction_relation(), 0},
                                     {u, kg.interaction_relation(), 1}};
  const Eigen::VectorXd ego = aggregate_ego(u, edges, prev, 1, params);
  const Eigen::VectorXd expected = 0.5 * (prev.col(0) + prev.col(1)) / 2.0;
  CHECK((ego - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("aggregate_ego matches a scalar-loop evaluation of the propagation rule") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 4;
  cfg.layers = 1;
  cfg.fanouts = {10};
  const auto params = make_params(kg, cfg, 8);
  Rng rng(9);
  Eigen::MatrixXd prev(4, kg.num_nodes());
  for (int c = 0; c < prev.cols(); ++c)
    for (int r = 0; r < 4; ++r) prev(r, c) = rng.normal();

  const NodeId u0 = kg.user_id(0);
  std::vector<Triple> edges(kg.neighbors(u0).begin(), kg.neighbors(u0).end());
  const Eigen::VectorXd ego = aggregate_ego(u0, edges, prev, 1, params);

  // brute force over the edge list in scalar arithmetic
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
  for (const Triple& e : edges) {
    const int slot = params.gate_slot(e.relation);
    for (int d = 0; d < 4; ++d) {
      double pre = 0.0;
      for (int k = 0; k < 4; ++k)
        pre += params.gates.w_head[0][slot](d, k) * prev(k, u0) +
               params.gates.w_tail[0][slot](d, k) * prev(k, e.tail);
      expected[d] += sigmoid(pre) * prev(d, e.tail);
    }
  }
  expected /= static_cast<double>(edges.size());
  CHECK((ego - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("empty ego-network aggregates to zero") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 1;
  cfg.fanouts = {10};
  const auto params = make_params(kg, cfg, 10);
  const Eigen::MatrixXd prev = Eigen::MatrixXd::Random(3, kg.num_nodes());
  CHECK(aggregate_ego(0, {}, prev, 1, params) == Eigen::VectorXd::Zero(3));
}

TEST_CASE("combine: LightGCN returns the ego vector untouched") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 1;
  cfg.fanouts = {10};
  const auto params = make_params(kg, cfg, 11);
  const Eigen::VectorXd e_h = Eigen::VectorXd::Random(3);
  const Eigen::VectorXd v = Eigen::VectorXd::Random(3);
  CHECK(combine(Aggregator::LightGcn, e_h, v, 1, params) == v);
}

TEST_CASE("combine: GCN with identity weights passes nonnegative sums through") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 1;
  cfg.fanouts = {10};
  cfg.aggregator = Aggregator::Gcn;
  auto params = make_params(kg, cfg, 12);
  params.agg_weights[0] = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd e_h(3), e_ego(3);
  e_h << 0.1, 0.2, 0.0;
  e_ego << 0.3, 0.0, 0.5;
  CHECK((combine(Aggregator::Gcn, e_h, e_ego, 1, params) - (e_h + e_ego)).norm() <= 1e-15);
}

TEST_CASE("combine: GraphSAGE equals the concatenate-then-multiply oracle") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 4;
  cfg.layers = 1;
  cfg.fanouts = {10};
  cfg.aggregator = Aggregator::GraphSage;
  const auto params = make_params(kg, cfg, 13);
  const Eigen::VectorXd e_h = Eigen::VectorXd::Random(4);
  const Eigen::VectorXd e_ego = Eigen::VectorXd::Random(4);
  const Eigen::VectorXd out = combine(Aggregator::GraphSage, e_h, e_ego, 1, params);
  Eigen::VectorXd cat(8);
  cat << e_h, e_ego;
  Eigen::VectorXd expected = params.agg_weights[0] * cat;
  for (int d = 0; d < 4; ++d)
    expected[d] = expected[d] > 0 ? expected[d] : 0.01 * expected[d];
  CHECK((out - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

// ---------------------------------------------------------------------------

TEST_CASE("single hop on a 2-node graph: user embedding is the gated item encoding") {
  const auto kg = CollabKG::build({{"u", "i", 5.0}}, {});
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 1;
  cfg.fanouts = {10};
  const auto features = random_features(kg, cfg.d_prime + 2, 15);
  const auto params = make_params(kg, cfg, 14, features.text_dim);
  const Eigen::MatrixXd layer0 = encode_layer0(features, params);
  const GraphView view = GraphView::full(kg);
  const auto emb = forward(view, full_plan(view, 1), layer0, params);

  const NodeId u = kg.user_id(0);
  const Eigen::VectorXd g =
      gate(Eigen::VectorXd::Zero(3), layer0.col(0), kg.interaction_relation(), 1, params);
  CHECK((emb.layers[0].col(u) - g.cwiseProduct(layer0.col(0))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled forward with fanout >= max degree equals the full forward") {
  const auto kg = random_graph(8, 6, 4, 2, 20);
  GnnConfig cfg;
  cfg.d_prime = 5;
  cfg.layers = 2;
  cfg.fanouts = {100, 100};
  const auto features = random_features(kg, cfg.d_prime + 2, 22);
  const auto params = make_params(kg, cfg, 21, features.text_dim);
  const Eigen::MatrixXd layer0 = encode_layer0(features, params);
  const GraphView view = GraphView::full(kg);
  const auto full = forward(view, full_plan(view, 2), layer0, params);
  const auto sampled = forward(view, sampled_plan(view, cfg.fanouts, 77), layer0, params);
  for (int l = 0; l < 2; ++l)
    CHECK((full.layers[l] - sampled.layers[l]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-layer chain matches a hand-unrolled computation") {
  // u - i - e chain plus a second item to give the user two edges
  const auto kg = CollabKG::build({{"u", "i", 5.0}}, {{"i", "about", "e"}});
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 2;
  cfg.fanouts = {10, 10};
  const auto features = random_features(kg, cfg.d_prime + 2, 31);
  const auto params = make_params(kg, cfg, 30, features.text_dim);
  const Eigen::MatrixXd layer0 = encode_layer0(features, params);
  const GraphView view = GraphView::full(kg);
  const auto emb = forward(view, full_plan(view, 2), layer0, params);

  // manual layer 1 for every node, then layer 2 for the user
  auto manual_ego = [&](NodeId v, const Eigen::MatrixXd& prev, int layer) {
    const auto nbrs = kg.neighbors(v);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
    for (const auto& e : nbrs) {
      const int slot = params.gate_slot(e.relation);
      Eigen::VectorXd pre = params.gates.w_head[layer - 1][slot] * prev.col(v) +
                            params.gates.w_tail[layer - 1][slot] * prev.col(e.tail);
      for (int d = 0; d < 3; ++d) acc[d] += sigmoid(pre[d]) * prev(d, e.tail);
    }
    return nbrs.empty() ? acc : Eigen::VectorXd(acc / static_cast<double>(nbrs.size()));
  };
  Eigen::MatrixXd l1(3, kg.num_nodes());
  for (NodeId v = 0; v < kg.num_nodes(); ++v) l1.col(v) = manual_ego(v, layer0, 1);
  CHECK((emb.layers[0] - l1).cwiseAbs().maxCoeff() <= 1e-12);
  const NodeId u = kg.user_id(0);
  CHECK((emb.layers[1].col(u) - manual_ego(u, l1, 2)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("factorized and naive forwards agree within 1e-10 and respect cost bounds") {
  for (int trial = 0; trial < 3; ++trial) {
    const auto kg = random_graph(10 + trial * 3, 8, 5, 3, 40 + trial);
    GnnConfig cfg;
    cfg.d_prime = 6;
    cfg.layers = 2;
    cfg.fanouts = {10, 10};
    const auto features = random_features(kg, cfg.d_prime + 2, 42 + trial);
    const auto params = make_params(kg, cfg, 41 + trial, features.text_dim);
    const Eigen::MatrixXd layer0 = encode_layer0(features, params);
    const GraphView view = GraphView::full(kg);
    const LayerPlan plan = full_plan(view, 2);

    ForwardStats fact_stats, naive_stats;
    const auto fact = forward(view, plan, layer0, params, &fact_stats);
    const auto naive = forward_naive(view, plan, layer0, params, &naive_stats);
    for (int l = 0; l < 2; ++l)
      CHECK((fact.layers[l] - naive.layers[l]).cwiseAbs().maxCoeff() <= 1e-10);

    const long long v_times_r =
        static_cast<long long>(kg.num_nodes()) * static_cast<long long>(kg.relations().size());
    const long long edges = static_cast<long long>(kg.edges().size());
    CHECK(fact_stats.gate_matvecs <= 2 * 2 * v_times_r); // per layer bound, 2 layers
    CHECK(naive_stats.gate_matvecs == 2 * 2 * edges);
    if (edges > v_times_r) CHECK(fact_stats.gate_matvecs < naive_stats.gate_matvecs);
  }
}

TEST_CASE("no-gates with LightGCN reduces to plain neighbor averaging") {
  const auto kg = random_graph(6, 5, 3, 2, 50);
  GnnConfig cfg;
  cfg.d_prime = 4;
  cfg.layers = 2;
  cfg.fanouts = {10, 10};
  cfg.variant = ModelVariant::NoGates;
  const auto features = random_features(kg, cfg.d_prime + 2, 52);
  const auto params = make_params(kg, cfg, 51, features.text_dim);
  CHECK(parameter_registry(params).size() == 4); // only the text AE remains
  const Eigen::MatrixXd layer0 = encode_layer0(features, params);
  const GraphView view = GraphView::full(kg);
  const auto emb = forward(view, full_plan(view, 2), layer0, params);

  Eigen::MatrixXd prev = layer0;
  for (int l = 0; l < 2; ++l) {
    Eigen::MatrixXd expect(4, kg.num_nodes());
    for (NodeId v = 0; v < kg.num_nodes(); ++v) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
      const auto nbrs = kg.neighbors(v);
      for (const auto& e : nbrs) acc += prev.col(e.tail);
      expect.col(v) = nbrs.empty() ? acc : Eigen::VectorXd(acc / double(nbrs.size()));
    }
    CHECK((emb.layers[l] - expect).cwiseAbs().maxCoeff() <= 1e-12);
    prev = expect;
  }
}

TEST_CASE("no-relations shares one gate across all relations") {
  const auto kg = random_graph(6, 5, 3, 3, 60);
  GnnConfig cfg;
  cfg.d_prime = 4;
  cfg.layers = 1;
  cfg.fanouts = {10};
  cfg.variant = ModelVariant::NoRelations;
  const auto params = make_params(kg, cfg, 61);
  CHECK(params.gates.w_head[0].size() == 1);
  CHECK(params.gate_slot(0) == params.gate_slot(kg.interaction_relation()));
  const Eigen::VectorXd e_h = Eigen::VectorXd::Random(4);
  const Eigen::VectorXd e_t = Eigen::VectorXd::Random(4);
  CHECK(gate(e_h, e_t, 0, 1, params) == gate(e_h, e_t, 2, 1, params));
}

TEST_CASE("adding a new user leaves pre-existing layer-1 embeddings untouched") {
  // the augmented graph adds u_new with edges to existing items; the
  // original nodes' ego-networks are unchanged when the new inverse edges
  // are not sampled, here realized by evaluating on the original graph and
  // the augmented one with the new user's inverse edges filtered out
  std::vector<InteractionRecord> base = {{"u0", "i0", 5}, {"u0", "i1", 5}, {"u1", "i1", 5}};
  const auto kg = CollabKG::build(base, {{"i0", "g", "e0"}});
  std::vector<InteractionRecord> augmented = base;
  augmented.push_back({"u_new", "i0", 5});
  const auto kg2 = CollabKG::build(augmented, {{"i0", "g", "e0"}});

  GnnConfig cfg;
  cfg.d_prime = 4;
  cfg.layers = 1;
  cfg.fanouts = {10};
  const auto features = random_features(kg, cfg.d_prime + 2, 71);
  const auto params = make_params(kg, cfg, 70, features.text_dim);

  // same text vectors for shared keys in the augmented graph
  FeatureTable text;
  text.dim = cfg.d_prime + 2;
  for (NodeId v = 0; v < kg.num_nodes(); ++v) {
    if (kg.kind_of(v) == NodeKind::User) continue;
    text.keys.push_back(kg.node_key(v));
    text.index[kg.node_key(v)] = static_cast<int>(text.keys.size()) - 1;
  }
  text.values.resize(text.dim, static_cast<Eigen::Index>(text.keys.size()));
  for (std::size_t j = 0; j < text.keys.size(); ++j) {
    const NodeId v = *(kg.find_item(text.keys[j]) ? kg.find_item(text.keys[j])
                                                  : kg.find_entity(text.keys[j]));
    text.values.col(static_cast<Eigen::Index>(j)) =
        features.text.col(features.column[v]).head(text.dim);
  }
  // degree of i0 changes in kg2; rebuild features against kg2 but force the
  // degree channel back so layer-0 inputs agree for this structural check
  auto features2 = assemble_initial_features(kg2, text);
  for (NodeId v = 0; v < kg.num_nodes(); ++v) {
    if (kg.kind_of(v) == NodeKind::User) continue;
    const auto key = kg.node_key(v);
    const NodeId v2 = *(kg2.find_item(key) ? kg2.find_item(key) : kg2.find_entity(key));
    features2.text.col(features2.column[v2]) = features.text.col(features.column[v]);
  }

  const GraphView view1 = GraphView::full(kg);
  auto emb1 = forward(view1, full_plan(view1, 1), encode_layer0(features, params), params);

  // filter out edges that touch the new user
  GraphView view2 = GraphView::full(kg2);
  const NodeId u_new = *kg2.find_user("u_new");
  LayerPlan plan2 = full_plan(view2, 1);
  for (auto& layer : plan2.layers) {
    LayerPlan::Layer filtered;
    filtered.offsets.assign(kg2.num_nodes() + 1, 0);
    for (NodeId v = 0; v < kg2.num_nodes(); ++v) {
      for (const auto& e : layer.edges_of(v))
        if (e.head != u_new && e.tail != u_new) filtered.edges.push_back(e);
      filtered.offsets[v + 1] = static_cast<int>(filtered.edges.size());
    }
    layer = std::move(filtered);
  }
  auto emb2 = forward(view2, plan2, encode_layer0(features2, params), params);

  for (NodeId v = 0; v < kg.num_nodes(); ++v) {
    const auto key = kg.node_key(v);
    const auto v2 = kg.kind_of(v) == NodeKind::User ? kg2.find_user(key)
                    : kg.kind_of(v) == NodeKind::Item ? kg2.find_item(key)
                                                      : kg2.find_entity(key);
    REQUIRE(v2.has_value());
    CHECK((emb1.layers[0].col(v) - emb2.layers[0].col(*v2)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("final_embedding concatenates layers 1..L in order") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 2;
  cfg.fanouts = {10, 10};
  const auto features = random_features(kg, cfg.d_prime + 2, 81);
  const auto params = make_params(kg, cfg, 80, features.text_dim);
  const GraphView view = GraphView::full(kg);
  const auto emb = forward(view, full_plan(view, 2), encode_layer0(features, params), params);

  const Eigen::VectorXd star = final_embedding(emb, 0);
  REQUIRE(star.size() == 6);
  CHECK(star.head(3) == emb.layers[0].col(0));
  CHECK(star.tail(3) == emb.layers[1].col(0));

  // degenerate L=1 case: final equals layer-1
  GnnConfig cfg1 = cfg;
  cfg1.layers = 1;
  cfg1.fanouts = {10};
  const auto params1 = make_params(kg, cfg1, 82, features.text_dim);
  const auto emb1 = forward(view, full_plan(view, 1), encode_layer0(features, params1), params1);
  CHECK(final_embedding(emb1, 0) == emb1.layers[0].col(0));

  // slice-equality against an independent concatenation
  const Eigen::MatrixXd cat = emb.concatenated();
  for (NodeId v = 0; v < kg.num_nodes(); ++v) CHECK(cat.col(v) == final_embedding(emb, v));
}

TEST_CASE("score is a plain inner product with a length check") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 0, 0;
  b << 0, 1, 0;
  CHECK(score(a, b) == 0.0);
  CHECK(score(a, a) == 1.0);

  Rng rng(90);
  Eigen::VectorXd x(7), y(7);
  for (int d = 0; d < 7; ++d) {
    x[d] = rng.normal();
    y[d] = rng.normal();
  }
  double expected = 0.0;
  for (int d = 0; d < 7; ++d) expected += x[d] * y[d];
  CHECK(score(x, y) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(static_cast<void>(score(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3))),
                  ConfigError);
}

TEST_CASE("plan layer count must match the model") {
  const auto kg = test::tiny_graph();
  GnnConfig cfg;
  cfg.d_prime = 3;
  cfg.layers = 2;
  cfg.fanouts = {10, 10};
  const auto features = random_features(kg, cfg.d_prime + 2, 92);
  const auto params = make_params(kg, cfg, 91, features.text_dim);
  const GraphView view = GraphView::full(kg);
  CHECK_THROWS_AS(
      static_cast<void>(forward(view, full_plan(view, 1), encode_layer0(features, params), params)),
      ConfigError);
  CHECK_THROWS_AS(static_cast<void>(init_model_params(GnnConfig{.d_prime = 3,
                                                                .layers = 2,
                                                                .fanouts = {10}},
                                                      {0, 1}, 4, 0, 1)),
                  ConfigError);
}

}  // TEST_SUITE

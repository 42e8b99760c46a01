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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "simplerec/complex_kge.hpp"
#include "simplerec/pipeline.hpp"
#include "simplerec/synthetic.hpp"

namespace {

using namespace simplerec;

struct TrainOverrides {
  std::optional<std::string> config_path;
  std::optional<int> d_prime, layers, batch_size, max_epochs, patience, eval_k, min_interactions;
  std::optional<double> lambda, gamma, lr, cold_fraction, reveal_fraction;
  std::optional<std::string> aggregator, variant;
  std::optional<std::uint64_t> seed;

  TrainConfig resolve() const {
    TrainConfig config;
    if (config_path) config = load_train_config(*config_path, config);
    if (d_prime) config.gnn.d_prime = *d_prime;
    if (layers) {
      config.gnn.layers = *layers;
      if (static_cast<int>(config.gnn.fanouts.size()) != *layers)
        config.gnn.fanouts.assign(*layers, config.gnn.fanouts.empty() ? 10 : config.gnn.fanouts[0]);
    }
    if (batch_size) config.batch_size = *batch_size;
    if (max_epochs) config.max_epochs = *max_epochs;
    if (patience) config.patience = *patience;
    if (eval_k) config.eval_k = *eval_k;
    if (min_interactions) config.min_interactions = *min_interactions;
    if (lambda) config.lambda_ae = *lambda;
    if (gamma) config.gamma_l2 = *gamma;
    if (lr) config.lr = *lr;
    if (cold_fraction) config.cold_fraction = *cold_fraction;
    if (reveal_fraction) config.reveal_fraction = *reveal_fraction;
    if (aggregator) config.gnn.aggregator = aggregator_from_string(*aggregator);
    if (variant) config.gnn.variant = variant_from_string(*variant);
    if (seed) config.seed = *seed;
    return config;
  }
};

void add_train_overrides(CLI::App* cmd, TrainOverrides& o, bool include_variant = true) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--d-prime", o.d_prime, "shared embedding dimension d'");
  cmd->add_option("--layers", o.layers, "number of propagation layers");
  cmd->add_option("--batch-size", o.batch_size);
  cmd->add_option("--epochs", o.max_epochs, "epoch cap");
  cmd->add_option("--patience", o.patience, "early-stopping patience");
  cmd->add_option("--eval-k", o.eval_k, "validation NDCG cutoff");
  cmd->add_option("--min-interactions", o.min_interactions);
  cmd->add_option("--lambda", o.lambda, "AE loss weight");
  cmd->add_option("--gamma", o.gamma, "L2 weight");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--cold-fraction", o.cold_fraction);
  cmd->add_option("--reveal-fraction", o.reveal_fraction);
  cmd->add_option("--aggregator", o.aggregator, "lightgcn|gcn|graphsage");
  if (include_variant)
    cmd->add_option("--variant", o.variant, "full|no-gates|no-relations|bipartite");
  cmd->add_option("--seed", o.seed);
}

FeatureMatrix assemble_from_files(const CollabKG& kg, const std::string& features_path,
                                  const std::optional<std::string>& kge_path) {
  const FeatureTable text = FeatureTable::load(features_path);
  if (kge_path) {
    const FeatureTable kge = FeatureTable::load(*kge_path);
    return assemble_initial_features(kg, text, &kge);
  }
  return assemble_initial_features(kg, text);
}

int run_train(const CollabKG& kg, const FeatureMatrix& features, const TrainConfig& config,
              const std::string& out, const std::string& log_path) {
  const TrainOutput result = train_model(kg, features, config);
  save_checkpoint(out, result.checkpoint);
  if (!log_path.empty()) write_training_log(log_path, result.fit);
  std::cout << fmt::format("trained {} epochs, best validation NDCG@{} = {} at epoch {}\n",
                           result.fit.epochs_run, config.eval_k, result.fit.best_metric,
                           result.fit.best_epoch);
  if (result.fit.diverged) {
    std::cerr << "error: loss diverged; checkpoint holds the last finite state\n";
    return 3;
  }
  return 0;
}

MetricReport run_evaluate(const CollabKG& kg, const Checkpoint& ckpt, const std::string& split_kind,
                          int k, int indcg_negatives, std::uint64_t seed,
                          const std::string& baseline) {
  const SplitSpec split = split_from_config(kg, ckpt.config);
  EvaluateOptions options;
  options.mode = split_kind == "warm" ? RecommendMode::Warm : RecommendMode::Cold;
  options.k = k;
  options.indcg_negatives = indcg_negatives;
  options.seed = seed;
  nlohmann::ordered_json echo = ckpt.config.to_json();
  echo["split"] = split_kind;
  echo["k"] = k;
  echo["indcg_negatives"] = indcg_negatives;
  echo["eval_seed"] = seed;
  if (baseline == "toppop") return evaluate_toppop(kg, split, options, false, echo);
  if (baseline == "toppop-naive") return evaluate_toppop(kg, split, options, true, echo);
  return evaluate_model(kg, split, ckpt.features, ckpt.params, options, echo);
}

void attach_comparison(MetricReport& report, const std::string& compare_path) {
  const MetricReport other = MetricReport::load(compare_path);
  report.compared_to = other.scorer.empty() ? compare_path : other.scorer;
  for (const std::string metric : {"ndcg", "recall", "precision"})
    report.p_values[metric] = paired_significance(report, other, metric).p_value;
  if (report.indcg_negatives > 0 && other.indcg_negatives > 0)
    report.p_values["indcg"] = paired_significance(report, other, "indcg").p_value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SimpleRec: inductive recommendations over a collaborative knowledge graph"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build and serialize the graph from TSV inputs");
  std::string in_ratings, in_triples, ingest_out;
  std::optional<double> threshold;
  bool error_dangling = false;
  ingest->add_option("--ratings", in_ratings, "user<TAB>item<TAB>rating file")->required();
  ingest->add_option("--triples", in_triples, "head<TAB>relation<TAB>tail file");
  ingest->add_option("--out", ingest_out, "output graph directory")->required();
  ingest->add_option("--threshold", threshold, "drop interactions rated below this");
  ingest->add_flag("--error-dangling", error_dangling, "fail on dangling KG triples");

  // train-kge
  auto* train_kge = app.add_subcommand("train-kge", "train ComplEx embeddings over the KG");
  std::string kge_graph, kge_out;
  ComplexTrainOptions kge_opts;
  train_kge->add_option("--graph", kge_graph)->required();
  train_kge->add_option("--dim", kge_opts.dim, "complex dimension d_c");
  train_kge->add_option("--epochs", kge_opts.epochs);
  train_kge->add_option("--lr", kge_opts.lr);
  train_kge->add_option("--negatives", kge_opts.negatives_per_positive);
  train_kge->add_option("--seed", kge_opts.seed);
  train_kge->add_option("--out", kge_out, "entity feature file")->required();

  // train
  auto* train = app.add_subcommand("train", "train the recommender");
  std::string train_graph, train_features, train_out, train_log;
  std::optional<std::string> train_kge_features;
  TrainOverrides train_overrides;
  train->add_option("--graph", train_graph)->required();
  train->add_option("--features", train_features, "textual feature file")->required();
  train->add_option("--kge", train_kge_features, "KGE feature file for uncovered entities");
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--log", train_log, "training log TSV");
  add_train_overrides(train, train_overrides);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint or baseline");
  std::string eval_ckpt, eval_graph, eval_split = "cold", eval_out, eval_baseline, eval_compare;
  int eval_k = 20, eval_indcg = 0;
  std::uint64_t eval_seed = 42;
  evaluate->add_option("--ckpt", eval_ckpt)->required();
  evaluate->add_option("--graph", eval_graph)->required();
  evaluate->add_option("--split", eval_split, "warm|cold")
      ->check(CLI::IsMember({"warm", "cold"}));
  evaluate->add_option("--k", eval_k, "ranking cutoff");
  evaluate->add_option("--indcg-negatives", eval_indcg, "N for I-NDCG; 0 disables");
  evaluate->add_option("--seed", eval_seed, "evaluation sampling seed");
  evaluate->add_option("--out", eval_out, "report path (JSON; .tsv written alongside)")->required();
  evaluate->add_option("--baseline", eval_baseline, "toppop|toppop-naive instead of the model")
      ->check(CLI::IsMember({"toppop", "toppop-naive"}));
  evaluate->add_option("--compare", eval_compare, "report to test significance against");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and evaluate an ablation variant");
  std::string ab_graph, ab_features, ab_out_dir, ab_split = "cold";
  std::optional<std::string> ab_kge;
  std::optional<double> ab_lambda;
  std::string ab_variant = "full";
  int ab_k = 20;
  TrainOverrides ab_overrides;
  ablate->add_option("--graph", ab_graph)->required();
  ablate->add_option("--features", ab_features)->required();
  ablate->add_option("--kge", ab_kge);
  ablate->add_option("--variant", ab_variant, "full|no-gates|no-relations|bipartite")
      ->check(CLI::IsMember({"full", "no-gates", "no-relations", "bipartite"}));
  ablate->add_option("--ae-lambda", ab_lambda, "override the AE loss weight");
  ablate->add_option("--split", ab_split)->check(CLI::IsMember({"warm", "cold"}));
  ablate->add_option("--k", ab_k);
  ablate->add_option("--out-dir", ab_out_dir, "directory for checkpoint + report")->required();
  add_train_overrides(ablate, ab_overrides, /*include_variant=*/false);

  // recommend
  auto* recommend = app.add_subcommand("recommend", "rank items for a new user from a ratings file");
  std::string rec_ckpt, rec_graph, rec_ratings, rec_out;
  int rec_k = 20;
  recommend->add_option("--ckpt", rec_ckpt)->required();
  recommend->add_option("--graph", rec_graph)->required();
  recommend->add_option("--user-ratings", rec_ratings, "item<TAB>rating lines")->required();
  recommend->add_option("--k", rec_k);
  recommend->add_option("--out", rec_out, "output file (stdout when omitted)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic block-structured fixture");
  int sy_users = 0, sy_items = 0, sy_entities = 0, sy_blocks = 0;
  std::uint64_t sy_seed = 42;
  std::string sy_out;
  synth->add_option("--users", sy_users)->required();
  synth->add_option("--items", sy_items)->required();
  synth->add_option("--entities", sy_entities)->required();
  synth->add_option("--blocks", sy_blocks)->required();
  synth->add_option("--seed", sy_seed);
  synth->add_option("--out", sy_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      const auto interactions = load_interactions(in_ratings, threshold);
      const auto triples = in_triples.empty() ? std::vector<TripleRecord>{} : load_triples(in_triples);
      BuildOptions options;
      options.error_on_dangling = error_dangling;
      const CollabKG kg = CollabKG::build(interactions, triples, options);
      kg.save(ingest_out);
      std::cout << fmt::format("graph: {} items, {} entities, {} users, {} directed edges\n",
                               kg.num_items(), kg.num_entities(), kg.num_users(),
                               kg.edges().size());
    } else if (*train_kge) {
      const CollabKG kg = CollabKG::load(kge_graph);
      const auto triples = kg_triples(kg);
      ComplexTrainLog log;
      const ComplexParams params = train_complex(triples, kge_opts, &log);
      export_entity_features(params, kg).save(kge_out);
      const double mrr = complex_filtered_mrr(params, triples, triples, 10, kge_opts.seed);
      std::cout << fmt::format("ComplEx: {} triples, final loss {}, train MRR@10-candidates {}\n",
                               triples.size(), log.epoch_loss.back(), mrr);
    } else if (*train) {
      const CollabKG kg = CollabKG::load(train_graph);
      const TrainConfig config = train_overrides.resolve();
      const FeatureMatrix features = assemble_from_files(kg, train_features, train_kge_features);
      const std::string log_path = train_log.empty() ? train_out + ".log" : train_log;
      return run_train(kg, features, config, train_out, log_path);
    } else if (*evaluate) {
      const CollabKG kg = CollabKG::load(eval_graph);
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      MetricReport report =
          run_evaluate(kg, ckpt, eval_split, eval_k, eval_indcg, eval_seed, eval_baseline);
      if (!eval_compare.empty()) attach_comparison(report, eval_compare);
      report.save(eval_out);
      std::cout << report.to_tsv();
    } else if (*ablate) {
      const CollabKG kg = CollabKG::load(ab_graph);
      TrainOverrides overrides = ab_overrides;
      overrides.variant = ab_variant;
      if (ab_lambda) overrides.lambda = ab_lambda;
      const TrainConfig config = overrides.resolve();
      const FeatureMatrix features = assemble_from_files(kg, ab_features, ab_kge);
      std::filesystem::create_directories(ab_out_dir);
      const std::string tag = ab_lambda ? fmt::format("{}_lambda{}", ab_variant, *ab_lambda)
                                        : ab_variant;
      const std::string ckpt_path = (std::filesystem::path(ab_out_dir) / (tag + ".ckpt")).string();
      const int rc = run_train(kg, features, config, ckpt_path,
                               (std::filesystem::path(ab_out_dir) / (tag + ".log")).string());
      if (rc != 0) return rc;
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      MetricReport report = run_evaluate(kg, ckpt, ab_split, ab_k, 0, config.seed, "");
      report.scorer = tag;
      report.save((std::filesystem::path(ab_out_dir) / (tag + ".report.json")).string());
      std::cout << report.to_tsv();
    } else if (*recommend) {
      const CollabKG kg = CollabKG::load(rec_graph);
      const Checkpoint ckpt = load_checkpoint(rec_ckpt);
      std::vector<NodeId> revealed;
      std::ifstream in(rec_ratings);
      if (!in) throw DataError(fmt::format("cannot open '{}'", rec_ratings));
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        const std::string key = tab == std::string::npos ? line : line.substr(0, tab);
        const auto item = kg.find_item(key);
        if (!item) throw DataError(fmt::format("{}:{}: unknown item '{}'", rec_ratings, lineno, key));
        revealed.push_back(*item);
      }
      const SplitSpec split = split_from_config(kg, ckpt.config);
      const Eigen::VectorXd e_user =
          embed_cold_user(revealed, ckpt.params, kg, split, ckpt.features);

      const GraphView view = GraphView::training(
          kg, split, ckpt.params.config.variant == ModelVariant::Bipartite);
      const LayerPlan plan = full_plan(view, ckpt.params.config.layers);
      const LayerEmbeddings emb =
          forward(view, plan, encode_layer0(ckpt.features, ckpt.params), ckpt.params);
      const Eigen::MatrixXd item_star = emb.concatenated().leftCols(kg.num_items());
      const std::unordered_set<NodeId> exclude(revealed.begin(), revealed.end());
      RankedList list = rank_items(e_user, item_star, exclude, rec_k);

      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!rec_out.empty()) {
        file.open(rec_out);
        if (!file) throw DataError(fmt::format("cannot write '{}'", rec_out));
        out = &file;
      }
      *out << "# user\trank\titem\tscore\n";
      for (std::size_t r = 0; r < list.items.size(); ++r)
        *out << "new-user\t" << r + 1 << '\t' << kg.node_key(list.items[r].item) << '\t'
             << fmt::format("{}", list.items[r].score) << '\n';
    } else if (*synth) {
      generate_synthetic(sy_users, sy_items, sy_entities, sy_blocks, sy_seed).write(sy_out);
      std::cout << fmt::format("synthetic fixture written to {}\n", sy_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

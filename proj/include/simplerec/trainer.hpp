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

#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "simplerec/ckg.hpp"
#include "simplerec/features.hpp"
#include "simplerec/gnn.hpp"

namespace simplerec {

struct TrainConfig {
  GnnConfig gnn;
  double lambda_ae = 0.0; // AE loss weight
  double gamma_l2 = 1e-5; // L2 weight over all of Theta
  double lr = 1e-3;       // Adam, beta1=0.9 beta2=0.999 eps=1e-8
  int batch_size = 1024;
  int max_epochs = 1000;
  int patience = 50; // successive non-improving epochs tolerated
  int eval_k = 20;   // validation NDCG cutoff
  std::uint64_t seed = 42;

  // Split parameters, echoed into the checkpoint so evaluation reproduces
  // the exact partition.
  double cold_fraction = 0.1;
  double reveal_fraction = 0.5;
  int min_interactions = 3;
  double warm_train_fraction = 0.8;
  double warm_validation_fraction = 0.1;

  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

/// key=value config file (# comments). Unknown keys are an error.
TrainConfig load_train_config(const std::string& path, const TrainConfig& defaults = {});

struct BprTriple {
  NodeId user = -1;
  NodeId positive = -1;
  NodeId negative = -1;
};
using BprBatch = std::vector<BprTriple>;

// Uniform draws over warm (user, train-item) pairs; negatives drawn
// uniformly from the items the user has no training interaction with.
class BprSampler {
public:
  BprSampler(const CollabKG& kg, const SplitSpec& split);
  BprBatch sample(int batch_size, std::uint64_t seed) const;
  int num_training_pairs() const { return static_cast<int>(pairs_.size()); }
  const std::unordered_map<NodeId, std::unordered_set<NodeId>>& train_sets() const {
    return train_sets_;
  }

private:
  const CollabKG* kg_;
  std::vector<std::pair<NodeId, NodeId>> pairs_;
  std::unordered_map<NodeId, std::unordered_set<NodeId>> train_sets_;
};

BprBatch sample_bpr_batch(const SplitSpec& split, const CollabKG& kg, int batch_size,
                          std::uint64_t seed);

/// Mean over pairs of -ln sigma(pos - neg).
double bpr_loss(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

struct LossBreakdown {
  double total = 0.0, bpr = 0.0, ae = 0.0, l2 = 0.0;
};

/// L = L_BPR + lambda * L_AE + gamma * ||Theta||^2 on a frozen batch and
/// sampling plan.
LossBreakdown total_loss(const BprBatch& batch, const GraphView& view, const LayerPlan& plan,
                         const FeatureMatrix& features, const ModelParams& params,
                         double lambda_ae, double gamma_l2);

/// Exact reverse-mode gradients of total_loss for every parameter in the
/// registry, same order. Throws NumericError naming the first parameter
/// with a non-finite gradient.
std::vector<std::pair<std::string, Eigen::MatrixXd>> compute_gradients(
    const BprBatch& batch, const GraphView& view, const LayerPlan& plan,
    const FeatureMatrix& features, const ModelParams& params, double lambda_ae, double gamma_l2,
    LossBreakdown* loss_out = nullptr);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
public:
  Adam(std::vector<Eigen::MatrixXd*> params, const AdamConfig& config);
  void step(const std::vector<std::pair<std::string, Eigen::MatrixXd>>& grads);
  long step_count() const { return t_; }

private:
  std::vector<Eigen::MatrixXd*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  AdamConfig config_;
  long t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0, bpr = 0.0, ae = 0.0, l2 = 0.0;
  double validation_ndcg = 0.0;
};

struct FitResult {
  ModelParams params; // best validation state
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_metric = 0.0;
  int epochs_run = 0;
  bool diverged = false;
};

// Adam over BPR batches with per-batch re-sampled neighborhoods; after each
// epoch the validation NDCG@eval_k decides the best state, and training
// stops after `patience` successive epochs without improvement. On
// divergence the last finite state is returned with diverged=true.
FitResult fit(const CollabKG& kg, const SplitSpec& split, const FeatureMatrix& features,
              const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints: versioned JSON with config echo, parameters, the assembled
// feature matrix, and best-epoch bookkeeping.

struct Checkpoint {
  int format_version = 1;
  TrainConfig config;
  ModelParams params;
  FeatureMatrix features;
  int best_epoch = -1;
  double best_metric = 0.0;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace simplerec

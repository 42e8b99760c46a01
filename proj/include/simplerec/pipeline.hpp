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

#include "simplerec/metrics.hpp"
#include "simplerec/ranker.hpp"
#include "simplerec/trainer.hpp"

namespace simplerec {

/// The split a checkpointed model was trained under, reproduced from its
/// config echo.
SplitSpec split_from_config(const CollabKG& kg, const TrainConfig& config);

struct EvaluateOptions {
  RecommendMode mode = RecommendMode::Cold;
  int k = 20;
  int indcg_negatives = 0; // 0 disables I-NDCG
  std::uint64_t seed = 42;
};

/// Full evaluation of a trained model over the mode's user set: NDCG,
/// Recall, Precision at k, catalog coverage, and optionally subsampled
/// I-NDCG. Users without test positives are counted as skipped.
MetricReport evaluate_model(const CollabKG& kg, const SplitSpec& split,
                            const FeatureMatrix& features, const ModelParams& params,
                            const EvaluateOptions& options,
                            const nlohmann::ordered_json& config_echo);

/// Same protocol for the TopPop baseline. naive=true disables the
/// exclude-seen filter (every user gets the identical global top-k).
MetricReport evaluate_toppop(const CollabKG& kg, const SplitSpec& split,
                             const EvaluateOptions& options, bool naive,
                             const nlohmann::ordered_json& config_echo);

struct TrainOutput {
  Checkpoint checkpoint;
  FitResult fit;
};

/// End-to-end training against a built graph + assembled features.
TrainOutput train_model(const CollabKG& kg, const FeatureMatrix& features,
                        const TrainConfig& config);

void write_training_log(const std::string& path, const FitResult& fit);

}  // namespace simplerec

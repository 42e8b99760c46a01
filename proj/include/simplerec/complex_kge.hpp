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
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "simplerec/ckg.hpp"
#include "simplerec/features.hpp"

namespace simplerec {

// Complex embeddings stored as separate real/imaginary blocks, one column
// per covered node / relation.
struct ComplexParams {
  int dim = 0;
  std::vector<NodeId> covered;   // ascending node ids seen during training
  std::vector<int> rel_ids;      // ascending relation ids
  std::unordered_map<NodeId, int> node_col;
  std::unordered_map<int, int> rel_col;
  Eigen::MatrixXd node_re, node_im; // dim x |covered|
  Eigen::MatrixXd rel_re, rel_im;   // dim x |rel_ids|
};

struct ComplexGradients {
  Eigen::MatrixXd node_re, node_im, rel_re, rel_im;
};

/// Re(<w_r, e_h, conj(e_t)>) = sum_k Re(r)(Re(h)Re(t)+Im(h)Im(t))
///                                 + Im(r)(Re(h)Im(t)-Im(h)Re(t)).
double complex_score(NodeId h, int r, NodeId t, const ComplexParams& params);

/// Mean binary logistic loss: softplus(-s) on positives, softplus(s) on
/// negatives. Analytic gradients accumulated into *grads when non-null.
double complex_logistic_loss(const std::vector<Triple>& positives,
                             const std::vector<Triple>& negatives, const ComplexParams& params,
                             ComplexGradients* grads = nullptr);

struct ComplexTrainOptions {
  int dim = 32;
  int epochs = 200;
  double lr = 0.5;
  int negatives_per_positive = 1; // per corrupted side
  std::uint64_t seed = 42;
};

struct ComplexTrainLog {
  std::vector<double> epoch_loss;
};

// Full-batch gradient descent on the logistic loss, head/tail corruption
// resampled each epoch. Covers exactly the nodes and relations occurring in
// `triples`; deterministic under seed.
ComplexParams train_complex(const std::vector<Triple>& triples, const ComplexTrainOptions& options,
                            ComplexTrainLog* log = nullptr);

/// KG triples of the graph, forward direction only (inverses and
/// interactions excluded). These are the ComplEx training set.
std::vector<Triple> kg_triples(const CollabKG& kg);

/// Mean reciprocal rank of the true tail among `n_candidates` scored nodes
/// (the true tail plus sampled corruptions, filtered against `known`).
double complex_filtered_mrr(const ComplexParams& params, const std::vector<Triple>& test,
                            const std::vector<Triple>& known, int n_candidates,
                            std::uint64_t seed);

/// Entity embeddings as a writable feature table ([Re; Im] per entity).
FeatureTable export_entity_features(const ComplexParams& params, const CollabKG& kg);

}  // namespace simplerec

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
#include <vector>

#include "simplerec/rng.hpp"

namespace simplerec {

// One autoencoder per feature source, mapping source dimension d into the
// shared space d' (d' < d). Encoder applies tanh; decoder is affine so
// reconstruction targets stay unbounded.
struct AeParams {
  Eigen::MatrixXd w_encode; // d' x d
  Eigen::MatrixXd b_encode; // d' x 1
  Eigen::MatrixXd w_decode; // d x d'
  Eigen::MatrixXd b_decode; // d x 1

  int input_dim() const { return static_cast<int>(w_encode.cols()); }
  int encoded_dim() const { return static_cast<int>(w_encode.rows()); }
};

AeParams init_ae_params(int input_dim, int encoded_dim, Rng& rng);

/// tanh(W x + b) column-wise. Input is one source's feature block, one
/// column per node.
Eigen::MatrixXd encode(const Eigen::MatrixXd& x, const AeParams& params);

/// Affine reconstruction of encoded columns.
Eigen::MatrixXd decode(const Eigen::MatrixXd& z, const AeParams& params);

/// MSE over all entries of one source block.
double ae_source_loss(const Eigen::MatrixXd& x, const AeParams& params);

/// Reconstruction loss averaged across sources.
double ae_loss(const std::vector<std::pair<const Eigen::MatrixXd*, const AeParams*>>& sources);

}  // namespace simplerec

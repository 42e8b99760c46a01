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

#include "simplerec/encoder.hpp"

#include <cmath>

#include "simplerec/errors.hpp"

namespace simplerec {

namespace {

Eigen::MatrixXd xavier_uniform(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

AeParams init_ae_params(int input_dim, int encoded_dim, Rng& rng) {
  if (encoded_dim >= input_dim)
    throw ConfigError("autoencoder requires encoded dimension d' < input dimension d");
  AeParams p;
  p.w_encode = xavier_uniform(encoded_dim, input_dim, rng);
  p.b_encode = Eigen::MatrixXd::Zero(encoded_dim, 1);
  p.w_decode = xavier_uniform(input_dim, encoded_dim, rng);
  p.b_decode = Eigen::MatrixXd::Zero(input_dim, 1);
  return p;
}

Eigen::MatrixXd encode(const Eigen::MatrixXd& x, const AeParams& params) {
  if (x.rows() != params.w_encode.cols())
    throw ConfigError("encode: input dimension does not match encoder weights");
  return ((params.w_encode * x).colwise() + Eigen::VectorXd(params.b_encode.col(0)))
      .array()
      .tanh()
      .matrix();
}

Eigen::MatrixXd decode(const Eigen::MatrixXd& z, const AeParams& params) {
  if (z.rows() != params.w_decode.cols())
    throw ConfigError("decode: input dimension does not match decoder weights");
  return (params.w_decode * z).colwise() + Eigen::VectorXd(params.b_decode.col(0));
}

double ae_source_loss(const Eigen::MatrixXd& x, const AeParams& params) {
  if (x.size() == 0) throw ConfigError("ae_source_loss: empty input");
  const Eigen::MatrixXd reconstructed = decode(encode(x, params), params);
  return (reconstructed - x).squaredNorm() / static_cast<double>(x.size());
}

double ae_loss(const std::vector<std::pair<const Eigen::MatrixXd*, const AeParams*>>& sources) {
  if (sources.empty()) throw ConfigError("ae_loss: no sources");
  double total = 0.0;
  for (const auto& [x, params] : sources) total += ae_source_loss(*x, *params);
  return total / static_cast<double>(sources.size());
}

}  // namespace simplerec

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
#include <functional>
#include <vector>

namespace simplerec::ad {

using Mat = Eigen::MatrixXd;

/// Handle into a Tape; valid only for the tape that produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Eigen matrices. Nodes are appended in forward
// order (already topological), backward() walks them in reverse. One tape
// per loss evaluation; gradients of parameter leaves are read back after
// backward().
class Tape {
public:
  Var constant(Mat value);
  Var param(const Mat& value); // differentiable leaf (copies the value)

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const;
  bool has_grad(Var v) const;

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_colvec(Var a, Var bias); // bias is d x 1, broadcast over columns
  Var scale(Var a, double s);
  Var cwise_mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var leaky_relu(Var a, double negative_slope);
  Var softplus(Var a);

  Var gather_cols(Var a, std::vector<int> indices);
  /// out has n_cols columns; column target[j] accumulates a's column j.
  Var scatter_cols(Var a, std::vector<int> target, int n_cols);
  Var colwise_scale(Var a, Eigen::VectorXd factors);
  Var vstack(Var a, Var b);
  /// 1 x n row of per-column inner products.
  Var col_dots(Var a, Var b);

  Var mean_all(Var a);    // 1 x 1
  Var sum_squares(Var a); // 1 x 1

  /// Seeds d(loss)/d(loss)=1 and accumulates gradients into every
  /// differentiable ancestor. `loss` must be 1 x 1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool grad_ready = false;
    std::function<void(Tape&, const Mat&)> backprop; // empty for leaves
  };

  std::vector<Node> nodes_;

  Var push(Mat value, bool requires_grad, std::function<void(Tape&, const Mat&)> backprop);
  void accumulate(int id, const Mat& g);
  friend struct TapeAccess;
};

}  // namespace simplerec::ad

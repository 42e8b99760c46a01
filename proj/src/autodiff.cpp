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

#include "simplerec/autodiff.hpp"

#include <cmath>
#include <utility>

#include "simplerec/errors.hpp"

namespace simplerec::ad {

Var Tape::push(Mat value, bool requires_grad,
               std::function<void(Tape&, const Mat&)> backprop) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!n.grad_ready) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.grad_ready = true;
  }
  n.grad += g;
}

const Mat& Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.grad_ready) throw NumericError("gradient requested before backward reached this node");
  return n.grad;
}

bool Tape::has_grad(Var v) const { return nodes_[v.id].grad_ready; }

Var Tape::constant(Mat value) { return push(std::move(value), false, {}); }

Var Tape::param(const Mat& value) { return push(value, true, {}); }

Var Tape::matmul(Var a, Var b) {
  const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  Mat out = nodes_[a.id].value * nodes_[b.id].value;
  return push(std::move(out), rg, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g * t.nodes_[b.id].value.transpose());
    t.accumulate(b.id, t.nodes_[a.id].value.transpose() * g);
  });
}

Var Tape::add(Var a, Var b) {
  const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  return push(nodes_[a.id].value + nodes_[b.id].value, rg, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var Tape::sub(Var a, Var b) {
  const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  return push(nodes_[a.id].value - nodes_[b.id].value, rg, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, -g);
  });
}

Var Tape::add_colvec(Var a, Var bias) {
  const bool rg = nodes_[a.id].requires_grad || nodes_[bias.id].requires_grad;
  Mat out = nodes_[a.id].value.colwise() + Eigen::VectorXd(nodes_[bias.id].value.col(0));
  return push(std::move(out), rg, [a, bias](Tape& t, const Mat& g) {
    t.accumulate(a.id, g);
    t.accumulate(bias.id, g.rowwise().sum());
  });
}

Var Tape::scale(Var a, double s) {
  return push(nodes_[a.id].value * s, nodes_[a.id].requires_grad,
              [a, s](Tape& t, const Mat& g) { t.accumulate(a.id, g * s); });
}

Var Tape::cwise_mul(Var a, Var b) {
  const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  Mat out = nodes_[a.id].value.cwiseProduct(nodes_[b.id].value);
  return push(std::move(out), rg, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a.id, g.cwiseProduct(t.nodes_[b.id].value));
    t.accumulate(b.id, g.cwiseProduct(t.nodes_[a.id].value));
  });
}

Var Tape::sigmoid(Var a) {
  Mat out = (1.0 + (-nodes_[a.id].value.array()).exp()).inverse().matrix();
  Var v = push(std::move(out), nodes_[a.id].requires_grad, {});
  nodes_[v.id].backprop = [a, v](Tape& t, const Mat& g) {
    const Mat& y = t.nodes_[v.id].value;
    t.accumulate(a.id, (g.array() * y.array() * (1.0 - y.array())).matrix());
  };
  return v;
}

Var Tape::tanh(Var a) {
  Mat out = nodes_[a.id].value.array().tanh().matrix();
  Var v = push(std::move(out), nodes_[a.id].requires_grad, {});
  nodes_[v.id].backprop = [a, v](Tape& t, const Mat& g) {
    const Mat& y = t.nodes_[v.id].value;
    t.accumulate(a.id, (g.array() * (1.0 - y.array().square())).matrix());
  };
  return v;
}

Var Tape::leaky_relu(Var a, double negative_slope) {
  const Mat& x = nodes_[a.id].value;
  Mat out = x.unaryExpr([negative_slope](double v) { return v > 0 ? v : negative_slope * v; });
  return push(std::move(out), nodes_[a.id].requires_grad,
              [a, negative_slope](Tape& t, const Mat& g) {
                const Mat& x = t.nodes_[a.id].value;
                Mat gx = g;
                for (Eigen::Index j = 0; j < x.size(); ++j)
                  if (x(j) <= 0) gx(j) *= negative_slope;
                t.accumulate(a.id, gx);
              });
}

Var Tape::softplus(Var a) {
  Mat out = nodes_[a.id].value.unaryExpr([](double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  });
  return push(std::move(out), nodes_[a.id].requires_grad, [a](Tape& t, const Mat& g) {
    const Mat sig =
        (1.0 + (-t.nodes_[a.id].value.array()).exp()).inverse().matrix();
    t.accumulate(a.id, g.cwiseProduct(sig));
  });
}

Var Tape::gather_cols(Var a, std::vector<int> indices) {
  const Mat& src = nodes_[a.id].value;
  Mat out(src.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = src.col(indices[j]);
  return push(std::move(out), nodes_[a.id].requires_grad,
              [a, idx = std::move(indices)](Tape& t, const Mat& g) {
                Mat ga = Mat::Zero(t.nodes_[a.id].value.rows(), t.nodes_[a.id].value.cols());
                for (std::size_t j = 0; j < idx.size(); ++j)
                  ga.col(idx[j]) += g.col(static_cast<Eigen::Index>(j));
                t.accumulate(a.id, ga);
              });
}

Var Tape::scatter_cols(Var a, std::vector<int> target, int n_cols) {
  const Mat& src = nodes_[a.id].value;
  Mat out = Mat::Zero(src.rows(), n_cols);
  for (std::size_t j = 0; j < target.size(); ++j)
    out.col(target[j]) += src.col(static_cast<Eigen::Index>(j));
  return push(std::move(out), nodes_[a.id].requires_grad,
              [a, tgt = std::move(target)](Tape& t, const Mat& g) {
                Mat ga(t.nodes_[a.id].value.rows(), t.nodes_[a.id].value.cols());
                for (std::size_t j = 0; j < tgt.size(); ++j)
                  ga.col(static_cast<Eigen::Index>(j)) = g.col(tgt[j]);
                t.accumulate(a.id, ga);
              });
}

Var Tape::colwise_scale(Var a, Eigen::VectorXd factors) {
  Mat out = nodes_[a.id].value * factors.asDiagonal();
  return push(std::move(out), nodes_[a.id].requires_grad,
              [a, f = std::move(factors)](Tape& t, const Mat& g) {
                t.accumulate(a.id, g * f.asDiagonal());
              });
}

Var Tape::vstack(Var a, Var b) {
  const Mat& top = nodes_[a.id].value;
  const Mat& bottom = nodes_[b.id].value;
  Mat out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  return push(std::move(out), rg, [a, b](Tape& t, const Mat& g) {
    const auto ra = t.nodes_[a.id].value.rows();
    const auto rb = t.nodes_[b.id].value.rows();
    t.accumulate(a.id, g.topRows(ra));
    t.accumulate(b.id, g.bottomRows(rb));
  });
}

Var Tape::col_dots(Var a, Var b) {
  const Mat& x = nodes_[a.id].value;
  const Mat& y = nodes_[b.id].value;
  Mat out = (x.array() * y.array()).colwise().sum().matrix();
  const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
  return push(std::move(out), rg, [a, b](Tape& t, const Mat& g) {
    const Mat& x = t.nodes_[a.id].value;
    const Mat& y = t.nodes_[b.id].value;
    Mat ga = y, gb = x;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      ga.col(j) *= g(0, j);
      gb.col(j) *= g(0, j);
    }
    t.accumulate(a.id, ga);
    t.accumulate(b.id, gb);
  });
}

Var Tape::mean_all(Var a) {
  const Mat& x = nodes_[a.id].value;
  Mat out(1, 1);
  out(0, 0) = x.mean();
  const double inv = 1.0 / static_cast<double>(x.size());
  return push(std::move(out), nodes_[a.id].requires_grad, [a, inv](Tape& t, const Mat& g) {
    t.accumulate(a.id, Mat::Constant(t.nodes_[a.id].value.rows(), t.nodes_[a.id].value.cols(),
                                     g(0, 0) * inv));
  });
}

Var Tape::sum_squares(Var a) {
  const Mat& x = nodes_[a.id].value;
  Mat out(1, 1);
  out(0, 0) = x.squaredNorm();
  return push(std::move(out), nodes_[a.id].requires_grad, [a](Tape& t, const Mat& g) {
    t.accumulate(a.id, 2.0 * g(0, 0) * t.nodes_[a.id].value);
  });
}

void Tape::backward(Var loss) {
  if (nodes_[loss.id].value.size() != 1)
    throw NumericError("backward() expects a scalar loss node");
  accumulate(loss.id, Mat::Ones(1, 1));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.grad_ready || !n.backprop) continue;
    n.backprop(*this, n.grad);
  }
}

}  // namespace simplerec::ad

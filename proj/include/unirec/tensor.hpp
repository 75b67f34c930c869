/*
 * Copyright 2026 The UniRec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "unirec/error.hpp"
#include "unirec/rng.hpp"

namespace unirec {

// Dense row-major tensor of 64-bit floats with reverse-mode differentiation.
// A Tensor is a cheap shared handle; ops (ops.hpp) build a dynamic tape of
// TensorImpl nodes, and backward() walks it from a scalar loss.

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

struct TensorImpl;
using TensorImplPtr = std::shared_ptr<TensorImpl>;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until the node participates in backward
  bool requires_grad = false;  // leaf flag, set by the owner
  bool tracked = false;        // interior tape node
  std::vector<TensorImplPtr> parents;
  std::function<void(TensorImpl&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  bool wants_grad() const { return requires_grad || tracked; }
};

// Autograd recording is on by default; NoGradGuard switches it off for the
// current thread (inference paths and finite-difference probes).
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  NoGradGuard() : prev_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(TensorImplPtr impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto impl = std::make_shared<TensorImpl>();
    impl->data.assign(numel(shape), 0.0);
    impl->shape = std::move(shape);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& x : t.impl_->data) x = value;
    return t;
  }

  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false) {
    if (numel(shape) != data.size()) {
      throw DimensionError("from_data: " + shape_str(shape) + " needs " +
                           std::to_string(numel(shape)) + " values, got " +
                           std::to_string(data.size()));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return from_data({}, {value}, requires_grad);
  }

  static Tensor identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.impl_->data[i * n + i] = 1.0;
    return t;
  }

  // Uniform init in [lo, hi) from a seeded stream.
  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi,
                        bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& x : t.impl_->data) x = rng.uniform(lo, hi);
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }

  std::size_t rows() const {
    check_2d("rows");
    return impl_->shape[0];
  }
  std::size_t cols() const {
    check_2d("cols");
    return impl_->shape[1];
  }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& vec() { return impl_->data; }
  const std::vector<double>& vec() const { return impl_->data; }

  double& operator()(std::size_t i) { return impl_->data[i]; }
  double operator()(std::size_t i) const { return impl_->data[i]; }
  double& operator()(std::size_t i, std::size_t j) {
    return impl_->data[i * impl_->shape[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return impl_->data[i * impl_->shape[1] + j];
  }

  // Value of a scalar (single-element) tensor.
  double value() const {
    if (impl_->data.size() != 1) {
      throw DimensionError("value: tensor " + shape_str(impl_->shape) +
                           " is not a scalar");
    }
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool tracked() const { return impl_ && impl_->tracked; }

  std::vector<double>& grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    if (!impl_->grad.empty()) {
      std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
    }
  }

  bool all_finite() const {
    for (double x : impl_->data) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  // Deep copy; the clone is a detached leaf.
  Tensor clone() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    impl->requires_grad = impl_->requires_grad;
    return Tensor(std::move(impl));
  }

  TensorImplPtr impl_;

 private:
  void check_2d(const char* what) const {
    if (impl_->shape.size() != 2) {
      throw DimensionError(std::string(what) + ": tensor " +
                           shape_str(impl_->shape) + " is not 2-d");
    }
  }
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
// tensor on the tape that requires or forwards gradients; parameters must be
// zero_grad-ed between optimizer steps.
inline void backward(const Tensor& loss) {
  if (!loss.defined() || loss.impl_->data.size() != 1) {
    throw DimensionError("backward: loss must be a scalar");
  }
  TensorImpl* root = loss.impl_.get();
  if (!root->wants_grad()) return;  // constant loss, nothing on the tape

  // Iterative post-order DFS over tracked nodes: `order` lists parents
  // before children, so the reverse walk frees each node's gradient only
  // after every consumer has contributed.
  std::vector<TensorImpl*> order;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  std::unordered_set<const TensorImpl*> visited;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& top = stack.back();
    TensorImpl* node = top.first;
    if (top.second < node->parents.size()) {
      TensorImpl* p = node->parents[top.second].get();
      ++top.second;
      if (p->tracked && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->backward_fn) {
      node->ensure_grad();
      node->backward_fn(*node);
    }
  }
}

}  // namespace unirec

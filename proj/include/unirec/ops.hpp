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

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <utility>
#include <vector>

#include "unirec/tensor.hpp"

namespace unirec {

namespace detail {

// c[m*n] (+)= a[m*k] * b[k*n], all row-major.
inline void mm_nn(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[m*n] (+)= a[m*k] * b[n*k]^T.
inline void mm_nt(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      if (accumulate) {
        ci[j] += s;
      } else {
        ci[j] = s;
      }
    }
  }
}

// c[k*n] (+)= a[m*k]^T * b[m*n].
inline void mm_tn(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + k * n, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    const double* ap = a + p * k;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

// In-place numerically stabilized softmax over a contiguous range.
inline void softmax_inplace(double* x, std::size_t n) {
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    sum += x[i];
  }
  const double inv = 1.0 / sum;
  for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
}

// dL/ds for y = softmax(s): dx_i = y_i * (g_i - sum_j g_j y_j).
inline void softmax_backward_row(const double* y, const double* g, double* dx,
                                 std::size_t n, bool accumulate) {
  double dotgy = 0.0;
  for (std::size_t i = 0; i < n; ++i) dotgy += g[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) {
    const double v = y[i] * (g[i] - dotgy);
    if (accumulate) {
      dx[i] += v;
    } else {
      dx[i] = v;
    }
  }
}

inline bool track_now(std::initializer_list<const Tensor*> inputs) {
  if (!grad_mode()) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->impl_->wants_grad()) return true;
  }
  return false;
}

inline Tensor make_node(Shape shape, std::vector<double> data, bool tracked,
                        std::vector<TensorImplPtr> parents,
                        std::function<void(TensorImpl&)> backward_fn) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  if (tracked) {
    impl->tracked = true;
    impl->parents = std::move(parents);
    impl->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(impl));
}

inline void acc_into(TensorImpl& p, const double* g, std::size_t n,
                     double factor = 1.0) {
  if (!p.wants_grad()) return;
  p.ensure_grad();
  for (std::size_t i = 0; i < n; ++i) p.grad[i] += factor * g[i];
}

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()) + " differ");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and linear algebra
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  const bool tracked = detail::track_now({&a, &b});
  auto pa = a.impl_, pb = b.impl_;
  return detail::make_node(a.shape(), std::move(out), tracked, {pa, pb},
                           [pa, pb](TensorImpl& self) {
                             detail::acc_into(*pa, self.grad.data(), self.grad.size());
                             detail::acc_into(*pb, self.grad.data(), self.grad.size());
                           });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  const bool tracked = detail::track_now({&a, &b});
  auto pa = a.impl_, pb = b.impl_;
  return detail::make_node(a.shape(), std::move(out), tracked, {pa, pb},
                           [pa, pb](TensorImpl& self) {
                             detail::acc_into(*pa, self.grad.data(), self.grad.size());
                             detail::acc_into(*pb, self.grad.data(), self.grad.size(), -1.0);
                           });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  const bool tracked = detail::track_now({&a, &b});
  auto pa = a.impl_, pb = b.impl_;
  return detail::make_node(
      a.shape(), std::move(out), tracked, {pa, pb}, [pa, pb](TensorImpl& self) {
        const std::size_t n = self.grad.size();
        if (pa->wants_grad()) {
          pa->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self.grad[i] * pb->data[i];
        }
        if (pb->wants_grad()) {
          pb->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) pb->grad[i] += self.grad[i] * pa->data[i];
        }
      });
}

inline Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a.data()[i];
  const bool tracked = detail::track_now({&a});
  auto pa = a.impl_;
  return detail::make_node(a.shape(), std::move(out), tracked, {pa},
                           [pa, s](TensorImpl& self) {
                             detail::acc_into(*pa, self.grad.data(), self.grad.size(), s);
                           });
}

// x[m x n] + v broadcast across rows.
inline Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  if (x.ndim() != 2 || v.ndim() != 1 || x.cols() != v.size()) {
    throw DimensionError("add_rowvec: need [m x n] and {n}, got " +
                         shape_str(x.shape()) + " and " + shape_str(v.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x(i, j) + v(j);
  }
  const bool tracked = detail::track_now({&x, &v});
  auto px = x.impl_, pv = v.impl_;
  return detail::make_node(
      x.shape(), std::move(out), tracked, {px, pv},
      [px, pv, m, n](TensorImpl& self) {
        detail::acc_into(*px, self.grad.data(), self.grad.size());
        if (pv->wants_grad()) {
          pv->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) pv->grad[j] += self.grad[i * n + j];
          }
        }
      });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  detail::mm_nn(a.data(), b.data(), out.data(), m, k, n, false);
  const bool tracked = detail::track_now({&a, &b});
  auto pa = a.impl_, pb = b.impl_;
  return detail::make_node(
      {m, n}, std::move(out), tracked, {pa, pb},
      [pa, pb, m, k, n](TensorImpl& self) {
        if (pa->wants_grad()) {
          pa->ensure_grad();
          detail::mm_nt(self.grad.data(), pb->data.data(), pa->grad.data(), m, n, k, true);
        }
        if (pb->wants_grad()) {
          pb->ensure_grad();
          detail::mm_tn(pa->data.data(), self.grad.data(), pb->grad.data(), m, k, n, true);
        }
      });
}

inline Tensor transpose(const Tensor& a) {
  if (a.ndim() != 2) {
    throw DimensionError("transpose: tensor " + shape_str(a.shape()) + " is not 2-d");
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a(i, j);
  }
  const bool tracked = detail::track_now({&a});
  auto pa = a.impl_;
  return detail::make_node({n, m}, std::move(out), tracked, {pa},
                           [pa, m, n](TensorImpl& self) {
                             if (!pa->wants_grad()) return;
                             pa->ensure_grad();
                             for (std::size_t j = 0; j < n; ++j) {
                               for (std::size_t i = 0; i < m; ++i) {
                                 pa->grad[i * n + j] += self.grad[j * m + i];
                               }
                             }
                           });
}

// y{m} = A[m x n] * x{n}
inline Tensor matvec(const Tensor& a, const Tensor& x) {
  if (a.ndim() != 2 || x.ndim() != 1 || a.cols() != x.size()) {
    throw DimensionError("matvec: incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(x.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a(i, j) * x(j);
    out[i] = s;
  }
  const bool tracked = detail::track_now({&a, &x});
  auto pa = a.impl_, px = x.impl_;
  return detail::make_node(
      {m}, std::move(out), tracked, {pa, px}, [pa, px, m, n](TensorImpl& self) {
        if (pa->wants_grad()) {
          pa->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            const double g = self.grad[i];
            if (g == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) pa->grad[i * n + j] += g * px->data[j];
          }
        }
        if (px->wants_grad()) {
          px->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            const double g = self.grad[i];
            if (g == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) px->grad[j] += g * pa->data[i * n + j];
          }
        }
      });
}

// y{n} = x{m} * A[m x n]  (x as a row vector)
inline Tensor vecmat(const Tensor& x, const Tensor& a) {
  if (a.ndim() != 2 || x.ndim() != 1 || a.rows() != x.size()) {
    throw DimensionError("vecmat: incompatible shapes " + shape_str(x.shape()) +
                         " and " + shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double xi = x(i);
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) out[j] += xi * a(i, j);
  }
  const bool tracked = detail::track_now({&x, &a});
  auto px = x.impl_, pa = a.impl_;
  return detail::make_node(
      {n}, std::move(out), tracked, {px, pa}, [px, pa, m, n](TensorImpl& self) {
        if (px->wants_grad()) {
          px->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += pa->data[i * n + j] * self.grad[j];
            px->grad[i] += s;
          }
        }
        if (pa->wants_grad()) {
          pa->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            const double xi = px->data[i];
            if (xi == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) pa->grad[i * n + j] += xi * self.grad[j];
          }
        }
      });
}

inline Tensor dot(const Tensor& x, const Tensor& y) {
  if (x.ndim() != 1 || y.ndim() != 1 || x.size() != y.size()) {
    throw DimensionError("dot: incompatible shapes " + shape_str(x.shape()) +
                         " and " + shape_str(y.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x(i) * y(i);
  const bool tracked = detail::track_now({&x, &y});
  auto px = x.impl_, py = y.impl_;
  return detail::make_node(
      {}, {s}, tracked, {px, py}, [px, py](TensorImpl& self) {
        const double g = self.grad[0];
        const std::size_t n = px->data.size();
        if (px->wants_grad()) {
          px->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) px->grad[i] += g * py->data[i];
        }
        if (py->wants_grad()) {
          py->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) py->grad[i] += g * px->data[i];
        }
      });
}

// ---------------------------------------------------------------------------
// Shape and indexing
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) +
                         " as " + shape_str(shape));
  }
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node(std::move(shape), x.impl_->data, tracked, {px},
                           [px](TensorImpl& self) {
                             detail::acc_into(*px, self.grad.data(), self.grad.size());
                           });
}

inline Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  if (x.ndim() != 2) {
    throw DimensionError("gather_rows: tensor " + shape_str(x.shape()) + " is not 2-d");
  }
  const std::size_t n = x.cols();
  for (std::size_t r : idx) {
    if (r >= x.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(r) + " out of " +
                           std::to_string(x.rows()));
    }
  }
  std::vector<double> out(idx.size() * n);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double* src = x.data() + idx[r] * n;
    std::copy(src, src + n, out.data() + r * n);
  }
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node({idx.size(), n}, std::move(out), tracked, {px},
                           [px, idx, n](TensorImpl& self) {
                             if (!px->wants_grad()) return;
                             px->ensure_grad();
                             for (std::size_t r = 0; r < idx.size(); ++r) {
                               double* dst = px->grad.data() + idx[r] * n;
                               const double* g = self.grad.data() + r * n;
                               for (std::size_t j = 0; j < n; ++j) dst[j] += g[j];
                             }
                           });
}

inline Tensor gather_elems(const Tensor& x, const std::vector<std::size_t>& idx) {
  if (x.ndim() != 1) {
    throw DimensionError("gather_elems: tensor " + shape_str(x.shape()) + " is not 1-d");
  }
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= x.size()) {
      throw DimensionError("gather_elems: index " + std::to_string(idx[i]) +
                           " out of " + std::to_string(x.size()));
    }
    out[i] = x(idx[i]);
  }
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node({idx.size()}, std::move(out), tracked, {px},
                           [px, idx](TensorImpl& self) {
                             if (!px->wants_grad()) return;
                             px->ensure_grad();
                             for (std::size_t i = 0; i < idx.size(); ++i) {
                               px->grad[idx[i]] += self.grad[i];
                             }
                           });
}

inline Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
  if (x.ndim() != 2 || start + count > x.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " +
                         shape_str(x.shape()));
  }
  const std::size_t n = x.cols();
  std::vector<double> out(x.data() + start * n, x.data() + (start + count) * n);
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node({count, n}, std::move(out), tracked, {px},
                           [px, start, n](TensorImpl& self) {
                             if (!px->wants_grad()) return;
                             px->ensure_grad();
                             double* dst = px->grad.data() + start * n;
                             for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               dst[i] += self.grad[i];
                             }
                           });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  const std::size_t n = parts[0].cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.ndim() != 2 || p.cols() != n) {
      throw DimensionError("concat_rows: column mismatch");
    }
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * n);
  bool any_grad = false;
  std::vector<TensorImplPtr> parents;
  parents.reserve(parts.size());
  for (const Tensor& p : parts) {
    out.insert(out.end(), p.data(), p.data() + p.size());
    parents.push_back(p.impl_);
    if (p.impl_->wants_grad()) any_grad = true;
  }
  const bool tracked = grad_mode() && any_grad;
  return detail::make_node(
      {total, n}, std::move(out), tracked, parents, [parents](TensorImpl& self) {
        std::size_t off = 0;
        for (const auto& p : parents) {
          const std::size_t sz = p->data.size();
          if (p->wants_grad()) {
            p->ensure_grad();
            for (std::size_t i = 0; i < sz; ++i) p->grad[i] += self.grad[off + i];
          }
          off += sz;
        }
      });
}

inline Tensor row(const Tensor& x, std::size_t i) {
  return reshape(gather_rows(x, {i}), {x.cols()});
}

inline Tensor pick(const Tensor& x, std::size_t i) {
  if (x.ndim() != 1 || i >= x.size()) {
    throw DimensionError("pick: index " + std::to_string(i) + " out of " +
                         shape_str(x.shape()));
  }
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node({}, {x(i)}, tracked, {px}, [px, i](TensorImpl& self) {
    if (!px->wants_grad()) return;
    px->ensure_grad();
    px->grad[i] += self.grad[0];
  });
}

inline Tensor stack_scalars(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw DimensionError("stack_scalars: no inputs");
  std::vector<double> out(xs.size());
  bool any_grad = false;
  std::vector<TensorImplPtr> parents;
  parents.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = xs[i].value();
    parents.push_back(xs[i].impl_);
    if (xs[i].impl_->wants_grad()) any_grad = true;
  }
  const bool tracked = grad_mode() && any_grad;
  return detail::make_node({xs.size()}, std::move(out), tracked, parents,
                           [parents](TensorImpl& self) {
                             for (std::size_t i = 0; i < parents.size(); ++i) {
                               if (!parents[i]->wants_grad()) continue;
                               parents[i]->ensure_grad();
                               parents[i]->grad[0] += self.grad[i];
                             }
                           });
}

// ---------------------------------------------------------------------------
// Reductions and nonlinearities
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node({}, {s}, tracked, {px}, [px](TensorImpl& self) {
    if (!px->wants_grad()) return;
    px->ensure_grad();
    const double g = self.grad[0];
    for (double& v : px->grad) v += g;
  });
}

inline Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

inline Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.data()[i]);
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node(
      x.shape(), std::move(out), tracked, {px}, [px](TensorImpl& self) {
        if (!px->wants_grad()) return;
        px->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double y = self.data[i];
          px->grad[i] += self.grad[i] * (1.0 - y * y);
        }
      });
}

// Softmax over a vector, or independently over each row of a matrix.
// Numerically stabilized by max subtraction.
inline Tensor softmax(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("softmax: empty input");
  if (x.ndim() != 1 && x.ndim() != 2) {
    throw DimensionError("softmax: tensor " + shape_str(x.shape()) +
                         " is neither a vector nor a matrix");
  }
  const std::size_t ncols = x.ndim() == 2 ? x.cols() : x.size();
  const std::size_t nrows = x.size() / ncols;
  std::vector<double> out(x.data(), x.data() + x.size());
  for (std::size_t r = 0; r < nrows; ++r) {
    detail::softmax_inplace(out.data() + r * ncols, ncols);
  }
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node(
      x.shape(), std::move(out), tracked, {px},
      [px, nrows, ncols](TensorImpl& self) {
        if (!px->wants_grad()) return;
        px->ensure_grad();
        for (std::size_t r = 0; r < nrows; ++r) {
          detail::softmax_backward_row(self.data.data() + r * ncols,
                                       self.grad.data() + r * ncols,
                                       px->grad.data() + r * ncols, ncols, true);
        }
      });
}

inline Tensor logsumexp(const Tensor& x) {
  if (x.ndim() != 1 || x.size() == 0) {
    throw DimensionError("logsumexp: need a non-empty vector, got " +
                         shape_str(x.shape()));
  }
  double mx = x(0);
  for (std::size_t i = 1; i < x.size(); ++i) mx = std::max(mx, x(i));
  if (!std::isfinite(mx)) throw NumericError("logsumexp: non-finite input");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::exp(x(i) - mx);
  const double lse = mx + std::log(s);
  const bool tracked = detail::track_now({&x});
  auto px = x.impl_;
  return detail::make_node({}, {lse}, tracked, {px}, [px, lse](TensorImpl& self) {
    if (!px->wants_grad()) return;
    px->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < px->data.size(); ++i) {
      px->grad[i] += g * std::exp(px->data[i] - lse);
    }
  });
}

// Elementwise division by a scalar tensor.
inline Tensor div_by(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) {
    throw DimensionError("div_by: divisor " + shape_str(s.shape()) + " is not a scalar");
  }
  const double sv = s.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] / sv;
  const bool tracked = detail::track_now({&x, &s});
  auto px = x.impl_, ps = s.impl_;
  return detail::make_node(
      x.shape(), std::move(out), tracked, {px, ps}, [px, ps](TensorImpl& self) {
        const double sv = ps->data[0];
        if (px->wants_grad()) {
          px->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            px->grad[i] += self.grad[i] / sv;
          }
        }
        if (ps->wants_grad()) {
          ps->ensure_grad();
          double acc = 0.0;
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            acc += self.grad[i] * self.data[i];
          }
          ps->grad[0] -= acc / sv;
        }
      });
}

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

struct MhsaParams {
  Tensor wq, wk, wv, wo;  // each d x d

  static MhsaParams init(std::size_t dim, Rng& rng, bool requires_grad = true) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    MhsaParams p;
    p.wq = Tensor::uniform({dim, dim}, rng, -bound, bound, requires_grad);
    p.wk = Tensor::uniform({dim, dim}, rng, -bound, bound, requires_grad);
    p.wv = Tensor::uniform({dim, dim}, rng, -bound, bound, requires_grad);
    p.wo = Tensor::uniform({dim, dim}, rng, -bound, bound, requires_grad);
    return p;
  }
};

// Scaled dot-product multi-head self-attention over `batch` independent
// length-`len` sequences stacked row-wise into x [(batch*len) x d]. Attention
// never crosses sequence boundaries. Heads act on column slices of the
// shared d x d projections; per-head scaling is 1/sqrt(d/heads).
inline Tensor mhsa_batched(const Tensor& x, const MhsaParams& p,
                           std::size_t batch, std::size_t len,
                           std::size_t heads) {
  if (x.ndim() != 2) {
    throw DimensionError("mhsa: input " + shape_str(x.shape()) + " is not 2-d");
  }
  const std::size_t d = x.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("mhsa: dim " + std::to_string(d) +
                      " not divisible by heads " + std::to_string(heads));
  }
  if (batch == 0 || len == 0 || x.rows() != batch * len) {
    throw DimensionError("mhsa: rows " + std::to_string(x.rows()) +
                         " != batch*len " + std::to_string(batch * len));
  }
  for (const Tensor* w : {&p.wq, &p.wk, &p.wv, &p.wo}) {
    if (w->ndim() != 2 || w->rows() != d || w->cols() != d) {
      throw DimensionError("mhsa: projection shape " + shape_str(w->shape()) +
                           " != [" + std::to_string(d) + "x" + std::to_string(d) + "]");
    }
  }
  const std::size_t dh = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t rows = batch * len;

  std::vector<double> q(rows * d), k(rows * d), v(rows * d);
  detail::mm_nn(x.data(), p.wq.data(), q.data(), rows, d, d, false);
  detail::mm_nn(x.data(), p.wk.data(), k.data(), rows, d, d, false);
  detail::mm_nn(x.data(), p.wv.data(), v.data(), rows, d, d, false);

  std::vector<double> attn(batch * heads * len * len);
  std::vector<double> o(rows * d, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t base = b * len;
    for (std::size_t h = 0; h < heads; ++h) {
      double* a = attn.data() + (b * heads + h) * len * len;
      const std::size_t hoff = h * dh;
      for (std::size_t i = 0; i < len; ++i) {
        const double* qi = q.data() + (base + i) * d + hoff;
        for (std::size_t j = 0; j < len; ++j) {
          const double* kj = k.data() + (base + j) * d + hoff;
          double s = 0.0;
          for (std::size_t t = 0; t < dh; ++t) s += qi[t] * kj[t];
          a[i * len + j] = s * inv_scale;
        }
        detail::softmax_inplace(a + i * len, len);
        double* oi = o.data() + (base + i) * d + hoff;
        for (std::size_t j = 0; j < len; ++j) {
          const double aij = a[i * len + j];
          const double* vj = v.data() + (base + j) * d + hoff;
          for (std::size_t t = 0; t < dh; ++t) oi[t] += aij * vj[t];
        }
      }
    }
  }
  std::vector<double> y(rows * d);
  detail::mm_nn(o.data(), p.wo.data(), y.data(), rows, d, d, false);

  const bool tracked = detail::track_now({&x, &p.wq, &p.wk, &p.wv, &p.wo});
  auto px = x.impl_;
  auto pwq = p.wq.impl_, pwk = p.wk.impl_, pwv = p.wv.impl_, pwo = p.wo.impl_;
  auto ctx_q = std::make_shared<std::vector<double>>(std::move(q));
  auto ctx_k = std::make_shared<std::vector<double>>(std::move(k));
  auto ctx_v = std::make_shared<std::vector<double>>(std::move(v));
  auto ctx_o = std::make_shared<std::vector<double>>(std::move(o));
  auto ctx_a = std::make_shared<std::vector<double>>(std::move(attn));
  return detail::make_node(
      {rows, d}, std::move(y), tracked, {px, pwq, pwk, pwv, pwo},
      [px, pwq, pwk, pwv, pwo, ctx_q, ctx_k, ctx_v, ctx_o, ctx_a, batch, len,
       heads, d, dh, inv_scale](TensorImpl& self) {
        const std::size_t rows = batch * len;
        const double* dy = self.grad.data();
        // dWo and dO come straight from Y = O * Wo.
        if (pwo->wants_grad()) {
          pwo->ensure_grad();
          detail::mm_tn(ctx_o->data(), dy, pwo->grad.data(), rows, d, d, true);
        }
        std::vector<double> dO(rows * d);
        detail::mm_nt(dy, pwo->data.data(), dO.data(), rows, d, d, false);

        std::vector<double> dQ(rows * d, 0.0), dK(rows * d, 0.0), dV(rows * d, 0.0);
        std::vector<double> da(len * len), ds(len * len);
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t base = b * len;
          for (std::size_t h = 0; h < heads; ++h) {
            const double* a = ctx_a->data() + (b * heads + h) * len * len;
            const std::size_t hoff = h * dh;
            // da = dO_h V_h^T ; dV_h += A^T dO_h
            for (std::size_t i = 0; i < len; ++i) {
              const double* doi = dO.data() + (base + i) * d + hoff;
              for (std::size_t j = 0; j < len; ++j) {
                const double* vj = ctx_v->data() + (base + j) * d + hoff;
                double s = 0.0;
                for (std::size_t t = 0; t < dh; ++t) s += doi[t] * vj[t];
                da[i * len + j] = s;
              }
            }
            for (std::size_t j = 0; j < len; ++j) {
              double* dvj = dV.data() + (base + j) * d + hoff;
              for (std::size_t i = 0; i < len; ++i) {
                const double aij = a[i * len + j];
                if (aij == 0.0) continue;
                const double* doi = dO.data() + (base + i) * d + hoff;
                for (std::size_t t = 0; t < dh; ++t) dvj[t] += aij * doi[t];
              }
            }
            // ds = softmax backward, then dQ_h += ds K_h * inv, dK_h += ds^T Q_h * inv
            for (std::size_t i = 0; i < len; ++i) {
              detail::softmax_backward_row(a + i * len, da.data() + i * len,
                                           ds.data() + i * len, len, false);
            }
            for (std::size_t i = 0; i < len; ++i) {
              double* dqi = dQ.data() + (base + i) * d + hoff;
              for (std::size_t j = 0; j < len; ++j) {
                const double sij = ds[i * len + j] * inv_scale;
                if (sij == 0.0) continue;
                const double* kj = ctx_k->data() + (base + j) * d + hoff;
                double* dkj = dK.data() + (base + j) * d + hoff;
                const double* qi = ctx_q->data() + (base + i) * d + hoff;
                for (std::size_t t = 0; t < dh; ++t) {
                  dqi[t] += sij * kj[t];
                  dkj[t] += sij * qi[t];
                }
              }
            }
          }
        }
        if (px->wants_grad()) {
          px->ensure_grad();
          detail::mm_nt(dQ.data(), pwq->data.data(), px->grad.data(), rows, d, d, true);
          detail::mm_nt(dK.data(), pwk->data.data(), px->grad.data(), rows, d, d, true);
          detail::mm_nt(dV.data(), pwv->data.data(), px->grad.data(), rows, d, d, true);
        }
        if (pwq->wants_grad()) {
          pwq->ensure_grad();
          detail::mm_tn(px->data.data(), dQ.data(), pwq->grad.data(), rows, d, d, true);
        }
        if (pwk->wants_grad()) {
          pwk->ensure_grad();
          detail::mm_tn(px->data.data(), dK.data(), pwk->grad.data(), rows, d, d, true);
        }
        if (pwv->wants_grad()) {
          pwv->ensure_grad();
          detail::mm_tn(px->data.data(), dV.data(), pwv->grad.data(), rows, d, d, true);
        }
      });
}

inline Tensor multi_head_self_attention(const Tensor& seq, const MhsaParams& p,
                                        std::size_t heads) {
  return mhsa_batched(seq, p, 1, seq.rows(), heads);
}

// Forward-only introspection: per-head attention probability matrices for a
// single sequence.
inline std::vector<std::vector<double>> mhsa_attention_probs(
    const Tensor& seq, const MhsaParams& p, std::size_t heads) {
  NoGradGuard ng;
  const std::size_t len = seq.rows(), d = seq.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("mhsa: dim not divisible by heads");
  }
  const std::size_t dh = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor q = matmul(seq, p.wq), k = matmul(seq, p.wk);
  std::vector<std::vector<double>> out(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    out[h].resize(len * len);
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = 0; j < len; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < dh; ++t) {
          s += q(i, h * dh + t) * k(j, h * dh + t);
        }
        out[h][i * len + j] = s * inv_scale;
      }
      detail::softmax_inplace(out[h].data() + i * len, len);
    }
  }
  return out;
}

// weights[b x l] combine rows of x [(b*l) x d] into [b x d].
inline Tensor attn_combine(const Tensor& weights, const Tensor& x) {
  if (weights.ndim() != 2 || x.ndim() != 2 ||
      weights.rows() * weights.cols() != x.rows()) {
    throw DimensionError("attn_combine: shapes " + shape_str(weights.shape()) +
                         " and " + shape_str(x.shape()) + " incompatible");
  }
  const std::size_t b = weights.rows(), l = weights.cols(), d = x.cols();
  std::vector<double> out(b * d, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    double* oi = out.data() + i * d;
    for (std::size_t j = 0; j < l; ++j) {
      const double w = weights(i, j);
      if (w == 0.0) continue;
      const double* xr = x.data() + (i * l + j) * d;
      for (std::size_t t = 0; t < d; ++t) oi[t] += w * xr[t];
    }
  }
  const bool tracked = detail::track_now({&weights, &x});
  auto pw = weights.impl_, px = x.impl_;
  return detail::make_node(
      {b, d}, std::move(out), tracked, {pw, px},
      [pw, px, b, l, d](TensorImpl& self) {
        if (pw->wants_grad()) {
          pw->ensure_grad();
          for (std::size_t i = 0; i < b; ++i) {
            const double* gi = self.grad.data() + i * d;
            for (std::size_t j = 0; j < l; ++j) {
              const double* xr = px->data.data() + (i * l + j) * d;
              double s = 0.0;
              for (std::size_t t = 0; t < d; ++t) s += gi[t] * xr[t];
              pw->grad[i * l + j] += s;
            }
          }
        }
        if (px->wants_grad()) {
          px->ensure_grad();
          for (std::size_t i = 0; i < b; ++i) {
            const double* gi = self.grad.data() + i * d;
            for (std::size_t j = 0; j < l; ++j) {
              const double w = pw->data[i * l + j];
              if (w == 0.0) continue;
              double* dxr = px->grad.data() + (i * l + j) * d;
              for (std::size_t t = 0; t < d; ++t) dxr[t] += w * gi[t];
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

// Max over coordinates of |analytic - central difference| normalized by
// |analytic| + |central| + 1e-12. `f` must map the parameter to a scalar.
inline double finite_difference_check(
    const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
    double eps) {
  if (eps <= 0.0) throw NumericError("finite_difference_check: eps must be positive");
  Tensor param = point.clone();
  param.set_requires_grad(true);
  Tensor loss = f(param);
  if (loss.size() != 1) {
    throw DimensionError("finite_difference_check: f must return a scalar");
  }
  backward(loss);
  std::vector<double> analytic = param.grad();

  NoGradGuard ng;
  double worst = 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param.data()[i];
    param.data()[i] = saved + eps;
    const double up = f(param).value();
    param.data()[i] = saved - eps;
    const double down = f(param).value();
    param.data()[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_check: non-finite evaluation");
    }
    const double central = (up - down) / (2.0 * eps);
    const double rel = std::fabs(analytic[i] - central) /
                       (std::fabs(analytic[i]) + std::fabs(central) + 1e-12);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace unirec

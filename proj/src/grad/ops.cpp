// Copyright 2026 The AdvSeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "grad/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

std::size_t usize(std::int64_t v) { return static_cast<std::size_t>(v); }

int normalize_axis(int axis, std::size_t rank) {
  int r = static_cast<int>(rank);
  int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    fail(ErrorCode::kDimension,
         "axis " + std::to_string(axis) + " invalid for rank " + std::to_string(rank));
  }
  return a;
}

struct AxisSplit {
  std::int64_t outer = 1;
  std::int64_t len = 1;
  std::int64_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[usize(i)];
  s.len = shape[usize(axis)];
  for (std::size_t i = usize(axis) + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    fail(ErrorCode::kDimension, std::string(op) + " expects rank " +
                                    std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

}  // namespace

SegmentLayout make_layout(std::span<const std::int64_t> lengths) {
  SegmentLayout layout;
  layout.reserve(lengths.size());
  std::int64_t offset = 0;
  for (auto len : lengths) {
    layout.push_back({offset, len});
    offset += len;
  }
  return layout;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    fail(ErrorCode::kDimension, "matmul shape mismatch: " + shape_str(a.shape()) +
                                    " x " + shape_str(b.shape()));
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Buffer out(usize(m * n));
  MapR(out.data(), m, n).noalias() =
      CMapR(a.data().data(), m, k) * CMapR(b.data().data(), k, n);
  return make_op_result("matmul", {m, n}, std::move(out), {a, b},
                        [m, k, n](TensorImpl& self) {
                          CMapR dc(self.grad.data(), m, n);
                          auto& ai = *self.inputs[0];
                          auto& bi = *self.inputs[1];
                          if (self.input_needs_grad[0]) {
                            MapR(ai.grad_buffer().data(), m, k).noalias() +=
                                dc * CMapR(bi.data.data(), k, n).transpose();
                          }
                          if (self.input_needs_grad[1]) {
                            MapR(bi.grad_buffer().data(), k, n).noalias() +=
                                CMapR(ai.data.data(), m, k).transpose() * dc;
                          }
                        });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0) || b.rank() != 1 ||
      b.dim(0) != w.dim(1)) {
    fail(ErrorCode::kDimension, "affine shape mismatch: " + shape_str(x.shape()) + " x " +
                                    shape_str(w.shape()) + " + " + shape_str(b.shape()));
  }
  const auto m = x.dim(0), k = x.dim(1), n = w.dim(1);
  Buffer out(usize(m * n));
  MapR o(out.data(), m, n);
  o.noalias() = CMapR(x.data().data(), m, k) * CMapR(w.data().data(), k, n);
  o.rowwise() += Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>(b.data().data(), n);
  return make_op_result("affine", {m, n}, std::move(out), {x, w, b},
                        [m, k, n](TensorImpl& self) {
                          CMapR dc(self.grad.data(), m, n);
                          auto& xi = *self.inputs[0];
                          auto& wi = *self.inputs[1];
                          auto& bi = *self.inputs[2];
                          if (self.input_needs_grad[0]) {
                            MapR(xi.grad_buffer().data(), m, k).noalias() +=
                                dc * CMapR(wi.data.data(), k, n).transpose();
                          }
                          if (self.input_needs_grad[1]) {
                            MapR(wi.grad_buffer().data(), k, n).noalias() +=
                                CMapR(xi.data.data(), m, k).transpose() * dc;
                          }
                          if (self.input_needs_grad[2]) {
                            Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>(
                                bi.grad_buffer().data(), n) += dc.colwise().sum();
                          }
                        });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  bool same = as == bs;
  bool broadcast = !same && bs.size() < as.size() &&
                   std::equal(bs.begin(), bs.end(), as.end() - static_cast<std::ptrdiff_t>(bs.size()));
  if (!same && !broadcast) {
    fail(ErrorCode::kDimension,
         "add shape mismatch: " + shape_str(as) + " + " + shape_str(bs));
  }
  const std::size_t n = usize(a.numel());
  const std::size_t period = usize(b.numel());
  Buffer out(n);
  auto ad = a.data();
  auto bd = b.data();
  if (same) {
    for (std::size_t i = 0; i < n; ++i) out[i] = ad[i] + bd[i];
  } else {
    for (std::size_t r = 0; r < n; r += period) {
      for (std::size_t j = 0; j < period; ++j) out[r + j] = ad[r + j] + bd[j];
    }
  }
  return make_op_result("add", as, std::move(out), {a, b},
                        [n, period](TensorImpl& self) {
                          const auto& g = self.grad;
                          if (self.input_needs_grad[0]) {
                            auto& ga = self.inputs[0]->grad_buffer();
                            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                          }
                          if (self.input_needs_grad[1]) {
                            auto& gb = self.inputs[1]->grad_buffer();
                            for (std::size_t r = 0; r < n; r += period) {
                              for (std::size_t j = 0; j < period; ++j) gb[j] += g[r + j];
                            }
                          }
                        });
}

Tensor scale(const Tensor& t, Real factor) {
  Buffer out(t.data().begin(), t.data().end());
  for (auto& v : out) v *= factor;
  return make_op_result("scale", t.shape(), std::move(out), {t},
                        [factor](TensorImpl& self) {
                          auto& g = self.inputs[0]->grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
                        });
}

Tensor relu(const Tensor& t) {
  Buffer out(t.data().begin(), t.data().end());
  for (auto& v : out) v = v > Real{0} ? v : Real{0};
  return make_op_result("relu", t.shape(), std::move(out), {t}, [](TensorImpl& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& x = self.inputs[0]->data;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > Real{0}) g[i] += self.grad[i];
    }
  });
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_numel(shape) != t.numel()) {
    fail(ErrorCode::kDimension,
         "reshape " + shape_str(t.shape()) + " -> " + shape_str(shape));
  }
  Buffer out(t.data().begin(), t.data().end());
  return make_op_result("reshape", std::move(shape), std::move(out), {t},
                        [](TensorImpl& self) {
                          auto& g = self.inputs[0]->grad_buffer();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (auto v : t.data()) acc += v;
  return make_op_result("sum", {}, {static_cast<Real>(acc)}, {t}, [](TensorImpl& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& t) {
  if (t.numel() == 0) fail(ErrorCode::kDegenerateInput, "mean of empty tensor");
  return scale(sum(t), Real(1) / static_cast<Real>(t.numel()));
}

Tensor softmax(const Tensor& t, int axis) {
  const int ax = normalize_axis(axis, t.rank());
  const AxisSplit s = split_axis(t.shape(), ax);
  auto x = t.data();
  Buffer out(x.size());
  for (std::int64_t o = 0; o < s.outer; ++o) {
    for (std::int64_t in = 0; in < s.inner; ++in) {
      const std::int64_t base = o * s.len * s.inner + in;
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::int64_t j = 0; j < s.len; ++j) mx = std::max(mx, x[usize(base + j * s.inner)]);
      double z = 0.0;
      for (std::int64_t j = 0; j < s.len; ++j) {
        Real e = std::exp(x[usize(base + j * s.inner)] - mx);
        out[usize(base + j * s.inner)] = e;
        z += e;
      }
      const Real inv = static_cast<Real>(1.0 / z);
      for (std::int64_t j = 0; j < s.len; ++j) out[usize(base + j * s.inner)] *= inv;
    }
  }
  return make_op_result("softmax", t.shape(), std::move(out), {t}, [s](TensorImpl& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& y = self.data;
    const auto& dy = self.grad;
    for (std::int64_t o = 0; o < s.outer; ++o) {
      for (std::int64_t in = 0; in < s.inner; ++in) {
        const std::int64_t base = o * s.len * s.inner + in;
        double dot = 0.0;
        for (std::int64_t j = 0; j < s.len; ++j) {
          auto idx = usize(base + j * s.inner);
          dot += static_cast<double>(y[idx]) * dy[idx];
        }
        for (std::int64_t j = 0; j < s.len; ++j) {
          auto idx = usize(base + j * s.inner);
          g[idx] += y[idx] * (dy[idx] - static_cast<Real>(dot));
        }
      }
    }
  });
}

Tensor log_softmax(const Tensor& t, int axis) {
  const int ax = normalize_axis(axis, t.rank());
  const AxisSplit s = split_axis(t.shape(), ax);
  auto x = t.data();
  Buffer out(x.size());
  for (std::int64_t o = 0; o < s.outer; ++o) {
    for (std::int64_t in = 0; in < s.inner; ++in) {
      const std::int64_t base = o * s.len * s.inner + in;
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::int64_t j = 0; j < s.len; ++j) mx = std::max(mx, x[usize(base + j * s.inner)]);
      double z = 0.0;
      for (std::int64_t j = 0; j < s.len; ++j) z += std::exp(x[usize(base + j * s.inner)] - mx);
      const Real lse = mx + static_cast<Real>(std::log(z));
      for (std::int64_t j = 0; j < s.len; ++j) {
        auto idx = usize(base + j * s.inner);
        out[idx] = x[idx] - lse;
      }
    }
  }
  return make_op_result("log_softmax", t.shape(), std::move(out), {t}, [s](TensorImpl& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& y = self.data;
    const auto& dy = self.grad;
    for (std::int64_t o = 0; o < s.outer; ++o) {
      for (std::int64_t in = 0; in < s.inner; ++in) {
        const std::int64_t base = o * s.len * s.inner + in;
        double total = 0.0;
        for (std::int64_t j = 0; j < s.len; ++j) total += dy[usize(base + j * s.inner)];
        for (std::int64_t j = 0; j < s.len; ++j) {
          auto idx = usize(base + j * s.inner);
          g[idx] += dy[idx] - std::exp(y[idx]) * static_cast<Real>(total);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps) {
  if (x.rank() < 1 || gain.rank() != 1 || bias.rank() != 1 ||
      gain.dim(0) != x.shape().back() || bias.dim(0) != x.shape().back()) {
    fail(ErrorCode::kDimension, "layer_norm shape mismatch: " + shape_str(x.shape()) +
                                    " with gain " + shape_str(gain.shape()) +
                                    " and bias " + shape_str(bias.shape()));
  }
  const std::int64_t d = x.shape().back();
  const std::int64_t rows = d == 0 ? 0 : x.numel() / d;
  auto xd = x.data();
  auto gd = gain.data();
  auto bd = bias.data();
  Buffer out(xd.size());
  // Normalized activations and inverse std per row, kept for backward.
  auto xhat = std::make_shared<std::vector<Real>>(xd.size());
  auto inv_std = std::make_shared<std::vector<Real>>(usize(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const Real* row = xd.data() + r * d;
    double mu = 0.0;
    for (std::int64_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[usize(r)] = static_cast<Real>(is);
    for (std::int64_t j = 0; j < d; ++j) {
      Real h = static_cast<Real>((row[j] - mu) * is);
      (*xhat)[usize(r * d + j)] = h;
      out[usize(r * d + j)] = h * gd[usize(j)] + bd[usize(j)];
    }
  }
  return make_op_result(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [d, rows, xhat, inv_std](TensorImpl& self) {
        const auto& dy = self.grad;
        const auto& gv = self.inputs[1]->data;
        if (self.input_needs_grad[1]) {
          auto& gg = self.inputs[1]->grad_buffer();
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t j = 0; j < d; ++j)
              gg[usize(j)] += dy[usize(r * d + j)] * (*xhat)[usize(r * d + j)];
        }
        if (self.input_needs_grad[2]) {
          auto& gb = self.inputs[2]->grad_buffer();
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t j = 0; j < d; ++j) gb[usize(j)] += dy[usize(r * d + j)];
        }
        if (self.input_needs_grad[0]) {
          auto& gx = self.inputs[0]->grad_buffer();
          for (std::int64_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
              double dh = static_cast<double>(dy[usize(r * d + j)]) * gv[usize(j)];
              m1 += dh;
              m2 += dh * (*xhat)[usize(r * d + j)];
            }
            m1 /= static_cast<double>(d);
            m2 /= static_cast<double>(d);
            const double is = (*inv_std)[usize(r)];
            for (std::int64_t j = 0; j < d; ++j) {
              double dh = static_cast<double>(dy[usize(r * d + j)]) * gv[usize(j)];
              gx[usize(r * d + j)] +=
                  static_cast<Real>(is * (dh - m1 - (*xhat)[usize(r * d + j)] * m2));
            }
          }
        }
      });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) fail(ErrorCode::kDimension, "concat of zero tensors");
  const int ax = normalize_axis(axis, parts[0].rank());
  Shape out_shape = parts[0].shape();
  out_shape[usize(ax)] = 0;
  for (const auto& p : parts) {
    bool ok = p.rank() == out_shape.size();
    for (std::size_t i = 0; ok && i < out_shape.size(); ++i) {
      if (static_cast<int>(i) != ax && p.shape()[i] != parts[0].shape()[i]) ok = false;
    }
    if (!ok) {
      fail(ErrorCode::kDimension, "concat shape mismatch: " + shape_str(parts[0].shape()) +
                                      " vs " + shape_str(p.shape()));
    }
    out_shape[usize(ax)] += p.shape()[usize(ax)];
  }
  const AxisSplit total = split_axis(out_shape, ax);
  Buffer out(usize(shape_numel(out_shape)));
  std::vector<std::int64_t> widths;
  std::int64_t start = 0;
  for (const auto& p : parts) {
    const std::int64_t w = p.shape()[usize(ax)] * total.inner;
    auto pd = p.data();
    for (std::int64_t o = 0; o < total.outer; ++o) {
      std::copy_n(pd.data() + o * w, w, out.data() + o * total.len * total.inner + start);
    }
    widths.push_back(w);
    start += w;
  }
  return make_op_result("concat", out_shape, std::move(out), parts,
                        [total, widths](TensorImpl& self) {
                          std::int64_t off = 0;
                          for (std::size_t p = 0; p < widths.size(); ++p) {
                            const std::int64_t w = widths[p];
                            if (self.input_needs_grad[p]) {
                              auto& g = self.inputs[p]->grad_buffer();
                              for (std::int64_t o = 0; o < total.outer; ++o) {
                                const Real* src = self.grad.data() + o * total.len * total.inner + off;
                                Real* dst = g.data() + o * w;
                                for (std::int64_t i = 0; i < w; ++i) dst[i] += src[i];
                              }
                            }
                            off += w;
                          }
                        });
}

Tensor gather_rows(const Tensor& table, std::span<const std::int64_t> rows) {
  require_rank(table, 2, "gather_rows");
  const std::int64_t n_rows = table.dim(0);
  const std::int64_t d = table.dim(1);
  for (auto r : rows) {
    if (r < 0 || r >= n_rows) {
      fail(ErrorCode::kVocabulary, "row id " + std::to_string(r) + " outside table of " +
                                       std::to_string(n_rows) + " rows");
    }
  }
  Buffer out(rows.size() * usize(d));
  auto td = table.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(td.data() + rows[i] * d, d, out.data() + static_cast<std::int64_t>(i) * d);
  }
  std::vector<std::int64_t> idx(rows.begin(), rows.end());
  return make_op_result("gather_rows", {static_cast<std::int64_t>(rows.size()), d},
                        std::move(out), {table},
                        [idx = std::move(idx), d](TensorImpl& self) {
                          auto& g = self.inputs[0]->grad_buffer();
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            Real* dst = g.data() + idx[i] * d;
                            const Real* src = self.grad.data() + static_cast<std::int64_t>(i) * d;
                            for (std::int64_t j = 0; j < d; ++j) dst[j] += src[j];
                          }
                        });
}

Tensor gather_rows(const Tensor& table, std::span<const TokenId> ids) {
  std::vector<std::int64_t> rows(ids.begin(), ids.end());
  return gather_rows(table, std::span<const std::int64_t>(rows));
}

Tensor cross_entropy(const Tensor& logits, std::span<const TokenId> targets, TokenId pad_id,
                     std::span<const Real> row_weights) {
  require_rank(logits, 2, "cross_entropy");
  const std::int64_t n = logits.dim(0);
  const std::int64_t v = logits.dim(1);
  if (static_cast<std::int64_t>(targets.size()) != n) {
    fail(ErrorCode::kDimension, "cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for logits " + shape_str(logits.shape()));
  }
  if (!row_weights.empty() && static_cast<std::int64_t>(row_weights.size()) != n) {
    fail(ErrorCode::kDimension, "cross_entropy: weight count does not match rows");
  }
  std::int64_t active = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    const TokenId t = targets[usize(r)];
    if (t == pad_id) continue;
    if (t < 0 || t >= v) {
      fail(ErrorCode::kVocabulary, "target id " + std::to_string(t) + " outside vocabulary of " +
                                       std::to_string(v));
    }
    ++active;
  }
  if (active == 0) fail(ErrorCode::kDegenerateInput, "cross_entropy: no non-pad targets");

  auto x = logits.data();
  auto weights = std::make_shared<std::vector<Real>>(usize(n), Real{0});
  auto probs = std::make_shared<std::vector<Real>>(x.size());
  double total = 0.0;
  for (std::int64_t r = 0; r < n; ++r) {
    const TokenId t = targets[usize(r)];
    if (t == pad_id) continue;
    const Real w = row_weights.empty() ? Real(1) / static_cast<Real>(active) : row_weights[usize(r)];
    (*weights)[usize(r)] = w;
    const Real* row = x.data() + r * v;
    Real mx = *std::max_element(row, row + v);
    double z = 0.0;
    for (std::int64_t j = 0; j < v; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::int64_t j = 0; j < v; ++j) {
      (*probs)[usize(r * v + j)] = static_cast<Real>(std::exp(row[j] - lse));
    }
    total += w * (lse - row[t]);
  }
  std::vector<TokenId> tg(targets.begin(), targets.end());
  return make_op_result("cross_entropy", {}, {static_cast<Real>(total)}, {logits},
                        [n, v, weights, probs, tg = std::move(tg)](TensorImpl& self) {
                          auto& g = self.inputs[0]->grad_buffer();
                          const Real dy = self.grad[0];
                          for (std::int64_t r = 0; r < n; ++r) {
                            const Real w = (*weights)[usize(r)];
                            if (w == Real{0}) continue;
                            Real* gr = g.data() + r * v;
                            const Real* pr = probs->data() + r * v;
                            for (std::int64_t j = 0; j < v; ++j) gr[j] += dy * w * pr[j];
                            gr[tg[usize(r)]] -= dy * w;
                          }
                        });
}

Tensor dropout(const Tensor& t, Real rate, Rng& rng) {
  if (rate <= Real{0}) return t;
  if (rate >= Real{1}) fail(ErrorCode::kContract, "dropout rate must be < 1");
  auto mask = std::make_shared<std::vector<Real>>(usize(t.numel()));
  const Real keep_scale = Real(1) / (Real(1) - rate);
  Buffer out(t.data().begin(), t.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Real m = rng.uniform() < rate ? Real{0} : keep_scale;
    (*mask)[i] = m;
    out[i] *= m;
  }
  return make_op_result("dropout", t.shape(), std::move(out), {t}, [mask](TensorImpl& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += (*mask)[i] * self.grad[i];
  });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const SegmentLayout& q_layout,
                 const SegmentLayout& k_layout, int heads, bool causal, AttentionProbs* probs_out) {
  require_rank(q, 2, "attention");
  require_rank(k, 2, "attention");
  require_rank(v, 2, "attention");
  const std::int64_t d = q.dim(1);
  if (k.dim(1) != d || v.dim(1) != d || k.dim(0) != v.dim(0) || heads <= 0 || d % heads != 0) {
    fail(ErrorCode::kDimension, "attention shape mismatch: q " + shape_str(q.shape()) + ", k " +
                                    shape_str(k.shape()) + ", v " + shape_str(v.shape()) +
                                    ", heads " + std::to_string(heads));
  }
  if (q_layout.size() != k_layout.size()) {
    fail(ErrorCode::kDimension, "attention: query and key layouts differ in segment count");
  }
  for (std::size_t s = 0; s < q_layout.size(); ++s) {
    if (q_layout[s].offset + q_layout[s].length > q.dim(0) ||
        k_layout[s].offset + k_layout[s].length > k.dim(0)) {
      fail(ErrorCode::kDimension, "attention: segment exceeds packed rows");
    }
    if (q_layout[s].length > 0 && k_layout[s].length == 0) {
      fail(ErrorCode::kDegenerateInput, "attention: query segment with no keys");
    }
  }
  const std::int64_t dh = d / heads;
  const Real inv_sqrt = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(dh)));
  auto qd = q.data();
  auto kd = k.data();
  auto vd = v.data();
  Buffer out(usize(q.dim(0) * d), Real{0});
  // probs[s][h]: [qlen, klen] row-major, zeros above the causal diagonal.
  auto probs = std::make_shared<std::vector<std::vector<std::vector<Real>>>>(q_layout.size());
  for (std::size_t s = 0; s < q_layout.size(); ++s) {
    const auto qo = q_layout[s].offset, ql = q_layout[s].length;
    const auto ko = k_layout[s].offset, kl = k_layout[s].length;
    auto& seg = (*probs)[s];
    seg.assign(usize(heads), std::vector<Real>(usize(ql * kl), Real{0}));
    for (int h = 0; h < heads; ++h) {
      auto& p = seg[usize(h)];
      const std::int64_t c0 = h * dh;
      for (std::int64_t i = 0; i < ql; ++i) {
        const std::int64_t jmax = causal ? std::min(i + 1, kl) : kl;
        const Real* qi = qd.data() + (qo + i) * d + c0;
        Real* prow = p.data() + i * kl;
        Real mx = -std::numeric_limits<Real>::infinity();
        for (std::int64_t j = 0; j < jmax; ++j) {
          const Real* kj = kd.data() + (ko + j) * d + c0;
          Real dot = 0;
          for (std::int64_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          prow[j] = dot * inv_sqrt;
          mx = std::max(mx, prow[j]);
        }
        double z = 0.0;
        for (std::int64_t j = 0; j < jmax; ++j) {
          prow[j] = std::exp(prow[j] - mx);
          z += prow[j];
        }
        const Real inv = static_cast<Real>(1.0 / z);
        Real* oi = out.data() + (qo + i) * d + c0;
        for (std::int64_t j = 0; j < jmax; ++j) {
          prow[j] *= inv;
          const Real* vj = vd.data() + (ko + j) * d + c0;
          for (std::int64_t c = 0; c < dh; ++c) oi[c] += prow[j] * vj[c];
        }
      }
    }
  }
  if (probs_out != nullptr) probs_out->probs = *probs;
  return make_op_result(
      "attention", q.shape(), std::move(out), {q, k, v},
      [q_layout, k_layout, heads, causal, d, dh, inv_sqrt, probs](TensorImpl& self) {
        const auto& qv = self.inputs[0]->data;
        const auto& kv = self.inputs[1]->data;
        const auto& vv = self.inputs[2]->data;
        const bool need_q = self.input_needs_grad[0];
        const bool need_k = self.input_needs_grad[1];
        const bool need_v = self.input_needs_grad[2];
        Real* gq = need_q ? self.inputs[0]->grad_buffer().data() : nullptr;
        Real* gk = need_k ? self.inputs[1]->grad_buffer().data() : nullptr;
        Real* gv = need_v ? self.inputs[2]->grad_buffer().data() : nullptr;
        const auto& dout = self.grad;
        std::vector<Real> dp;
        for (std::size_t s = 0; s < q_layout.size(); ++s) {
          const auto qo = q_layout[s].offset, ql = q_layout[s].length;
          const auto ko = k_layout[s].offset, kl = k_layout[s].length;
          for (int h = 0; h < heads; ++h) {
            const auto& p = (*probs)[s][usize(h)];
            const std::int64_t c0 = h * dh;
            dp.assign(usize(kl), Real{0});
            for (std::int64_t i = 0; i < ql; ++i) {
              const std::int64_t jmax = causal ? std::min(i + 1, kl) : kl;
              const Real* doi = dout.data() + (qo + i) * d + c0;
              const Real* prow = p.data() + i * kl;
              double row_dot = 0.0;
              for (std::int64_t j = 0; j < jmax; ++j) {
                const Real* vj = vv.data() + (ko + j) * d + c0;
                Real acc = 0;
                for (std::int64_t c = 0; c < dh; ++c) acc += doi[c] * vj[c];
                dp[usize(j)] = acc;
                row_dot += static_cast<double>(prow[j]) * acc;
                if (need_v) {
                  Real* gvj = gv + (ko + j) * d + c0;
                  for (std::int64_t c = 0; c < dh; ++c) gvj[c] += prow[j] * doi[c];
                }
              }
              const Real* qi = qv.data() + (qo + i) * d + c0;
              for (std::int64_t j = 0; j < jmax; ++j) {
                const Real ds = prow[j] * (dp[usize(j)] - static_cast<Real>(row_dot)) * inv_sqrt;
                const Real* kj = kv.data() + (ko + j) * d + c0;
                if (need_q) {
                  Real* gqi = gq + (qo + i) * d + c0;
                  for (std::int64_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                }
                if (need_k) {
                  Real* gkj = gk + (ko + j) * d + c0;
                  for (std::int64_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      });
}

ADVSEQ_NAMESPACE_END

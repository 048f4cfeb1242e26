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

#pragma once

// Central finite-difference checks for the 64-bit core.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "grad/ops.h"
#include "grad/tensor.h"

namespace advseq::testing {

struct FdResult {
  double max_rel_error = 0.0;
  double max_abs_grad = 0.0;
  std::size_t checked = 0;
};

inline double rel_error(double analytic, double numeric) {
  double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Random projection to a scalar, so every output element influences the loss
// with a different weight.
inline Tensor project(const Tensor& t, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Real> w(static_cast<std::size_t>(t.numel()));
  for (auto& v : w) v = static_cast<Real>(rng.uniform(-1.0, 1.0));
  Tensor flat = reshape(t, {1, t.numel()});
  return sum(matmul(flat, Tensor::from({t.numel(), 1}, std::move(w))));
}

// Compares the tape gradient of `f` with central differences of step `h`
// over every element of every leaf.
inline FdResult check_gradients(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                                std::vector<Tensor> leaves, double h = 1e-5) {
  Tape tape;
  std::vector<std::vector<Real>> analytic;
  {
    TapeScope scope(tape);
    Tensor loss = f(leaves);
    backward(loss);
  }
  for (auto& l : leaves) {
    analytic.emplace_back(l.grad().begin(), l.grad().end());
    if (analytic.back().empty()) analytic.back().assign(static_cast<std::size_t>(l.numel()), 0);
  }

  FdResult r;
  NoGradScope off;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    auto data = leaves[k].data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      Real saved = data[i];
      data[i] = saved + h;
      double up = f(leaves).item();
      data[i] = saved - h;
      double down = f(leaves).item();
      data[i] = saved;
      double numeric = (up - down) / (2 * h);
      r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic[k][i], numeric));
      r.max_abs_grad = std::max(r.max_abs_grad, std::abs(analytic[k][i]));
      ++r.checked;
    }
  }
  return r;
}

inline Tensor random_leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Real> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
  return Tensor::from(std::move(shape), std::move(v), /*requires_grad=*/true);
}

}  // namespace advseq::testing

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

#include "grad/params.h"

#include <algorithm>
#include <cmath>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

Tensor ParamStore::add(const std::string& name, Tensor tensor) {
  if (contains(name)) fail(ErrorCode::kContract, "parameter registered twice: " + name);
  entries_.emplace_back(name, tensor);
  return tensor;
}

Tensor ParamStore::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  fail(ErrorCode::kContract, "unknown parameter: " + name);
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedTensor& e) { return e.first == name; });
}

NamedTensors ParamStore::with_prefix(const std::string& prefix) const {
  NamedTensors out;
  for (const auto& e : entries_) {
    if (e.first.rfind(prefix, 0) == 0) out.push_back(e);
  }
  return out;
}

std::int64_t ParamStore::total_size() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

Tensor init_uniform(Shape shape, Real limit, Rng& rng) {
  Buffer v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-limit, limit));
  return Tensor::param(std::move(shape), std::move(v));
}

Tensor init_normal(Shape shape, Real stddev, Rng& rng) {
  Buffer v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<Real>(rng.normal() * stddev);
  return Tensor::param(std::move(shape), std::move(v));
}

Tensor init_xavier(std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return init_uniform({fan_in, fan_out}, static_cast<Real>(limit), rng);
}

double inverse_sqrt_schedule(const AdamConfig& cfg, std::int64_t step) {
  const double s = static_cast<double>(std::max<std::int64_t>(step, 1));
  if (cfg.warmup_steps <= 0) return cfg.learning_rate;
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.learning_rate * std::min(s / w, std::sqrt(w / s));
}

Adam::Adam(AdamConfig cfg, NamedTensors params) : cfg_(cfg), params_(std::move(params)) {
  for (const auto& [name, t] : params_) {
    m_.push_back(Tensor::zeros(t.shape()));
    v_.push_back(Tensor::zeros(t.shape()));
  }
}

void Adam::step() {
  ++step_;
  const double lr = inverse_sqrt_schedule(cfg_, step_);
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  double clip = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [name, t] : params_) {
      for (auto g : t.grad()) sq += static_cast<double>(g) * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) clip = cfg_.clip_norm / norm;
  }
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor& t = params_[p].second;
    auto w = t.data();
    auto g = t.grad();
    auto m = m_[p].data();
    auto v = v_[p].data();
    const bool has = !g.empty();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has ? g[i] * clip : 0.0;
      m[i] = static_cast<Real>(b1 * m[i] + (1.0 - b1) * gi);
      v[i] = static_cast<Real>(b2 * v[i] + (1.0 - b2) * gi * gi);
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      w[i] = static_cast<Real>(w[i] - lr * mh / (std::sqrt(vh) + cfg_.epsilon));
    }
    t.zero_grad();
  }
}

ADVSEQ_NAMESPACE_END

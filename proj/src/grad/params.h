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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "common/config.h"
#include "common/rng.h"
#include "grad/tensor.h"

ADVSEQ_NAMESPACE_BEGIN

using NamedTensor = std::pair<std::string, Tensor>;
using NamedTensors = std::vector<NamedTensor>;

// Named parameter collection. Registration order is the canonical order used
// by optimizers and checkpoints. A tensor may be registered once; other
// models alias it by holding the same handle.
class ParamStore {
 public:
  Tensor add(const std::string& name, Tensor tensor);
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const NamedTensors& entries() const { return entries_; }
  NamedTensors with_prefix(const std::string& prefix) const;
  std::int64_t total_size() const;
  void zero_grad();

 private:
  NamedTensors entries_;
};

Tensor init_uniform(Shape shape, Real limit, Rng& rng);
Tensor init_normal(Shape shape, Real stddev, Rng& rng);
// Glorot-uniform for a [fan_in, fan_out] matrix.
Tensor init_xavier(std::int64_t fan_in, std::int64_t fan_out, Rng& rng);

struct AdamConfig {
  double learning_rate = 1e-3;  // peak rate reached at the end of warmup
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  std::int64_t warmup_steps = 400;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
};

// Linear warmup to the peak rate, then inverse-square-root decay.
double inverse_sqrt_schedule(const AdamConfig& cfg, std::int64_t step);

// Adaptive moment estimation over a fixed ordered parameter list.
class Adam {
 public:
  Adam(AdamConfig cfg, NamedTensors params);

  // Applies one update from the parameters' accumulated gradients, then
  // clears them. Parameters without a gradient are left untouched apart from
  // moment decay.
  void step();
  std::int64_t steps_taken() const { return step_; }
  double current_lr() const { return inverse_sqrt_schedule(cfg_, step_ + 1); }

  const NamedTensors& params() const { return params_; }
  // First/second moments, parallel to params().
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_steps_taken(std::int64_t step) { step_ = step; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  NamedTensors params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t step_ = 0;
};

ADVSEQ_NAMESPACE_END

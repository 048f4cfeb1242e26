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

#include "grad/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

namespace {

thread_local Tape* g_active_tape = nullptr;
thread_local bool g_params_frozen = false;

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Buffer& TensorImpl::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), Real{0});
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_numel(shape);
  return from(std::move(shape), Buffer(static_cast<std::size_t>(n)),
              requires_grad);
}

Tensor Tensor::full(Shape shape, Real value) {
  auto n = shape_numel(shape);
  return from(std::move(shape),
              Buffer(static_cast<std::size_t>(n), value));
}

Tensor Tensor::from(Shape shape, Buffer values, bool requires_grad) {
  for (auto d : shape) {
    if (d < 0) fail(ErrorCode::kDimension, "negative dimension in " + shape_str(shape));
  }
  if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
    fail(ErrorCode::kDimension, "shape " + shape_str(shape) + " does not match " +
                                    std::to_string(values.size()) + " values");
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::span<const Real> values, bool requires_grad) {
  return from(std::move(shape), Buffer(values.begin(), values.end()), requires_grad);
}

Tensor Tensor::param(Shape shape, Buffer values) {
  Tensor t = from(std::move(shape), std::move(values), true);
  t.impl_->is_param = true;
  return t;
}

Tensor Tensor::param(Shape shape, std::span<const Real> values) {
  return param(std::move(shape), Buffer(values.begin(), values.end()));
}

Tensor Tensor::scalar(Real value) { return from({}, {value}); }

Real Tensor::item() const {
  if (numel() != 1) {
    fail(ErrorCode::kContract, "item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->data[0];
}

Real Tensor::at(std::int64_t row, std::int64_t col) const {
  return impl_->data[static_cast<std::size_t>(row * impl_->shape.back() + col)];
}

void Tensor::zero_grad() { impl_->grad.clear(); }

bool Tensor::tracks_grad() const {
  return impl_->requires_grad && !(impl_->is_param && g_params_frozen);
}

Tensor Tensor::detach() const { return from(impl_->shape, impl_->data); }

void Tape::record(std::shared_ptr<TensorImpl> node) {
  node->tape = this;
  nodes_.push_back(std::move(node));
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

FreezeParams::FreezeParams() : previous_(g_params_frozen) { g_params_frozen = true; }
FreezeParams::~FreezeParams() { g_params_frozen = previous_; }

Tape* active_tape() { return g_active_tape; }
bool params_frozen() { return g_params_frozen; }

std::span<const Real> GradientMap::of(const Tensor& leaf) const {
  for (const auto& t : leaves) {
    if (t.impl() == leaf.impl()) return t.grad();
  }
  return {};
}

GradientMap backward(const Tensor& loss) {
  Tape* tape = g_active_tape;
  if (!loss.defined() || loss.numel() != 1) {
    fail(ErrorCode::kContract,
         "backward() needs a scalar loss, got shape " +
             (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (tape == nullptr || loss.impl()->tape != tape) {
    fail(ErrorCode::kContract, "backward() loss is not recorded on the active tape");
  }

  loss.impl()->grad_buffer()[0] += Real{1};
  GradientMap result;
  std::unordered_set<const TensorImpl*> seen_leaves;
  const auto& nodes = tape->nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    TensorImpl& node = **it;
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      if (!node.input_needs_grad[i]) continue;
      auto& in = node.inputs[i];
      if (in->is_leaf() && seen_leaves.insert(in.get()).second) {
        in->grad_buffer();
        result.leaves.emplace_back(in);
      }
    }
    if (node.grad.empty()) continue;  // not connected to the loss
    node.backward(node);
  }
  // Release intermediate buffers; leaves keep their accumulated gradients.
  for (const auto& node : nodes) {
    node->grad.clear();
    node->grad.shrink_to_fit();
    node->tape = nullptr;
  }
  tape->clear();
  return result;
}

Tensor make_op_result(const char* op, Shape shape, Buffer values,
                      std::vector<Tensor> inputs,
                      std::function<void(TensorImpl&)> backward_fn) {
  Tensor out = Tensor::from(std::move(shape), std::move(values));
  Tape* tape = g_active_tape;
  if (tape == nullptr) return out;
  std::vector<bool> needs(inputs.size());
  bool any = false;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    needs[i] = inputs[i].tracks_grad();
    any = any || needs[i];
  }
  if (!any) return out;
  TensorImpl* impl = out.impl();
  impl->op = op;
  impl->requires_grad = true;
  impl->input_needs_grad = std::move(needs);
  impl->inputs.reserve(inputs.size());
  for (auto& t : inputs) impl->inputs.push_back(t.shared());
  impl->backward = std::move(backward_fn);
  tape->record(out.shared());
  return out;
}

ADVSEQ_NAMESPACE_END

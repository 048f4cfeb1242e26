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
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "common/config.h"

ADVSEQ_NAMESPACE_BEGIN

using Shape = std::vector<std::int64_t>;

// Storage allocator with a fixed 64-byte alignment. Vectorized kernels pick
// their peeling from the base address, so a fixed alignment keeps summation
// order, and therefore results, independent of where the heap put a buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Buffer = std::vector<Real, AlignedAllocator<Real>>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

struct TensorImpl {
  Shape shape;
  Buffer data;
  // Leaves: accumulated gradient, reset by the caller. Op outputs: scratch
  // buffer for the current backward pass.
  Buffer grad;
  bool requires_grad = false;
  bool is_param = false;
  const Tape* tape = nullptr;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::vector<bool> input_needs_grad;
  std::function<void(TensorImpl&)> backward;
  const char* op = "leaf";

  bool is_leaf() const { return !backward; }
  // Zero-filled gradient buffer, allocated on first use.
  Buffer& grad_buffer();
};

// Dense row-major tensor handle with reference semantics: copies alias the
// same storage. Values are treated as immutable once an op has consumed them;
// only parameters are updated in place, and only between tapes.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value);
  static Tensor from(Shape shape, Buffer values, bool requires_grad = false);
  static Tensor from(Shape shape, std::span<const Real> values,
                     bool requires_grad = false);
  // Trainable leaf. Parameters stop tracking inside a FreezeParams scope.
  static Tensor param(Shape shape, Buffer values);
  static Tensor param(Shape shape, std::span<const Real> values);
  static Tensor scalar(Real value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t rank() const { return impl_->shape.size(); }
  std::int64_t numel() const {
    return static_cast<std::int64_t>(impl_->data.size());
  }

  std::span<Real> data() { return impl_->data; }
  std::span<const Real> data() const { return impl_->data; }
  Real item() const;
  Real at(std::int64_t row, std::int64_t col) const;

  // Empty span when no gradient has been accumulated yet.
  std::span<const Real> grad() const { return impl_->grad; }
  std::span<Real> mutable_grad() { return impl_->grad_buffer(); }
  bool has_grad() const { return !impl_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return impl_->requires_grad; }
  bool is_param() const { return impl_->is_param; }
  // Tracks gradient iff the tensor requires it and is not a frozen param.
  bool tracks_grad() const;

  // Untracked copy of the values.
  Tensor detach() const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& shared() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Ordered record of the differentiable ops executed while it is installed.
// Recording order is a topological order of the graph, so backward replays
// it in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::shared_ptr<TensorImpl> node);
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }
  const std::vector<std::shared_ptr<TensorImpl>>& nodes() const {
    return nodes_;
  }

 private:
  std::vector<std::shared_ptr<TensorImpl>> nodes_;
};

// Installs a tape for the current thread for the lifetime of the scope.
// Scopes nest; the innermost tape receives recorded ops. Without an installed
// tape, ops run untracked.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Suspends recording on this thread.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

// Parameters behave as constants while active: gradients still flow to
// non-parameter leaves (e.g. detached input embeddings) but no parameter
// gradient is computed or accumulated.
class FreezeParams {
 public:
  FreezeParams();
  ~FreezeParams();
  FreezeParams(const FreezeParams&) = delete;
  FreezeParams& operator=(const FreezeParams&) = delete;

 private:
  bool previous_;
};

Tape* active_tape();
bool params_frozen();

// Leaves reached by one backward pass, in first-seen order.
struct GradientMap {
  std::vector<Tensor> leaves;

  // Gradient of a leaf; empty span if it was not part of the pass.
  std::span<const Real> of(const Tensor& leaf) const;
};

// Reverse-mode pass over the active tape. `loss` must be a scalar recorded on
// it. Gradients accumulate additively into leaves; every tracked leaf ends up
// with a gradient buffer of its own shape. The tape is cleared afterwards, so
// each forward pass supports exactly one backward pass.
GradientMap backward(const Tensor& loss);

// Builds an op output. Records it on the active tape when some input tracks
// gradients; `backward_fn` then receives the output node and adds into the
// grad buffers of inputs whose `input_needs_grad` flag is set.
Tensor make_op_result(const char* op, Shape shape, Buffer values,
                      std::vector<Tensor> inputs,
                      std::function<void(TensorImpl&)> backward_fn);

ADVSEQ_NAMESPACE_END

// Copyright (c) 2026 The sprune Authors. All Rights Reserved.
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

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sprune {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

namespace detail {

struct TensorNode {
  Shape shape;
  std::shared_ptr<const std::vector<double>> data;
  bool requires_grad = false;
  // Empty means "no gradient yet"; otherwise same length as data.
  std::vector<double> grad;
  // Set when the tensor is the output of an operation recorded on a tape.
  const Tape* producer = nullptr;
  std::size_t entry = 0;
};

}  // namespace detail

// A dense row-major float64 tensor handle.
//
// Copies share the underlying node, so a copy observes the same gradient
// slot. Values are immutable after construction; only the gradient changes.
// Zero-sized dimensions are allowed so that fully pruned layers stay
// representable.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  double operator[](std::size_t flat_index) const { return data()[flat_index]; }
  double at(std::size_t row, std::size_t col) const;
  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  void zero_grad() const;

  // A tensor sharing this tensor's values with no gradient and no history.
  Tensor detach(bool requires_grad = false) const;
  bool shares_storage(const Tensor& other) const;
  bool bit_equal(const Tensor& other) const;

  // Internal: used by operations and the tape.
  detail::TensorNode& node() const { return *node_; }

 private:
  friend class Tape;
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

// Ordered record of executed operations for reverse-mode differentiation.
//
// Operations record themselves on the thread's active tape (see Recording)
// when at least one input requires a gradient. A tape is confined to the
// thread that records on it.
class Tape {
 public:
  // Receives the gradient of the recorded output and accumulates into inputs.
  using BackwardFn = std::function<void(std::span<const double> grad_output)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  void record(const Tensor& output, BackwardFn backward);
  std::size_t size() const { return entries_.size(); }
  void clear();

  static Tape* active();

  // Makes a tape the active tape of the calling thread for its lifetime.
  class Recording {
   public:
    explicit Recording(Tape& tape);
    ~Recording();
    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

   private:
    Tape* previous_;
  };

 private:
  friend void backward(Tape& tape, const Tensor& loss);

  struct Entry {
    std::shared_ptr<detail::TensorNode> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

// Propagates d(loss)/d(x) to every requires-grad tensor reachable from loss.
// Leaf gradients accumulate across calls; intermediate gradients are reset
// at the start of each call.
void backward(Tape& tape, const Tensor& loss);

// Adds `grad` into t's gradient slot if t requires a gradient.
void accumulate_grad(const Tensor& t, std::span<const double> grad);

}  // namespace sprune

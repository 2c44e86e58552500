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

#include "sprune/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "sprune/errors.hpp"

namespace sprune {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_string(shape));
  }
  node_ = std::make_shared<detail::TensorNode>();
  node_->shape = std::move(shape);
  node_->data = std::make_shared<const std::vector<double>>(std::move(data));
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(shape_numel(shape), value);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->data->size() : 0; }

std::span<const double> Tensor::data() const {
  if (!node_) return {};
  return {node_->data->data(), node_->data->size()};
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw ShapeError("at(row, col) needs a 2-D tensor, got " + shape_string(shape()));
  return data()[row * node_->shape[1] + col];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a single-element tensor, got " + shape_string(shape()));
  return data()[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!node_) return {};
  return node_->grad;
}

void Tensor::zero_grad() const {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach(bool requires_grad) const {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = shape();
  node->data = node_->data;
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

bool Tensor::shares_storage(const Tensor& other) const {
  return node_ && other.node_ && node_->data == other.node_->data;
}

bool Tensor::bit_equal(const Tensor& other) const {
  if (!defined() || !other.defined()) return defined() == other.defined();
  if (shape() != other.shape()) return false;
  auto a = data();
  auto b = other.data();
  return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void accumulate_grad(const Tensor& t, std::span<const double> grad) {
  if (!t.requires_grad()) return;
  auto& node = t.node();
  if (grad.size() != node.data->size()) {
    throw ShapeError("gradient length " + std::to_string(grad.size()) + " does not match " +
                     shape_string(node.shape));
  }
  if (node.grad.empty()) {
    node.grad.assign(grad.begin(), grad.end());
    return;
  }
  for (std::size_t i = 0; i < grad.size(); ++i) node.grad[i] += grad[i];
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::~Tape() { clear(); }

void Tape::record(const Tensor& output, BackwardFn backward) {
  auto& node = output.node();
  node.producer = this;
  node.entry = entries_.size();
  entries_.push_back({output.node_, std::move(backward)});
}

void Tape::clear() {
  for (auto& e : entries_) {
    if (e.output) e.output->producer = nullptr;
  }
  entries_.clear();
}

Tape* Tape::active() { return g_active_tape; }

Tape::Recording::Recording(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

Tape::Recording::~Recording() { g_active_tape = previous_; }

void backward(Tape& tape, const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward needs a scalar loss, got " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("undefined tensor")));
  }
  const auto& loss_node = loss.node();
  if (loss_node.producer != &tape) {
    throw ContractError("backward: the loss was not produced on this tape");
  }
  for (auto& e : tape.entries_) e.output->grad.clear();
  const_cast<detail::TensorNode&>(loss_node).grad.assign(1, 1.0);

  for (std::size_t i = loss_node.entry + 1; i-- > 0;) {
    auto& e = tape.entries_[i];
    if (e.output->grad.empty()) continue;
    e.backward(e.output->grad);
  }
}

}  // namespace sprune

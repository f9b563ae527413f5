#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

namespace tdann {

/// Dense row-major tensor of 64-bit floats with a same-shape gradient
/// buffer. A Tensor is a shared handle: copies alias the same storage, so
/// the tensors a Tape recorded into stay live and writable during backward.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;
  bool is_scalar() const { return size() == 1; }
  bool requires_grad() const;

  std::vector<double>& value();
  const std::vector<double>& value() const;
  std::vector<double>& grad();
  const std::vector<double>& grad() const;

  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  void zero_grad();
  Tensor clone() const;  // deep copy of values; fresh zero grad

  /// Stable identity of the underlying storage.
  const void* id() const { return node_.get(); }

 private:
  struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  Node& n();
  const Node& n() const;

  std::shared_ptr<Node> node_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Ordered record of executed operations. backward() replays the recorded
/// steps in exact reverse execution order, accumulating gradients
/// additively. A second backward without reset() is rejected.
class Tape {
 public:
  void record(const Tensor& output, std::function<void()> backward_step);
  void backward(const Tensor& root);
  void reset();

  std::size_t num_ops() const { return steps_.size(); }
  bool backward_ran() const { return ran_; }

 private:
  std::vector<std::function<void()>> steps_;
  std::unordered_set<const void*> produced_;
  bool ran_ = false;
};

}  // namespace tdann

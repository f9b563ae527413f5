#include "tdann/tensor.hpp"

#include <numeric>
#include <sstream>

#include "tdann/errors.hpp"

namespace tdann {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  return p;
}
}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  std::size_t n = shape_product(node->shape);
  node->value.assign(n, 0.0);
  node->grad.assign(n, 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                    bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  if (values.size() != t.size()) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(t.shape()));
  }
  t.value() = std::move(values);
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  std::size_t n = values.size();
  return from({1, n}, std::move(values), requires_grad);
}

Tensor::Node& Tensor::n() {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

const Tensor::Node& Tensor::n() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

const std::vector<std::size_t>& Tensor::shape() const { return n().shape; }
std::size_t Tensor::size() const { return n().value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = n().shape;
  if (s.size() != 2) throw DimensionError("expected a 2-d tensor, got " + shape_string(s));
  return s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = n().shape;
  if (s.size() != 2) throw DimensionError("expected a 2-d tensor, got " + shape_string(s));
  return s[1];
}

bool Tensor::requires_grad() const { return n().requires_grad; }

std::vector<double>& Tensor::value() { return n().value; }
const std::vector<double>& Tensor::value() const { return n().value; }
std::vector<double>& Tensor::grad() { return n().grad; }
const std::vector<double>& Tensor::grad() const { return n().grad; }

double& Tensor::at(std::size_t r, std::size_t c) { return n().value[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return n().value[r * cols() + c]; }

double Tensor::item() const {
  if (!is_scalar()) {
    throw ContractError("item() needs a scalar tensor, got shape " + shape_string(shape()));
  }
  return n().value[0];
}

void Tensor::zero_grad() {
  auto& g = n().grad;
  std::fill(g.begin(), g.end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t = zeros(shape(), requires_grad());
  t.value() = value();
  return t;
}

void Tape::record(const Tensor& output, std::function<void()> backward_step) {
  produced_.insert(output.id());
  steps_.push_back(std::move(backward_step));
}

void Tape::backward(const Tensor& root) {
  if (ran_) throw ContractError("backward already ran on this tape; reset() first");
  if (!root.is_scalar()) {
    throw ContractError("backward root must be a scalar, got shape " + shape_string(root.shape()));
  }
  if (produced_.find(root.id()) == produced_.end()) {
    throw ContractError("backward root was not produced on this tape");
  }
  Tensor seed = root;
  seed.grad()[0] += 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  ran_ = true;
}

void Tape::reset() {
  steps_.clear();
  produced_.clear();
  ran_ = false;
}

}  // namespace tdann

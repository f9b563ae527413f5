#pragma once

#include "tdann/tensor.hpp"

namespace tdann {

/// Matrix product of a [m x k] and b [k x n].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

/// Elementwise sum. Shapes must match, except that b may be a [1 x n] bias
/// row added to every row of a [m x n].
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);

/// Elementwise product of same-shape tensors.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor relu(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);

/// Row-wise softmax of [batch x k] logits, k >= 2, computed with
/// max-subtraction. Rejects non-finite logits.
Tensor softmax(Tape& tape, const Tensor& logits);

/// Sum of all elements, as a scalar.
Tensor sum(Tape& tape, const Tensor& a);

/// Multiplication by a constant.
Tensor scale(Tape& tape, const Tensor& a, double c);

}  // namespace tdann

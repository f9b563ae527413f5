#include "tdann/ops.hpp"

#include <algorithm>
#include <cmath>

#include "tdann/errors.hpp"

namespace tdann {

namespace {

void require_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2) {
    throw DimensionError(std::string(op) + ": expected a 2-d tensor, got " + shape_string(t.shape()));
  }
}

bool any_requires_grad(const Tensor& a, const Tensor& b) {
  return a.requires_grad() || b.requires_grad();
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n}, any_requires_grad(a, b));
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
    }
  }
  if (out.requires_grad()) {
    tape.record(out, [a, b, out, m, k, n]() {
      const auto& g = out.grad();
      if (a.requires_grad()) {
        Tensor ta = a;
        auto& ga = ta.grad();
        const auto& bv2 = b.value();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv2[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        Tensor tb = b;
        auto& gb = tb.grad();
        const auto& av2 = a.value();
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += av2[i * k + p] * g[i * n + j];
            gb[p * n + j] += acc;
          }
      }
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const bool bias_row = a.shape().size() == 2 && b.shape().size() == 2 && b.rows() == 1 &&
                        a.cols() == b.cols() && a.rows() != 1;
  if (!bias_row && a.shape() != b.shape()) {
    throw DimensionError("add: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape(), any_requires_grad(a, b));
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  if (bias_row) {
    const std::size_t m = a.rows(), n = a.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] = av[i * n + j] + bv[j];
  } else {
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
  }
  if (out.requires_grad()) {
    tape.record(out, [a, b, out, bias_row]() {
      const auto& g = out.grad();
      if (a.requires_grad()) {
        Tensor ta = a;
        auto& ga = ta.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        Tensor tb = b;
        auto& gb = tb.grad();
        if (bias_row) {
          const std::size_t m = a.rows(), n = a.cols();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      }
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mul: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape(), any_requires_grad(a, b));
  const auto& av = a.value();
  const auto& bv = b.value();
  auto& ov = out.value();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * bv[i];
  if (out.requires_grad()) {
    tape.record(out, [a, b, out]() {
      const auto& g = out.grad();
      if (a.requires_grad()) {
        Tensor ta = a;
        auto& ga = ta.grad();
        const auto& bv2 = b.value();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
      }
      if (b.requires_grad()) {
        Tensor tb = b;
        auto& gb = tb.grad();
        const auto& av2 = a.value();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
      }
    });
  }
  return out;
}

Tensor relu(Tape& tape, const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const auto& av = a.value();
  auto& ov = out.value();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] > 0.0 ? av[i] : 0.0;
  if (out.requires_grad()) {
    tape.record(out, [a, out]() {
      Tensor ta = a;
      auto& ga = ta.grad();
      const auto& av2 = a.value();
      const auto& g = out.grad();
      // subgradient at 0 is 0
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += av2[i] > 0.0 ? g[i] : 0.0;
    });
  }
  return out;
}

Tensor tanh(Tape& tape, const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const auto& av = a.value();
  auto& ov = out.value();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = std::tanh(av[i]);
  if (out.requires_grad()) {
    tape.record(out, [a, out]() {
      Tensor ta = a;
      auto& ga = ta.grad();
      const auto& ov2 = out.value();
      const auto& g = out.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - ov2[i] * ov2[i]);
    });
  }
  return out;
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const auto& av = a.value();
  auto& ov = out.value();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    if (x >= 0.0) {
      ov[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      ov[i] = e / (1.0 + e);
    }
  }
  if (out.requires_grad()) {
    tape.record(out, [a, out]() {
      Tensor ta = a;
      auto& ga = ta.grad();
      const auto& ov2 = out.value();
      const auto& g = out.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * ov2[i] * (1.0 - ov2[i]);
    });
  }
  return out;
}

Tensor softmax(Tape& tape, const Tensor& logits) {
  require_2d(logits, "softmax");
  const std::size_t m = logits.rows(), k = logits.cols();
  if (k < 2) {
    throw DimensionError("softmax: needs at least 2 classes, got " + shape_string(logits.shape()));
  }
  const auto& lv = logits.value();
  for (double v : lv) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
  }
  Tensor out = Tensor::zeros(logits.shape(), logits.requires_grad());
  auto& ov = out.value();
  for (std::size_t i = 0; i < m; ++i) {
    double mx = lv[i * k];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, lv[i * k + j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(lv[i * k + j] - mx);
      ov[i * k + j] = e;
      denom += e;
    }
    for (std::size_t j = 0; j < k; ++j) ov[i * k + j] /= denom;
  }
  if (out.requires_grad()) {
    tape.record(out, [logits, out, m, k]() {
      Tensor tl = logits;
      auto& gl = tl.grad();
      const auto& p = out.value();
      const auto& g = out.grad();
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += g[i * k + j] * p[i * k + j];
        for (std::size_t j = 0; j < k; ++j) {
          gl[i * k + j] += p[i * k + j] * (g[i * k + j] - dot);
        }
      }
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double acc = 0.0;
  for (double v : a.value()) acc += v;
  Tensor out = Tensor::from({1}, {acc}, a.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [a, out]() {
      Tensor ta = a;
      auto& ga = ta.grad();
      const double g = out.grad()[0];
      for (double& gi : ga) gi += g;
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const auto& av = a.value();
  auto& ov = out.value();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = c * av[i];
  if (out.requires_grad()) {
    tape.record(out, [a, out, c]() {
      Tensor ta = a;
      auto& ga = ta.grad();
      const auto& g = out.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
  }
  return out;
}

}  // namespace tdann

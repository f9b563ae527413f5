#pragma once

#include <cstdint>
#include <optional>

#include "tdann/tensor.hpp"

namespace tdann {

struct BoundInputs {
  double d_vc = 1.0;       // VC-dimension proxy, user supplied
  long long m = 1;         // unlabeled sample count per domain
  double delta = 0.05;     // confidence parameter, in (0,1)
  double dhat = 0.0;       // empirical divergence estimate, in [0,2]
  double eps_source = 0.0; // empirical source error, in [0,1]
  std::optional<double> lambda_ideal;  // min_h(eps_s + eps_t); often unknown

  void validate() const;
};

struct BoundTerms {
  double eps_source = 0.0;
  double dhat_half = 0.0;
  double complexity = 0.0;
  double lambda_ideal = 0.0;
  bool lambda_known = false;
  double bound = 0.0;
};

/// Target-error upper-bound surrogate:
///   eps_s + dhat/2 + sqrt((d_vc ln(2m) + ln(2/delta)) / (m/16)) + lambda,
/// with the lambda term omitted and flagged when unknown. Natural logs.
BoundTerms theorem2_bound(const BoundInputs& b);

/// Empirical divergence proxy d-hat = 2 (1 - 2 eps_dom), clamped to [0,2]:
/// each domain is split 50/50 train/held-out, a fresh fixed-budget domain
/// classifier is trained on the train halves, and eps_dom is its held-out
/// domain-classification error.
double proxy_distance(const Tensor& features_a, const Tensor& features_b, std::uint64_t seed);

}  // namespace tdann

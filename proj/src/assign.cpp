#include "tdann/assign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tdann/errors.hpp"

namespace tdann {

void ScoreMatrix::validate() const {
  if (num_examples == 0 || num_classes == 0)
    throw ContractError("ScoreMatrix: needs at least one example and one class");
  if (p.size() != num_examples * num_classes)
    throw ContractError("ScoreMatrix: entry count does not match N x k");
  for (std::size_t j = 0; j < num_examples; ++j) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double v = at(j, c);
      if (!(v >= 0.0 && v <= 1.0))
        throw ContractError("ScoreMatrix: entry outside [0,1] at row " + std::to_string(j));
      row_sum += v;
    }
    if (std::abs(row_sum - 1.0) > 1e-6)
      throw ContractError("ScoreMatrix: row " + std::to_string(j) + " sums to " +
                          std::to_string(row_sum));
  }
}

std::size_t ClassBudget::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::vector<std::size_t> apportion_largest_remainder(const std::vector<double>& weights,
                                                     std::size_t total) {
  const std::size_t k = weights.size();
  if (k == 0) throw ContractError("apportion: no weights");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(std::isfinite(w) && w >= 0.0)) throw ContractError("apportion: weights must be >= 0");
    wsum += w;
  }
  if (wsum <= 0.0) throw ContractError("apportion: weights must not all be zero");

  std::vector<std::size_t> counts(k, 0);
  std::vector<double> frac(k, 0.0);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double quota = static_cast<double>(total) * weights[c] / wsum;
    counts[c] = static_cast<std::size_t>(std::floor(quota));
    frac[c] = quota - std::floor(quota);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total; ++i) {
    counts[order[i]] += 1;
    ++assigned;
  }
  return counts;
}

ClassBudget estimate_class_budget(const std::vector<double>& priors, std::size_t n) {
  if (n == 0) throw ContractError("estimate_class_budget: N must be positive");
  double s = 0.0;
  for (double p : priors) s += p;
  if (std::abs(s - 1.0) > 1e-6)
    throw ContractError("estimate_class_budget: priors sum to " + std::to_string(s));
  return ClassBudget{apportion_largest_remainder(priors, n)};
}

ClassBudget estimate_class_budget(const std::vector<int>& labels, std::size_t num_classes,
                                  std::size_t n) {
  if (labels.empty()) throw ContractError("estimate_class_budget: no labels to estimate from");
  std::vector<double> priors(num_classes, 0.0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw ContractError("estimate_class_budget: label out of range");
    priors[static_cast<std::size_t>(y)] += 1.0;
  }
  for (double& p : priors) p /= static_cast<double>(labels.size());
  return estimate_class_budget(priors, n);
}

std::vector<int> assign_interim_labels(const ScoreMatrix& scores, const ClassBudget& budget,
                                       std::vector<AssignMove>* moves) {
  scores.validate();
  const std::size_t n = scores.num_examples, k = scores.num_classes;
  if (budget.num_classes() != k)
    throw ContractError("assign_interim_labels: budget has " + std::to_string(budget.num_classes()) +
                        " classes for a score matrix with " + std::to_string(k));
  if (budget.total() != n)
    throw ContractError("assign_interim_labels: budget sums to " + std::to_string(budget.total()) +
                        " for N=" + std::to_string(n));

  // Phase 1: argmax membership, ties to the lowest class index.
  std::vector<int> label(n, 0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (scores.at(j, c) > scores.at(j, best)) best = c;
    }
    label[j] = static_cast<int>(best);
    count[best] += 1;
  }

  // Phase 2: drain surplus classes into deficit classes, one example per
  // step. Total surplus drops by exactly one per move, so this terminates.
  for (;;) {
    std::size_t surplus = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > budget.counts[c]) {
        surplus = c;
        break;
      }
    }
    if (surplus == k) break;

    std::size_t weakest = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (label[j] != static_cast<int>(surplus)) continue;
      if (weakest == n || scores.at(j, surplus) < scores.at(weakest, surplus)) weakest = j;
    }

    std::size_t dest = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] >= budget.counts[c]) continue;
      if (dest == k || scores.at(weakest, c) > scores.at(weakest, dest)) dest = c;
    }

    label[weakest] = static_cast<int>(dest);
    count[surplus] -= 1;
    count[dest] += 1;
    if (moves != nullptr) moves->push_back({weakest, surplus, dest});
  }
  return label;
}

double assignment_log_likelihood(const ScoreMatrix& scores, const std::vector<int>& labels) {
  if (labels.size() != scores.num_examples)
    throw ContractError("assignment_log_likelihood: label count mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < scores.num_examples; ++j) {
    const int y = labels[j];
    if (y < 0 || static_cast<std::size_t>(y) >= scores.num_classes)
      throw ContractError("assignment_log_likelihood: label out of range");
    double p = scores.at(j, static_cast<std::size_t>(y));
    p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
    acc += std::log(p);
  }
  return acc;
}

}  // namespace tdann

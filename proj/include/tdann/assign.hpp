#pragma once

#include <cstddef>
#include <vector>

namespace tdann {

/// Per-example class membership scores P(y=c | x), row-major N x k.
struct ScoreMatrix {
  std::size_t num_examples = 0;
  std::size_t num_classes = 0;
  std::vector<double> p;

  double at(std::size_t example, std::size_t cls) const {
    return p[example * num_classes + cls];
  }
  void validate() const;  // entries in [0,1], rows sum to 1 within 1e-6
};

/// Prescribed number of target examples per class; sums to N.
struct ClassBudget {
  std::vector<std::size_t> counts;

  std::size_t total() const;
  std::size_t num_classes() const { return counts.size(); }
};

/// Largest-remainder apportionment of `total` units proportional to
/// `weights`: floor all quotas, then hand the residue to the largest
/// fractional parts, ties to the lower index.
std::vector<std::size_t> apportion_largest_remainder(const std::vector<double>& weights,
                                                     std::size_t total);

/// n_c = N * P(y=c) via largest-remainder apportionment.
ClassBudget estimate_class_budget(const std::vector<double>& priors, std::size_t n);

/// Priors estimated from labeled examples, then apportioned.
ClassBudget estimate_class_budget(const std::vector<int>& labels, std::size_t num_classes,
                                  std::size_t n);

/// One record per surplus-to-deficit move executed by the assignment loop.
struct AssignMove {
  std::size_t example;
  std::size_t from_class;
  std::size_t to_class;
};

/// Interim label assignment: every example first joins its argmax class;
/// then, while some class exceeds its budget, the lowest-index surplus
/// class evicts its weakest member (minimum P(y=c|x), ties to the lowest
/// example index) into the deficit class where that example scores highest
/// (ties to the lowest class index). Terminates with exact class counts.
std::vector<int> assign_interim_labels(const ScoreMatrix& scores, const ClassBudget& budget,
                                       std::vector<AssignMove>* moves = nullptr);

/// Sum over examples of log P(y = label | x), with the probability clamp.
double assignment_log_likelihood(const ScoreMatrix& scores, const std::vector<int>& labels);

}  // namespace tdann

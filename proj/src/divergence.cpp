#include "tdann/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tdann/errors.hpp"
#include "tdann/losses.hpp"
#include "tdann/nets.hpp"
#include "tdann/train.hpp"

namespace tdann {

void BoundInputs::validate() const {
  if (!(d_vc > 0.0)) throw ContractError("BoundInputs: d_vc must be positive");
  if (m <= 0) throw ContractError("BoundInputs: m must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("BoundInputs: delta must be in (0,1)");
  if (!(dhat >= 0.0 && dhat <= 2.0)) throw ContractError("BoundInputs: dhat must be in [0,2]");
  if (!(eps_source >= 0.0 && eps_source <= 1.0))
    throw ContractError("BoundInputs: eps_source must be in [0,1]");
  if (lambda_ideal && !(*lambda_ideal >= 0.0))
    throw ContractError("BoundInputs: lambda_ideal must be >= 0");
}

BoundTerms theorem2_bound(const BoundInputs& b) {
  b.validate();
  BoundTerms t;
  t.eps_source = b.eps_source;
  t.dhat_half = b.dhat / 2.0;
  const double m = static_cast<double>(b.m);
  t.complexity = std::sqrt((b.d_vc * std::log(2.0 * m) + std::log(2.0 / b.delta)) / (m / 16.0));
  t.lambda_known = b.lambda_ideal.has_value();
  t.lambda_ideal = b.lambda_ideal.value_or(0.0);
  t.bound = t.eps_source + t.dhat_half + t.complexity + t.lambda_ideal;
  return t;
}

namespace {

// Fixed-budget probe classifier; pinned so estimates stay comparable.
constexpr std::size_t kProbeHidden = 16;
constexpr std::size_t kProbeSteps = 600;
constexpr std::size_t kProbeBatch = 64;
constexpr double kProbeLr = 0.1;
constexpr double kProbeMomentum = 0.9;

struct Half {
  Tensor train;
  Tensor held;
};

Half split_half(const Tensor& features, std::uint64_t seed) {
  const std::size_t n = features.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t half = n / 2;
  Half out;
  out.train = gather_rows(features, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half)});
  out.held = gather_rows(features, {order.begin() + static_cast<std::ptrdiff_t>(half), order.end()});
  return out;
}

}  // namespace

double proxy_distance(const Tensor& features_a, const Tensor& features_b, std::uint64_t seed) {
  if (features_a.rows() < 4 || features_b.rows() < 4)
    throw ContractError("proxy_distance: need at least 4 examples per domain");
  if (features_a.cols() != features_b.cols())
    throw DimensionError("proxy_distance: feature widths disagree: " +
                         shape_string(features_a.shape()) + " vs " + shape_string(features_b.shape()));

  const Half a = split_half(features_a, derive_seed(seed, 1));
  const Half b = split_half(features_b, derive_seed(seed, 2));

  // The probe is the G_y path of a throwaway model: tanh(d -> 16) -> softmax.
  NetSpec probe;
  probe.input_dim = features_a.cols();
  probe.feature_dim = kProbeHidden;
  probe.label_hidden = {};
  probe.domain_hidden = {1};
  probe.num_classes = 2;
  ModelParams params = init_params(probe, derive_seed(seed, 3));

  IndexStream stream_a(a.train.rows(), derive_seed(seed, 4));
  IndexStream stream_b(b.train.rows(), derive_seed(seed, 5));
  SgdMomentum opt(params.all(), kProbeLr, kProbeMomentum);
  const std::size_t half_batch = kProbeBatch / 2;
  for (std::size_t step = 0; step < kProbeSteps; ++step) {
    Tensor xa = gather_rows(a.train, stream_a.take(half_batch));
    Tensor xb = gather_rows(b.train, stream_b.take(half_batch));
    std::vector<double> values;
    values.reserve(kProbeBatch * probe.input_dim);
    values.insert(values.end(), xa.value().begin(), xa.value().end());
    values.insert(values.end(), xb.value().begin(), xb.value().end());
    Tensor x = Tensor::from({kProbeBatch, probe.input_dim}, std::move(values));
    std::vector<int> y(kProbeBatch, 0);
    std::fill(y.begin() + static_cast<std::ptrdiff_t>(half_batch), y.end(), 1);

    Tape tape;
    Tensor probs = forward_label(tape, params, forward_features(tape, params, x));
    Tensor loss = cross_entropy(tape, probs, y);
    tape.backward(loss);
    opt.step();
    opt.zero_grad();
  }

  auto errors = [&](const Tensor& x, int domain) {
    Tensor probs = predict_probs(params, x);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      const int pred = probs.value()[i * 2 + 1] > probs.value()[i * 2] ? 1 : 0;
      if (pred != domain) ++wrong;
    }
    return wrong;
  };
  const std::size_t held_total = a.held.rows() + b.held.rows();
  const double eps_dom =
      static_cast<double>(errors(a.held, 0) + errors(b.held, 1)) / static_cast<double>(held_total);
  const double dhat = 2.0 * (1.0 - 2.0 * eps_dom);
  return std::clamp(dhat, 0.0, 2.0);
}

}  // namespace tdann

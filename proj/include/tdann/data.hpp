#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdann/tensor.hpp"

namespace tdann {

/// Labeled examples; x is [n x input_dim]. An empty set has an undefined x.
struct LabeledSet {
  Tensor x;
  std::vector<int> y;

  std::size_t size() const { return x.defined() ? x.rows() : 0; }
  std::size_t dim() const { return x.defined() ? x.cols() : 0; }
};

struct UnlabeledSet {
  Tensor x;

  std::size_t size() const { return x.defined() ? x.rows() : 0; }
  std::size_t dim() const { return x.defined() ? x.cols() : 0; }
};

enum class ShiftGenerator { two_moons, gaussian_pair };

/// Synthetic covariate-shift dataset: the target domain is a rigid
/// transform (rotation + translation) of fresh draws from the source
/// distribution, so P(y|x) is preserved under the known transform.
struct ShiftSpec {
  ShiftGenerator generator = ShiftGenerator::two_moons;
  double rotation_deg = 0.0;
  std::vector<double> translation;  // empty means zero
  double noise_sigma = 0.1;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  std::size_t n_val = 0;
  std::uint64_t seed = 0;
};

struct ShiftedData {
  LabeledSet source;
  UnlabeledSet target;
  LabeledSet target_val;
};

ShiftedData generate_shifted(const ShiftSpec& spec);

/// SplitMix64-style seed derivation, used everywhere a sub-seed is needed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

/// IDX readers (big-endian, magic 0x00000803 for images / 0x00000801 for
/// labels). Pixels are scaled to [0,1] and images flattened to rows.
Tensor load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path);
UnlabeledSet load_idx(const std::string& images_path);

/// Stand-in for a harder image shift (not a reconstruction of any published
/// benchmark): inverts pixel intensities and adds seeded Gaussian noise,
/// clamped back to [0,1].
Tensor corrupt_images(const Tensor& x, double noise_sigma, std::uint64_t seed);

/// Keep floor(n * fraction) examples without replacement, stratified by
/// class with largest-remainder per-class quotas.
LabeledSet subsample_labels(const LabeledSet& set, double fraction, std::uint64_t seed);

struct SplitSets {
  LabeledSet train;
  LabeledSet dev;
  LabeledSet test;
};

/// Disjoint cover by a seeded shuffle with largest-remainder sizing.
SplitSets split(const LabeledSet& set, std::array<double, 3> ratios, std::uint64_t seed);

/// CSV interchange: header f0,...,f{D-1}[,label]; values round-trip exactly.
void write_csv(const std::string& path, const LabeledSet& set);
void write_csv(const std::string& path, const UnlabeledSet& set);
LabeledSet read_labeled_csv(const std::string& path);
UnlabeledSet read_unlabeled_csv(const std::string& path);

/// Headerless numeric matrix reader (tolerates one header line); used for
/// score/feature/prior files on the CLI.
Tensor read_matrix_csv(const std::string& path);

}  // namespace tdann

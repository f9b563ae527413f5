#include "tdann/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "tdann/assign.hpp"
#include "tdann/errors.hpp"

namespace tdann {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Draws {
  std::vector<double> x;  // row-major n x 2
  std::vector<int> y;
};

/// Balanced base draws in their canonical frame; seeded shuffle of order.
Draws base_draws(const ShiftSpec& spec, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n0 = n / 2;

  Draws d;
  d.x.resize(n * 2);
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = i < n0 ? 0 : 1;
    double px, py;
    if (spec.generator == ShiftGenerator::two_moons) {
      const double t = angle(rng);
      if (cls == 0) {
        px = std::cos(t);
        py = std::sin(t);
      } else {
        px = 1.0 - std::cos(t);
        py = 0.5 - std::sin(t);
      }
    } else {
      px = cls == 0 ? -1.0 : 1.0;
      py = 0.0;
    }
    if (spec.noise_sigma > 0.0) {
      px += spec.noise_sigma * noise(rng);
      py += spec.noise_sigma * noise(rng);
    }
    d.x[2 * i] = px;
    d.x[2 * i + 1] = py;
    d.y[i] = cls;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Draws shuffled;
  shuffled.x.resize(n * 2);
  shuffled.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.x[2 * i] = d.x[2 * order[i]];
    shuffled.x[2 * i + 1] = d.x[2 * order[i] + 1];
    shuffled.y[i] = d.y[order[i]];
  }
  return shuffled;
}

void apply_rigid(Draws& d, double rotation_deg, const std::vector<double>& translation) {
  const double a = rotation_deg * kPi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double tx = translation.size() > 0 ? translation[0] : 0.0;
  const double ty = translation.size() > 1 ? translation[1] : 0.0;
  for (std::size_t i = 0; i * 2 < d.x.size(); ++i) {
    const double px = d.x[2 * i], py = d.x[2 * i + 1];
    d.x[2 * i] = ca * px - sa * py + tx;
    d.x[2 * i + 1] = sa * px + ca * py + ty;
  }
}

LabeledSet to_labeled(Draws&& d) {
  LabeledSet s;
  if (!d.y.empty()) {
    s.x = Tensor::from({d.y.size(), 2}, std::move(d.x));
    s.y = std::move(d.y);
  }
  return s;
}

}  // namespace

ShiftedData generate_shifted(const ShiftSpec& spec) {
  if (spec.translation.size() > 2)
    throw ContractError("generate_shifted: translation must have at most 2 components");
  ShiftedData out;
  if (spec.n_source > 0) {
    out.source = to_labeled(base_draws(spec, spec.n_source, derive_seed(spec.seed, 11)));
  }
  if (spec.n_target > 0) {
    Draws t = base_draws(spec, spec.n_target, derive_seed(spec.seed, 22));
    apply_rigid(t, spec.rotation_deg, spec.translation);
    out.target.x = Tensor::from({spec.n_target, 2}, std::move(t.x));
  }
  if (spec.n_val > 0) {
    Draws v = base_draws(spec, spec.n_val, derive_seed(spec.seed, 33));
    apply_rigid(v, spec.rotation_deg, spec.translation);
    out.target_val = to_labeled(std::move(v));
  }
  return out;
}

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, std::size_t offset) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path + ": truncated at byte " + std::to_string(offset));
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

Tensor load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::uint32_t magic = read_be_u32(in, path, 0);
  if (magic != 0x00000803u) {
    std::ostringstream os;
    os << path << ": bad image magic 0x" << std::hex << magic << " at byte 0";
    throw FormatError(os.str());
  }
  const std::uint32_t count = read_be_u32(in, path, 4);
  const std::uint32_t rows = read_be_u32(in, path, 8);
  const std::uint32_t cols = read_be_u32(in, path, 12);
  if (count == 0 || rows == 0 || cols == 0) throw FormatError(path + ": zero-sized dimensions");
  const std::size_t pixels = std::size_t(count) * rows * cols;
  std::vector<unsigned char> raw(pixels);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels))) {
    throw FormatError(path + ": truncated at byte " +
                      std::to_string(16 + static_cast<std::size_t>(in.gcount())));
  }
  std::vector<double> values(pixels);
  for (std::size_t i = 0; i < pixels; ++i) values[i] = raw[i] / 255.0;
  return Tensor::from({count, std::size_t(rows) * cols}, std::move(values));
}

std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::uint32_t magic = read_be_u32(in, path, 0);
  if (magic != 0x00000801u) {
    std::ostringstream os;
    os << path << ": bad label magic 0x" << std::hex << magic << " at byte 0";
    throw FormatError(os.str());
  }
  const std::uint32_t count = read_be_u32(in, path, 4);
  std::vector<unsigned char> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()), count)) {
    throw FormatError(path + ": truncated at byte " +
                      std::to_string(8 + static_cast<std::size_t>(in.gcount())));
  }
  return std::vector<int>(raw.begin(), raw.end());
}

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path) {
  LabeledSet s;
  s.x = load_idx_images(images_path);
  s.y = load_idx_labels(labels_path);
  if (s.y.size() != s.x.rows()) {
    throw FormatError("IDX pair mismatch: " + std::to_string(s.x.rows()) + " images vs " +
                      std::to_string(s.y.size()) + " labels");
  }
  return s;
}

UnlabeledSet load_idx(const std::string& images_path) {
  UnlabeledSet s;
  s.x = load_idx_images(images_path);
  return s;
}

Tensor corrupt_images(const Tensor& x, double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0.0) throw ContractError("corrupt_images: noise_sigma must be >= 0");
  Tensor out = Tensor::zeros(x.shape());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto& in = x.value();
  auto& ov = out.value();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = 1.0 - in[i] + (noise_sigma > 0.0 ? noise_sigma * noise(rng) : 0.0);
    ov[i] = std::min(std::max(v, 0.0), 1.0);
  }
  return out;
}

namespace {

LabeledSet take_rows(const LabeledSet& set, const std::vector<std::size_t>& idx) {
  LabeledSet out;
  if (idx.empty()) return out;
  const std::size_t d = set.dim();
  std::vector<double> values(idx.size() * d);
  out.y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& src = set.x.value();
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(idx[i] * d),
              src.begin() + static_cast<std::ptrdiff_t>((idx[i] + 1) * d),
              values.begin() + static_cast<std::ptrdiff_t>(i * d));
    out.y[i] = set.y[idx[i]];
  }
  out.x = Tensor::from({idx.size(), d}, std::move(values));
  return out;
}

}  // namespace

LabeledSet subsample_labels(const LabeledSet& set, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ContractError("subsample_labels: fraction must be in (0,1]");
  const std::size_t n = set.size();
  const std::size_t keep = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  if (keep == 0) throw ContractError("subsample_labels: requested subsample is empty");

  const int k = *std::max_element(set.y.begin(), set.y.end()) + 1;
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(set.y[i])].push_back(i);

  std::vector<double> weights;
  weights.reserve(by_class.size());
  for (const auto& members : by_class) weights.push_back(static_cast<double>(members.size()));
  const std::vector<std::size_t> quota = apportion_largest_remainder(weights, keep);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t q = std::min(quota[c], members.size());
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q));
  }
  std::sort(chosen.begin(), chosen.end());
  return take_rows(set, chosen);
}

SplitSets split(const LabeledSet& set, std::array<double, 3> ratios, std::uint64_t seed) {
  const double rsum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(rsum - 1.0) > 1e-9) throw ContractError("split: ratios must sum to 1");
  const std::size_t n = set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::vector<std::size_t> sizes =
      apportion_largest_remainder({ratios[0], ratios[1], ratios[2]}, n);
  SplitSets out;
  std::size_t pos = 0;
  LabeledSet* parts[3] = {&out.train, &out.dev, &out.test};
  for (int i = 0; i < 3; ++i) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                 order.begin() + static_cast<std::ptrdiff_t>(pos + sizes[i]));
    *parts[i] = take_rows(set, idx);
    pos += sizes[i];
  }
  return out;
}

namespace {

void write_csv_impl(const std::string& path, const Tensor& x, const std::vector<int>* labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::size_t n = x.defined() ? x.rows() : 0;
  const std::size_t d = x.defined() ? x.cols() : 0;
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << "f" << j;
  if (labels != nullptr) out << (d ? "," : "") << "label";
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", x.value()[i * d + j]);
      out << (j ? "," : "") << buf;
    }
    if (labels != nullptr) out << "," << (*labels)[i];
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

struct CsvContent {
  std::size_t cols = 0;
  bool has_label = false;
  std::vector<double> values;
  std::vector<int> labels;
};

CsvContent read_csv_impl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");

  CsvContent content;
  {
    std::stringstream header(line);
    std::string field;
    std::size_t features = 0;
    while (std::getline(header, field, ',')) {
      if (field == "label") {
        content.has_label = true;
      } else if (field.rfind("f", 0) == 0) {
        ++features;
      } else {
        throw FormatError(path + ": unexpected header field '" + field + "'");
      }
    }
    content.cols = features;
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::size_t col = 0;
    while (std::getline(row, field, ',')) {
      if (col < content.cols) {
        try {
          content.values.push_back(std::stod(field));
        } catch (const std::exception&) {
          throw FormatError(path + ": bad number '" + field + "' on line " + std::to_string(line_no));
        }
      } else if (content.has_label && col == content.cols) {
        content.labels.push_back(std::stoi(field));
      } else {
        throw FormatError(path + ": too many fields on line " + std::to_string(line_no));
      }
      ++col;
    }
    const std::size_t expect = content.cols + (content.has_label ? 1 : 0);
    if (col != expect) {
      throw FormatError(path + ": expected " + std::to_string(expect) + " fields on line " +
                        std::to_string(line_no) + ", got " + std::to_string(col));
    }
  }
  return content;
}

}  // namespace

void write_csv(const std::string& path, const LabeledSet& set) {
  write_csv_impl(path, set.x, &set.y);
}

void write_csv(const std::string& path, const UnlabeledSet& set) {
  write_csv_impl(path, set.x, nullptr);
}

LabeledSet read_labeled_csv(const std::string& path) {
  CsvContent c = read_csv_impl(path);
  if (!c.has_label) throw FormatError(path + ": no label column");
  LabeledSet s;
  if (!c.labels.empty()) {
    s.x = Tensor::from({c.labels.size(), c.cols}, std::move(c.values));
    s.y = std::move(c.labels);
  }
  return s;
}

UnlabeledSet read_unlabeled_csv(const std::string& path) {
  CsvContent c = read_csv_impl(path);
  UnlabeledSet s;
  if (!c.values.empty()) {
    const std::size_t rows = c.values.size() / c.cols;
    s.x = Tensor::from({rows, c.cols}, std::move(c.values));
  }
  return s;
}

Tensor read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<double> parsed;
    bool numeric = true;
    while (std::getline(row, field, ',')) {
      try {
        parsed.push_back(std::stod(field));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw FormatError(path + ": non-numeric row");
    }
    first = false;
    if (cols == 0) cols = parsed.size();
    if (parsed.size() != cols) throw FormatError(path + ": ragged rows");
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (rows == 0) throw FormatError(path + ": no data rows");
  return Tensor::from({rows, cols}, std::move(values));
}

}  // namespace tdann

#include "tdann/nets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "tdann/errors.hpp"

namespace tdann {

namespace {

std::vector<std::size_t> layer_widths(std::size_t in, const std::vector<std::size_t>& hidden,
                                      std::size_t out) {
  std::vector<std::size_t> w;
  w.push_back(in);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

std::vector<Tensor> init_mlp(const std::vector<std::size_t>& widths, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  std::vector<Tensor> params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Tensor w = Tensor::zeros({widths[l], widths[l + 1]}, true);
    for (double& v : w.value()) v = dist(rng);
    Tensor b = Tensor::zeros({1, widths[l + 1]}, true);
    for (double& v : b.value()) v = dist(rng);
    params.push_back(w);
    params.push_back(b);
  }
  return params;
}

/// Affine + tanh chain; the last layer is affine only when tanh_last is false.
Tensor run_mlp(Tape& tape, const std::vector<Tensor>& params, const Tensor& x, bool tanh_last) {
  Tensor h = x;
  const std::size_t layers = params.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = add(tape, matmul(tape, h, params[2 * l]), params[2 * l + 1]);
    if (l + 1 < layers || tanh_last) h = tanh(tape, h);
  }
  return h;
}

}  // namespace

void NetSpec::validate() const {
  if (input_dim == 0) throw ContractError("NetSpec: input_dim must be positive");
  if (feature_dim == 0) throw ContractError("NetSpec: feature_dim must be positive");
  if (num_classes < 2) throw ContractError("NetSpec: num_classes must be at least 2");
  for (std::size_t w : label_hidden)
    if (w == 0) throw ContractError("NetSpec: label_hidden widths must be positive");
  for (std::size_t w : domain_hidden)
    if (w == 0) throw ContractError("NetSpec: domain_hidden widths must be positive");
}

std::vector<Tensor> ModelParams::all() const {
  std::vector<Tensor> out;
  out.insert(out.end(), theta_f.begin(), theta_f.end());
  out.insert(out.end(), theta_y.begin(), theta_y.end());
  out.insert(out.end(), theta_d.begin(), theta_d.end());
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams c;
  for (const Tensor& t : theta_f) c.theta_f.push_back(t.clone());
  for (const Tensor& t : theta_y) c.theta_y.push_back(t.clone());
  for (const Tensor& t : theta_d) c.theta_d.push_back(t.clone());
  return c;
}

void ModelParams::zero_grad() {
  for (Tensor t : all()) t.zero_grad();
}

bool ModelParams::all_finite() const {
  for (const Tensor& t : all())
    for (double v : t.value())
      if (!std::isfinite(v)) return false;
  return true;
}

ModelParams init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.theta_f = init_mlp(layer_widths(spec.input_dim, {}, spec.feature_dim), rng);
  p.theta_y = init_mlp(layer_widths(spec.feature_dim, spec.label_hidden, spec.num_classes), rng);
  p.theta_d = init_mlp(layer_widths(spec.feature_dim, spec.domain_hidden, 2), rng);
  return p;
}

Tensor forward_features(Tape& tape, const ModelParams& params, const Tensor& x) {
  return run_mlp(tape, params.theta_f, x, /*tanh_last=*/true);
}

Tensor forward_label(Tape& tape, const ModelParams& params, const Tensor& f) {
  return softmax(tape, run_mlp(tape, params.theta_y, f, /*tanh_last=*/false));
}

Tensor forward_domain(Tape& tape, const ModelParams& params, const Tensor& f,
                      double lambda_adapt) {
  Tensor reversed = grl(tape, f, lambda_adapt);
  return softmax(tape, run_mlp(tape, params.theta_d, reversed, /*tanh_last=*/false));
}

Tensor grl(Tape& tape, const Tensor& f, double lambda_adapt) {
  Tensor out = Tensor::zeros(f.shape(), f.requires_grad());
  out.value() = f.value();
  if (out.requires_grad()) {
    tape.record(out, [f, out, lambda_adapt]() {
      Tensor tf = f;
      auto& gf = tf.grad();
      const auto& g = out.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gf[i] += -lambda_adapt * g[i];
    });
  }
  return out;
}

Tensor predict_probs(const ModelParams& params, const Tensor& x) {
  Tape tape;
  return forward_label(tape, params, forward_features(tape, params, x));
}

namespace {

void write_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
  out << "tensor " << name << " " << t.shape().size();
  for (std::size_t d : t.shape()) out << " " << d;
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", t.value()[i]);
    out << buf << (i + 1 == t.size() ? "" : " ");
  }
  out << "\n";
}

std::string widths_field(const std::vector<std::size_t>& w) {
  std::ostringstream os;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) os << ",";
    os << w[i];
  }
  return os.str();
}

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const NetSpec& spec, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << "TDANN1\n";
  out << "spec input_dim=" << spec.input_dim << " feature_dim=" << spec.feature_dim
      << " num_classes=" << spec.num_classes << " label_hidden=" << widths_field(spec.label_hidden)
      << " domain_hidden=" << widths_field(spec.domain_hidden) << "\n";
  auto dump = [&](const char* group, const std::vector<Tensor>& ts) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const char* kind = i % 2 == 0 ? "W" : "b";
      write_tensor(out, std::string(group) + "." + std::to_string(i / 2) + "." + kind, ts[i]);
    }
  };
  dump("theta_f", params.theta_f);
  dump("theta_y", params.theta_y);
  dump("theta_d", params.theta_d);
  out << "end\n";
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::pair<NetSpec, ModelParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != "TDANN1") throw FormatError("checkpoint " + path + ": bad magic '" + magic + "'");

  std::string line;
  std::getline(in, line);
  std::stringstream spec_line(line);
  std::string tok;
  spec_line >> tok;
  if (tok != "spec") throw FormatError("checkpoint " + path + ": missing spec line");
  NetSpec spec;
  spec.domain_hidden.clear();
  while (spec_line >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint " + path + ": bad spec field " + tok);
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "input_dim") spec.input_dim = std::stoul(val);
    else if (key == "feature_dim") spec.feature_dim = std::stoul(val);
    else if (key == "num_classes") spec.num_classes = std::stoul(val);
    else if (key == "label_hidden") spec.label_hidden = parse_widths(val);
    else if (key == "domain_hidden") spec.domain_hidden = parse_widths(val);
    else throw FormatError("checkpoint " + path + ": unknown spec field " + key);
  }

  ModelParams params;
  while (std::getline(in, line)) {
    if (line == "end") break;
    std::stringstream head(line);
    std::string kind, name;
    std::size_t ndim = 0;
    head >> kind >> name >> ndim;
    if (kind != "tensor" || !head) throw FormatError("checkpoint " + path + ": bad tensor header '" + line + "'");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) head >> d;
    Tensor t = Tensor::zeros(shape, true);
    for (double& v : t.value()) {
      if (!(in >> v)) throw FormatError("checkpoint " + path + ": truncated values for " + name);
    }
    std::getline(in, line);  // rest of the value line
    if (name.rfind("theta_f.", 0) == 0) params.theta_f.push_back(t);
    else if (name.rfind("theta_y.", 0) == 0) params.theta_y.push_back(t);
    else if (name.rfind("theta_d.", 0) == 0) params.theta_d.push_back(t);
    else throw FormatError("checkpoint " + path + ": unknown tensor name " + name);
  }
  return {spec, params};
}

}  // namespace tdann

#include "tdann/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tdann/divergence.hpp"
#include "tdann/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tdann {

namespace {

const std::set<std::string> kMethods = {"source_only", "target_only", "dann", "transdann"};

std::string format_fraction(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", f);
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ShiftGenerator generator_from_string(const std::string& s) {
  if (s == "two_moons") return ShiftGenerator::two_moons;
  if (s == "gaussian_pair") return ShiftGenerator::gaussian_pair;
  throw FormatError("unknown generator '" + s + "'");
}

std::string generator_to_string(ShiftGenerator g) {
  return g == ShiftGenerator::two_moons ? "two_moons" : "gaussian_pair";
}

}  // namespace

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ContractError("ExperimentConfig: no methods");
  for (const auto& m : methods) {
    if (kMethods.find(m) == kMethods.end())
      throw ContractError("ExperimentConfig: unknown method '" + m + "'");
  }
  if (fractions.empty()) throw ContractError("ExperimentConfig: no fractions");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ContractError("ExperimentConfig: fractions must be in (0,1]");
  }
  if (seeds.empty()) throw ContractError("ExperimentConfig: at least one seed required");
  net.validate();
  train.validate();
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("config " + path + ": " + e.what());
  }

  ExperimentConfig cfg;
  if (j.contains("data")) {
    const auto& d = j["data"];
    if (d.contains("generator")) cfg.data.generator = generator_from_string(d["generator"]);
    cfg.data.rotation_deg = d.value("rotation_deg", cfg.data.rotation_deg);
    if (d.contains("translation")) cfg.data.translation = d["translation"].get<std::vector<double>>();
    cfg.data.noise_sigma = d.value("noise_sigma", cfg.data.noise_sigma);
    cfg.data.n_source = d.value("n_source", cfg.data.n_source);
    cfg.data.n_target = d.value("n_target", cfg.data.n_target);
    cfg.data.n_val = d.value("n_val", cfg.data.n_val);
    cfg.data.seed = d.value("seed", cfg.data.seed);
  }
  if (j.contains("files")) {
    DataPaths p;
    p.source_csv = j["files"].value("source_csv", "");
    p.target_csv = j["files"].value("target_csv", "");
    p.target_val_csv = j["files"].value("target_val_csv", "");
    cfg.files = p;
  }
  if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("fractions")) cfg.fractions = j["fractions"].get<std::vector<double>>();
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("net")) {
    const auto& n = j["net"];
    cfg.net.input_dim = n.value("input_dim", std::size_t{2});
    cfg.net.feature_dim = n.value("feature_dim", std::size_t{15});
    if (n.contains("label_hidden")) cfg.net.label_hidden = n["label_hidden"].get<std::vector<std::size_t>>();
    if (n.contains("domain_hidden"))
      cfg.net.domain_hidden = n["domain_hidden"].get<std::vector<std::size_t>>();
    cfg.net.num_classes = n.value("num_classes", std::size_t{2});
  } else {
    cfg.net.input_dim = 2;
    cfg.net.feature_dim = 15;
    cfg.net.domain_hidden = {16};
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.lr = t.value("lr", cfg.train.lr);
    cfg.train.momentum = t.value("momentum", cfg.train.momentum);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.steps_per_cycle = t.value("steps_per_cycle", cfg.train.steps_per_cycle);
    cfg.train.lambda_adapt_max = t.value("lambda_adapt_max", cfg.train.lambda_adapt_max);
    cfg.train.c_label_star = t.value("c_label_star", cfg.train.c_label_star);
    cfg.train.c_unlabeled_star = t.value("c_unlabeled_star", cfg.train.c_unlabeled_star);
    cfg.train.lambda_ramp = t.value("lambda_ramp", cfg.train.lambda_ramp);
    cfg.train.early_stop = t.value("early_stop", cfg.train.early_stop);
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  if (const char* env = std::getenv("TDANN_OUT_DIR"); env != nullptr && *env != '\0') {
    cfg.out_dir = env;
  }
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["data"] = {{"generator", generator_to_string(data.generator)},
               {"rotation_deg", data.rotation_deg},
               {"translation", data.translation},
               {"noise_sigma", data.noise_sigma},
               {"n_source", data.n_source},
               {"n_target", data.n_target},
               {"n_val", data.n_val},
               {"seed", data.seed}};
  if (files) {
    j["files"] = {{"source_csv", files->source_csv},
                  {"target_csv", files->target_csv},
                  {"target_val_csv", files->target_val_csv}};
  }
  j["methods"] = methods;
  j["fractions"] = fractions;
  j["seeds"] = seeds;
  j["net"] = {{"input_dim", net.input_dim},
              {"feature_dim", net.feature_dim},
              {"label_hidden", net.label_hidden},
              {"domain_hidden", net.domain_hidden},
              {"num_classes", net.num_classes}};
  j["train"] = {{"lr", train.lr},
                {"momentum", train.momentum},
                {"batch_size", train.batch_size},
                {"steps_per_cycle", train.steps_per_cycle},
                {"lambda_adapt_max", train.lambda_adapt_max},
                {"c_label_star", train.c_label_star},
                {"c_unlabeled_star", train.c_unlabeled_star},
                {"lambda_ramp", train.lambda_ramp},
                {"early_stop", train.early_stop}};
  j["out_dir"] = out_dir;
  return j.dump(2);
}

std::string dataset_hash(const LabeledSet& source, const UnlabeledSet& target,
                         const LabeledSet& target_val) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_tensor = [&](const Tensor& t) {
    if (t.defined()) mix_bytes(t.value().data(), t.value().size() * sizeof(double));
  };
  auto mix_labels = [&](const std::vector<int>& y) {
    if (!y.empty()) mix_bytes(y.data(), y.size() * sizeof(int));
  };
  mix_tensor(source.x);
  mix_labels(source.y);
  mix_tensor(target.x);
  mix_tensor(target_val.x);
  mix_labels(target_val.y);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct PreparedData {
  DomainData train_data;      // source train/dev, target unlabeled, target val half
  LabeledSet target_test;     // disjoint labeled target test half
  std::string hash;
};

/// Assembles one run's data: generate (or load), split the labeled target
/// pool into a validation half and a test half, subsample the source at
/// the given fraction, and carve a source dev split.
PreparedData prepare_data(const ExperimentConfig& cfg, double fraction, std::uint64_t seed) {
  LabeledSet source;
  UnlabeledSet target;
  LabeledSet pool;
  const std::uint64_t data_seed = derive_seed(cfg.data.seed, seed);
  if (cfg.files) {
    source = read_labeled_csv(cfg.files->source_csv);
    target = read_unlabeled_csv(cfg.files->target_csv);
    if (!cfg.files->target_val_csv.empty()) pool = read_labeled_csv(cfg.files->target_val_csv);
  } else {
    ShiftSpec spec = cfg.data;
    spec.seed = data_seed;
    ShiftedData gen = generate_shifted(spec);
    source = std::move(gen.source);
    target = std::move(gen.target);
    pool = std::move(gen.target_val);
  }

  PreparedData out;
  out.hash = dataset_hash(source, target, pool);

  if (pool.size() > 0) {
    SplitSets halves = split(pool, {0.5, 0.0, 0.5}, derive_seed(data_seed, 44));
    out.train_data.target_val = std::move(halves.train);
    out.target_test = std::move(halves.test);
  }

  LabeledSet sub = fraction < 1.0 ? subsample_labels(source, fraction, derive_seed(data_seed, 55))
                                  : std::move(source);
  SplitSets src_split = split(sub, {0.9, 0.1, 0.0}, derive_seed(data_seed, 66));
  out.train_data.source_train = std::move(src_split.train);
  out.train_data.source_dev = std::move(src_split.dev);
  out.train_data.target_train = std::move(target);
  return out;
}

Tensor features_of(const ModelParams& params, const Tensor& x) {
  Tape tape;
  return forward_features(tape, params, x);
}

RunResult execute_run(const ExperimentConfig& cfg, const std::string& method, double fraction,
                      std::uint64_t seed, const PreparedData& data) {
  RunResult r;
  r.method = method;
  r.fraction = fraction;
  r.seed = seed;
  r.data_hash = data.hash;

  TrainConfig tc = cfg.train;
  tc.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  ModelParams model;
  CycleTrace trace;
  if (method == "source_only") {
    tc.lambda_adapt_max = 0.0;
    std::tie(model, trace) = train_dann(data.train_data, cfg.net, tc);
  } else if (method == "target_only") {
    tc.lambda_adapt_max = 0.0;
    DomainData d;
    d.source_train = data.train_data.target_val;  // the target labeled pool's training half
    d.target_train = data.train_data.target_train;
    std::tie(model, trace) = train_dann(d, cfg.net, tc);
  } else if (method == "dann") {
    std::tie(model, trace) = train_dann(data.train_data, cfg.net, tc);
  } else if (method == "transdann") {
    std::tie(model, trace) = train_transdann(data.train_data, cfg.net, tc);
  } else {
    throw ContractError("unknown method " + method);
  }

  if (data.target_test.size() == 0) throw ContractError("no labeled target test set");
  r.acc_target_test = evaluate(model, data.target_test);
  if (data.train_data.source_dev.size() > 0 && method != "target_only") {
    r.acc_source_dev = evaluate(model, data.train_data.source_dev);
  }
  r.dhat = proxy_distance(features_of(model, data.train_data.source_train.x),
                          features_of(model, data.train_data.target_train.x),
                          derive_seed(seed, 77));
  r.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string key =
      method + "_f" + format_fraction(fraction) + "_s" + std::to_string(seed) + "_" + data.hash;
  r.trace_path = (fs::path(cfg.out_dir) / "traces" / (key + ".json")).string();
  trace.save_json(r.trace_path);
  return r;
}

json run_to_json(const RunResult& r) {
  return json{{"method", r.method},
              {"fraction", r.fraction},
              {"seed", r.seed},
              {"acc_target_test", r.acc_target_test},
              {"acc_source_dev", r.acc_source_dev},
              {"dhat", r.dhat},
              {"wall_time_sec", r.wall_time_sec},
              {"status", r.status},
              {"trace_path", r.trace_path},
              {"data_hash", r.data_hash}};
}

RunResult run_from_json(const json& j) {
  RunResult r;
  r.method = j.at("method");
  r.fraction = j.at("fraction");
  r.seed = j.at("seed");
  r.acc_target_test = j.at("acc_target_test");
  r.acc_source_dev = j.at("acc_source_dev");
  r.dhat = j.at("dhat");
  r.wall_time_sec = j.at("wall_time_sec");
  r.status = j.at("status");
  r.trace_path = j.at("trace_path");
  r.data_hash = j.at("data_hash");
  return r;
}

void append_results_csv(const std::string& path, const RunResult& r) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path + " for append");
  if (fresh) out << "method,fraction,seed,acc_target_test,acc_source_dev,dhat,wall_time_sec\n";
  out << r.method << "," << format_fraction(r.fraction) << "," << r.seed << ","
      << format_double(r.acc_target_test) << "," << format_double(r.acc_source_dev) << ","
      << format_double(r.dhat) << "," << format_double(r.wall_time_sec) << "\n";
}

}  // namespace

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(fs::path(cfg.out_dir) / "runs", ec);
  fs::create_directories(fs::path(cfg.out_dir) / "traces", ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir + ": " + ec.message());

  const std::string results_csv = (fs::path(cfg.out_dir) / "results.csv").string();
  std::vector<RunResult> results;
  for (double fraction : cfg.fractions) {
    for (std::uint64_t seed : cfg.seeds) {
      PreparedData data = prepare_data(cfg, fraction, seed);
      for (const std::string& method : cfg.methods) {
        const std::string key = method + "_f" + format_fraction(fraction) + "_s" +
                                std::to_string(seed) + "_" + data.hash;
        const fs::path run_path = fs::path(cfg.out_dir) / "runs" / (key + ".json");
        if (fs::exists(run_path)) {
          std::ifstream in(run_path);
          json j;
          in >> j;
          results.push_back(run_from_json(j));
          continue;
        }
        RunResult r;
        try {
          r = execute_run(cfg, method, fraction, seed, data);
        } catch (const std::exception& e) {
          r.method = method;
          r.fraction = fraction;
          r.seed = seed;
          r.data_hash = data.hash;
          r.status = std::string("failed: ") + e.what();
        }
        {
          std::ofstream out(run_path);
          if (!out) throw IoError("cannot write " + run_path.string());
          out << run_to_json(r).dump(2) << "\n";
        }
        if (r.status == "ok") append_results_csv(results_csv, r);
        results.push_back(std::move(r));
      }
    }
  }
  return results;
}

std::vector<RunResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty results file");
  if (line != "method,fraction,seed,acc_target_test,acc_source_dev,dhat,wall_time_sec")
    throw FormatError(path + ": unexpected header '" + line + "'");
  std::vector<RunResult> results;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw FormatError(path + ": bad row '" + line + "'");
    RunResult r;
    r.method = fields[0];
    r.fraction = std::stod(fields[1]);
    r.seed = std::stoull(fields[2]);
    r.acc_target_test = std::stod(fields[3]);
    r.acc_source_dev = std::stod(fields[4]);
    r.dhat = std::stod(fields[5]);
    r.wall_time_sec = std::stod(fields[6]);
    results.push_back(std::move(r));
  }
  return results;
}

namespace {

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

Stats stats_of(const std::vector<double>& values) {
  Stats s;
  s.n = values.size();
  if (s.n == 0) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(acc / static_cast<double>(s.n - 1));
  }
  return s;
}

double metric_value(const RunResult& r, const std::string& metric) {
  if (metric == "acc_target_test") return r.acc_target_test;
  if (metric == "acc_source_dev") return r.acc_source_dev;
  if (metric == "dhat") return r.dhat;
  if (metric == "wall_time_sec") return r.wall_time_sec;
  throw ContractError("unknown metric '" + metric + "'");
}

using SeriesMap = std::map<double, std::map<std::string, std::vector<double>>>;

SeriesMap collect(const std::vector<RunResult>& results, const std::string& metric) {
  SeriesMap series;
  for (const RunResult& r : results) {
    if (r.status != "ok") continue;
    series[r.fraction][r.method].push_back(metric_value(r, metric));
  }
  return series;
}

std::vector<std::string> method_order(const SeriesMap& series) {
  std::set<std::string> names;
  for (const auto& [fraction, by_method] : series) {
    for (const auto& [m, v] : by_method) names.insert(m);
  }
  return {names.begin(), names.end()};
}

}  // namespace

Comparison compare(const std::vector<RunResult>& results) {
  SeriesMap series = collect(results, "acc_target_test");
  const std::vector<std::string> methods = method_order(series);

  Comparison out;
  std::ostringstream table, csv;
  table << "fraction  method        mean      sd      n\n";
  csv << "fraction,method,mean,sd,n\n";
  for (const auto& [fraction, by_method] : series) {
    for (const std::string& m : methods) {
      auto it = by_method.find(m);
      if (it == by_method.end()) continue;
      const Stats s = stats_of(it->second);
      char line[128];
      std::snprintf(line, sizeof(line), "%-8s  %-12s  %.4f  %.4f  %zu\n",
                    format_fraction(fraction).c_str(), m.c_str(), s.mean, s.sd, s.n);
      table << line;
      csv << format_fraction(fraction) << "," << m << "," << format_double(s.mean) << ","
          << format_double(s.sd) << "," << s.n << "\n";
    }
  }

  // Matched-pair improvement of transdann over dann on seed-means.
  std::map<double, std::map<std::uint64_t, double>> dann_by, td_by;
  for (const RunResult& r : results) {
    if (r.status != "ok") continue;
    if (r.method == "dann") dann_by[r.fraction][r.seed] = r.acc_target_test;
    if (r.method == "transdann") td_by[r.fraction][r.seed] = r.acc_target_test;
  }
  double best = 0.0;
  bool any_pairs = false;
  double best_fraction = 0.0;
  std::set<double> fractions;
  for (const auto& [f, m] : dann_by) fractions.insert(f);
  for (const auto& [f, m] : td_by) fractions.insert(f);
  for (double f : fractions) {
    std::vector<double> d_vals, t_vals;
    const auto& dm = dann_by[f];
    const auto& tm = td_by[f];
    std::set<std::uint64_t> seeds;
    for (const auto& [s, v] : dm) seeds.insert(s);
    for (const auto& [s, v] : tm) seeds.insert(s);
    for (std::uint64_t s : seeds) {
      const bool in_d = dm.count(s) > 0, in_t = tm.count(s) > 0;
      if (in_d && in_t) {
        d_vals.push_back(dm.at(s));
        t_vals.push_back(tm.at(s));
      } else {
        out.missing_pairs.push_back("fraction=" + format_fraction(f) + " seed=" + std::to_string(s) +
                                    " missing " + (in_d ? "transdann" : "dann"));
      }
    }
    if (d_vals.empty()) continue;
    const double d_mean = stats_of(d_vals).mean;
    const double t_mean = stats_of(t_vals).mean;
    if (d_mean > 0.0) {
      const double imp = 100.0 * (t_mean - d_mean) / d_mean;
      if (!any_pairs || imp > best) {
        best = imp;
        best_fraction = f;
      }
      any_pairs = true;
    }
  }
  if (any_pairs) {
    out.max_improvement_pct = best;
    char line[128];
    std::snprintf(line, sizeof(line),
                  "max improvement of transdann over dann: %+.2f%% (at fraction %s)\n", best,
                  format_fraction(best_fraction).c_str());
    table << line;
  }
  if (!out.missing_pairs.empty()) {
    table << "unmatched (excluded) pairs:\n";
    for (const auto& p : out.missing_pairs) table << "  " << p << "\n";
  }
  out.table = table.str();
  out.csv = csv.str();
  return out;
}

std::string plot_series_csv(const std::vector<RunResult>& results, const std::string& metric) {
  if (results.empty()) throw ContractError("plot: no results");
  SeriesMap series = collect(results, metric);
  const std::vector<std::string> methods = method_order(series);
  std::ostringstream out;
  out << "fraction";
  for (const auto& m : methods) out << "," << m << "_mean," << m << "_sd";
  out << "\n";
  for (const auto& [fraction, by_method] : series) {
    out << format_fraction(fraction);
    for (const auto& m : methods) {
      auto it = by_method.find(m);
      const Stats s = it == by_method.end() ? Stats{} : stats_of(it->second);
      out << "," << format_double(s.mean) << "," << format_double(s.sd);
    }
    out << "\n";
  }
  return out.str();
}

std::string plot_series_svg(const std::vector<RunResult>& results, const std::string& metric) {
  if (results.empty()) throw ContractError("plot: no results");
  SeriesMap series = collect(results, metric);
  const std::vector<std::string> methods = method_order(series);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [fraction, by_method] : series) {
    xmin = std::min(xmin, fraction);
    xmax = std::max(xmax, fraction);
    for (const auto& [m, values] : by_method) {
      const Stats s = stats_of(values);
      ymin = std::min(ymin, s.mean - s.sd);
      ymax = std::max(ymax, s.mean + s.sd);
    }
  }
  if (xmax <= xmin) {
    xmin -= 0.05;
    xmax += 0.05;
  }
  if (ymax <= ymin) {
    ymin -= 0.05;
    ymax += 0.05;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  const double w = 640, h = 420, ml = 70, mr = 20, mt = 30, mb = 50;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (w / 2) << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">fraction of source labels</text>\n";
  svg << "<text x=\"16\" y=\"" << (h / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << (h / 2) << ")\">"
      << metric << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    char label[32];
    std::snprintf(label, sizeof(label), "%.3f", yv);
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << sy(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    std::snprintf(label, sizeof(label), "%g", xv);
    svg << "<text x=\"" << sx(xv) << "\" y=\"" << h - mb + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << label << "</text>\n";
  }

  std::size_t mi = 0;
  for (const auto& m : methods) {
    const char* color = colors[mi % 6];
    std::ostringstream pts;
    for (const auto& [fraction, by_method] : series) {
      auto it = by_method.find(m);
      if (it == by_method.end()) continue;
      const Stats s = stats_of(it->second);
      pts << sx(fraction) << "," << sy(s.mean) << " ";
      svg << "<line x1=\"" << sx(fraction) << "\" y1=\"" << sy(s.mean - s.sd) << "\" x2=\""
          << sx(fraction) << "\" y2=\"" << sy(s.mean + s.sd) << "\" stroke=\"" << color
          << "\" stroke-opacity=\"0.5\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
        << pts.str() << "\"/>\n";
    svg << "<text x=\"" << w - mr - 140 << "\" y=\"" << mt + 16.0 * static_cast<double>(mi)
        << "\" font-size=\"12\" fill=\"" << color << "\">" << m << "</text>\n";
    ++mi;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tdann

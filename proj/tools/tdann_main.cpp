#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdann/assign.hpp"
#include "tdann/data.hpp"
#include "tdann/divergence.hpp"
#include "tdann/errors.hpp"
#include "tdann/harness.hpp"
#include "tdann/nets.hpp"
#include "tdann/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

tdann::ShiftSpec shift_spec_from_json(const json& d) {
  tdann::ShiftSpec spec;
  if (d.contains("generator")) {
    const std::string g = d["generator"];
    if (g == "two_moons") spec.generator = tdann::ShiftGenerator::two_moons;
    else if (g == "gaussian_pair") spec.generator = tdann::ShiftGenerator::gaussian_pair;
    else throw tdann::FormatError("unknown generator '" + g + "'");
  }
  spec.rotation_deg = d.value("rotation_deg", 0.0);
  if (d.contains("translation")) spec.translation = d["translation"].get<std::vector<double>>();
  spec.noise_sigma = d.value("noise_sigma", 0.1);
  spec.n_source = d.value("n_source", std::size_t{200});
  spec.n_target = d.value("n_target", std::size_t{200});
  spec.n_val = d.value("n_val", std::size_t{200});
  spec.seed = d.value("seed", std::uint64_t{0});
  return spec;
}

int cmd_generate_data(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw tdann::IoError("cannot open spec " + spec_path);
  json j;
  in >> j;
  tdann::ShiftSpec spec = shift_spec_from_json(j);
  tdann::ShiftedData data = tdann::generate_shifted(spec);

  fs::create_directories(out_dir);
  tdann::write_csv((fs::path(out_dir) / "source.csv").string(), data.source);
  tdann::write_csv((fs::path(out_dir) / "target.csv").string(), data.target);
  tdann::write_csv((fs::path(out_dir) / "target_val.csv").string(), data.target_val);
  std::ofstream meta((fs::path(out_dir) / "meta.json").string());
  meta << j.dump(2) << "\n";
  std::cout << "wrote source.csv (" << data.source.size() << "), target.csv (" << data.target.size()
            << "), target_val.csv (" << data.target_val.size() << ") to " << out_dir << "\n";
  return 0;
}

struct TrainCli {
  std::string method = "dann";
  std::string source_csv;
  std::string target_csv;
  std::string target_val_csv;
  std::string config_path;
  std::string out_checkpoint = "model.ckpt";
  std::string out_trace;
};

void load_net_and_train(const std::string& config_path, tdann::NetSpec& net,
                        tdann::TrainConfig& train) {
  if (config_path.empty()) return;
  std::ifstream in(config_path);
  if (!in) throw tdann::IoError("cannot open config " + config_path);
  json j;
  in >> j;
  if (j.contains("net")) {
    const auto& n = j["net"];
    net.input_dim = n.value("input_dim", net.input_dim);
    net.feature_dim = n.value("feature_dim", net.feature_dim);
    if (n.contains("label_hidden")) net.label_hidden = n["label_hidden"].get<std::vector<std::size_t>>();
    if (n.contains("domain_hidden"))
      net.domain_hidden = n["domain_hidden"].get<std::vector<std::size_t>>();
    net.num_classes = n.value("num_classes", net.num_classes);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    train.lr = t.value("lr", train.lr);
    train.momentum = t.value("momentum", train.momentum);
    train.batch_size = t.value("batch_size", train.batch_size);
    train.steps_per_cycle = t.value("steps_per_cycle", train.steps_per_cycle);
    train.lambda_adapt_max = t.value("lambda_adapt_max", train.lambda_adapt_max);
    train.c_label_star = t.value("c_label_star", train.c_label_star);
    train.c_unlabeled_star = t.value("c_unlabeled_star", train.c_unlabeled_star);
    train.seed = t.value("seed", train.seed);
    train.lambda_ramp = t.value("lambda_ramp", train.lambda_ramp);
    train.early_stop = t.value("early_stop", train.early_stop);
  }
}

int cmd_train(const TrainCli& cli) {
  tdann::DomainData data;
  data.source_train = tdann::read_labeled_csv(cli.source_csv);
  data.target_train = tdann::read_unlabeled_csv(cli.target_csv);
  if (!cli.target_val_csv.empty()) data.target_val = tdann::read_labeled_csv(cli.target_val_csv);

  tdann::NetSpec net;
  net.input_dim = data.source_train.dim();
  net.feature_dim = 15;
  net.domain_hidden = {16};
  tdann::TrainConfig train;
  load_net_and_train(cli.config_path, net, train);

  tdann::ModelParams model;
  tdann::CycleTrace trace;
  if (cli.method == "dann") {
    std::tie(model, trace) = tdann::train_dann(data, net, train);
  } else if (cli.method == "transdann") {
    std::tie(model, trace) = tdann::train_transdann(data, net, train);
  } else if (cli.method == "source_only") {
    train.lambda_adapt_max = 0.0;
    std::tie(model, trace) = tdann::train_dann(data, net, train);
  } else {
    std::cerr << "unknown method '" << cli.method << "'\n";
    return 2;
  }
  tdann::save_checkpoint(cli.out_checkpoint, net, model);
  if (!cli.out_trace.empty()) trace.save_json(cli.out_trace);
  std::cout << "checkpoint written to " << cli.out_checkpoint;
  if (!cli.out_trace.empty()) std::cout << ", trace to " << cli.out_trace;
  std::cout << "\n";
  if (data.target_val.size() > 0) {
    std::cout << "target validation accuracy: " << tdann::evaluate(model, data.target_val) << "\n";
  }
  return 0;
}

int cmd_assign_labels(const std::string& scores_path, const std::string& priors_path,
                      const std::string& out_path) {
  tdann::Tensor scores_m = tdann::read_matrix_csv(scores_path);
  tdann::Tensor priors_m = tdann::read_matrix_csv(priors_path);

  tdann::ScoreMatrix scores;
  scores.num_examples = scores_m.rows();
  scores.num_classes = scores_m.cols();
  scores.p = scores_m.value();

  std::vector<double> priors = priors_m.value();
  if (priors.size() != scores.num_classes)
    throw tdann::ContractError("priors count does not match score columns");
  tdann::ClassBudget budget = tdann::estimate_class_budget(priors, scores.num_examples);
  std::vector<int> labels = tdann::assign_interim_labels(scores, budget);

  std::ofstream out(out_path);
  if (!out) throw tdann::IoError("cannot open " + out_path + " for writing");
  for (int y : labels) out << y << "\n";
  std::cout << "wrote " << labels.size() << " labels to " << out_path << "\n";
  return 0;
}

int cmd_divergence(const std::string& a_path, const std::string& b_path, std::uint64_t seed,
                   bool with_bound, double d_vc, long long m, double delta, double eps_source,
                   std::optional<double> lambda_ideal) {
  tdann::Tensor a = tdann::read_matrix_csv(a_path);
  tdann::Tensor b = tdann::read_matrix_csv(b_path);
  const double dhat = tdann::proxy_distance(a, b, seed);
  json j;
  j["dhat"] = dhat;
  if (with_bound) {
    tdann::BoundInputs inputs;
    inputs.d_vc = d_vc;
    inputs.m = m;
    inputs.delta = delta;
    inputs.dhat = dhat;
    inputs.eps_source = eps_source;
    inputs.lambda_ideal = lambda_ideal;
    tdann::BoundTerms t = tdann::theorem2_bound(inputs);
    j["bound"] = {{"eps_source", t.eps_source},
                  {"dhat_half", t.dhat_half},
                  {"complexity", t.complexity},
                  {"lambda_ideal", t.lambda_known ? json(t.lambda_ideal) : json(nullptr)},
                  {"lambda_known", t.lambda_known},
                  {"bound", t.bound}};
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  tdann::ExperimentConfig cfg = tdann::ExperimentConfig::from_json_file(config_path);
  std::vector<tdann::RunResult> results = tdann::run_experiment(cfg);
  std::size_t ok = 0, failed = 0;
  for (const auto& r : results) (r.status == "ok" ? ok : failed) += 1;
  std::cout << results.size() << " runs (" << ok << " ok, " << failed << " failed); results under "
            << cfg.out_dir << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_compare(const std::string& results_path, const std::string& out_csv) {
  tdann::Comparison c = tdann::compare(tdann::read_results_csv(results_path));
  std::cout << c.table;
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw tdann::IoError("cannot open " + out_csv + " for writing");
    out << c.csv;
    std::cout << "comparison CSV written to " << out_csv << "\n";
  }
  return 0;
}

int cmd_plot(const std::string& results_path, const std::string& metric, const std::string& out_csv,
             const std::string& out_svg) {
  std::vector<tdann::RunResult> results = tdann::read_results_csv(results_path);
  const std::string csv = tdann::plot_series_csv(results, metric);
  {
    std::ofstream out(out_csv);
    if (!out) throw tdann::IoError("cannot open " + out_csv + " for writing");
    out << csv;
  }
  std::cout << "series CSV written to " << out_csv << "\n";
  if (!out_svg.empty()) {
    std::ofstream out(out_svg);
    if (!out) throw tdann::IoError("cannot open " + out_svg + " for writing");
    out << tdann::plot_series_svg(results, metric);
    std::cout << "SVG written to " << out_svg << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tdann: adversarial domain adaptation with transductive pseudo-labeling"};
  app.require_subcommand(1);

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "Generate a synthetic covariate-shift dataset");
  std::string gen_spec, gen_out;
  gen->add_option("--spec", gen_spec, "ShiftSpec JSON file")->required();
  gen->add_option("--out-dir", gen_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model on CSV data");
  TrainCli tcli;
  train->add_option("--method", tcli.method, "source_only | dann | transdann");
  train->add_option("--source", tcli.source_csv, "Labeled source CSV")->required();
  train->add_option("--target", tcli.target_csv, "Unlabeled target CSV")->required();
  train->add_option("--target-val", tcli.target_val_csv, "Labeled target validation CSV");
  train->add_option("--config", tcli.config_path, "JSON with net/train sections");
  train->add_option("--out", tcli.out_checkpoint, "Checkpoint output path");
  train->add_option("--trace", tcli.out_trace, "Cycle trace JSON output path");

  // assign-labels
  auto* assign = app.add_subcommand("assign-labels", "Interim label assignment for a score matrix");
  std::string as_scores, as_priors, as_out;
  assign->add_option("--scores", as_scores, "CSV of N x k class probabilities")->required();
  assign->add_option("--priors", as_priors, "CSV with k class priors")->required();
  assign->add_option("--out", as_out, "Output CSV, one label per row")->required();

  // divergence
  auto* dive = app.add_subcommand("divergence", "Proxy distance between two feature sets");
  std::string dv_a, dv_b;
  std::uint64_t dv_seed = 0;
  double dv_dvc = 10.0, dv_delta = 0.05, dv_eps = 0.0, dv_lambda = -1.0;
  long long dv_m = 0;
  dive->add_option("--features-a", dv_a, "CSV of features from domain A")->required();
  dive->add_option("--features-b", dv_b, "CSV of features from domain B")->required();
  dive->add_option("--seed", dv_seed, "Probe classifier seed");
  dive->add_option("--d-vc", dv_dvc, "VC-dimension proxy for the bound");
  dive->add_option("--m", dv_m, "Unlabeled sample count per domain (enables bound output)");
  dive->add_option("--delta", dv_delta, "Bound confidence parameter");
  dive->add_option("--eps-source", dv_eps, "Empirical source error");
  dive->add_option("--lambda-ideal", dv_lambda, "Ideal joint risk, if known (omit if unknown)");

  // run / compare / plot
  auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON config");
  std::string run_cfg;
  run->add_option("--config", run_cfg, "ExperimentConfig JSON")->required();

  auto* cmp = app.add_subcommand("compare", "Comparison table from a results CSV");
  std::string cmp_results, cmp_out;
  cmp->add_option("--results", cmp_results, "results.csv from `run`")->required();
  cmp->add_option("--out", cmp_out, "Optional comparison CSV output");

  auto* plot = app.add_subcommand("plot", "Plot-ready series CSV (and optional SVG)");
  std::string plot_results, plot_metric = "acc_target_test", plot_out = "series.csv", plot_svg;
  plot->add_option("--results", plot_results, "results.csv from `run`")->required();
  plot->add_option("--metric", plot_metric, "acc_target_test | acc_source_dev | dhat | wall_time_sec");
  plot->add_option("--out", plot_out, "Series CSV output path");
  plot->add_option("--svg", plot_svg, "Optional SVG output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate_data(gen_spec, gen_out);
    if (train->parsed()) return cmd_train(tcli);
    if (assign->parsed()) return cmd_assign_labels(as_scores, as_priors, as_out);
    if (dive->parsed()) {
      std::optional<double> lambda;
      if (dive->count("--lambda-ideal") > 0) lambda = dv_lambda;
      return cmd_divergence(dv_a, dv_b, dv_seed, dive->count("--m") > 0, dv_dvc, dv_m, dv_delta,
                            dv_eps, lambda);
    }
    if (run->parsed()) return cmd_run(run_cfg);
    if (cmp->parsed()) return cmd_compare(cmp_results, cmp_out);
    if (plot->parsed()) return cmd_plot(plot_results, plot_metric, plot_out, plot_svg);
  } catch (const tdann::ContractError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

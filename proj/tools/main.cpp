// Command-line front end: demo-data, synthesize, tune, evaluate, copula.
// All commands are deterministic under --seed; outputs land in --out.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtsynth/qtsynth.hpp"

namespace fs = std::filesystem;
using namespace qtsynth;

namespace {

std::string error_type(const Error& e) {
  if (dynamic_cast<const AntipodalInput*>(&e)) return "AntipodalInput";
  if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
  if (dynamic_cast<const NormViolation*>(&e)) return "NormViolation";
  if (dynamic_cast<const GridTooShort*>(&e)) return "GridTooShort";
  if (dynamic_cast<const GridMismatch*>(&e)) return "GridMismatch";
  if (dynamic_cast<const TangentOverflow*>(&e)) return "TangentOverflow";
  if (dynamic_cast<const InvalidConfig*>(&e)) return "InvalidConfig";
  if (dynamic_cast<const EmptyGrid*>(&e)) return "EmptyGrid";
  if (dynamic_cast<const SingularCorrelation*>(&e)) return "SingularCorrelation";
  if (dynamic_cast<const ZeroNorm*>(&e)) return "ZeroNorm";
  if (dynamic_cast<const SizeMismatch*>(&e)) return "SizeMismatch";
  if (dynamic_cast<const ShapeMismatch*>(&e)) return "ShapeMismatch";
  if (dynamic_cast<const ExactTooLarge*>(&e)) return "ExactTooLarge";
  if (dynamic_cast<const InvalidK*>(&e)) return "InvalidK";
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  return "Error";
}

bool is_usage_error(const Error& e) {
  return dynamic_cast<const InvalidConfig*>(&e) != nullptr ||
         dynamic_cast<const InvalidK*>(&e) != nullptr ||
         dynamic_cast<const EmptyGrid*>(&e) != nullptr;
}

void print_error(const Error& e) {
  nlohmann::ordered_json j;
  j["error"]["type"] = error_type(e);
  j["error"]["message"] = e.what();
  std::cerr << j.dump() << "\n";
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

bool is_qts_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  return header == kQtsCsvHeader;
}

struct CommonOptions {
  std::string input = "demo_qts.csv";
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int k_min = 1;
  int k_max = 0;  // 0: up to n-1
  std::string mode = "dirichlet";

  WeightMode weight_mode() const {
    return mode == "deterministic" ? WeightMode::kDeterministic : WeightMode::kDirichlet;
  }
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_mode = true) {
  cmd->add_option("--input", opt.input, "Input QTS CSV")->capture_default_str();
  cmd->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--k-min", opt.k_min, "Smallest k for the graph sweep")->capture_default_str();
  cmd->add_option("--k-max", opt.k_max, "Largest k for the graph sweep (0: n-1)")
      ->capture_default_str();
  if (with_mode) {
    cmd->add_option("--mode", opt.mode, "Weight mode")
        ->check(CLI::IsMember({"dirichlet", "deterministic"}))
        ->capture_default_str();
  }
}

QtsSample make_synthetic_sample(const QtsSample& original, const ScoreMatrix& scores,
                                const MfpcaModel& model, const Qts& mean,
                                const std::string& suffix) {
  QtsSample synthetic;
  synthetic.grid = original.grid;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "%s%03d", suffix.c_str(), static_cast<int>(i) + 1);
    synthetic.ids.emplace_back(id);
    const Qts q = reconstruct_qts(scores.row(i).transpose(), model, mean, original.grid);
    synthetic.series.push_back(q.values);
  }
  return synthetic;
}

int run_demo_data(int n, std::uint64_t seed, const std::string& out_dir) {
  const QtsSample sample = generate_demo_sample(n, seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir);
  const fs::path path = fs::path(out_dir) / "demo_qts.csv";
  write_qts_csv(sample, path);
  std::cout << "wrote " << path.string() << " (" << n << " subjects, "
            << sample.n_points() << " grid points)\n";
  return 0;
}

int run_synthesize(const CommonOptions& opt, int gamma, int tau, double alpha0) {
  const QtsSample sample = read_qts_csv(opt.input);
  const Eigen::Index n = static_cast<Eigen::Index>(sample.n_subjects());
  FittedPipeline fitted = fit_pipeline(sample);

  SynthesisConfig cfg;
  cfg.gamma = gamma < 0 ? default_gamma(n) : gamma;
  cfg.tau = tau < 0 ? default_tau(fitted.model) : tau;
  cfg.alpha0 = alpha0;
  cfg.seed = opt.seed;
  cfg.mode = opt.weight_mode();
  cfg.validate(n);

  const SynthesisResult result = synthesize_sample(sample, cfg, std::move(fitted));
  const MetricReport report = evaluate(result.original_scores, result.synthetic_scores,
                                       /*paired=*/true, opt.k_min,
                                       opt.k_max > 0 ? opt.k_max : static_cast<int>(n) - 1);

  RunOutputs outputs;
  outputs.original = &sample;
  outputs.synthetic = &result.synthetic;
  outputs.model = &result.model;
  outputs.original_scores = &result.original_scores;
  outputs.synthetic_scores = &result.synthetic_scores;
  outputs.report = &report;
  outputs.method = "synthesize";
  write_outputs(outputs, opt.out_dir);

  std::cout << "synthesized " << n << " series (gamma=" << cfg.gamma << " tau=" << cfg.tau
            << " alpha0=" << cfg.alpha0 << " seed=" << cfg.seed << ")\n";
  std::cout << "rv=" << *report.rv << " rho_mean=" << report.rho_mean
            << " rho_sd=" << report.rho_sd << " rho_distr=" << report.rho_distr
            << " hidden_rate=" << *report.hidden_rate_value << "\n";
  std::cout << "outputs in " << opt.out_dir << "\n";
  return 0;
}

int run_tune(const CommonOptions& opt, const std::string& alpha_csv, const std::string& gamma_csv,
             const std::string& tau_csv, int reps, double dmin_frac) {
  const QtsSample sample = read_qts_csv(opt.input);
  TuningGrid grid;
  if (!alpha_csv.empty()) grid.alpha0_values = parse_double_list(alpha_csv);
  if (!gamma_csv.empty()) grid.gamma_values = parse_int_list(gamma_csv);
  if (!tau_csv.empty()) grid.tau_values = parse_int_list(tau_csv);
  grid.repetitions = reps;
  grid.dmin_threshold_fraction = dmin_frac;
  grid.seed = opt.seed;
  grid.mode = opt.weight_mode();

  const TuningReport report = tune_hyperparameters(sample, grid);

  RunOutputs outputs;
  outputs.tuning = &report;
  write_outputs(outputs, opt.out_dir);

  std::size_t passing = 0;
  for (const auto& row : report.rows) passing += row.pass ? 1 : 0;
  std::cout << report.rows.size() << " combinations, " << passing << " passing (threshold "
            << report.dmin_threshold << ")\n";
  if (!report.rows.empty()) {
    const auto& best = report.rows.front();
    std::cout << "best by mean d_max: alpha0=" << best.alpha0 << " gamma=" << best.gamma
              << " tau=" << best.tau << " mean_dmax=" << best.mean_dmax << "\n";
  }
  std::cout << "outputs in " << opt.out_dir << "\n";
  return 0;
}

int run_copula(const CommonOptions& opt) {
  const QtsSample sample = read_qts_csv(opt.input);
  const Eigen::Index n = static_cast<Eigen::Index>(sample.n_subjects());
  const FittedPipeline fitted = fit_pipeline(sample);

  const CopulaModel copula = fit_copula(fitted.scores);
  Rng rng(derive_seed(opt.seed, 0xC09A));
  const Eigen::MatrixXd synthetic_scores = sample_copula(copula, n, rng);

  const QtsSample synthetic =
      make_synthetic_sample(sample, synthetic_scores, fitted.model, fitted.mean_qts, "copula");
  const MetricReport report = evaluate(fitted.scores, synthetic_scores,
                                       /*paired=*/false, opt.k_min,
                                       opt.k_max > 0 ? opt.k_max : static_cast<int>(n) - 1);

  RunOutputs outputs;
  outputs.original = &sample;
  outputs.synthetic = &synthetic;
  outputs.model = &fitted.model;
  outputs.original_scores = &fitted.scores;
  outputs.synthetic_scores = &synthetic_scores;
  outputs.report = &report;
  outputs.method = "copula";
  write_outputs(outputs, opt.out_dir);

  std::cout << "copula baseline: " << n << " series (seed=" << opt.seed << ")\n";
  std::cout << "rho_mean=" << report.rho_mean << " rho_sd=" << report.rho_sd
            << " rho_distr=" << report.rho_distr << "\n";
  std::cout << "outputs in " << opt.out_dir << "\n";
  return 0;
}

int run_evaluate(const CommonOptions& opt, const std::string& original_path,
                 const std::string& synthetic_path, bool paired) {
  Eigen::MatrixXd f, g;
  const bool qts_a = is_qts_file(original_path);
  const bool qts_b = is_qts_file(synthetic_path);
  if (qts_a != qts_b) {
    throw InvalidConfig("evaluate needs two files of the same kind (both QTS or both scores)");
  }
  if (qts_a) {
    const QtsSample original = read_qts_csv(original_path);
    const QtsSample synthetic = read_qts_csv(synthetic_path);
    const FittedPipeline fitted = fit_pipeline(original);
    f = fitted.scores;
    const QtsSample centered = center_with(synthetic, fitted.mean_qts);
    const auto logs = to_log_qts(centered);
    const auto fds = fit_splines(logs, synthetic.grid);
    g.resize(static_cast<Eigen::Index>(fds.size()), fitted.model.n_components());
    for (std::size_t i = 0; i < fds.size(); ++i) {
      g.row(static_cast<Eigen::Index>(i)) = project_scores(fds[i], fitted.model).transpose();
    }
  } else {
    auto [ids_a, scores_a] = read_scores_csv(original_path);
    auto [ids_b, scores_b] = read_scores_csv(synthetic_path);
    f = std::move(scores_a);
    g = std::move(scores_b);
  }

  const MetricReport report =
      evaluate(f, g, paired, opt.k_min,
               opt.k_max > 0 ? opt.k_max : static_cast<int>(f.rows()) - 1);
  RunOutputs outputs;
  outputs.report = &report;
  outputs.method = paired ? "paired" : "unpaired";
  write_outputs(outputs, opt.out_dir);

  std::cout << "rho_mean=" << report.rho_mean << " rho_sd=" << report.rho_sd
            << " rho_distr=" << report.rho_distr;
  if (report.rv) std::cout << " rv=" << *report.rv;
  if (report.hidden_rate_value) std::cout << " hidden_rate=" << *report.hidden_rate_value;
  std::cout << "\n";
  std::cout << "outputs in " << opt.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic unit-quaternion time series: generation, tuning, evaluation"};
  app.require_subcommand(1);

  // demo-data
  int demo_n = 30;
  std::uint64_t demo_seed = 7;
  std::string demo_out = ".";
  auto* demo = app.add_subcommand("demo-data", "Write a seeded demo QTS sample");
  demo->add_option("--n", demo_n, "Number of subjects")->capture_default_str();
  demo->add_option("--seed", demo_seed, "RNG seed")->capture_default_str();
  demo->add_option("--out", demo_out, "Output directory")->capture_default_str();

  // synthesize
  CommonOptions syn_opt;
  int syn_gamma = -1, syn_tau = -1;
  double syn_alpha0 = 5.0;
  auto* syn = app.add_subcommand("synthesize", "Generate one synthetic series per subject");
  add_common(syn, syn_opt);
  syn->add_option("--gamma", syn_gamma, "Neighbors per subject (default: n/10, at least 2)");
  syn->add_option("--tau", syn_tau, "Score columns for the neighbor search (default: 95% inertia)");
  syn->add_option("--alpha0", syn_alpha0, "Total Dirichlet concentration")->capture_default_str();

  // tune
  CommonOptions tune_opt;
  std::string tune_alpha, tune_gamma, tune_tau;
  int tune_reps = 10;
  double tune_dmin_frac = 0.10;
  auto* tune = app.add_subcommand("tune", "Grid-search gamma/tau/alpha0");
  add_common(tune, tune_opt);
  tune->add_option("--alpha0-grid", tune_alpha, "Comma-separated alpha0 values");
  tune->add_option("--gamma-grid", tune_gamma, "Comma-separated gamma values");
  tune->add_option("--tau-grid", tune_tau, "Comma-separated tau values");
  tune->add_option("--reps", tune_reps, "Repetitions per combination")->capture_default_str();
  tune->add_option("--dmin-frac", tune_dmin_frac, "d_min threshold fraction")
      ->capture_default_str();

  // evaluate
  CommonOptions eval_opt;
  std::string eval_original, eval_synthetic;
  bool eval_paired = false;
  auto* eval = app.add_subcommand("evaluate", "Compare two QTS or score files");
  eval->add_option("--original", eval_original, "Original QTS or score CSV")->required();
  eval->add_option("--synthetic", eval_synthetic, "Synthetic QTS or score CSV")->required();
  eval->add_flag("--paired", eval_paired, "Rows correspond one-to-one");
  eval->add_option("--out", eval_opt.out_dir, "Output directory")->capture_default_str();
  eval->add_option("--k-min", eval_opt.k_min, "Smallest k")->capture_default_str();
  eval->add_option("--k-max", eval_opt.k_max, "Largest k (0: n-1)")->capture_default_str();

  // copula
  CommonOptions cop_opt;
  auto* cop = app.add_subcommand("copula", "Gaussian-copula baseline through the same pipeline");
  add_common(cop, cop_opt, /*with_mode=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (demo->parsed()) return run_demo_data(demo_n, demo_seed, demo_out);
    if (syn->parsed()) return run_synthesize(syn_opt, syn_gamma, syn_tau, syn_alpha0);
    if (tune->parsed()) return run_tune(tune_opt, tune_alpha, tune_gamma, tune_tau, tune_reps,
                                        tune_dmin_frac);
    if (eval->parsed()) return run_evaluate(eval_opt, eval_original, eval_synthetic, eval_paired);
    if (cop->parsed()) return run_copula(cop_opt);
  } catch (const Error& e) {
    print_error(e);
    return is_usage_error(e) ? 2 : 1;
  } catch (const std::exception& e) {
    nlohmann::ordered_json j;
    j["error"]["type"] = "Error";
    j["error"]["message"] = e.what();
    std::cerr << j.dump() << "\n";
    return 1;
  }
  return 2;
}

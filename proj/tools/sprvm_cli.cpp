// sprvm: command-line front end (fit, predict, cv, ml-opt, diagnose, bench).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sprvm/data.hpp"
#include "sprvm/diagnostics.hpp"
#include "sprvm/error.hpp"
#include "sprvm/io.hpp"
#include "sprvm/marglik.hpp"
#include "sprvm/parallel.hpp"
#include "sprvm/predict.hpp"
#include "sprvm/rvm.hpp"
#include "sprvm/sprvm.hpp"
#include "sprvm/tune.hpp"

namespace fs = std::filesystem;
using sprvm::io::Json;

namespace {

constexpr double kPsrfWarn = 1.1;
constexpr const char* kNoMcse = "MCSE unavailable (no known convergence rate)";

struct DataFlags {
  std::string path;
  std::string response;
  bool standardize_covariates = false;
};

struct ModelFlags {
  std::string method = "sprvm";
  std::string kernel = "gaussian";
  double theta = 1.0;
  double xi = 1.0;
  double prior_a = 0.0;
  double prior_b = 0.0;
  double prior_c = 0.0;
  double prior_d = 0.0;
  CLI::Option* a_opt = nullptr;
  CLI::Option* b_opt = nullptr;
  long iters = 10000;
  long burnin = -1;  // iters / 2 unless given
  int chains = 1;
  std::string cov = "batch";
};

struct RunFlags {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir = ".";
};

struct Run {
  std::vector<std::string> argv;
  sprvm::io::RunManifest manifest;
};

void add_data_flags(CLI::App* sub, DataFlags& d) {
  sub->add_option("--data", d.path, "Training CSV (header row, comma separated)")->required();
  sub->add_option("--response", d.response, "Name of the response column")->required();
  sub->add_flag("--standardize-covariates", d.standardize_covariates,
                "Center and scale each covariate (fitted on training rows)");
}

void add_run_flags(CLI::App* sub, RunFlags& r, bool with_out_dir = true) {
  sub->add_option("--seed", r.seed, "Base random seed")->capture_default_str();
  sub->add_option("--threads", r.threads, "Worker threads (default: $SPRVM_THREADS or all cores)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  if (with_out_dir) sub->add_option("--out-dir", r.out_dir, "Directory for output files")->capture_default_str();
}

void add_prior_flags(CLI::App* sub, ModelFlags& m) {
  m.a_opt = sub->add_option("--prior-a", m.prior_a, "Penalty prior shape a (sprvm default -1, rvm 0.001)");
  m.b_opt = sub->add_option("--prior-b", m.prior_b, "Penalty prior rate b (sprvm default 0, rvm 0.01)");
  sub->add_option("--prior-c", m.prior_c, "RVM noise prior shape c")->capture_default_str();
  sub->add_option("--prior-d", m.prior_d, "RVM noise prior rate d")->capture_default_str();
}

void add_model_flags(CLI::App* sub, ModelFlags& m, int default_chains) {
  m.chains = default_chains;
  sub->add_option("--method", m.method, "sprvm or rvm")->capture_default_str();
  sub->add_option("--kernel", m.kernel, "gaussian, laplace or poly")->capture_default_str();
  sub->add_option("--theta", m.theta, "Kernel parameter")->capture_default_str();
  sub->add_option("--xi", m.xi, "Noise precision (sprvm)")->capture_default_str();
  add_prior_flags(sub, m);
  sub->add_option("--iters", m.iters, "Total Gibbs scans per chain, burn-in included")->capture_default_str();
  sub->add_option("--burnin", m.burnin, "Discarded scans (default: iters / 2)");
  sub->add_option("--chains", m.chains, "Independent chains")->capture_default_str();
  sub->add_option("--cov", m.cov, "MCSE covariance estimator: batch or spectral")->capture_default_str();
}

double resolved_a(const ModelFlags& m, sprvm::Method method) {
  if (m.a_opt && m.a_opt->count() > 0) return m.prior_a;
  return method == sprvm::Method::kSprvm ? -1.0 : 0.001;
}

double resolved_b(const ModelFlags& m, sprvm::Method method) {
  if (m.b_opt && m.b_opt->count() > 0) return m.prior_b;
  return method == sprvm::Method::kSprvm ? 0.0 : 0.01;
}

sprvm::SamplerBudget budget_of(long iters, long burnin) {
  sprvm::SamplerBudget b{iters, burnin < 0 ? iters / 2 : burnin};
  b.validate();
  return b;
}

sprvm::CovarianceMethod parse_cov(const std::string& s) {
  if (s == "batch") return sprvm::CovarianceMethod::kBatchMeans;
  return sprvm::parse_covariance_method(s);
}

// Options exactly as the user gave them (or their defaults).
Json options_snapshot(const CLI::App& sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? Json(r.front()) : Json(r);
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw sprvm::DataError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void write_output(Run& run, const std::string& path, const std::string& content) {
  sprvm::io::write_text_file(path, content);
  run.manifest.outputs.push_back(path);
}

void finish(Run& run, const std::string& manifest_path) {
  run.manifest.finished = sprvm::io::utc_timestamp();
  sprvm::io::write_text_file(manifest_path, sprvm::io::to_json(run.manifest).dump(2) + "\n");
  std::cout << "manifest: " << manifest_path << "\n";
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

sprvm::Dataset load_training(Run& run, const DataFlags& d) {
  sprvm::Dataset raw = sprvm::load_csv(d.path, d.response);
  run.manifest.add_input(d.path);
  return raw;
}

// ---------------------------------------------------------------- fitting

struct FitOutcome {
  sprvm::io::FitArtifact artifact;
  std::string draws_csv;
};

Eigen::MatrixXd psrf_columns_sprvm(const sprvm::SprvmDraws& d) {
  Eigen::MatrixXd m(d.M(), d.beta.cols() + 1);
  m.col(0) = d.lambda.array().log().matrix();
  m.rightCols(d.beta.cols()) = d.beta;
  return m;
}

Eigen::MatrixXd psrf_columns_rvm(const sprvm::RvmDraws& d) {
  const Eigen::Index p = d.beta.cols();
  Eigen::MatrixXd m(d.M(), 1 + 2 * p);
  m.col(0) = d.inv_sigma2.array().log().matrix();
  m.middleCols(1, p) = d.lambdas.array().log().matrix();
  m.rightCols(p) = d.beta;
  return m;
}

std::vector<std::string> psrf_names(sprvm::Method method, Eigen::Index p) {
  std::vector<std::string> names;
  if (method == sprvm::Method::kSprvm) {
    names.push_back("log_lambda");
  } else {
    names.push_back("log_inv_sigma2");
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("log_lambda" + std::to_string(j));
  }
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("beta" + std::to_string(j));
  return names;
}

void attach_psrf(sprvm::io::FitArtifact& fit, const std::vector<Eigen::MatrixXd>& columns, Eigen::Index p) {
  if (columns.size() < 2) return;
  try {
    fit.psrf = sprvm::psrf(columns, psrf_names(fit.method, p));
    if (fit.psrf->max_psrf > kPsrfWarn) {
      fit.warnings.push_back("max PSRF " + fmt(fit.psrf->max_psrf) + " exceeds " + fmt(kPsrfWarn) +
                             "; chains may not have converged");
    }
  } catch (const sprvm::Error& e) {
    fit.warnings.push_back(std::string("PSRF unavailable: ") + e.what());
  }
}

FitOutcome run_fit(const sprvm::Dataset& raw, const DataFlags& data, const ModelFlags& m, const RunFlags& r,
                   Run& run) {
  const sprvm::Method method = sprvm::parse_method(m.method);
  const sprvm::KernelSpec spec{sprvm::parse_kernel_family(m.kernel), m.theta};
  spec.validate();
  const sprvm::SamplerBudget budget = budget_of(m.iters, m.burnin);
  const sprvm::CovarianceMethod cov = parse_cov(m.cov);
  if (m.chains < 1) throw sprvm::UsageError("--chains must be at least 1");

  FitOutcome out;
  auto& fit = out.artifact;
  fit.method = method;
  fit.kernel = spec;
  fit.X_train = raw.X;
  fit.names = raw.names;
  fit.response_name = raw.response_name;

  sprvm::Dataset d = sprvm::standardize_response(raw);
  fit.standardization = *d.standardization;
  if (data.standardize_covariates) {
    fit.covariate_scaling = sprvm::fit_covariate_scaling(d.X);
    d.X = fit.covariate_scaling->apply(d.X);
  }
  const sprvm::DesignMatrix design = sprvm::build_design(spec, d.X);
  const Eigen::Index p = design.columns();
  const double a = resolved_a(m, method), b = resolved_b(m, method);

  run.manifest.seeds = {{"base", r.seed},
                        {"chains", m.chains},
                        {"chain_streams", m.chains > 1 ? "derived from base seed and chain index" : "base seed"}};

  std::vector<Eigen::MatrixXd> columns;
  if (method == sprvm::Method::kSprvm) {
    sprvm::SprvmConfig config;
    config.a = a;
    config.b = b;
    config.xi = m.xi;
    config.M = budget.retained();
    config.burn_in = budget.burn_in;
    config.seed = r.seed;
    fit.propriety = sprvm::check_propriety(a, b, d.n(), design);
    run.manifest.propriety = fit.propriety;
    const auto chains = sprvm::run_gibbs_chains(config, design, d.y, m.chains, r.threads);
    fit.summary = sprvm::summarize(chains, cov);
    fit.warnings = chains.front().warnings;
    fit.config = {{"a", a},        {"b", b},           {"xi", m.xi},  {"iterations", budget.iterations},
                  {"burn_in", budget.burn_in}, {"retained", budget.retained()}, {"chains", m.chains},
                  {"seed", r.seed}, {"init_lambda", config.init_lambda}, {"mcse_covariance", sprvm::to_string(cov)}};
    for (const auto& c : chains) columns.push_back(psrf_columns_sprvm(c));
    out.draws_csv = sprvm::io::draws_csv(chains);
  } else {
    sprvm::RvmConfig config;
    config.a = a;
    config.b = b;
    config.c = m.prior_c;
    config.d = m.prior_d;
    config.M = budget.retained();
    config.burn_in = budget.burn_in;
    config.seed = r.seed;
    const auto chains = sprvm::rvm_run_gibbs_chains(config, design, d.y, m.chains, r.threads);
    fit.summary = sprvm::summarize(chains);
    fit.config = {{"a", a},
                  {"b", b},
                  {"c", config.c},
                  {"d", config.d},
                  {"iterations", budget.iterations},
                  {"burn_in", budget.burn_in},
                  {"retained", budget.retained()},
                  {"chains", m.chains},
                  {"seed", r.seed},
                  {"init_lambda", config.init_lambda(0)},
                  {"init_inv_sigma2", config.init_inv_sigma2}};
    for (const auto& c : chains) columns.push_back(psrf_columns_rvm(c));
    out.draws_csv = sprvm::io::draws_csv(chains);
  }
  attach_psrf(fit, columns, p);
  return out;
}

void print_psrf(const sprvm::PsrfReport& r) {
  std::cout << "PSRF (" << r.chains << " chains x " << r.draws_per_chain << " draws): max " << fmt(r.max_psrf)
            << "\n";
  std::vector<std::size_t> order(r.names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return r.per_parameter(static_cast<Eigen::Index>(x)) > r.per_parameter(static_cast<Eigen::Index>(y));
  });
  const std::size_t shown = std::min<std::size_t>(order.size(), 10);
  std::cout << "  parameter          psrf\n";
  for (std::size_t i = 0; i < shown; ++i) {
    std::cout << "  " << std::left << std::setw(18) << r.names[order[i]] << std::right << " "
              << fmt(r.per_parameter(static_cast<Eigen::Index>(order[i]))) << "\n";
  }
  if (shown < order.size()) std::cout << "  (" << order.size() - shown << " more in the JSON output)\n";
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void print_predictions(const std::vector<sprvm::PredictionResult>& preds) {
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::cout << "point " << i << ": prediction " << fmt(preds[i].point, 8);
    if (preds[i].mcse) {
      std::cout << "  MCSE " << fmt(*preds[i].mcse, 4) << "\n";
    } else {
      std::cout << "  " << kNoMcse << "\n";
    }
  }
}

// ---------------------------------------------------------------- commands

int cmd_fit(Run& run, const DataFlags& data, const ModelFlags& m, const RunFlags& r) {
  const sprvm::Dataset raw = load_training(run, data);
  ensure_dir(r.out_dir);
  FitOutcome out = run_fit(raw, data, m, r, run);
  auto& fit = out.artifact;
  fit.draws_file = "draws.csv";
  fit.manifest_file = "manifest.json";
  write_output(run, join_path(r.out_dir, "draws.csv"), out.draws_csv);
  write_output(run, join_path(r.out_dir, "fit.json"), sprvm::io::to_json(fit).dump(2) + "\n");

  std::cout << "method " << sprvm::to_string(fit.method) << ", kernel " << sprvm::to_string(fit.kernel.family)
            << " theta " << fmt(fit.kernel.theta) << ", n " << raw.n() << ", draws used " << fit.summary.m_used
            << "\n";
  if (fit.propriety) {
    std::cout << "propriety: necessary " << sprvm::to_string(fit.propriety->necessary_ok) << ", sufficient "
              << (fit.propriety->sufficient_ok ? "holds" : "not established") << "\n";
  }
  if (fit.psrf) print_psrf(*fit.psrf);
  if (fit.method == sprvm::Method::kRvm) std::cout << kNoMcse << "\n";
  print_warnings(fit.warnings);
  std::cout << "wrote " << join_path(r.out_dir, "fit.json") << " and " << join_path(r.out_dir, "draws.csv")
            << "\n";
  finish(run, join_path(r.out_dir, "manifest.json"));
  return 0;
}

int cmd_predict(Run& run, const std::string& model, const std::string& input, const std::string& output) {
  const auto fit = sprvm::io::load_fit(model);
  run.manifest.add_input(model);
  const Eigen::MatrixXd X_new = sprvm::load_covariates_csv(input, fit.response_name);
  run.manifest.add_input(input);
  const auto preds = fit.predict(X_new);
  const fs::path parent = fs::path(output).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
  write_output(run, output, sprvm::io::predictions_csv(preds));
  if (fit.method == sprvm::Method::kRvm) std::cout << kNoMcse << "\n";
  std::cout << "wrote " << preds.size() << " predictions to " << output << "\n";
  finish(run, output + ".manifest.json");
  return 0;
}

int cmd_cv(Run& run, const DataFlags& data, const ModelFlags& m, const RunFlags& r, std::vector<double> thetas,
           std::vector<double> xis, long k) {
  const sprvm::Dataset raw = load_training(run, data);
  ensure_dir(r.out_dir);
  const sprvm::Method method = sprvm::parse_method(m.method);
  sprvm::ModelSettings settings;
  settings.family = sprvm::parse_kernel_family(m.kernel);
  settings.standardize_covariates = data.standardize_covariates;
  settings.sprvm_prior = {resolved_a(m, method), resolved_b(m, method)};
  settings.rvm.a = resolved_a(m, method);
  settings.rvm.b = resolved_b(m, method);
  settings.rvm.c = m.prior_c;
  settings.rvm.d = m.prior_d;
  if (method == sprvm::Method::kRvm) xis = {1.0};
  const auto result = sprvm::cross_validate(method, sprvm::product_grid(thetas, xis), raw, k, r.seed,
                                            budget_of(m.iters, m.burnin), settings, r.threads);
  run.manifest.seeds = {{"base", r.seed}, {"folds", "permutation and fold streams derived from base seed"}};
  write_output(run, join_path(r.out_dir, "cv.json"), sprvm::io::to_json(result).dump(2) + "\n");
  std::cout << k << "-fold CV over " << result.grid.size() << " candidates: best theta "
            << fmt(result.best.theta);
  if (method == sprvm::Method::kSprvm) std::cout << ", xi " << fmt(result.best.xi);
  std::cout << ", CV RMSPE " << fmt(result.cv_rmspe[result.best_index]) << "\n";
  for (std::size_t i = 0; i < result.failure.size(); ++i) {
    if (!result.failure[i].empty()) std::cerr << "warning: candidate " << i << " failed: " << result.failure[i] << "\n";
  }
  finish(run, join_path(r.out_dir, "manifest.json"));
  return 0;
}

int cmd_ml_opt(Run& run, const DataFlags& data, const ModelFlags& m, const RunFlags& r,
               const std::vector<double>& thetas, const std::vector<double>& xis) {
  const sprvm::Dataset raw = load_training(run, data);
  ensure_dir(r.out_dir);
  sprvm::Dataset d = sprvm::standardize_response(raw);
  if (data.standardize_covariates) d = sprvm::standardize_covariates(d);
  const sprvm::PenaltyPrior prior{resolved_a(m, sprvm::Method::kSprvm), resolved_b(m, sprvm::Method::kSprvm)};
  const auto grid = sprvm::optimize_marglik(thetas, xis, d.X, d.y, sprvm::parse_kernel_family(m.kernel), prior,
                                            r.threads);
  write_output(run, join_path(r.out_dir, "marglik_grid.csv"), sprvm::io::marglik_grid_csv(grid));
  write_output(run, join_path(r.out_dir, "ml_opt.json"), sprvm::io::to_json(grid).dump(2) + "\n");
  std::cout << "argmax theta " << fmt(grid.theta_hat) << ", xi " << fmt(grid.xi_hat) << ", log marginal likelihood "
            << fmt(grid.best_log_ml, 10) << " (" << grid.excluded << " of "
            << thetas.size() * xis.size() << " cells excluded)\n";
  finish(run, join_path(r.out_dir, "manifest.json"));
  return 0;
}

int cmd_diagnose(Run& run, const std::string& fit_path, const DataFlags& data, const ModelFlags& m,
                 const RunFlags& r, const std::string& new_point) {
  if (fit_path.empty() == data.path.empty()) {
    throw sprvm::UsageError("diagnose needs exactly one of --fit or --data");
  }
  ensure_dir(r.out_dir);
  sprvm::io::FitArtifact fit;
  if (!fit_path.empty()) {
    fit = sprvm::io::load_fit(fit_path);
    run.manifest.add_input(fit_path);
  } else {
    if (data.response.empty()) throw sprvm::UsageError("--data requires --response");
    const sprvm::Dataset raw = load_training(run, data);
    fit = run_fit(raw, data, m, r, run).artifact;
  }
  Json report;
  report["schema_version"] = sprvm::io::kSchemaVersion;
  report["method"] = sprvm::to_string(fit.method);
  if (fit.psrf) {
    print_psrf(*fit.psrf);
    report["psrf"] = sprvm::io::to_json(*fit.psrf);
  } else {
    std::cout << "PSRF unavailable: the fit has a single chain\n";
    report["psrf"] = nullptr;
  }
  print_warnings(fit.warnings);
  report["warnings"] = fit.warnings;
  Json preds = Json::array();
  if (!new_point.empty()) {
    const Eigen::MatrixXd X_new = sprvm::load_covariates_csv(new_point, fit.response_name);
    run.manifest.add_input(new_point);
    const auto results = fit.predict(X_new);
    print_predictions(results);
    for (const auto& p : results) preds.push_back(sprvm::io::to_json(p));
  }
  report["predictions"] = preds;
  write_output(run, join_path(r.out_dir, "diagnose.json"), report.dump(2) + "\n");
  if (fit.psrf) write_output(run, join_path(r.out_dir, "psrf.json"), sprvm::io::to_json(*fit.psrf).dump(2) + "\n");
  finish(run, join_path(r.out_dir, "manifest.json"));
  return 0;
}

struct BenchFlags {
  std::vector<std::string> methods{"rvm", "sprvm", "sprvm-ml"};
  long splits = 20;
  long test_size = 10;
  long k = 10;
  long cv_iters = sprvm::kCvBudget.iterations;
  long cv_burnin = -1;  // half of cv_iters unless given
  long iters = sprvm::kFinalBudget.iterations;
  long burnin = -1;
  std::vector<double> rvm_prior{0.001, 0.01, 0.0, 0.0};
  std::string label;
};

int cmd_bench(Run& run, const DataFlags& data, const ModelFlags& m, const RunFlags& r, const BenchFlags& bf,
              const std::vector<double>& thetas, const std::vector<double>& xis) {
  const sprvm::Dataset raw = load_training(run, data);
  ensure_dir(r.out_dir);
  std::vector<sprvm::BenchMethod> methods;
  for (const auto& s : bf.methods) methods.push_back(sprvm::parse_bench_method(s));
  if (bf.rvm_prior.size() != 4) throw sprvm::UsageError("--rvm-prior takes four values a,b,c,d");

  sprvm::BenchSettings s;
  s.splits = bf.splits;
  s.test_size = bf.test_size;
  s.seed = r.seed;
  s.cv_folds = bf.k;
  s.theta_grid = thetas;
  s.xi_grid = xis;
  s.cv_budget = budget_of(bf.cv_iters, bf.cv_burnin);
  s.final_budget = budget_of(bf.iters, bf.burnin);
  s.model.family = sprvm::parse_kernel_family(m.kernel);
  s.model.standardize_covariates = data.standardize_covariates;
  s.model.sprvm_prior = {resolved_a(m, sprvm::Method::kSprvm), resolved_b(m, sprvm::Method::kSprvm)};
  s.model.rvm.a = bf.rvm_prior[0];
  s.model.rvm.b = bf.rvm_prior[1];
  s.model.rvm.c = bf.rvm_prior[2];
  s.model.rvm.d = bf.rvm_prior[3];
  s.threads = r.threads;
  run.manifest.seeds = {{"base", r.seed}, {"splits", "split, fold and refit streams derived from base seed"}};

  const auto report = sprvm::benchmark(raw, methods, s);
  const std::string label = bf.label.empty() ? fs::path(data.path).stem().string() : bf.label;
  const std::string table = sprvm::format_bench_table(report, label);
  write_output(run, join_path(r.out_dir, "bench.json"), sprvm::io::to_json(report).dump(2) + "\n");
  write_output(run, join_path(r.out_dir, "bench_table.txt"), table);
  std::cout << table;
  print_warnings(report.warnings);
  finish(run, join_path(r.out_dir, "manifest.json"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single penalty and multi-penalty relevance vector machines"};
  app.set_version_flag("--version", std::string("sprvm ") + sprvm::io::kSoftwareVersion);
  app.require_subcommand(1);

  const unsigned default_threads = sprvm::default_thread_count();
  DataFlags data;
  ModelFlags model;
  RunFlags run_flags;
  run_flags.threads = default_threads;
  std::vector<double> thetas = sprvm::logspace(-1.0, 3.0, 13);
  std::vector<double> xis = sprvm::logspace(-2.0, 4.0, 13);

  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler and write draws, fit summary and manifest");
  add_data_flags(fit, data);
  add_model_flags(fit, model, 1);

  ModelFlags cv_model, ml_model;
  add_run_flags(fit, run_flags);

  std::string model_path, input_path, output_path;
  auto* predict = app.add_subcommand("predict", "Predict new rows from a fit.json");
  predict->add_option("--model", model_path, "fit.json written by `fit`")->required();
  predict->add_option("--input", input_path, "CSV of new covariate rows")->required();
  predict->add_option("--output", output_path, "Output CSV (prediction, mcse)")->required();

  long k = 10;
  auto* cv = app.add_subcommand("cv", "k-fold cross validation over a theta x xi grid");
  add_data_flags(cv, data);
  cv->add_option("--method", cv_model.method, "sprvm or rvm")->capture_default_str();
  cv->add_option("--kernel", cv_model.kernel, "gaussian, laplace or poly")->capture_default_str();
  cv->add_option("--theta-grid", thetas, "Comma-separated kernel parameters")->delimiter(',');
  cv->add_option("--xi-grid", xis, "Comma-separated noise precisions (sprvm)")->delimiter(',');
  cv->add_option("--k", k, "Number of folds")->capture_default_str();
  add_prior_flags(cv, cv_model);
  cv_model.iters = sprvm::kCvBudget.iterations;
  cv->add_option("--iters", cv_model.iters, "Total Gibbs scans per fit")->capture_default_str();
  cv->add_option("--burnin", cv_model.burnin, "Discarded scans (default: iters / 2)");
  add_run_flags(cv, run_flags);

  auto* ml = app.add_subcommand("ml-opt", "Maximize the SPRVM marginal likelihood over a theta x xi grid");
  add_data_flags(ml, data);
  ml->add_option("--kernel", ml_model.kernel, "gaussian, laplace or poly")->capture_default_str();
  ml->add_option("--theta-grid", thetas, "Comma-separated kernel parameters")->delimiter(',');
  ml->add_option("--xi-grid", xis, "Comma-separated noise precisions")->delimiter(',');
  ml_model.a_opt = ml->add_option("--prior-a", ml_model.prior_a, "Penalty prior shape a (default -1)");
  ml_model.b_opt = ml->add_option("--prior-b", ml_model.prior_b, "Penalty prior rate b (default 0)");
  ml->add_option("--threads", run_flags.threads, "Worker threads")->capture_default_str();
  ml->add_option("--out-dir", run_flags.out_dir, "Directory for output files")->capture_default_str();

  std::string diag_fit, new_point;
  DataFlags diag_data;
  ModelFlags diag_model;
  auto* diagnose = app.add_subcommand("diagnose", "PSRF table and prediction MCSE for a fit or a fresh run");
  diagnose->add_option("--fit", diag_fit, "fit.json to inspect");
  diagnose->add_option("--data", diag_data.path, "Training CSV to fit afresh (instead of --fit)");
  diagnose->add_option("--response", diag_data.response, "Response column (with --data)");
  diagnose->add_flag("--standardize-covariates", diag_data.standardize_covariates,
                     "Center and scale each covariate (with --data)");
  diagnose->add_option("--new-point", new_point, "CSV of covariate rows to predict");
  add_model_flags(diagnose, diag_model, 4);
  add_run_flags(diagnose, run_flags);

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "Repeated random-split RMSPE benchmark");
  add_data_flags(bench, data);
  bench->add_option("--methods", bench_flags.methods, "Comma-separated: rvm, sprvm, sprvm-ml")->delimiter(',');
  bench->add_option("--splits", bench_flags.splits, "Random train/test splits")->capture_default_str();
  bench->add_option("--test-size", bench_flags.test_size, "Held-out rows per split")->capture_default_str();
  bench->add_option("--k", bench_flags.k, "CV folds")->capture_default_str();
  ModelFlags bench_model;
  bench->add_option("--kernel", bench_model.kernel, "gaussian, laplace or poly")->capture_default_str();
  bench->add_option("--theta-grid", thetas, "Comma-separated kernel parameters")->delimiter(',');
  bench->add_option("--xi-grid", xis, "Comma-separated noise precisions")->delimiter(',');
  bench->add_option("--cv-iters", bench_flags.cv_iters, "Gibbs scans per CV fit")->capture_default_str();
  bench->add_option("--cv-burnin", bench_flags.cv_burnin, "Burn-in per CV fit (default: cv-iters / 2)");
  bench->add_option("--iters", bench_flags.iters, "Gibbs scans for the refit")->capture_default_str();
  bench->add_option("--burnin", bench_flags.burnin, "Burn-in for the refit (default: iters / 2)");
  add_prior_flags(bench, bench_model);
  bench->add_option("--rvm-prior", bench_flags.rvm_prior, "RVM prior a,b,c,d")->delimiter(',')->expected(4);
  bench->add_option("--label", bench_flags.label, "Dataset label for the table (default: file name)");
  add_run_flags(bench, run_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(sprvm::ExitCode::kUsage);
  }

  Run run;
  run.manifest.started = sprvm::io::utc_timestamp();
  for (int i = 0; i < argc; ++i) run.manifest.argv.emplace_back(argv[i]);
  try {
    CLI::App* sub = app.get_subcommands().front();
    run.manifest.command = sub->get_name();
    run.manifest.config = options_snapshot(*sub);
    if (run_flags.threads < 1) throw sprvm::UsageError("--threads must be positive");
    if (sub == fit) return cmd_fit(run, data, model, run_flags);
    if (sub == predict) return cmd_predict(run, model_path, input_path, output_path);
    if (sub == cv) return cmd_cv(run, data, cv_model, run_flags, thetas, xis, k);
    if (sub == ml) return cmd_ml_opt(run, data, ml_model, run_flags, thetas, xis);
    if (sub == diagnose) return cmd_diagnose(run, diag_fit, diag_data, diag_model, run_flags, new_point);
    return cmd_bench(run, data, bench_model, run_flags, bench_flags, thetas, xis);
  } catch (const sprvm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return static_cast<int>(sprvm::ExitCode::kNumeric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(sprvm::ExitCode::kNumeric);
  }
}

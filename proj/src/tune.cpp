#include "sprvm/tune.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "sprvm/error.hpp"
#include "sprvm/parallel.hpp"
#include "sprvm/sprvm.hpp"

namespace sprvm {

double rmspe(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw UsageError("prediction and truth differ in length");
  if (pred.size() < 1) throw UsageError("RMSPE needs at least one prediction");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

void SamplerBudget::validate() const {
  if (burn_in < 0 || iterations - burn_in < 1) {
    throw UsageError("sampler budget must retain at least one draw after burn-in");
  }
}

FoldEvaluator make_evaluator(Method method, const ModelSettings& settings, SamplerBudget budget) {
  budget.validate();
  return [method, settings, budget](const Dataset& train, const Eigen::MatrixXd& test_X,
                                    const Candidate& candidate, std::uint64_t seed) {
    Dataset std_train = standardize_response(train);
    Eigen::MatrixXd X_new = test_X;
    if (settings.standardize_covariates) {
      const CovariateScaling scaling = fit_covariate_scaling(std_train.X);
      std_train.X = scaling.apply(std_train.X);
      X_new = scaling.apply(test_X);
    }
    const KernelSpec spec{settings.family, candidate.theta};
    auto rows = std::make_shared<const Eigen::MatrixXd>(std_train.X);
    const DesignMatrix design = build_design(spec, rows);

    Eigen::VectorXd beta_mean;
    if (method == Method::kSprvm) {
      SprvmConfig config;
      config.a = settings.sprvm_prior.a;
      config.b = settings.sprvm_prior.b;
      config.xi = candidate.xi;
      config.M = budget.retained();
      config.burn_in = budget.burn_in;
      config.seed = seed;
      beta_mean = posterior_mean_beta(run_gibbs(config, design, std_train.y));
    } else {
      RvmConfig config = settings.rvm;
      config.M = budget.retained();
      config.burn_in = budget.burn_in;
      config.seed = seed;
      beta_mean = posterior_mean_beta(rvm_run_gibbs(config, design, std_train.y));
    }
    const Eigen::MatrixXd rows_new = prediction_rows(spec, *rows, X_new);
    Eigen::VectorXd standardized = rows_new * beta_mean;
    return Eigen::VectorXd(standardized.array() * std_train.standardization->sd +
                           std_train.standardization->mean);
  };
}

std::vector<Candidate> product_grid(const std::vector<double>& thetas, const std::vector<double>& xis) {
  std::vector<Candidate> grid;
  for (double t : thetas) {
    for (double x : xis) grid.push_back({t, x});
  }
  return grid;
}

std::vector<double> logspace(double lo, double hi, int count) {
  if (count < 1) throw UsageError("logspace needs at least one point");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double e = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    out.push_back(std::pow(10.0, e));
  }
  return out;
}

CvResult cross_validate(Method method, const std::vector<Candidate>& grid, const Dataset& data,
                        Eigen::Index k, std::uint64_t seed, SamplerBudget budget,
                        const ModelSettings& settings, unsigned threads,
                        const FoldEvaluator& evaluator) {
  if (grid.empty()) throw UsageError("cross validation grid is empty");
  data.validate();
  const auto folds = kfold_plan(data.n(), k, seed);
  const FoldEvaluator eval = evaluator ? evaluator : make_evaluator(method, settings, budget);

  std::vector<Dataset> train(folds.size());
  std::vector<Dataset> test(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    train[f] = data.subset(folds[f].train_indices);
    test[f] = data.subset(folds[f].test_indices);
  }

  const std::size_t F = folds.size();
  std::vector<double> fold_score(grid.size() * F, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> fold_failure(grid.size() * F);
  parallel_for(grid.size() * F, threads, [&](std::size_t job) {
    const std::size_t c = job / F, f = job % F;
    const std::uint64_t fold_seed = Rng::derive(seed, {0xC5ull, f}).engine()();
    try {
      const Eigen::VectorXd pred = eval(train[f], test[f].X, grid[c], fold_seed);
      fold_score[job] = rmspe(pred, test[f].y);
    } catch (const std::exception& e) {
      fold_failure[job] = "fold " + std::to_string(f) + ": " + e.what();
    }
  });

  CvResult result;
  result.method = method;
  result.grid = grid;
  result.folds = k;
  result.seed = seed;
  result.cv_rmspe.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  result.failure.assign(grid.size(), std::string{});
  bool found = false;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double sum = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      if (!fold_failure[c * F + f].empty()) {
        result.failure[c] = fold_failure[c * F + f];
        break;
      }
      sum += fold_score[c * F + f];
    }
    if (!result.failure[c].empty()) continue;
    result.cv_rmspe[c] = sum / static_cast<double>(F);
    if (!found || result.cv_rmspe[c] < result.cv_rmspe[result.best_index]) {
      found = true;
      result.best_index = c;
    }
  }
  if (!found) {
    throw NumericError("every cross-validation candidate failed; first failure: " + result.failure[0]);
  }
  result.best = grid[result.best_index];
  return result;
}

std::string to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::kRvm: return "RVM";
    case BenchMethod::kSprvm: return "SPRVM";
    case BenchMethod::kSprvmMl: return "SPRVM-ML";
  }
  return "unknown";
}

BenchMethod parse_bench_method(const std::string& name) {
  if (name == "rvm" || name == "RVM") return BenchMethod::kRvm;
  if (name == "sprvm" || name == "SPRVM") return BenchMethod::kSprvm;
  if (name == "sprvm-ml" || name == "SPRVM-ML") return BenchMethod::kSprvmMl;
  throw UsageError("unknown benchmark method '" + name + "' (expected rvm, sprvm or sprvm-ml)");
}

namespace {

SplitOutcome run_split_method(BenchMethod method, const Dataset& train, const Dataset& test,
                              const BenchSettings& s, std::uint64_t split_seed) {
  SplitOutcome out;
  out.method = method;
  try {
    const std::uint64_t refit_seed = Rng::derive(split_seed, {0xF1ull}).engine()();
    Candidate chosen;
    Method fit_method = Method::kSprvm;
    switch (method) {
      case BenchMethod::kRvm: {
        fit_method = Method::kRvm;
        const auto grid = product_grid(s.theta_grid, {1.0});
        chosen = cross_validate(Method::kRvm, grid, train, s.cv_folds, split_seed, s.cv_budget,
                                s.model, s.threads).best;
        break;
      }
      case BenchMethod::kSprvm: {
        const auto grid = product_grid(s.theta_grid, s.xi_grid);
        chosen = cross_validate(Method::kSprvm, grid, train, s.cv_folds, split_seed, s.cv_budget,
                                s.model, s.threads).best;
        break;
      }
      case BenchMethod::kSprvmMl: {
        Dataset std_train = standardize_response(train);
        if (s.model.standardize_covariates) std_train = standardize_covariates(std_train);
        const auto grid = optimize_marglik(s.theta_grid, s.xi_grid, std_train.X, std_train.y,
                                           s.model.family, s.model.sprvm_prior, s.threads);
        chosen = {grid.theta_hat, grid.xi_hat};
        break;
      }
    }
    out.chosen = chosen;
    const auto evaluate = make_evaluator(fit_method, s.model, s.final_budget);
    out.rmspe = rmspe(evaluate(train, test.X, chosen, refit_seed), test.y);
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

BenchReport benchmark(const Dataset& data, const std::vector<BenchMethod>& methods,
                      const BenchSettings& settings) {
  data.validate();
  if (methods.empty()) throw UsageError("no benchmark methods requested");
  if (settings.splits < 1) throw UsageError("split count must be at least 1");
  if (settings.test_size <= 0 || settings.test_size >= data.n()) {
    throw UsageError("test size must lie strictly between 0 and n");
  }
  settings.cv_budget.validate();
  settings.final_budget.validate();

  BenchReport report;
  report.methods = methods;
  report.splits = settings.splits;
  report.test_size = settings.test_size;
  for (Eigen::Index sp = 0; sp < settings.splits; ++sp) {
    const std::uint64_t split_seed = Rng::derive(settings.seed, {static_cast<std::uint64_t>(sp)}).engine()();
    const SplitPlan plan = train_test_split(data.n(), settings.test_size, split_seed);
    const Dataset train = data.subset(plan.train_indices);
    const Dataset test = data.subset(plan.test_indices);
    BenchSplit split;
    split.index = sp;
    split.test_indices = plan.test_indices;
    for (auto m : methods) split.outcomes.push_back(run_split_method(m, train, test, settings, split_seed));
    report.per_split.push_back(std::move(split));
  }

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    double sum = 0.0;
    Eigen::Index ok = 0, failed = 0;
    std::string first_failure;
    for (const auto& split : report.per_split) {
      const auto& o = split.outcomes[mi];
      if (o.rmspe) {
        sum += *o.rmspe;
        ++ok;
      } else {
        ++failed;
        if (first_failure.empty()) first_failure = o.failure;
      }
    }
    report.failed_splits.push_back(failed);
    if (failed > 0) {
      const double frac = static_cast<double>(failed) / static_cast<double>(settings.splits);
      if (frac >= 0.1) {
        throw NumericError(to_string(methods[mi]) + " failed on " + std::to_string(failed) + " of " +
                           std::to_string(settings.splits) + " splits: " + first_failure);
      }
      report.warnings.push_back(to_string(methods[mi]) + ": " + std::to_string(failed) +
                                " split(s) failed and were excluded: " + first_failure);
    }
    report.mean_rmspe.push_back(sum / static_cast<double>(ok));
  }
  return report;
}

std::string format_bench_table(const BenchReport& report, const std::string& dataset_label) {
  std::ostringstream out;
  const std::string label = dataset_label.empty() ? "RMSPE" : dataset_label;
  const std::size_t width = std::max<std::size_t>(label.size(), 8);
  out << std::left << std::setw(10) << "Method" << " | " << std::setw(static_cast<int>(width)) << label << "\n";
  out << std::string(10, '-') << "-+-" << std::string(width, '-') << "\n";
  for (std::size_t i = 0; i < report.methods.size(); ++i) {
    out << std::left << std::setw(10) << to_string(report.methods[i]) << " | " << std::fixed
        << std::setprecision(4) << report.mean_rmspe[i] << "\n";
  }
  out << "(" << report.splits << " random splits, test size " << report.test_size << ")\n";
  return out.str();
}

}  // namespace sprvm

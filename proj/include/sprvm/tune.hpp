#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sprvm/data.hpp"
#include "sprvm/kernels.hpp"
#include "sprvm/marglik.hpp"
#include "sprvm/predict.hpp"
#include "sprvm/rvm.hpp"

namespace sprvm {

double rmspe(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

/// One point of a tuning grid. RVM ignores xi.
struct Candidate {
  double theta = 1.0;
  double xi = 1.0;
};

/// Total Gibbs iterations and how many of them are burn-in.
struct SamplerBudget {
  Eigen::Index iterations = 10000;
  Eigen::Index burn_in = 5000;

  Eigen::Index retained() const { return iterations - burn_in; }
  void validate() const;
};

inline constexpr SamplerBudget kCvBudget{2000, 1000};
inline constexpr SamplerBudget kFinalBudget{10000, 5000};

/// Model choices held fixed while tuning.
struct ModelSettings {
  KernelFamily family = KernelFamily::kGaussian;
  PenaltyPrior sprvm_prior{-1.0, 0.0};
  RvmConfig rvm;  // a, b, c, d and initial values; M/burn-in come from the budget
  bool standardize_covariates = false;  // fitted on each training part only
};

/// Fits on `train` (raw response) and returns raw-scale predictions for the
/// rows of `test_X`. Never sees test responses.
using FoldEvaluator = std::function<Eigen::VectorXd(
    const Dataset& train, const Eigen::MatrixXd& test_X, const Candidate& candidate,
    std::uint64_t seed)>;

/// Standardizes the training response, builds the design, runs the sampler
/// for `budget` and predicts with the posterior mean of beta.
FoldEvaluator make_evaluator(Method method, const ModelSettings& settings, SamplerBudget budget);

struct CvResult {
  Method method = Method::kSprvm;
  std::vector<Candidate> grid;
  std::vector<double> cv_rmspe;  // NaN for failed candidates
  std::vector<std::string> failure;  // empty string when the candidate succeeded
  std::size_t best_index = 0;
  Candidate best;
  Eigen::Index folds = 0;
  std::uint64_t seed = 0;
};

/// k-fold cross validation over `grid`. Each candidate's score is the mean of
/// its per-fold RMSPE on the raw response scale; the first minimum in grid
/// order wins. A failing fold aborts only that candidate.
CvResult cross_validate(Method method, const std::vector<Candidate>& grid, const Dataset& data,
                        Eigen::Index k, std::uint64_t seed, SamplerBudget budget,
                        const ModelSettings& settings, unsigned threads = 1,
                        const FoldEvaluator& evaluator = {});

/// Product grid theta x xi (theta-major). For RVM pass a single xi.
std::vector<Candidate> product_grid(const std::vector<double>& thetas, const std::vector<double>& xis);

/// count points spaced evenly in log10 between lo and hi, inclusive.
std::vector<double> logspace(double lo, double hi, int count);

enum class BenchMethod { kRvm, kSprvm, kSprvmMl };
std::string to_string(BenchMethod m);
BenchMethod parse_bench_method(const std::string& name);

struct BenchSettings {
  Eigen::Index splits = 20;
  Eigen::Index test_size = 10;
  std::uint64_t seed = 1;
  Eigen::Index cv_folds = 10;
  std::vector<double> theta_grid = logspace(-1.0, 3.0, 13);
  std::vector<double> xi_grid = logspace(-2.0, 4.0, 13);
  SamplerBudget cv_budget = kCvBudget;
  SamplerBudget final_budget = kFinalBudget;
  ModelSettings model;
  unsigned threads = 1;
};

struct SplitOutcome {
  BenchMethod method = BenchMethod::kSprvm;
  std::optional<double> rmspe;
  Candidate chosen;
  std::string failure;
};

struct BenchSplit {
  Eigen::Index index = 0;
  std::vector<Eigen::Index> test_indices;
  std::vector<SplitOutcome> outcomes;  // one per requested method, in request order
};

struct BenchReport {
  std::vector<BenchMethod> methods;
  std::vector<double> mean_rmspe;  // aligned with methods
  std::vector<Eigen::Index> failed_splits;  // aligned with methods
  Eigen::Index splits = 0;
  Eigen::Index test_size = 0;
  std::vector<BenchSplit> per_split;
  std::vector<std::string> warnings;
};

/// Repeated random train/test splits. Per split: tune on the training part
/// (cross validation for RVM and SPRVM, marginal likelihood grid for
/// SPRVM-ML), refit with the final budget, and score the test part.
BenchReport benchmark(const Dataset& data, const std::vector<BenchMethod>& methods,
                      const BenchSettings& settings);

/// Plain-text table: one row per method, one RMSPE column.
std::string format_bench_table(const BenchReport& report, const std::string& dataset_label);

}  // namespace sprvm

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sprvm/data.hpp"
#include "sprvm/diagnostics.hpp"
#include "sprvm/marglik.hpp"
#include "sprvm/predict.hpp"
#include "sprvm/rvm.hpp"
#include "sprvm/sprvm.hpp"
#include "sprvm/tune.hpp"

namespace sprvm::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSoftwareVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that parses back to exactly `v`; "nan", "inf",
/// "-inf" for non-finite values.
std::string format_double(double v);

/// Whole-file helpers; failures throw DataError naming the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::string& path);

/// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

/// One row per retained scan: chain, iter, lambda, beta0..betan.
std::string draws_csv(const std::vector<SprvmDraws>& chains);
/// chain, iter, inv_sigma2, lambda0..lambdan, beta0..betan.
std::string draws_csv(const std::vector<RvmDraws>& chains);
/// Response column first, then covariates.
std::string dataset_csv(const Dataset& d);
/// theta, xi, log_ml (DIVERGENT / NONCONVERGENT for excluded cells).
std::string marglik_grid_csv(const MarglikGrid& grid);
/// prediction, mcse (NA when unavailable).
std::string predictions_csv(const std::vector<PredictionResult>& predictions);

Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const KernelSpec& k);
Json to_json(const ProprietyReport& r);
Json to_json(const PsrfReport& r);
Json to_json(const BatchMeansCov& s);
Json to_json(const PredictionResult& p);
Json to_json(const CvResult& r);
Json to_json(const BenchReport& r);
/// Argmax record plus the full grid.
Json to_json(const MarglikGrid& g);

/// Everything `predict` and `diagnose` need from a finished fit.
struct FitArtifact {
  Method method = Method::kSprvm;
  KernelSpec kernel;
  Eigen::MatrixXd X_train;  // raw covariates as read
  std::vector<std::string> names;
  std::string response_name;
  Standardization standardization;
  std::optional<CovariateScaling> covariate_scaling;
  PosteriorSummary summary;
  Json config;  // sampler settings actually used
  std::optional<ProprietyReport> propriety;
  std::optional<PsrfReport> psrf;
  std::vector<std::string> warnings;
  std::string draws_file;
  std::string manifest_file;

  /// Covariates as the kernel saw them.
  Eigen::MatrixXd design_rows(const Eigen::MatrixXd& X) const;
  std::vector<PredictionResult> predict(const Eigen::MatrixXd& X_new) const;
};

Json to_json(const FitArtifact& fit);
FitArtifact fit_from_json(const Json& j);
FitArtifact load_fit(const std::string& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();
  Json seeds = Json::object();
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::vector<std::string> outputs;
  std::optional<ProprietyReport> propriety;
  std::string started;
  std::string finished;

  void add_input(const std::string& path) { inputs.emplace_back(path, file_sha256(path)); }
};

Json to_json(const RunManifest& m);

}  // namespace sprvm::io

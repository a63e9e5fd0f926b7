#include "sprvm/io.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "sprvm/error.hpp"

namespace sprvm::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("error while reading '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw DataError("error while writing '" + path + "'");
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw NumericError("SHA-256 digest failed");
  }
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(md[i]);
  return out.str();
}

std::string file_sha256(const std::string& path) { return sha256_hex(read_text_file(path)); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

namespace {

void append_row(std::string& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    out += ',';
    out += format_double(row(j));
  }
}

void append_header(std::string& out, const std::string& prefix, Eigen::Index count) {
  for (Eigen::Index j = 0; j < count; ++j) out += "," + prefix + std::to_string(j);
}

}  // namespace

std::string draws_csv(const std::vector<SprvmDraws>& chains) {
  if (chains.empty()) throw UsageError("no chains to export");
  std::string out = "chain,iter,lambda";
  append_header(out, "beta", chains.front().beta.cols());
  out += '\n';
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    for (Eigen::Index i = 0; i < ch.M(); ++i) {
      out += std::to_string(c) + ',' + std::to_string(ch.config.burn_in + i + 1) + ',' +
             format_double(ch.lambda(i));
      append_row(out, ch.beta.row(i));
      out += '\n';
    }
  }
  return out;
}

std::string draws_csv(const std::vector<RvmDraws>& chains) {
  if (chains.empty()) throw UsageError("no chains to export");
  std::string out = "chain,iter,inv_sigma2";
  append_header(out, "lambda", chains.front().lambdas.cols());
  append_header(out, "beta", chains.front().beta.cols());
  out += '\n';
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    for (Eigen::Index i = 0; i < ch.M(); ++i) {
      out += std::to_string(c) + ',' + std::to_string(ch.config.burn_in + i + 1) + ',' +
             format_double(ch.inv_sigma2(i));
      append_row(out, ch.lambdas.row(i));
      append_row(out, ch.beta.row(i));
      out += '\n';
    }
  }
  return out;
}

std::string dataset_csv(const Dataset& d) {
  std::string out = d.response_name.empty() ? "y" : d.response_name;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    out += ',';
    out += static_cast<std::size_t>(j) < d.names.size() ? d.names[static_cast<std::size_t>(j)]
                                                         : "x" + std::to_string(j + 1);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    out += format_double(d.y(i));
    append_row(out, d.X.row(i));
    out += '\n';
  }
  return out;
}

std::string marglik_grid_csv(const MarglikGrid& grid) {
  std::string out = "theta,xi,log_ml\n";
  for (std::size_t t = 0; t < grid.theta_values.size(); ++t) {
    for (std::size_t s = 0; s < grid.xi_values.size(); ++s) {
      out += format_double(grid.theta_values[t]) + ',' + format_double(grid.xi_values[s]) + ',';
      switch (grid.status[t][s]) {
        case MarglikStatus::kFinite:
          out += format_double(grid.log_ml(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)));
          break;
        case MarglikStatus::kDivergent: out += "DIVERGENT"; break;
        case MarglikStatus::kNonConvergent: out += "NONCONVERGENT"; break;
      }
      out += '\n';
    }
  }
  return out;
}

std::string predictions_csv(const std::vector<PredictionResult>& predictions) {
  std::string out = "prediction,mcse\n";
  for (const auto& p : predictions) {
    out += format_double(p.point) + ',' + (p.mcse ? format_double(*p.mcse) : std::string("NA")) + '\n';
  }
  return out;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const KernelSpec& k) { return {{"family", to_string(k.family)}, {"theta", k.theta}}; }

Json to_json(const ProprietyReport& r) {
  Json j;
  j["necessary_ok"] = to_string(r.necessary_ok);
  j["sufficient_ok"] = r.sufficient_ok;
  j["condition_i"] = r.condition_i;
  j["condition_ii"] = r.condition_ii();
  j["condition_ii_s"] = r.condition_ii_s ? Json(*r.condition_ii_s) : Json(nullptr);
  j["condition_iii"] = r.condition_iii;
  j["full_row_rank"] = r.full_row_rank;
  j["notes"] = r.notes;
  return j;
}

Json to_json(const PsrfReport& r) {
  Json per = Json::array();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    per.push_back({{"name", r.names[i]}, {"psrf", r.per_parameter(static_cast<Eigen::Index>(i))}});
  }
  return {{"schema_version", kSchemaVersion},
          {"chains", r.chains},
          {"draws_per_chain", r.draws_per_chain},
          {"max_psrf", r.max_psrf},
          {"parameters", per}};
}

Json to_json(const BatchMeansCov& s) {
  return {{"method", to_string(s.method)},
          {"M", s.M},
          {"batch_size", s.batch_size},
          {"batch_count", s.batch_count},
          {"sigma_hat", to_json(s.sigma_hat)}};
}

Json to_json(const PredictionResult& p) {
  Json j;
  j["method"] = to_string(p.method);
  j["prediction"] = p.point;
  j["prediction_standardized"] = p.point_standardized;
  j["mcse"] = p.mcse ? Json(*p.mcse) : Json(nullptr);
  j["mcse_standardized"] = p.mcse_standardized ? Json(*p.mcse_standardized) : Json(nullptr);
  j["draws_used"] = p.m_used;
  return j;
}

Json to_json(const CvResult& r) {
  Json grid = Json::array();
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    Json cell{{"theta", r.grid[i].theta}, {"xi", r.grid[i].xi}};
    cell["cv_rmspe"] = std::isfinite(r.cv_rmspe[i]) ? Json(r.cv_rmspe[i]) : Json(nullptr);
    if (!r.failure[i].empty()) cell["failure"] = r.failure[i];
    grid.push_back(std::move(cell));
  }
  Json best{{"theta", r.best.theta}, {"xi", r.best.xi}, {"cv_rmspe", r.cv_rmspe[r.best_index]}};
  return {{"schema_version", kSchemaVersion}, {"method", to_string(r.method)}, {"folds", r.folds},
          {"seed", r.seed},   {"best", best},   {"best_index", r.best_index},
          {"grid", grid}};
}

Json to_json(const BenchReport& r) {
  Json summary = Json::array();
  for (std::size_t m = 0; m < r.methods.size(); ++m) {
    summary.push_back({{"method", to_string(r.methods[m])},
                       {"mean_rmspe", std::isfinite(r.mean_rmspe[m]) ? Json(r.mean_rmspe[m]) : Json(nullptr)},
                       {"failed_splits", r.failed_splits[m]}});
  }
  Json splits = Json::array();
  for (const auto& sp : r.per_split) {
    Json outcomes = Json::array();
    for (const auto& o : sp.outcomes) {
      Json oj{{"method", to_string(o.method)},
              {"rmspe", o.rmspe ? Json(*o.rmspe) : Json(nullptr)},
              {"theta", o.chosen.theta},
              {"xi", o.chosen.xi}};
      if (!o.failure.empty()) oj["failure"] = o.failure;
      outcomes.push_back(std::move(oj));
    }
    splits.push_back({{"index", sp.index}, {"test_indices", sp.test_indices}, {"outcomes", outcomes}});
  }
  return {{"schema_version", kSchemaVersion}, {"splits", r.splits}, {"test_size", r.test_size},
          {"summary", summary},               {"warnings", r.warnings}, {"per_split", splits}};
}

Json to_json(const MarglikGrid& g) {
  Json cells = Json::array();
  for (std::size_t t = 0; t < g.theta_values.size(); ++t) {
    for (std::size_t s = 0; s < g.xi_values.size(); ++s) {
      const double v = g.log_ml(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
      cells.push_back({{"theta", g.theta_values[t]},
                       {"xi", g.xi_values[s]},
                       {"status", to_string(g.status[t][s])},
                       {"log_ml", std::isfinite(v) ? Json(v) : Json(nullptr)}});
    }
  }
  return {{"schema_version", kSchemaVersion},
          {"theta_hat", g.theta_hat},
          {"xi_hat", g.xi_hat},
          {"best_log_ml", g.best_log_ml},
          {"excluded", g.excluded},
          {"grid", cells}};
}

Eigen::MatrixXd FitArtifact::design_rows(const Eigen::MatrixXd& X) const {
  if (X.cols() != X_train.cols()) {
    throw DataError("new points have " + std::to_string(X.cols()) + " covariates, the fit used " +
                    std::to_string(X_train.cols()));
  }
  return covariate_scaling ? covariate_scaling->apply(X) : X;
}

std::vector<PredictionResult> FitArtifact::predict(const Eigen::MatrixXd& X_new) const {
  return predict_batch(summary, kernel, design_rows(X_train), design_rows(X_new), standardization);
}

Json to_json(const FitArtifact& fit) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = to_string(fit.method);
  j["kernel"] = to_json(fit.kernel);
  j["response_name"] = fit.response_name;
  j["names"] = fit.names;
  j["standardization"] = {{"mean", fit.standardization.mean}, {"sd", fit.standardization.sd}};
  if (fit.covariate_scaling) {
    j["covariate_scaling"] = {{"mean", to_json(Eigen::VectorXd(fit.covariate_scaling->mean.transpose()))},
                              {"sd", to_json(Eigen::VectorXd(fit.covariate_scaling->sd.transpose()))}};
  } else {
    j["covariate_scaling"] = nullptr;
  }
  j["config"] = fit.config;
  j["propriety"] = fit.propriety ? to_json(*fit.propriety) : Json(nullptr);
  j["psrf"] = fit.psrf ? to_json(*fit.psrf) : Json(nullptr);
  j["warnings"] = fit.warnings;
  j["draws_file"] = fit.draws_file;
  j["manifest"] = fit.manifest_file;
  j["draws_used"] = fit.summary.m_used;
  j["beta_mean"] = to_json(fit.summary.beta_mean);
  j["mcse_covariance"] = fit.summary.sigma ? to_json(*fit.summary.sigma) : Json(nullptr);
  j["X_train"] = to_json(fit.X_train);
  return j;
}

namespace {

Eigen::VectorXd vector_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from(const Json& j, Eigen::Index expected_cols = -1) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : std::max<Eigen::Index>(0, expected_cols);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw DataError("ragged matrix in fit file");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

ProprietyReport propriety_from(const Json& j) {
  ProprietyReport r;
  const std::string nec = j.at("necessary_ok").get<std::string>();
  r.necessary_ok = nec == "holds" ? Tristate::kHolds : nec == "fails" ? Tristate::kFails : Tristate::kNotApplicable;
  r.sufficient_ok = j.at("sufficient_ok").get<bool>();
  r.condition_i = j.at("condition_i").get<bool>();
  if (!j.at("condition_ii_s").is_null()) r.condition_ii_s = j.at("condition_ii_s").get<double>();
  r.condition_iii = j.at("condition_iii").get<bool>();
  r.full_row_rank = j.at("full_row_rank").get<bool>();
  r.notes = j.at("notes").get<std::string>();
  return r;
}

PsrfReport psrf_from(const Json& j) {
  PsrfReport r;
  r.chains = j.at("chains").get<Eigen::Index>();
  r.draws_per_chain = j.at("draws_per_chain").get<Eigen::Index>();
  r.max_psrf = j.at("max_psrf").get<double>();
  const auto& params = j.at("parameters");
  r.per_parameter.resize(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    r.names.push_back(params[i].at("name").get<std::string>());
    r.per_parameter(static_cast<Eigen::Index>(i)) = params[i].at("psrf").get<double>();
  }
  return r;
}

}  // namespace

FitArtifact fit_from_json(const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw DataError("unsupported fit schema_version " + j.at("schema_version").dump());
    }
    FitArtifact fit;
    fit.method = parse_method(j.at("method").get<std::string>());
    fit.kernel.family = parse_kernel_family(j.at("kernel").at("family").get<std::string>());
    fit.kernel.theta = j.at("kernel").at("theta").get<double>();
    fit.response_name = j.at("response_name").get<std::string>();
    fit.names = j.at("names").get<std::vector<std::string>>();
    fit.standardization.mean = j.at("standardization").at("mean").get<double>();
    fit.standardization.sd = j.at("standardization").at("sd").get<double>();
    fit.config = j.at("config");
    if (!j.at("propriety").is_null()) fit.propriety = propriety_from(j.at("propriety"));
    if (!j.at("psrf").is_null()) fit.psrf = psrf_from(j.at("psrf"));
    fit.warnings = j.at("warnings").get<std::vector<std::string>>();
    fit.draws_file = j.at("draws_file").get<std::string>();
    fit.manifest_file = j.at("manifest").get<std::string>();
    fit.X_train = matrix_from(j.at("X_train"));
    if (!j.at("covariate_scaling").is_null()) {
      CovariateScaling s;
      s.mean = vector_from(j.at("covariate_scaling").at("mean")).transpose();
      s.sd = vector_from(j.at("covariate_scaling").at("sd")).transpose();
      if (s.mean.size() != fit.X_train.cols() || s.sd.size() != fit.X_train.cols()) {
        throw DataError("covariate scaling does not match X_train");
      }
      fit.covariate_scaling = s;
    }

    fit.summary.method = fit.method;
    fit.summary.beta_mean = vector_from(j.at("beta_mean"));
    fit.summary.m_used = j.at("draws_used").get<Eigen::Index>();
    const Eigen::Index dim = fit.summary.beta_mean.size();
    if (dim != fit.X_train.rows() + 1) throw DataError("beta_mean length does not match X_train rows + 1");
    const Json& cov = j.at("mcse_covariance");
    if (fit.method == Method::kSprvm) {
      if (cov.is_null()) throw DataError("SPRVM fit file lacks mcse_covariance");
      BatchMeansCov s;
      s.method = parse_covariance_method(cov.at("method").get<std::string>());
      s.M = cov.at("M").get<Eigen::Index>();
      s.batch_size = cov.at("batch_size").get<Eigen::Index>();
      s.batch_count = cov.at("batch_count").get<Eigen::Index>();
      s.sigma_hat = matrix_from(cov.at("sigma_hat"));
      if (s.sigma_hat.rows() != dim || s.sigma_hat.cols() != dim) {
        throw DataError("mcse_covariance has the wrong shape");
      }
      fit.summary.sigma = std::move(s);
    }
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit file: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed fit file: ") + e.what());
  }
}

FitArtifact load_fit(const std::string& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
  return fit_from_json(j);
}

Json to_json(const RunManifest& m) {
  Json inputs = Json::array();
  for (const auto& [path, digest] : m.inputs) inputs.push_back({{"path", path}, {"sha256", digest}});
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["software"] = {{"name", "sprvm"}, {"version", kSoftwareVersion}};
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  j["inputs"] = inputs;
  j["outputs"] = m.outputs;
  j["propriety"] = m.propriety ? to_json(*m.propriety) : Json(nullptr);
  j["started"] = m.started;
  j["finished"] = m.finished;
  return j;
}

}  // namespace sprvm::io

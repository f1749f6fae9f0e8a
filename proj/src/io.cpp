#include "opgd/io.hpp"

#include "opgd/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#ifndef OPGD_VERSION
#define OPGD_VERSION "0.0.0"
#endif

namespace opgd::io {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_cells(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(unquote(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Sorted distinct values; numeric order when all of them parse as numbers.
std::vector<std::string> sorted_levels(const std::vector<std::string>& values) {
  const std::set<std::string> unique(values.begin(), values.end());
  std::vector<std::string> levels(unique.begin(), unique.end());
  const bool numeric = std::all_of(levels.begin(), levels.end(), [](const std::string& s) { return parse_number(s).has_value(); });
  if (numeric)
    std::stable_sort(levels.begin(), levels.end(),
                     [](const std::string& a, const std::string& b) { return *parse_number(a) < *parse_number(b); });
  return levels;
}

std::vector<int> encode(const std::vector<std::string>& values, const std::vector<std::string>& levels) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < levels.size(); ++i) index[levels[i]] = static_cast<int>(i);
  std::vector<int> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(index.at(v));
  return out;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + " contains non-finite values");
}

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("model file lacks field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("model file field '") + key + "' is malformed: " + e.what());
  }
}

void check_header(const json& j, const std::string& format) {
  if (!j.is_object()) throw DataError("model file is not a JSON object");
  if (get_field<std::string>(j, "format") != format)
    throw DataError("expected a '" + format + "' file, found '" + get_field<std::string>(j, "format") + "'");
  const int version = get_field<int>(j, "version");
  if (version != kFormatVersion) throw DataError("unsupported file version " + std::to_string(version));
}

Vector vector_from(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

Ingested ingest_csv(const std::filesystem::path& path, const IngestOptions& options) {
  if (options.perturb < 0 || !std::isfinite(options.perturb)) throw ConfigError("perturbation fraction must be >= 0");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_cells(line);
      break;
    }
  }
  if (header.empty()) throw DataError("'" + path.string() + "' has no header row");
  if (std::set<std::string>(header.begin(), header.end()).size() != header.size())
    throw DataError("duplicate column names in '" + path.string() + "'");

  auto find_column = [&](const std::optional<std::string>& name, const char* role) -> std::optional<std::size_t> {
    if (!name) return std::nullopt;
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw ConfigError(std::string(role) + " column '" + *name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_col = find_column(options.label_column, "label");
  const auto group_col = find_column(options.group_column, "group");
  if (label_col && group_col && *label_col == *group_col) throw ConfigError("label and group columns must differ");

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_col && c != group_col) feature_cols.push_back(c);
  if (feature_cols.empty()) throw DataError("no feature columns");

  std::vector<double> values;
  std::vector<std::string> label_values, group_values;
  Index n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_cells(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    for (std::size_t c : feature_cols) {
      const auto v = parse_number(cells[c]);
      if (!v)
        throw DataError("line " + std::to_string(line_no) + ", column '" + header[c] + "': cannot parse '" +
                        cells[c] + "' as a number");
      values.push_back(*v);
    }
    if (label_col) label_values.push_back(cells[*label_col]);
    if (group_col) group_values.push_back(cells[*group_col]);
    ++n;
  }
  if (n == 0) throw DataError("'" + path.string() + "' has no data rows");

  const Index p_all = static_cast<Index>(feature_cols.size());
  Matrix X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n, p_all);

  Ingested out;
  std::vector<Index> keep;
  std::vector<std::string> names;
  for (Index j = 0; j < p_all; ++j) {
    const bool constant = (X.col(j).array() == X(0, j)).all();
    const std::string& name = header[feature_cols[j]];
    if (constant && options.drop_constant) {
      out.dropped.push_back(name);
      continue;
    }
    if (constant) out.constant.push_back(name);
    keep.push_back(j);
    names.push_back(name);
  }
  if (keep.empty()) throw DataError("every feature column is constant");
  Matrix Xk(n, static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) Xk.col(static_cast<Index>(j)) = X.col(keep[j]);

  if (options.perturb > 0) {
    const Index p = Xk.cols();
    Vector sd(p);
    for (Index j = 0; j < p; ++j) {
      const double mean = Xk.col(j).mean();
      sd[j] = std::sqrt((Xk.col(j).array() - mean).square().mean());
    }
    double base = 0;
    int nonzero = 0;
    for (Index j = 0; j < p; ++j)
      if (sd[j] > 0) {
        base += sd[j];
        ++nonzero;
      }
    base = nonzero > 0 ? base / nonzero : 1.0;
    for (Index j = 0; j < p; ++j)
      if (!(sd[j] > 0)) sd[j] = base;
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) Xk(i, j) += options.perturb * sd[j] * normal(rng);
  }

  std::vector<int> labels;
  std::vector<std::string> class_names;
  if (label_col) {
    class_names = sorted_levels(label_values);
    labels = encode(label_values, class_names);
  }
  out.data = make_dataset(std::move(Xk), std::move(labels), static_cast<int>(class_names.size()));
  out.data.feature_names = std::move(names);
  if (label_col) out.data.class_names = std::move(class_names);
  if (group_col) out.data.groups = encode(group_values, sorted_levels(group_values));
  return out;
}

Dataset align_to(const Dataset& data, const std::vector<std::string>& feature_names,
                 const std::vector<std::string>& class_names) {
  Dataset out;
  out.X.resize(data.n(), static_cast<Index>(feature_names.size()));
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), feature_names[j]);
    if (it == data.feature_names.end()) throw DataError("data lacks feature column '" + feature_names[j] + "'");
    out.X.col(static_cast<Index>(j)) = data.X.col(it - data.feature_names.begin());
  }
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.num_classes = static_cast<int>(class_names.size());
  out.groups = data.groups;
  if (data.labeled()) {
    std::map<std::string, int> index;
    for (std::size_t k = 0; k < class_names.size(); ++k) index[class_names[k]] = static_cast<int>(k);
    for (int y : data.labels) {
      const std::string& name = data.class_names[y];
      const auto it = index.find(name);
      if (it == index.end()) throw DataError("label '" + name + "' is not a class of the model");
      out.labels.push_back(it->second);
    }
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw DataError("matrix field is not an array");
  if (j.empty()) return Matrix(0, 0);
  const std::size_t cols = j.front().size();
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw DataError("matrix rows have unequal lengths");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw DataError("matrix entry is not a number");
      m(static_cast<Index>(i), static_cast<Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

json to_json(const OpgdModel& model, const std::string& manifest_id) {
  require_finite(model.projection, "projection");
  require_finite(model.projected_means, "projected means");
  require_finite(model.projected_vars, "projected variances");
  const OpgdDiagnostics& d = model.diagnostics;
  json j;
  j["format"] = "opgd-model";
  j["version"] = kFormatVersion;
  j["manifest_id"] = manifest_id;
  j["feature_names"] = model.feature_names;
  j["class_names"] = model.class_names;
  j["priors"] = std::vector<double>(model.priors.data(), model.priors.data() + model.priors.size());
  j["projection"] = to_json(model.projection);
  j["projected_means"] = to_json(model.projected_means);
  j["projected_vars"] = to_json(model.projected_vars);
  j["trace"] = model.trace;
  j["diagnostics"] = {{"clamp_events", d.clamp_events},
                      {"iterations", d.iterations},
                      {"stop_reason", d.stop_reason},
                      {"initial_objective", d.initial_objective},
                      {"final_objective", d.final_objective},
                      {"init_fallback", d.init_fallback},
                      {"training_error", d.training_error}};
  return j;
}

OpgdModel opgd_model_from_json(const json& j) {
  check_header(j, "opgd-model");
  OpgdModel m;
  m.feature_names = get_field<std::vector<std::string>>(j, "feature_names");
  m.class_names = get_field<std::vector<std::string>>(j, "class_names");
  m.priors = vector_from(get_field<std::vector<double>>(j, "priors"));
  m.projection = matrix_from_json(j.at("projection"));
  m.projected_means = matrix_from_json(j.at("projected_means"));
  m.projected_vars = matrix_from_json(j.at("projected_vars"));
  m.trace = get_field<std::vector<double>>(j, "trace");
  const json& d = j.contains("diagnostics") ? j.at("diagnostics") : throw DataError("model file lacks diagnostics");
  m.diagnostics.clamp_events = get_field<int>(d, "clamp_events");
  m.diagnostics.iterations = get_field<int>(d, "iterations");
  m.diagnostics.stop_reason = get_field<std::string>(d, "stop_reason");
  m.diagnostics.initial_objective = get_field<double>(d, "initial_objective");
  m.diagnostics.final_objective = get_field<double>(d, "final_objective");
  m.diagnostics.init_fallback = get_field<bool>(d, "init_fallback");
  m.diagnostics.training_error = get_field<double>(d, "training_error");

  const Index K = m.priors.size();
  const Index p = m.projection.rows();
  const Index q = m.projection.cols();
  if (K < 2 || static_cast<Index>(m.class_names.size()) != K) throw DataError("model classes are inconsistent");
  if (p < 1 || q < 1 || static_cast<Index>(m.feature_names.size()) != p)
    throw DataError("model projection does not match its feature names");
  if (m.projected_means.rows() != K || m.projected_means.cols() != q || m.projected_vars.rows() != K ||
      m.projected_vars.cols() != q)
    throw DataError("projected parameters have the wrong shape");
  if ((m.projected_vars.array() <= 0).any()) throw DataError("projected variances must be positive");
  if ((m.priors.array() <= 0).any() || std::abs(m.priors.sum() - 1.0) > 1e-9)
    throw DataError("priors must be positive and sum to 1");
  return m;
}

json to_json(const GaussianComponents& gmm, const std::vector<std::string>& feature_names,
             const std::string& manifest_id) {
  json j;
  j["format"] = "opgd-gmm";
  j["version"] = kFormatVersion;
  j["manifest_id"] = manifest_id;
  j["feature_names"] = feature_names;
  j["weights"] = std::vector<double>(gmm.weights.data(), gmm.weights.data() + gmm.weights.size());
  Matrix means(gmm.size(), gmm.dim());
  for (int k = 0; k < gmm.size(); ++k) means.row(k) = gmm.means[k].transpose();
  j["means"] = to_json(means);
  json covs = json::array();
  for (const Matrix& c : gmm.covariances) {
    require_finite(c, "covariance");
    covs.push_back(to_json(c));
  }
  j["covariances"] = std::move(covs);
  return j;
}

GmmModel gmm_from_json(const json& j, std::vector<std::string>* feature_names) {
  check_header(j, "opgd-gmm");
  GmmModel g;
  g.weights = vector_from(get_field<std::vector<double>>(j, "weights"));
  const Matrix means = matrix_from_json(j.at("means"));
  const json& covs = j.at("covariances");
  const Index K = g.weights.size();
  const Index p = means.cols();
  if (K < 1 || means.rows() != K || !covs.is_array() || static_cast<Index>(covs.size()) != K)
    throw DataError("mixture components are inconsistent");
  if ((g.weights.array() <= 0).any() || std::abs(g.weights.sum() - 1.0) > 1e-9)
    throw DataError("mixture weights must be positive and sum to 1");
  for (Index k = 0; k < K; ++k) {
    g.means.push_back(means.row(k).transpose());
    Matrix c = matrix_from_json(covs[static_cast<std::size_t>(k)]);
    if (c.rows() != p || c.cols() != p) throw DataError("covariance has the wrong shape");
    if (!c.isApprox(c.transpose(), 1e-12)) throw DataError("covariance is not symmetric");
    if (Eigen::LLT<Matrix>(c).info() != Eigen::Success) throw DataError("covariance is not positive definite");
    g.covariances.push_back(std::move(c));
  }
  const auto names = get_field<std::vector<std::string>>(j, "feature_names");
  if (!names.empty() && static_cast<Index>(names.size()) != p) throw DataError("feature names do not match the mixture");
  if (feature_names) *feature_names = names;
  return g;
}

std::string coordinates_csv(const Matrix& Z, const std::vector<std::string>& labels) {
  std::string out;
  for (Index j = 0; j < Z.cols(); ++j) out += (j ? ",v" : "v") + std::to_string(j + 1);
  if (!labels.empty()) out += ",label";
  out += '\n';
  for (Index i = 0; i < Z.rows(); ++i) {
    for (Index j = 0; j < Z.cols(); ++j) out += (j ? "," : "") + format_double(Z(i, j));
    if (!labels.empty()) out += "," + labels[static_cast<std::size_t>(i)];
    out += '\n';
  }
  return out;
}

std::string projection_csv(const Matrix& V, const std::vector<std::string>& feature_names) {
  std::string out = "feature";
  for (Index j = 0; j < V.cols(); ++j) out += ",v" + std::to_string(j + 1);
  out += '\n';
  for (Index i = 0; i < V.rows(); ++i) {
    out += i < static_cast<Index>(feature_names.size()) ? feature_names[i] : "x" + std::to_string(i + 1);
    for (Index j = 0; j < V.cols(); ++j) out += "," + format_double(V(i, j));
    out += '\n';
  }
  return out;
}

std::string RunManifest::id() const {
  json j = to_json();
  j.erase("started");
  j.erase("finished");
  j.erase("artifacts");
  j.erase("manifest_id");
  const std::string text = j.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["dataset"] = dataset;
  j["config"] = config;
  j["seed"] = seed;
  j["version"] = version;
  j["artifacts"] = artifacts;
  j["started"] = started;
  j["finished"] = finished;
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string version_string() { return OPGD_VERSION; }

}  // namespace opgd::io

#pragma once

#include "opgd/classifier.hpp"
#include "opgd/clustering.hpp"
#include "opgd/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace opgd::io {

using json = nlohmann::json;

struct IngestOptions {
  std::optional<std::string> label_column;
  std::optional<std::string> group_column;
  double perturb = 0;  // sd as a fraction of each column's sd
  bool drop_constant = false;
  std::uint64_t seed = 0;
};

struct Ingested {
  Dataset data;
  std::vector<std::string> dropped;  // names of constant columns removed
  std::vector<std::string> constant; // constant columns still present
};

/// Reads a comma-separated table with a header row. Label and group columns may
/// hold arbitrary strings; every other cell must be numeric.
///
/// Labels are mapped to 0..K-1 in sorted order (numeric order when every label
/// parses as a number). Constant columns are dropped on request. With perturb > 0
/// each value receives N(0, (perturb * sd_j)^2) noise drawn from `seed`; for a
/// constant column sd_j is replaced by the mean sd of the other columns (or 1).
Ingested ingest_csv(const std::filesystem::path& path, const IngestOptions& options);

/// Restricts `data` to the named features in the given order and re-indexes its
/// labels against `class_names`. Throws DataError on missing names or unknown labels.
Dataset align_to(const Dataset& data, const std::vector<std::string>& feature_names,
                 const std::vector<std::string>& class_names);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double x);

/// Writes through a temporary file in the same directory followed by a rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

/// Canonical serialization: sorted keys, two-space indent, trailing newline.
std::string dump(const json& j);

inline constexpr int kFormatVersion = 1;

json to_json(const OpgdModel& model, const std::string& manifest_id);
OpgdModel opgd_model_from_json(const json& j);

json to_json(const GaussianComponents& gmm, const std::vector<std::string>& feature_names,
             const std::string& manifest_id);
GmmModel gmm_from_json(const json& j, std::vector<std::string>* feature_names = nullptr);

json to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

/// Delimited table of XV with columns v1..vp' and, when labels are given, label.
std::string coordinates_csv(const Matrix& Z, const std::vector<std::string>& labels);

/// V with one row per input feature.
std::string projection_csv(const Matrix& V, const std::vector<std::string>& feature_names);

struct RunManifest {
  std::string command;
  std::string dataset;
  json config = json::object();
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> artifacts;
  std::string started;
  std::string finished;

  /// FNV-1a over the manifest without timestamps or artifact list, in hex.
  std::string id() const;
  json to_json() const;
};

std::string utc_timestamp();

std::string version_string();

}  // namespace opgd::io

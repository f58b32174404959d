#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "vqcm/covariance.hpp"
#include "vqcm/error.hpp"

namespace vqcm {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelExtension = ".vqcm.json";

namespace detail {

using nlohmann::json;

inline json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.begin(), v.end())); }

inline json config_to_json(const FrontendConfig& c) {
  return {{"sample_rate_hz", c.sample_rate_hz},
          {"preemphasis_coeff", c.preemphasis_coeff},
          {"frame_ms", c.frame_ms},
          {"overlap_fraction", c.overlap_fraction},
          {"lpc_order", c.lpc_order},
          {"cepstral_order_p1", c.cepstral_order_p1},
          {"covariance_order_p2", c.covariance_order_p2}};
}

inline FrontendConfig config_from_json(const json& j) {
  FrontendConfig c;
  c.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  c.preemphasis_coeff = j.at("preemphasis_coeff").get<double>();
  c.frame_ms = j.at("frame_ms").get<double>();
  c.overlap_fraction = j.at("overlap_fraction").get<double>();
  c.lpc_order = j.at("lpc_order").get<int>();
  c.cepstral_order_p1 = j.at("cepstral_order_p1").get<int>();
  c.covariance_order_p2 = j.at("covariance_order_p2").get<int>();
  return c;
}

inline Error dimension_error(const std::string& what) { return Error(ErrorCode::kDimensionMismatch, what); }

}  // namespace detail

/// Canonical JSON document for a model: keys sorted, floats in shortest
/// round-trip decimal form.
inline nlohmann::json model_to_json(const SpeakerModel& model) {
  using detail::json;
  json j;
  j["format_version"] = kModelFormatVersion;
  j["speaker_id"] = model.speaker_id;
  j["method"] = std::string(to_string(model.method));
  j["config"] = detail::config_to_json(model.config);
  if (model.method != Method::kCm) {
    j["codebook"] = {{"bits", model.codebook.bits},
                     {"dim", model.codebook.dim},
                     {"training_distortion", model.codebook.training_distortion},
                     {"centroids", model.codebook.centroids}};
  }
  if (model.method != Method::kVq) {
    json clusters = json::array();
    for (const auto& c : model.clusters) {
      json rows = json::array();
      for (Eigen::Index r = 0; r < c.matrix.rows(); ++r) rows.push_back(detail::vector_to_json(c.matrix.row(r)));
      clusters.push_back({{"dim", c.dim},
                          {"sample_count", c.sample_count},
                          {"ridge_applied", c.ridge_applied},
                          {"mean", detail::vector_to_json(c.mean)},
                          {"matrix", std::move(rows)}});
    }
    j["clusters"] = std::move(clusters);
  }
  return j;
}

inline SpeakerModel model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch, "model format " + std::to_string(version) +
                                                   ", expected " + std::to_string(kModelFormatVersion));
    }
    SpeakerModel model;
    model.speaker_id = j.at("speaker_id").get<std::string>();
    model.method = parse_method(j.at("method").get<std::string>());
    model.config = detail::config_from_json(j.at("config"));
    const auto p1 = static_cast<std::size_t>(model.config.cepstral_order_p1);
    const int p2 = model.config.covariance_order_p2;

    std::size_t expected_clusters = 1;
    if (model.method != Method::kCm) {
      const auto& cb = j.at("codebook");
      model.codebook.bits = cb.at("bits").get<int>();
      model.codebook.dim = cb.at("dim").get<std::size_t>();
      model.codebook.training_distortion = cb.at("training_distortion").get<double>();
      model.codebook.centroids = cb.at("centroids").get<std::vector<std::vector<double>>>();
      if (model.codebook.bits < 0 || model.codebook.bits > 30) {
        throw Error(ErrorCode::kSchemaViolation, "codebook bits out of range");
      }
      expected_clusters = std::size_t{1} << model.codebook.bits;
      if (model.codebook.centroids.size() != expected_clusters) {
        throw Error(ErrorCode::kSchemaViolation, std::to_string(model.codebook.centroids.size()) +
                                                     " centroids for a " + std::to_string(model.codebook.bits) +
                                                     "-bit codebook");
      }
      if (model.codebook.dim != p1) throw detail::dimension_error("codebook dim differs from P1");
      for (const auto& c : model.codebook.centroids) {
        if (c.size() != p1) throw detail::dimension_error("centroid length differs from P1");
      }
    }
    if (model.method != Method::kVq) {
      const auto& clusters = j.at("clusters");
      if (!clusters.is_array() || clusters.size() != expected_clusters) {
        throw Error(ErrorCode::kSchemaViolation, "expected " + std::to_string(expected_clusters) + " clusters");
      }
      for (const auto& jc : clusters) {
        CovarianceModel c;
        c.dim = jc.at("dim").get<int>();
        c.sample_count = jc.at("sample_count").get<std::size_t>();
        c.ridge_applied = jc.at("ridge_applied").get<double>();
        if (c.dim != p2) throw detail::dimension_error("cluster dim differs from P2");
        const auto mean = jc.at("mean").get<std::vector<double>>();
        const auto rows = jc.at("matrix").get<std::vector<std::vector<double>>>();
        if (mean.size() != static_cast<std::size_t>(p2) || rows.size() != static_cast<std::size_t>(p2)) {
          throw detail::dimension_error("cluster payload size differs from P2");
        }
        c.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), p2);
        c.matrix.resize(p2, p2);
        for (int r = 0; r < p2; ++r) {
          if (rows[static_cast<std::size_t>(r)].size() != static_cast<std::size_t>(p2)) {
            throw detail::dimension_error("covariance row length differs from P2");
          }
          for (int k = 0; k < p2; ++k) c.matrix(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
        }
        if (c.matrix != c.matrix.transpose()) {
          throw Error(ErrorCode::kSchemaViolation, "covariance matrix is not symmetric");
        }
        model.clusters.push_back(std::move(c));
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, e.what());
  }
}

inline std::string serialize_model(const SpeakerModel& model) { return model_to_json(model).dump(1) + "\n"; }

inline SpeakerModel deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, e.what());
  }
  return model_from_json(j);
}

/// Writes to a sibling temp file, then renames over `path`.
inline void save_model(const SpeakerModel& model, const std::filesystem::path& path) {
  const auto text = serialize_model(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "rename to " + path.string() + ": " + ec.message());
}

inline SpeakerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_model(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

/// Loads every *.vqcm.json in `dir`, sorted by file name.
inline std::vector<SpeakerModel> load_models(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto name = entry.path().filename().string();
    if (name.size() > kModelExtension.size() && name.ends_with(kModelExtension)) files.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<SpeakerModel> models;
  for (const auto& f : files) models.push_back(load_model(f));
  return models;
}

}  // namespace vqcm

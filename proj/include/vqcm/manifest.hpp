#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vqcm/audio_io.hpp"
#include "vqcm/error.hpp"

namespace vqcm {

enum class Split { kTrain, kTest };

inline std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }
inline std::string_view to_string(AudioFormat f) { return f == AudioFormat::kWav ? "wav" : "alaw"; }

struct ManifestEntry {
  std::string speaker_id;
  std::filesystem::path path;
  Split split = Split::kTrain;
  AudioFormat format = AudioFormat::kWav;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// CSV corpus listing with header `speaker_id,path,split,format`. Relative
/// paths resolve against `base_dir` (the manifest's directory when read
/// from disk).
struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const {
    return e.path.is_absolute() ? e.path : base_dir / e.path;
  }

  std::vector<std::string> speakers() const {
    std::set<std::string> ids;
    for (const auto& e : entries) ids.insert(e.speaker_id);
    return {ids.begin(), ids.end()};
  }

  /// Speakers lacking a train or a test entry.
  std::vector<std::string> incomplete_speakers() const {
    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& e : entries) {
      auto& c = counts[e.speaker_id];
      (e.split == Split::kTrain ? c.first : c.second)++;
    }
    std::vector<std::string> out;
    for (const auto& [id, c] : counts) {
      if (c.first == 0 || c.second == 0) out.push_back(id);
    }
    return out;
  }
};

inline CorpusManifest parse_manifest(std::istream& in, std::filesystem::path base_dir = {}) {
  CorpusManifest manifest;
  manifest.base_dir = std::move(base_dir);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::kSchemaViolation, "manifest line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line_no == 1) {
      if (fields != std::vector<std::string>{"speaker_id", "path", "split", "format"}) {
        fail("expected header speaker_id,path,split,format");
      }
      continue;
    }
    if (fields.size() != 4) fail("expected 4 fields");
    ManifestEntry e;
    e.speaker_id = fields[0];
    if (e.speaker_id.empty()) fail("empty speaker_id");
    e.path = fields[1];
    if (fields[2] == "train") {
      e.split = Split::kTrain;
    } else if (fields[2] == "test") {
      e.split = Split::kTest;
    } else {
      fail("split must be train or test");
    }
    if (fields[3] == "wav") {
      e.format = AudioFormat::kWav;
    } else if (fields[3] == "alaw") {
      e.format = AudioFormat::kAlaw;
    } else {
      fail("format must be wav or alaw");
    }
    manifest.entries.push_back(std::move(e));
  }
  if (line_no == 0) fail("empty manifest");
  return manifest;
}

inline CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

inline void write_manifest(std::ostream& out, const CorpusManifest& manifest) {
  out << "speaker_id,path,split,format\n";
  for (const auto& e : manifest.entries) {
    out << e.speaker_id << ',' << e.path.generic_string() << ',' << to_string(e.split) << ','
        << to_string(e.format) << '\n';
  }
}

inline void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write manifest " + path.string());
  write_manifest(out, manifest);
}

}  // namespace vqcm

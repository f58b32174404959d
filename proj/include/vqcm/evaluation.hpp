#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqcm/covariance.hpp"
#include "vqcm/error.hpp"
#include "vqcm/frontend.hpp"
#include "vqcm/fusion.hpp"
#include "vqcm/manifest.hpp"
#include "vqcm/noise.hpp"

namespace vqcm {

// ---------------------------------------------------------------------------
// Model sizes
// ---------------------------------------------------------------------------

/// 2^bits centroids of dimension p.
constexpr std::int64_t param_count_vq(int bits, int p) { return (std::int64_t{1} << bits) * p; }

/// Free entries of a symmetric p x p matrix.
constexpr std::int64_t param_count_cm(int p) { return (std::int64_t{p} * p + p) / 2; }

/// 2^bits clusters, each a p1-dim centroid and a symmetric p2 x p2 matrix.
constexpr std::int64_t param_count_vqcm(int bits, int p1, int p2) {
  return (std::int64_t{1} << bits) * (p1 + param_count_cm(p2));
}

// ---------------------------------------------------------------------------
// Evaluation grid
// ---------------------------------------------------------------------------

/// One system under test: a method plus the front-end it runs on.
struct MethodConfig {
  MethodSpec spec;
  FrontendConfig frontend;

  /// Builds a config from the CLI-level knobs. CM runs on P1 = max(p1, p2)
  /// so a 20x20 matrix gets 20 cepstra.
  static MethodConfig make(Method method, int bits, int p1, int p2, FrontendConfig base = {}) {
    MethodConfig m;
    m.spec = {method, method == Method::kCm ? 0 : bits};
    m.frontend = base;
    m.frontend.set_cepstral_order(method == Method::kCm ? std::max(p1, p2) : p1);
    m.frontend.covariance_order_p2 = method == Method::kVq ? std::min(p2, m.frontend.cepstral_order_p1) : p2;
    return m;
  }

  std::int64_t parameters() const {
    switch (spec.method) {
      case Method::kVq: return param_count_vq(spec.bits, frontend.cepstral_order_p1);
      case Method::kCm: return param_count_cm(frontend.covariance_order_p2);
      case Method::kVqcm:
        return param_count_vqcm(spec.bits, frontend.cepstral_order_p1, frontend.covariance_order_p2);
    }
    return 0;
  }

  std::string label() const {
    const auto p1 = std::to_string(frontend.cepstral_order_p1);
    const auto p2 = std::to_string(frontend.covariance_order_p2);
    const auto bits = std::to_string(spec.bits);
    switch (spec.method) {
      case Method::kVq: return "vq-b" + bits + "-p" + p1;
      case Method::kCm: return "cm-p" + p2;
      case Method::kVqcm: return "vqcm-b" + bits + "-p" + p1 + "-q" + p2;
    }
    return "?";
  }

  friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

/// Whether a fusion scheme can produce a score for this kind of model.
inline bool scheme_applies(const MethodSpec& spec, FusionScheme scheme) {
  switch (scheme) {
    case FusionScheme::kVqOnly: return spec.method != Method::kCm;
    case FusionScheme::kCmOnlyGlobal: return spec.method == Method::kCm || (spec.method == Method::kVqcm && spec.bits == 0);
    case FusionScheme::kSumCm: return spec.method != Method::kVq;
    default: return true;
  }
}

struct EvaluationOptions {
  std::vector<MethodConfig> methods;
  std::vector<double> snrs_db{std::numeric_limits<double>::infinity()};
  std::vector<FusionScheme> schemes{FusionScheme::kSumAll};
  std::uint64_t noise_seed = 0;
  /// Independent noise draws per test utterance at each finite SNR.
  int noise_repeats = 1;
  LbgOptions lbg;
  FusionOptions fusion;
  /// Also tally each classifier d_0..d_N on its own.
  bool per_classifier = true;
};

/// Accuracy of one decision rule at one SNR. `classifier` is a fusion scheme
/// name or a single classifier ("d0", "d1", ...).
struct RateCell {
  double snr_db = 0.0;
  std::string classifier;
  int correct = 0;
  int undecided = 0;
  int total = 0;
  std::map<std::string, std::map<std::string, int>> confusion;  // true -> decided -> count

  double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct MethodResult {
  MethodConfig config;
  std::int64_t parameters = 0;
  std::vector<RateCell> cells;
  // Wall-clock telemetry, not a model property.
  double enroll_seconds = 0.0;
  double test_seconds = 0.0;

  const RateCell* find(double snr_db, std::string_view classifier) const {
    for (const auto& c : cells) {
      if (c.classifier == classifier && (c.snr_db == snr_db || (std::isinf(c.snr_db) && std::isinf(snr_db)))) {
        return &c;
      }
    }
    return nullptr;
  }
};

struct EvaluationReport {
  std::vector<MethodResult> methods;
  std::vector<std::string> failures;  // entry-level problems, one line each
  nlohmann::json metadata;
};

inline std::string format_snr(double snr_db) {
  if (std::isinf(snr_db)) return "inf";
  std::ostringstream out;
  out << snr_db;
  return out.str();
}

inline double parse_snr(std::string_view text) {
  if (text == "inf" || text == "Inf" || text == "INF") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig, "bad SNR value '" + std::string(text) + "'");
  }
}

namespace detail {

inline FeatureSequence concat(const std::vector<FeatureSequence>& parts, std::string id) {
  FeatureSequence out(parts.front().dim(), std::move(id));
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back(p[i]);
  }
  return out;
}

inline nlohmann::json options_to_json(const EvaluationOptions& options) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : options.methods) {
    methods.push_back({{"label", m.label()},
                       {"method", std::string(to_string(m.spec.method))},
                       {"bits", m.spec.bits},
                       {"p1", m.frontend.cepstral_order_p1},
                       {"p2", m.frontend.covariance_order_p2},
                       {"lpc_order", m.frontend.lpc_order},
                       {"preemphasis", m.frontend.preemphasis_coeff},
                       {"frame_ms", m.frontend.frame_ms},
                       {"overlap", m.frontend.overlap_fraction}});
  }
  std::vector<std::string> snrs, schemes;
  for (double s : options.snrs_db) snrs.push_back(format_snr(s));
  for (auto s : options.schemes) schemes.emplace_back(to_string(s));
  return {{"methods", methods},
          {"snr_db", snrs},
          {"schemes", schemes},
          {"noise_seed", options.noise_seed},
          {"noise_repeats", options.noise_repeats},
          {"lbg", {{"epsilon", options.lbg.epsilon}, {"max_iters", options.lbg.max_iters}, {"tol", options.lbg.tol}}},
          {"z_normalize", options.fusion.z_normalize}};
}

}  // namespace detail

/// Enrolls every speaker on its train split, then for each SNR corrupts
/// every test utterance `noise_repeats` times (seeded by noise_seed, the
/// manifest row and the repeat), scores it against all speakers, and
/// tallies rank-1 decisions.
///
/// Unreadable or featureless entries are recorded in `failures` and
/// skipped; the run throws only when a speaker is left without train or
/// test data.
inline EvaluationReport run_evaluation(const CorpusManifest& manifest, const EvaluationOptions& options) {
  using Clock = std::chrono::steady_clock;
  if (options.methods.empty()) throw Error(ErrorCode::kInvalidConfig, "no methods to evaluate");
  if (options.noise_repeats < 1) throw Error(ErrorCode::kInvalidConfig, "noise_repeats must be >= 1");
  for (const auto& m : options.methods) m.frontend.validate();
  if (const auto missing = manifest.incomplete_speakers(); !missing.empty()) {
    throw Error(ErrorCode::kSchemaViolation, "speaker '" + missing.front() + "' lacks a train or test entry");
  }

  EvaluationReport report;
  report.metadata = detail::options_to_json(options);

  // Load audio once.
  std::vector<std::optional<AudioSignal>> audio(manifest.entries.size());
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    try {
      audio[i] = read_audio(manifest.resolve(e), e.format);
    } catch (const Error& err) {
      report.failures.push_back(e.speaker_id + ": " + err.what());
    }
  }

  const auto speakers = manifest.speakers();
  auto require_data = [&](const std::string& speaker, Split split, bool ok) {
    if (!ok) {
      throw Error(ErrorCode::kInsufficientData,
                  "speaker '" + speaker + "' has no usable " + std::string(to_string(split)) + " data");
    }
  };

  for (const auto& method : options.methods) {
    MethodResult result;
    result.config = method;
    result.parameters = method.parameters();

    // Enrollment.
    auto t0 = Clock::now();
    std::vector<SpeakerModel> models;
    for (const auto& speaker : speakers) {
      std::vector<FeatureSequence> parts;
      for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        if (e.speaker_id != speaker || e.split != Split::kTrain || !audio[i]) continue;
        try {
          parts.push_back(extract_features(*audio[i], method.frontend, e.path.string()));
        } catch (const Error& err) {
          report.failures.push_back(method.label() + " " + speaker + ": " + err.what());
        }
      }
      require_data(speaker, Split::kTrain, !parts.empty());
      try {
        models.push_back(enroll(detail::concat(parts, speaker), method.spec, method.frontend, speaker, options.lbg));
      } catch (const Error& err) {
        throw Error(err.code(), method.label() + " enrollment of '" + speaker + "': " + err.what());
      }
    }
    result.enroll_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    // Test.
    t0 = Clock::now();
    std::vector<FusionScheme> schemes;
    for (auto s : options.schemes) {
      if (scheme_applies(method.spec, s)) schemes.push_back(s);
    }
    for (double snr : options.snrs_db) {
      std::map<std::string, RateCell> cells;
      std::vector<std::string> order;
      auto cell = [&](const std::string& name) -> RateCell& {
        auto [it, inserted] = cells.try_emplace(name);
        if (inserted) {
          it->second.snr_db = snr;
          it->second.classifier = name;
          order.push_back(name);
        }
        return it->second;
      };
      for (auto s : schemes) cell(std::string(to_string(s)));

      std::map<std::string, bool> has_test;
      const std::size_t repeats = std::isinf(snr) ? 1 : static_cast<std::size_t>(options.noise_repeats);
      const std::size_t n_entries = manifest.entries.size();
      for (std::size_t trial = 0; trial < n_entries * repeats; ++trial) {
        const std::size_t i = trial % n_entries;
        const auto& e = manifest.entries[i];
        if (e.split != Split::kTest || !audio[i]) continue;
        std::vector<ScoreVector> scores;
        try {
          const auto noisy = add_noise(*audio[i], {snr, mix_seed(options.noise_seed, trial)});
          const auto features = extract_features(noisy, method.frontend, e.path.string());
          for (const auto& m : models) scores.push_back(score(features, m));
        } catch (const Error& err) {
          report.failures.push_back(method.label() + " snr " + format_snr(snr) + " " + e.path.string() + ": " +
                                    err.what());
          continue;
        }
        has_test[e.speaker_id] = true;

        auto tally = [&](RateCell& c, const std::optional<std::string>& decided) {
          ++c.total;
          if (!decided) {
            ++c.undecided;
            return;
          }
          ++c.confusion[e.speaker_id][*decided];
          if (*decided == e.speaker_id) ++c.correct;
        };
        for (auto s : schemes) {
          std::optional<std::string> decided;
          try {
            decided = decide(scores, s, options.fusion);
          } catch (const Error& err) {
            if (err.code() != ErrorCode::kUndecidableScore) throw;
          }
          tally(cell(std::string(to_string(s))), decided);
        }
        if (options.per_classifier) {
          const std::size_t n = scores.front().classifier_count();
          for (std::size_t j = 0; j < n; ++j) {
            if (j == 0 && method.spec.method == Method::kCm) continue;
            std::optional<std::string> decided;
            std::optional<double> best;
            for (const auto& s : scores) {
              const auto v = s.classifier(j);
              if (v && (!best || *v < *best)) {
                best = v;
                decided = s.speaker_id;
              }
            }
            tally(cell("d" + std::to_string(j)), decided);
          }
        }
      }
      for (const auto& speaker : speakers) require_data(speaker, Split::kTest, has_test[speaker]);
      for (const auto& name : order) result.cells.push_back(std::move(cells[name]));
    }
    result.test_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    report.methods.push_back(std::move(result));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

inline void write_report_csv(std::ostream& out, const MethodResult& m) {
  out << "method,bits,p1,p2,parameters,snr_db,classifier,correct,undecided,total,rate\n";
  out << std::setprecision(17);
  for (const auto& c : m.cells) {
    out << to_string(m.config.spec.method) << ',' << m.config.spec.bits << ',' << m.config.frontend.cepstral_order_p1
        << ',' << m.config.frontend.covariance_order_p2 << ',' << m.parameters << ',' << format_snr(c.snr_db) << ','
        << c.classifier << ',' << c.correct << ',' << c.undecided << ',' << c.total << ',' << c.rate() << '\n';
  }
}

/// Human table: one row per classifier, one column per SNR, rates in %.
inline void write_report_table(std::ostream& out, const MethodResult& m) {
  std::vector<double> snrs;
  std::vector<std::string> rows;
  for (const auto& c : m.cells) {
    if (std::find_if(snrs.begin(), snrs.end(), [&](double s) { return format_snr(s) == format_snr(c.snr_db); }) ==
        snrs.end()) {
      snrs.push_back(c.snr_db);
    }
    if (std::find(rows.begin(), rows.end(), c.classifier) == rows.end()) rows.push_back(c.classifier);
  }
  out << m.config.label() << "  (parameters: " << m.parameters << ")\n";
  out << std::left << std::setw(12) << "classifier";
  for (double s : snrs) out << std::right << std::setw(10) << (std::isinf(s) ? "SNR inf" : format_snr(s) + " dB");
  out << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r;
    for (double s : snrs) {
      const auto* c = m.find(s, r);
      out << std::right << std::setw(10);
      if (c) {
        out << 100.0 * c->rate();
      } else {
        out << "-";
      }
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

/// Classifier reported in the summary for a method: its natural decision rule.
/// Falls back to the first tallied rule when that one was not requested.
inline std::string headline_classifier(const MethodResult& m, const EvaluationOptions& options) {
  std::string rule = "sum-all";
  switch (m.config.spec.method) {
    case Method::kVq: rule = "vq"; break;
    case Method::kCm: rule = "cm"; break;
    case Method::kVqcm:
      if (!options.schemes.empty()) rule = std::string(to_string(options.schemes.front()));
      break;
  }
  for (const auto& c : m.cells) {
    if (c.classifier == rule) return rule;
  }
  return m.cells.empty() ? rule : m.cells.front().classifier;
}

/// Summary: one row per method with its parameter count and
/// headline rate at each SNR.
inline void write_summary_table(std::ostream& out, const EvaluationReport& report, const EvaluationOptions& options) {
  out << std::left << std::setw(22) << "method" << std::setw(10) << "rule" << std::right << std::setw(8) << "Param.";
  for (double s : options.snrs_db) out << std::setw(10) << (std::isinf(s) ? "SNR inf" : format_snr(s) + " dB");
  out << '\n' << std::fixed << std::setprecision(2);
  for (const auto& m : report.methods) {
    const auto rule = headline_classifier(m, options);
    out << std::left << std::setw(22) << m.config.label() << std::setw(10) << rule << std::right << std::setw(8)
        << m.parameters;
    for (double s : options.snrs_db) {
      const auto* c = m.find(s, rule);
      out << std::setw(10);
      if (c) {
        out << 100.0 * c->rate();
      } else {
        out << "-";
      }
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : m.cells) {
      cells.push_back({{"snr_db", format_snr(c.snr_db)},
                       {"classifier", c.classifier},
                       {"correct", c.correct},
                       {"undecided", c.undecided},
                       {"total", c.total},
                       {"rate", c.rate()},
                       {"confusion", c.confusion}});
    }
    methods.push_back({{"label", m.config.label()},
                       {"parameters", m.parameters},
                       {"cells", cells},
                       {"telemetry", {{"enroll_seconds", m.enroll_seconds}, {"test_seconds", m.test_seconds}}}});
  }
  return {{"metadata", report.metadata}, {"methods", methods}, {"failures", report.failures}};
}

/// Writes <label>.csv and <label>.txt per method, summary.txt, summary.csv
/// and report.json into `out_dir`.
inline void write_report(const std::filesystem::path& out_dir, const EvaluationReport& report,
                         const EvaluationOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(out_dir / name, std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIoFailure, "cannot write " + (out_dir / name).string());
    return f;
  };
  for (const auto& m : report.methods) {
    auto csv = open(m.config.label() + ".csv");
    write_report_csv(csv, m);
    auto txt = open(m.config.label() + ".txt");
    write_report_table(txt, m);
  }
  {
    auto txt = open("summary.txt");
    write_summary_table(txt, report, options);
    auto csv = open("summary.csv");
    csv << "method,bits,p1,p2,parameters,classifier,snr_db,rate\n" << std::setprecision(17);
    for (const auto& m : report.methods) {
      const auto rule = headline_classifier(m, options);
      for (double s : options.snrs_db) {
        if (const auto* c = m.find(s, rule)) {
          csv << to_string(m.config.spec.method) << ',' << m.config.spec.bits << ','
              << m.config.frontend.cepstral_order_p1 << ',' << m.config.frontend.covariance_order_p2 << ','
              << m.parameters << ',' << rule << ',' << format_snr(s) << ',' << c->rate() << '\n';
        }
      }
    }
  }
  auto js = open("report.json");
  js << report_to_json(report).dump(1) << '\n';
}

}  // namespace vqcm

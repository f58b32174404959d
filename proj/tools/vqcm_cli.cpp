// vqcm: synthesize corpora, enroll speakers, identify utterances and run
// evaluation grids.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "vqcm/vqcm.hpp"

namespace fs = std::filesystem;
using namespace vqcm;

namespace {

fs::path default_out(const std::string& leaf) {
  if (const char* env = std::getenv("VQCM_OUT_DIR"); env && *env) return fs::path(env) / leaf;
  return fs::path("out") / leaf;
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

nlohmann::json run_metadata(const std::string& command, int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  const auto now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return {{"command", command}, {"argv", args}, {"started_utc", stamp}, {"model_format_version", kModelFormatVersion}};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << j.dump(1) << '\n';
}

// Method tokens: vq, cm, vqcm with optional ":bits" (vq, vqcm) or ":p2" (cm),
// e.g. "vq:6", "cm:20", "vqcm:1".
std::vector<MethodConfig> parse_methods(const std::string& text, int bits, int p1, int p2) {
  std::vector<MethodConfig> out;
  for (const auto& token : split_list(text)) {
    const auto colon = token.find(':');
    const auto method = parse_method(token.substr(0, colon));
    int b = bits, q = p2;
    if (colon != std::string::npos) {
      const int v = std::stoi(token.substr(colon + 1));
      (method == Method::kCm ? q : b) = v;
    }
    out.push_back(MethodConfig::make(method, b, p1, q));
  }
  return out;
}

std::vector<MethodConfig> standard_methods() {
  return {MethodConfig::make(Method::kVq, 1, 16, 10),   MethodConfig::make(Method::kVq, 2, 16, 10),
          MethodConfig::make(Method::kVq, 6, 16, 10),   MethodConfig::make(Method::kCm, 0, 16, 10),
          MethodConfig::make(Method::kCm, 0, 20, 20),   MethodConfig::make(Method::kVqcm, 1, 16, 10),
          MethodConfig::make(Method::kVqcm, 2, 16, 10)};
}

struct SynthArgs {
  std::string out;
  SynthCorpusOptions opt;
};

int cmd_synth(const SynthArgs& a, const nlohmann::json& meta) {
  const fs::path out = a.out.empty() ? default_out("corpus") : fs::path(a.out);
  const auto manifest = synth_corpus(out, a.opt);
  auto m = meta;
  m["synth"] = {{"speakers", a.opt.n_speakers}, {"train_s", a.opt.train_s}, {"tests", a.opt.n_test},
                {"test_s", a.opt.test_s},       {"seed", a.opt.seed},       {"margin", a.opt.margin},
                {"alaw", a.opt.write_alaw}};
  write_json(out / "metadata.json", m);
  std::cout << "wrote " << manifest.entries.size() << " files and " << (out / "manifest.csv").string() << '\n';
  return 0;
}

struct EnrollArgs {
  std::string manifest, out, method = "vqcm";
  int bits = 1, p1 = 16, p2 = 10;
};

int cmd_enroll(const EnrollArgs& a, const nlohmann::json& meta) {
  const auto manifest = read_manifest(a.manifest);
  const auto cfg = MethodConfig::make(parse_method(a.method), a.bits, a.p1, a.p2);
  cfg.frontend.validate();
  const fs::path out = a.out.empty() ? default_out("models") : fs::path(a.out);
  fs::create_directories(out);
  int failures = 0;
  for (const auto& speaker : manifest.speakers()) {
    FeatureSequence train(static_cast<std::size_t>(cfg.frontend.cepstral_order_p1), speaker);
    for (const auto& e : manifest.entries) {
      if (e.speaker_id != speaker || e.split != Split::kTrain) continue;
      try {
        const auto f = extract_features(read_audio(manifest.resolve(e), e.format), cfg.frontend, e.path.string());
        for (std::size_t i = 0; i < f.size(); ++i) train.push_back(f[i]);
      } catch (const Error& err) {
        std::cerr << "warning: " << speaker << ": " << err.what() << '\n';
        ++failures;
      }
    }
    if (train.empty()) throw Error(ErrorCode::kInsufficientData, "speaker '" + speaker + "' has no usable train data");
    const auto model = enroll(train, cfg.spec, cfg.frontend, speaker);
    save_model(model, out / (speaker + std::string(kModelExtension)));
  }
  auto m = meta;
  m["enroll"] = {{"label", cfg.label()}, {"parameters", cfg.parameters()}, {"speakers", manifest.speakers()}};
  write_json(out / "metadata.json", m);
  std::cout << cfg.label() << ": " << manifest.speakers().size() << " models, " << cfg.parameters()
            << " parameters each, written to " << out.string() << '\n';
  return failures == 0 ? 0 : 1;
}

struct IdentifyArgs {
  std::string models, audio, format = "wav", scheme = "sum-all", snr = "inf";
  std::uint64_t noise_seed = 0;
  bool csv = false, znorm = false;
};

int cmd_identify(const IdentifyArgs& a) {
  const auto models = load_models(a.models);
  if (models.empty()) throw Error(ErrorCode::kEmptyModelSet, "no models in " + a.models);
  const auto format = a.format == "alaw" ? AudioFormat::kAlaw : AudioFormat::kWav;
  const auto audio = add_noise(read_audio(a.audio, format), {parse_snr(a.snr), a.noise_seed});
  const auto scheme = parse_scheme(a.scheme);

  std::vector<ScoreVector> scores;
  std::map<std::string, FeatureSequence> cache;  // keyed by front-end
  for (const auto& m : models) {
    const auto key = model_to_json(m)["config"].dump();
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, extract_features(audio, m.config, a.audio)).first;
    scores.push_back(score(it->second, m));
  }

  if (scheme == FusionScheme::kVote) {
    const auto r = identify_by_vote(scores);
    if (a.csv) std::cout << "rank,speaker_id,votes\n";
    std::vector<std::pair<int, std::string>> rows;
    for (const auto& s : scores) rows.emplace_back(r.votes.count(s.speaker_id) ? r.votes.at(s.speaker_id) : 0, s.speaker_id);
    std::stable_sort(rows.begin(), rows.end(), [&](const auto& x, const auto& y) {
      if (x.second == r.winner) return y.second != r.winner;
      if (y.second == r.winner) return false;
      return x.first > y.first;
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (a.csv) {
        std::cout << i + 1 << ',' << rows[i].second << ',' << rows[i].first << '\n';
      } else {
        std::cout << (i == 0 ? "* " : "  ") << std::setw(3) << i + 1 << "  " << std::left << std::setw(16)
                  << rows[i].second << std::right << rows[i].first << " votes\n";
      }
    }
    return 0;
  }

  const auto ranked = identify(scores, scheme, {.z_normalize = a.znorm});
  if (a.csv) std::cout << "rank,speaker_id,score\n" << std::setprecision(17);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (a.csv) {
      std::cout << i + 1 << ',' << ranked[i].speaker_id << ',' << ranked[i].score << '\n';
    } else {
      std::cout << (i == 0 ? "* " : "  ") << std::setw(3) << i + 1 << "  " << std::left << std::setw(16)
                << ranked[i].speaker_id << std::right << std::fixed << std::setprecision(6) << ranked[i].score
                << std::defaultfloat << '\n';
    }
  }
  return 0;
}

struct EvaluateArgs {
  std::string manifest, out, methods = "vqcm", snr = "inf", schemes = "sum-all", p2_sweep;
  int bits = 1, p1 = 16, p2 = 10;
  bool standard = false, znorm = false;
  std::uint64_t noise_seed = 0;
  int noise_repeats = 1;
};

int cmd_evaluate(const EvaluateArgs& a, const nlohmann::json& meta) {
  EvaluationOptions opt;
  if (a.standard) {
    opt.methods = standard_methods();
  } else if (!a.p2_sweep.empty()) {
    for (const auto& q : split_list(a.p2_sweep)) opt.methods.push_back(MethodConfig::make(Method::kVqcm, a.bits, a.p1, std::stoi(q)));
  } else {
    opt.methods = parse_methods(a.methods, a.bits, a.p1, a.p2);
  }
  opt.snrs_db.clear();
  for (const auto& s : split_list(a.snr)) opt.snrs_db.push_back(parse_snr(s));
  opt.schemes.clear();
  for (const auto& s : split_list(a.schemes)) opt.schemes.push_back(parse_scheme(s));
  if (a.standard) {
    // each method's natural rule
    opt.schemes = {FusionScheme::kSumAll, FusionScheme::kVqOnly, FusionScheme::kCmOnlyGlobal, FusionScheme::kSumCm};
  }
  opt.noise_seed = a.noise_seed;
  opt.noise_repeats = a.noise_repeats;
  opt.fusion.z_normalize = a.znorm;

  const auto manifest = read_manifest(a.manifest);
  auto report = run_evaluation(manifest, opt);
  report.metadata["run"] = meta;
  const fs::path out = a.out.empty() ? default_out("eval") : fs::path(a.out);
  write_report(out, report, opt);
  write_summary_table(std::cout, report, opt);
  for (const auto& f : report.failures) std::cerr << "failure: " << f << '\n';
  std::cout << "report written to " << out.string() << '\n';
  return report.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VQ and covariance-model speaker identification"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic corpus and manifest");
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--speakers", synth.opt.n_speakers)->capture_default_str();
  s->add_option("--train-s", synth.opt.train_s, "Training seconds per speaker")->capture_default_str();
  s->add_option("--tests", synth.opt.n_test, "Test utterances per speaker")->capture_default_str();
  s->add_option("--test-s", synth.opt.test_s, "Seconds per test utterance")->capture_default_str();
  s->add_option("--seed", synth.opt.seed)->capture_default_str();
  s->add_option("--margin", synth.opt.margin, "Pole-angle separation between speakers (radians)")->capture_default_str();
  s->add_flag("--alaw", synth.opt.write_alaw, "Write raw A-law instead of WAV");

  EnrollArgs enroll_args;
  auto* e = app.add_subcommand("enroll", "Train one model per speaker");
  e->add_option("--manifest", enroll_args.manifest)->required();
  e->add_option("--method", enroll_args.method, "vq, cm or vqcm")->capture_default_str();
  e->add_option("--bits", enroll_args.bits)->capture_default_str();
  e->add_option("--p1", enroll_args.p1, "Cepstral order")->capture_default_str();
  e->add_option("--p2", enroll_args.p2, "Covariance order")->capture_default_str();
  e->add_option("--out", enroll_args.out, "Model directory");

  IdentifyArgs id;
  auto* i = app.add_subcommand("identify", "Rank enrolled speakers for one utterance");
  i->add_option("--models", id.models)->required();
  i->add_option("--audio", id.audio)->required();
  i->add_option("--format", id.format)->check(CLI::IsMember({"wav", "alaw"}))->capture_default_str();
  i->add_option("--scheme", id.scheme)->capture_default_str();
  i->add_option("--snr", id.snr, "Add white noise at this SNR (dB) or inf")->capture_default_str();
  i->add_option("--noise-seed", id.noise_seed)->capture_default_str();
  i->add_flag("--csv", id.csv);
  i->add_flag("--znorm", id.znorm, "Z-normalize each classifier across speakers before fusing");

  EvaluateArgs ev;
  auto* v = app.add_subcommand("evaluate", "Identification rates over methods and SNRs");
  v->add_option("--manifest", ev.manifest)->required();
  v->add_option("--methods", ev.methods, "Comma list: vq[:bits], cm[:p2], vqcm[:bits]")->capture_default_str();
  v->add_flag("--standard", ev.standard, "Run the standard seven-system comparison");
  v->add_option("--bits", ev.bits)->capture_default_str();
  v->add_option("--p1", ev.p1)->capture_default_str();
  v->add_option("--p2", ev.p2)->capture_default_str();
  v->add_option("--p2-sweep", ev.p2_sweep, "Comma list of P2 values for VQ-CM");
  v->add_option("--snr", ev.snr, "Comma list of SNRs in dB, inf allowed")->capture_default_str();
  v->add_option("--schemes", ev.schemes, "Comma list of fusion schemes")->capture_default_str();
  v->add_option("--noise-seed", ev.noise_seed)->capture_default_str();
  v->add_option("--noise-repeats", ev.noise_repeats, "Noise draws per test utterance at finite SNR")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  v->add_option("--out", ev.out, "Report directory");
  v->add_flag("--znorm", ev.znorm);

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) return cmd_synth(synth, run_metadata("synth", argc, argv));
    if (e->parsed()) return cmd_enroll(enroll_args, run_metadata("enroll", argc, argv));
    if (i->parsed()) return cmd_identify(id);
    if (v->parsed()) return cmd_evaluate(ev, run_metadata("evaluate", argc, argv));
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}

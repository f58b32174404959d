#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "vqcm/model_store.hpp"
#include "vqcm/synth.hpp"

using namespace vqcm;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "vqcm_test_model_store" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

FeatureSequence training_features(const FrontendConfig& cfg) {
  const SyntheticSpeakerSpec spec{"spk", base_poles(), kSynthRms, 3};
  return extract_features(synth_utterance(spec, 4.0, 0), cfg, "spk");
}

SpeakerModel make_model(Method method, int bits) {
  FrontendConfig cfg;
  return enroll(training_features(cfg), {method, bits}, cfg, "spk");
}

void expect_code(const std::string& text, ErrorCode code) {
  try {
    deserialize_model(text);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("models round-trip exactly", "[model_store]") {
  for (auto [method, bits] : {std::pair{Method::kVqcm, 2}, std::pair{Method::kVq, 3}, std::pair{Method::kCm, 0}}) {
    const auto model = make_model(method, bits);
    const auto dir = temp_dir(std::string(to_string(method)));
    const auto path = dir / ("spk" + std::string(kModelExtension));
    save_model(model, path);
    const auto back = load_model(path);
    CHECK(back == model);
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));

    // re-saving is byte-identical
    const auto again = dir / "again.vqcm.json";
    save_model(back, again);
    std::ifstream a(path), b(again);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}

TEST_CASE("vqcm model contents", "[model_store]") {
  const auto model = make_model(Method::kVqcm, 2);
  const auto j = model_to_json(model);
  CHECK(j["format_version"] == kModelFormatVersion);
  CHECK(j["method"] == "vqcm");
  CHECK(j["codebook"]["centroids"].size() == 4);
  CHECK(j["clusters"].size() == 4);
  CHECK(j["clusters"][0]["matrix"].size() == 10);
  CHECK(j["config"]["covariance_order_p2"] == 10);
  CHECK_FALSE(model_to_json(make_model(Method::kCm, 0)).contains("codebook"));
  CHECK_FALSE(model_to_json(make_model(Method::kVq, 1)).contains("clusters"));
}

TEST_CASE("schema violations are rejected", "[model_store]") {
  const auto good = model_to_json(make_model(Method::kVqcm, 2));

  auto j = good;
  j["clusters"].erase(j["clusters"].begin());
  expect_code(j.dump(), ErrorCode::kSchemaViolation);

  j = good;
  j["format_version"] = 2;
  expect_code(j.dump(), ErrorCode::kVersionMismatch);

  j = good;
  j["codebook"]["centroids"][0].erase(j["codebook"]["centroids"][0].begin());
  expect_code(j.dump(), ErrorCode::kDimensionMismatch);

  j = good;
  j["clusters"][0]["matrix"][0][1] = 123.0;
  expect_code(j.dump(), ErrorCode::kSchemaViolation);

  j = good;
  j.erase("speaker_id");
  expect_code(j.dump(), ErrorCode::kSchemaViolation);

  expect_code("{not json", ErrorCode::kSchemaViolation);
}

TEST_CASE("load_models reads a directory in name order", "[model_store]") {
  const auto dir = temp_dir("many");
  auto a = make_model(Method::kVq, 1);
  auto b = a;
  a.speaker_id = "b";
  b.speaker_id = "a";
  save_model(a, dir / "b.vqcm.json");
  save_model(b, dir / "a.vqcm.json");
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto models = load_models(dir);
  REQUIRE(models.size() == 2);
  CHECK(models[0].speaker_id == "a");
  CHECK(models[1].speaker_id == "b");
  CHECK_THROWS_AS(load_model(dir / "missing.vqcm.json"), Error);
}

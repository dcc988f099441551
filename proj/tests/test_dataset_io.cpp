#include <doctest.h>

#include <fstream>

#include "lungmix/dataset_io.hpp"
#include "lungmix/error.hpp"
#include "lungmix/mix_engine.hpp"
#include "lungmix/wav_io.hpp"
#include "oracles.hpp"

using namespace lungmix;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected lungmix::Error");
  return ErrorKind::kIoError;
}

RecordManifest record(std::string id, DatasetId ds, std::string raw) {
  RecordManifest r;
  r.id = id;
  r.audio_path = id + ".wav";
  r.dataset = ds;
  r.label_raw = std::move(raw);
  return r;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

MixResult small_result(std::uint64_t seed, InterpolationMode mode = InterpolationMode::kNonlinear) {
  Rng rng(seed);
  std::vector<double> a(800), b(800);
  for (auto& v : a) v = 0.5 * (2.0 * rng.uniform() - 1.0);
  for (auto& v : b) v = 0.5 * (2.0 * rng.uniform() - 1.0);
  MixRequest req;
  req.source_a = {"src_a", "synthetic", Waveform{a, 16000}, to_label_vector(UnifiedLabel::kCrackle)};
  req.source_b = {"src_b", "synthetic", Waveform{b, 16000}, to_label_vector(UnifiedLabel::kWheeze)};
  req.params.lambda = 0.3;
  req.params.seed = seed;
  req.interpolation = mode;
  return lungmix::lungmix(req);
}

}  // namespace

TEST_CASE("align_label follows the shipped tables") {
  const LabelMaps& maps = LabelMaps::builtin();
  CHECK(align_label(maps, DatasetId::kSpr, "fine crackle") == UnifiedLabel::kCrackle);
  CHECK(align_label(maps, DatasetId::kSpr, "coarse crackle") == UnifiedLabel::kCrackle);
  CHECK(align_label(maps, DatasetId::kSpr, "stridor") == UnifiedLabel::kWheeze);
  CHECK(align_label(maps, DatasetId::kSpr, "Rhonchus ") == UnifiedLabel::kWheeze);
  CHECK(align_label(maps, DatasetId::kIcbhi, "both") == UnifiedLabel::kBoth);
  CHECK(kind_of([&] { align_label(maps, DatasetId::kIcbhi, "stridor"); }) == ErrorKind::kUnknownLabel);
  CHECK(kind_of([&] { align_label(maps, DatasetId::kHf, "both"); }) == ErrorKind::kUnknownLabel);
}

TEST_CASE("builtin tables equal the data file and hf never emits both") {
  const LabelMaps file = LabelMaps::load(LUNGMIX_LABEL_MAPS_FILE);
  for (DatasetId d : {DatasetId::kIcbhi, DatasetId::kSpr, DatasetId::kHf, DatasetId::kSynthetic}) {
    REQUIRE(file.has(d));
    CHECK(file.table(d) == LabelMaps::builtin().table(d));
  }
  for (const auto& [raw, unified] : LabelMaps::builtin().table(DatasetId::kHf)) {
    CAPTURE(raw);
    CHECK(unified != UnifiedLabel::kBoth);
  }
  CHECK(kind_of([] { LabelMaps::from_json_text(R"({"hf": {"x": "both"}})"); }) ==
        ErrorKind::kInvalidConfig);
  CHECK(kind_of([] { LabelMaps::from_json_text(R"({"spr": {"x": "loud"}})"); }) ==
        ErrorKind::kInvalidConfig);
  CHECK(kind_of([] { LabelMaps::from_json_text("[1,2]"); }) == ErrorKind::kInvalidConfig);
}

TEST_CASE("align_records skips with reasons and enforces the skip budget") {
  std::vector<RecordManifest> records;
  for (int i = 0; i < 40; ++i) records.push_back(record("r" + std::to_string(i), DatasetId::kSpr, "normal"));
  records.push_back(record("odd", DatasetId::kSpr, "squawk"));
  const AlignmentResult res = align_records(records, LabelMaps::builtin(), 0.05);
  CHECK(res.kept.size() == 40);
  REQUIRE(res.skipped.size() == 1);
  CHECK(res.skipped[0].id == "odd");
  CHECK(res.skipped[0].index == 40);
  CHECK_FALSE(res.skipped[0].reason.empty());
  for (const auto& r : res.kept) CHECK(r.label_unified == UnifiedLabel::kNormal);

  records.push_back(record("odd2", DatasetId::kSpr, "squawk"));
  records.push_back(record("odd3", DatasetId::kSpr, "squawk"));
  CHECK(kind_of([&] { align_records(records, LabelMaps::builtin(), 0.05); }) == ErrorKind::kUnknownLabel);
  CHECK(align_records({}, LabelMaps::builtin()).kept.empty());
}

TEST_CASE("record json round trip keeps every field") {
  RecordManifest r = record("x1", DatasetId::kHf, "stridor");
  r.split = Split::kTest;
  r.label_unified = UnifiedLabel::kWheeze;
  r.segment = Segment{0.5, 3.25};
  r.events = std::vector<Event>{{0.1, 0.2, "wheeze"}, {1.0 / 3.0, 0.9, "wheeze"}};
  r.soft_target = SoftTarget{to_label_vector(UnifiedLabel::kCrackle), to_label_vector(UnifiedLabel::kBoth), 0.123456789012345};
  Provenance p;
  p.source_a = "a";
  p.source_b = "b";
  p.dataset_a = "hf";
  p.dataset_b = "spr";
  p.strategy = Strategy::kCutmix;
  p.mode = InterpolationMode::kCombined;
  p.semantics = MaskSemantics::kMax;
  p.alpha = 0.2;
  p.lambda = 0.7071067811865476;
  p.seed = 0xfedcba9876543210ULL;
  p.random_density = 0.25;
  p.shift = false;
  p.cut_offset = 123;
  p.cut_length = 456;
  r.provenance = p;
  CHECK(record_from_json(record_to_json(r)) == r);

  const RecordManifest bare = record_from_json(
      R"({"audio_path": "a/b.wav", "dataset": "icbhi", "split": "train", "label_raw": "both"})");
  CHECK(bare.id == "a/b.wav");
  CHECK_FALSE(bare.label_unified.has_value());
}

TEST_CASE("record_from_json rejects malformed lines") {
  for (const char* bad : {
           "not json",
           "[]",
           R"({"audio_path": "a.wav", "dataset": "icbhi", "split": "train"})",
           R"({"audio_path": "a.wav", "dataset": "mars", "split": "train", "label_raw": "x"})",
           R"({"audio_path": "a.wav", "dataset": "icbhi", "split": "dev", "label_raw": "x"})",
           R"({"audio_path": "a.wav", "dataset": "icbhi", "split": "train", "label_raw": 3})",
           R"({"audio_path": "a.wav", "dataset": "icbhi", "split": "train", "label_raw": "x", "segment": {"start_s": 2, "end_s": 1}})",
       }) {
    CAPTURE(bad);
    CHECK(kind_of([&] { record_from_json(bad); }) == ErrorKind::kParseError);
  }
}

TEST_CASE("load_manifest") {
  const auto dir = oracle::scratch_dir("manifest");
  write_text(dir / "empty.jsonl", "");
  CHECK(load_manifest(dir / "empty.jsonl").empty());

  write_wav(dir / "a.wav", Waveform{std::vector<double>(16000, 0.25), 16000});
  std::string lines;
  for (const char* id : {"r1", "r2", "r3"}) {
    lines += std::string(R"({"id": ")") + id +
             R"(", "audio_path": "a.wav", "dataset": "icbhi", "split": "train", "label_raw": "normal"})" + "\n";
  }
  write_text(dir / "three.jsonl", lines + "\n");
  const auto recs = load_manifest(dir / "three.jsonl");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].id == "r1");
  CHECK(recs[2].id == "r3");

  write_text(dir / "bad.jsonl",
             lines + R"({"audio_path": "a.wav", "dataset": "icbhi", "split": "train"})" + "\n");
  try {
    load_manifest(dir / "bad.jsonl");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParseError);
    CHECK(std::string(e.what()).find(":4:") != std::string::npos);
  }

  write_text(dir / "missing.jsonl",
             R"({"audio_path": "nope.wav", "dataset": "icbhi", "split": "train", "label_raw": "normal"})");
  CHECK(kind_of([&] { load_manifest(dir / "missing.jsonl"); }) == ErrorKind::kMissingAudio);
  CHECK(load_manifest(dir / "missing.jsonl", {.check_audio = false}).size() == 1);
  CHECK(kind_of([&] { load_manifest(dir / "absent.jsonl"); }) == ErrorKind::kIoError);
}

TEST_CASE("load_record_audio crops to the segment") {
  const auto dir = oracle::scratch_dir("segment");
  std::vector<double> x(16000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 100) / 128.0;
  write_wav(dir / "a.wav", Waveform{x, 16000});
  RecordManifest r = record("a", DatasetId::kIcbhi, "normal");
  r.segment = Segment{0.25, 0.5};
  const Waveform w = load_record_audio(dir, r);
  REQUIRE(w.size() == 4000);
  CHECK(w.samples[0] == x[4000]);
  CHECK(w.samples[3999] == x[7999]);
}

TEST_CASE("export_augmented writes files and an ordered manifest") {
  const auto dir = oracle::scratch_dir("export_empty");
  const auto manifest = export_augmented({}, dir);
  CHECK(std::filesystem::exists(manifest));
  CHECK(oracle::read_bytes(manifest).empty());
  CHECK(load_manifest(manifest).empty());

  const auto one_dir = oracle::scratch_dir("export_one");
  const std::vector<MixResult> one{small_result(1)};
  const auto rows = load_manifest(export_augmented(one, one_dir));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].provenance->strategy == Strategy::kLungmix);
  CHECK(rows[0].label_unified == UnifiedLabel::kBoth);
  CHECK(std::filesystem::exists(one_dir / rows[0].audio_path));
  CHECK(std::distance(std::filesystem::directory_iterator(one_dir), {}) == 2);
}

TEST_CASE("export_augmented is byte-identical across runs and thread counts") {
  std::vector<MixResult> results;
  for (std::uint64_t i = 0; i < 12; ++i) {
    results.push_back(small_result(i, i % 2 ? InterpolationMode::kLinear : InterpolationMode::kCombined));
  }
  const auto d1 = oracle::scratch_dir("export_t1");
  const auto d2 = oracle::scratch_dir("export_t4");
  export_augmented(results, d1, 1);
  export_augmented(results, d2, 4);
  CHECK(oracle::sha256_dir(d1) == oracle::sha256_dir(d2));

  const auto rows = load_manifest(d1 / kManifestName);
  REQUIRE(rows.size() == 12);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i] == augmented_record(results[i], i));
    CHECK(rows[i].soft_target.has_value());
  }
  // Linear rows carry only the soft triple; the hard column names the dominant source.
  CHECK(rows[1].label_unified == UnifiedLabel::kWheeze);
}

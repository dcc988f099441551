#include "lungmix/dataset_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "builtin_label_maps.hpp"
#include "lungmix/error.hpp"
#include "lungmix/parallel.hpp"
#include "lungmix/wav_io.hpp"

namespace lungmix {
namespace {

using json = nlohmann::ordered_json;

std::string normalize_key(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::kParseError, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) fail(ErrorKind::kParseError, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double number_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) fail(ErrorKind::kParseError, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::string label_name(const LabelVector& y) {
  return std::string(to_string(to_unified(y)));
}

LabelVector parse_label_vector(const std::string& name) {
  try {
    return to_label_vector(parse_unified_label(name));
  } catch (const Error& e) {
    fail(ErrorKind::kParseError, e.what());
  }
}

json provenance_to_json(const Provenance& p) {
  json j;
  j["source_a"] = p.source_a;
  j["source_b"] = p.source_b;
  j["dataset_a"] = p.dataset_a;
  j["dataset_b"] = p.dataset_b;
  j["strategy"] = to_string(p.strategy);
  j["mode"] = to_string(p.mode);
  j["semantics"] = p.semantics == MaskSemantics::kMax ? "max" : "precedence";
  j["alpha"] = p.alpha;
  j["lambda"] = p.lambda;
  j["seed"] = p.seed;
  j["random_density"] = p.random_density;
  j["shift"] = p.shift;
  j["rolled"] = p.rolled;
  j["roll_offset"] = p.roll_offset;
  j["cut_offset"] = p.cut_offset;
  j["cut_length"] = p.cut_length;
  j["patches_replaced"] = p.patches_replaced;
  return j;
}

Provenance provenance_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::kParseError, "provenance must be an object");
  Provenance p;
  p.source_a = string_field(j, "source_a");
  p.source_b = string_field(j, "source_b");
  p.dataset_a = string_field(j, "dataset_a");
  p.dataset_b = string_field(j, "dataset_b");
  try {
    p.strategy = parse_strategy(string_field(j, "strategy"));
    p.mode = parse_interpolation_mode(string_field(j, "mode"));
  } catch (const Error& e) {
    fail(ErrorKind::kParseError, e.what());
  }
  const std::string sem = string_field(j, "semantics");
  if (sem != "max" && sem != "precedence") fail(ErrorKind::kParseError, "unknown semantics " + sem);
  p.semantics = sem == "max" ? MaskSemantics::kMax : MaskSemantics::kLoudnessPrecedence;
  p.alpha = number_field(j, "alpha");
  p.lambda = number_field(j, "lambda");
  p.seed = field(j, "seed").get<std::uint64_t>();
  p.random_density = number_field(j, "random_density");
  p.shift = field(j, "shift").get<bool>();
  p.rolled = string_field(j, "rolled");
  p.roll_offset = field(j, "roll_offset").get<std::uint64_t>();
  p.cut_offset = field(j, "cut_offset").get<std::uint64_t>();
  p.cut_length = field(j, "cut_length").get<std::uint64_t>();
  p.patches_replaced = field(j, "patches_replaced").get<std::uint64_t>();
  return p;
}

}  // namespace

std::string_view to_string(DatasetId d) {
  switch (d) {
    case DatasetId::kIcbhi: return "icbhi";
    case DatasetId::kSpr: return "spr";
    case DatasetId::kHf: return "hf";
    case DatasetId::kSynthetic: return "synthetic";
  }
  return "synthetic";
}

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

DatasetId parse_dataset(std::string_view name) {
  const std::string key = normalize_key(name);
  for (auto d : {DatasetId::kIcbhi, DatasetId::kSpr, DatasetId::kHf, DatasetId::kSynthetic}) {
    if (key == to_string(d)) return d;
  }
  fail(ErrorKind::kParseError, "unknown dataset '" + std::string(name) + "'");
}

Split parse_split(std::string_view name) {
  const std::string key = normalize_key(name);
  if (key == "train") return Split::kTrain;
  if (key == "test") return Split::kTest;
  fail(ErrorKind::kParseError, "unknown split '" + std::string(name) + "'");
}

RecordManifest record_from_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParseError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kParseError, "record must be a JSON object");

  try {
    RecordManifest r;
    r.audio_path = string_field(j, "audio_path");
    if (r.audio_path.empty()) fail(ErrorKind::kParseError, "empty audio_path");
    r.id = j.contains("id") ? string_field(j, "id") : r.audio_path;
    r.dataset = parse_dataset(string_field(j, "dataset"));
    r.split = parse_split(string_field(j, "split"));
    r.label_raw = string_field(j, "label_raw");
    if (j.contains("label_unified") && !j["label_unified"].is_null()) {
      try {
        r.label_unified = parse_unified_label(string_field(j, "label_unified"));
      } catch (const Error& e) {
        fail(ErrorKind::kParseError, e.what());
      }
    }
    if (j.contains("segment") && !j["segment"].is_null()) {
      const json& s = j["segment"];
      Segment seg{number_field(s, "start_s"), number_field(s, "end_s")};
      if (!(seg.start_s >= 0.0 && seg.start_s < seg.end_s)) {
        fail(ErrorKind::kParseError, "segment must satisfy 0 <= start_s < end_s");
      }
      r.segment = seg;
    }
    if (j.contains("events") && !j["events"].is_null()) {
      const json& ev = j["events"];
      if (!ev.is_array()) fail(ErrorKind::kParseError, "events must be an array");
      std::vector<Event> events;
      for (const json& e : ev) {
        Event x{number_field(e, "onset_s"), number_field(e, "offset_s"), string_field(e, "event_class")};
        if (!(x.onset_s >= 0.0 && x.onset_s < x.offset_s)) {
          fail(ErrorKind::kParseError, "event must satisfy 0 <= onset_s < offset_s");
        }
        events.push_back(std::move(x));
      }
      r.events = std::move(events);
    }
    if (j.contains("soft_target") && !j["soft_target"].is_null()) {
      const json& s = j["soft_target"];
      const double lambda = number_field(s, "lambda");
      if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::kParseError, "soft_target lambda out of [0, 1]");
      r.soft_target = SoftTarget{parse_label_vector(string_field(s, "y_a")),
                                 parse_label_vector(string_field(s, "y_b")), lambda};
    }
    if (j.contains("provenance") && !j["provenance"].is_null()) {
      r.provenance = provenance_from_json(j["provenance"]);
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::kParseError, std::string("bad field type: ") + e.what());
  }
}

std::string record_to_json(const RecordManifest& r) {
  json j;
  j["id"] = r.id;
  j["audio_path"] = r.audio_path;
  j["dataset"] = to_string(r.dataset);
  j["split"] = to_string(r.split);
  j["label_raw"] = r.label_raw;
  if (r.label_unified) j["label_unified"] = to_string(*r.label_unified);
  if (r.segment) j["segment"] = {{"start_s", r.segment->start_s}, {"end_s", r.segment->end_s}};
  if (r.events) {
    json ev = json::array();
    for (const auto& e : *r.events) {
      ev.push_back({{"onset_s", e.onset_s}, {"offset_s", e.offset_s}, {"event_class", e.event_class}});
    }
    j["events"] = std::move(ev);
  }
  if (r.soft_target) {
    j["soft_target"] = {{"y_a", label_name(r.soft_target->y_a)},
                        {"y_b", label_name(r.soft_target->y_b)},
                        {"lambda", r.soft_target->lambda}};
  }
  if (r.provenance) j["provenance"] = provenance_to_json(*r.provenance);
  return j.dump();
}

const LabelMaps& LabelMaps::builtin() {
  static const LabelMaps maps = from_json_text(detail::kBuiltinLabelMaps);
  return maps;
}

LabelMaps LabelMaps::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidConfig, std::string("label maps: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kInvalidConfig, "label maps: top level must be an object");
  LabelMaps maps;
  for (const auto& [dataset_name, table] : j.items()) {
    DatasetId dataset;
    try {
      dataset = parse_dataset(dataset_name);
    } catch (const Error& e) {
      fail(ErrorKind::kInvalidConfig, std::string("label maps: ") + e.what());
    }
    if (!table.is_object()) fail(ErrorKind::kInvalidConfig, "label maps: table for " + dataset_name + " must be an object");
    auto& out = maps.tables_[dataset];
    for (const auto& [raw, unified] : table.items()) {
      if (!unified.is_string()) fail(ErrorKind::kInvalidConfig, "label maps: " + dataset_name + "/" + raw + " must map to a string");
      UnifiedLabel label;
      try {
        label = parse_unified_label(unified.get<std::string>());
      } catch (const Error& e) {
        fail(ErrorKind::kInvalidConfig, std::string("label maps: ") + e.what());
      }
      // HF carries no annotations for simultaneous crackle and wheeze.
      if (dataset == DatasetId::kHf && label == UnifiedLabel::kBoth) {
        fail(ErrorKind::kInvalidConfig, "label maps: the hf table may not emit 'both'");
      }
      if (!out.emplace(normalize_key(raw), label).second) {
        fail(ErrorKind::kInvalidConfig, "label maps: duplicate raw label '" + raw + "' for " + dataset_name);
      }
    }
  }
  return maps;
}

LabelMaps LabelMaps::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open label maps " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const std::map<std::string, UnifiedLabel>& LabelMaps::table(DatasetId dataset) const {
  auto it = tables_.find(dataset);
  if (it == tables_.end()) {
    fail(ErrorKind::kUnknownLabel, "no label map registered for dataset " + std::string(to_string(dataset)));
  }
  return it->second;
}

UnifiedLabel align_label(const LabelMaps& maps, DatasetId dataset, std::string_view raw) {
  const auto& table = maps.table(dataset);
  auto it = table.find(normalize_key(raw));
  if (it == table.end()) {
    fail(ErrorKind::kUnknownLabel, "dataset " + std::string(to_string(dataset)) + " has no label '" +
                                       std::string(raw) + "'");
  }
  return it->second;
}

AlignmentResult align_records(std::vector<RecordManifest> records, const LabelMaps& maps,
                              double max_skip_rate) {
  AlignmentResult out;
  const std::size_t total = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    RecordManifest& r = records[i];
    try {
      const UnifiedLabel label = align_label(maps, r.dataset, r.label_raw);
      if (r.label_unified && *r.label_unified != label) {
        out.skipped.push_back({i, r.id, "label_unified '" + std::string(to_string(*r.label_unified)) +
                                            "' disagrees with aligned '" + std::string(to_string(label)) + "'"});
        continue;
      }
      r.label_unified = label;
      out.kept.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUnknownLabel) throw;
      out.skipped.push_back({i, r.id, e.what()});
    }
  }
  if (total > 0) {
    const double rate = static_cast<double>(out.skipped.size()) / static_cast<double>(total);
    if (rate > max_skip_rate) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%zu of %zu records failed label alignment (%.2f%% > %.2f%%)",
                    out.skipped.size(), total, 100.0 * rate, 100.0 * max_skip_rate);
      fail(ErrorKind::kUnknownLabel, buf);
    }
  }
  return out;
}

std::vector<RecordManifest> load_manifest(const std::filesystem::path& path, LoadOptions options) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open manifest " + path.string());
  const std::filesystem::path dir = path.parent_path();
  std::vector<RecordManifest> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    RecordManifest r;
    try {
      r = record_from_json(line);
    } catch (const Error& e) {
      fail(ErrorKind::kParseError, where + e.what());
    }
    if (options.check_audio && !std::filesystem::exists(resolve_audio_path(dir, r))) {
      fail(ErrorKind::kMissingAudio, where + "audio file not found: " + resolve_audio_path(dir, r).string());
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_dir,
                                         const RecordManifest& r) {
  const std::filesystem::path p(r.audio_path);
  return p.is_absolute() ? p : manifest_dir / p;
}

Waveform load_record_audio(const std::filesystem::path& manifest_dir, const RecordManifest& r) {
  const auto path = resolve_audio_path(manifest_dir, r);
  if (!std::filesystem::exists(path)) fail(ErrorKind::kMissingAudio, "audio file not found: " + path.string());
  Waveform w = read_wav(path);
  if (r.segment) {
    const auto start = static_cast<std::size_t>(std::llround(r.segment->start_s * w.sample_rate));
    const auto end = std::min(w.size(), static_cast<std::size_t>(std::llround(r.segment->end_s * w.sample_rate)));
    require(start < end, ErrorKind::kEmptyAudio, r.id + ": segment lies outside the audio");
    w.samples = std::vector<double>(w.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                    w.samples.begin() + static_cast<std::ptrdiff_t>(end));
  }
  require(!w.empty(), ErrorKind::kEmptyAudio, r.id + ": empty audio");
  return w;
}

RecordManifest augmented_record(const MixResult& result, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "aug_%06zu", index);
  const bool is_spectrogram = std::holds_alternative<Spectrogram>(result.audio);

  RecordManifest r;
  r.id = name;
  r.audio_path = std::string(name) + (is_spectrogram ? ".f32" : ".wav");
  r.dataset = parse_dataset(result.provenance.dataset_a);
  r.split = Split::kTrain;
  LabelVector hard;
  if (result.label.hard) {
    hard = *result.label.hard;
  } else {
    // Soft-only targets: the hard field names the dominant source.
    const SoftTarget& s = *result.label.soft;
    hard = s.lambda >= 0.5 ? s.y_a : s.y_b;
  }
  r.label_unified = to_unified(hard);
  r.label_raw = std::string(to_string(*r.label_unified));
  r.soft_target = result.label.soft;
  r.provenance = result.provenance;
  return r;
}

RecordManifest write_augmented(const MixResult& result, std::size_t index,
                               const std::filesystem::path& out_dir) {
  RecordManifest row = augmented_record(result, index);
  const auto path = out_dir / row.audio_path;
  if (const auto* w = std::get_if<Waveform>(&result.audio)) {
    write_wav(path, *w);
  } else {
    write_spectrogram_bin(path, std::get<Spectrogram>(result.audio));
  }
  return row;
}

void write_manifest(const std::filesystem::path& path, std::span<const RecordManifest> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIoError, "cannot create " + path.string());
  for (const auto& r : rows) out << record_to_json(r) << '\n';
  if (!out) fail(ErrorKind::kIoError, "write failed: " + path.string());
}

std::filesystem::path export_augmented(std::span<const MixResult> results,
                                       const std::filesystem::path& out_dir, unsigned threads) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<RecordManifest> rows(results.size());
  parallel_for(results.size(), threads,
               [&](std::size_t i) { rows[i] = write_augmented(results[i], i, out_dir); });

  const auto manifest = out_dir / kManifestName;
  write_manifest(manifest, rows);
  return manifest;
}

}  // namespace lungmix

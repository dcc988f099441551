#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lungmix/audio_types.hpp"
#include "lungmix/label_algebra.hpp"
#include "lungmix/mix_engine.hpp"

namespace lungmix {

enum class DatasetId { kIcbhi, kSpr, kHf, kSynthetic };
enum class Split { kTrain, kTest };

std::string_view to_string(DatasetId d);
std::string_view to_string(Split s);
DatasetId parse_dataset(std::string_view name);  // throws ParseError
Split parse_split(std::string_view name);        // throws ParseError

struct Event {
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string event_class;

  bool operator==(const Event&) const = default;
};

struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const Segment&) const = default;
};

/// One annotated audio segment, as stored in a JSONL manifest line.
struct RecordManifest {
  std::string id;          // defaults to audio_path when absent in the file
  std::string audio_path;  // relative paths resolve against the manifest directory
  DatasetId dataset = DatasetId::kSynthetic;
  Split split = Split::kTrain;
  std::string label_raw;
  std::optional<UnifiedLabel> label_unified;
  std::optional<Segment> segment;
  std::optional<std::vector<Event>> events;
  // Present on augmented rows only.
  std::optional<SoftTarget> soft_target;
  std::optional<Provenance> provenance;

  bool operator==(const RecordManifest&) const = default;
};

/// Throws ParseError on a malformed or invariant-violating line.
RecordManifest record_from_json(std::string_view line);
std::string record_to_json(const RecordManifest& r);

/// Per-dataset raw label -> unified label tables. Lookup is case-insensitive
/// with surrounding whitespace ignored.
class LabelMaps {
 public:
  /// The tables shipped in data/label_maps.json.
  static const LabelMaps& builtin();
  static LabelMaps from_json_text(std::string_view text);
  static LabelMaps load(const std::filesystem::path& path);

  bool has(DatasetId dataset) const { return tables_.count(dataset) != 0; }
  const std::map<std::string, UnifiedLabel>& table(DatasetId dataset) const;

 private:
  std::map<DatasetId, std::map<std::string, UnifiedLabel>> tables_;
};

/// Throws UnknownLabel for labels outside the dataset's table.
UnifiedLabel align_label(const LabelMaps& maps, DatasetId dataset, std::string_view raw);

struct SkippedRecord {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

struct AlignmentResult {
  std::vector<RecordManifest> kept;
  std::vector<SkippedRecord> skipped;
};

/// Fills label_unified on every record. Records that fail alignment are
/// skipped; throws UnknownLabel if the skipped fraction exceeds max_skip_rate.
AlignmentResult align_records(std::vector<RecordManifest> records, const LabelMaps& maps,
                              double max_skip_rate = 0.05);

struct LoadOptions {
  bool check_audio = true;
};

/// One record per non-blank line, in file order. Throws ParseError (with line
/// number) or MissingAudio.
std::vector<RecordManifest> load_manifest(const std::filesystem::path& path,
                                          LoadOptions options = {});

std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_dir,
                                         const RecordManifest& r);

/// Reads the record's WAV and crops to its segment, if any.
Waveform load_record_audio(const std::filesystem::path& manifest_dir, const RecordManifest& r);

inline constexpr std::string_view kManifestName = "manifest.jsonl";

/// Writes aug_NNNNNN.wav (or .f32 for spectrogram results) per result and a
/// manifest.jsonl with one row per result in input order. Returns the manifest path.
std::filesystem::path export_augmented(std::span<const MixResult> results,
                                       const std::filesystem::path& out_dir,
                                       unsigned threads = 1);

/// Manifest row written for an augmented result.
RecordManifest augmented_record(const MixResult& result, std::size_t index);

/// Writes the audio of one result into out_dir and returns its manifest row.
RecordManifest write_augmented(const MixResult& result, std::size_t index,
                               const std::filesystem::path& out_dir);

/// One record_to_json line per row.
void write_manifest(const std::filesystem::path& path, std::span<const RecordManifest> rows);

}  // namespace lungmix

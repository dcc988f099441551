#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "lungmix/audio_pipeline.hpp"
#include "lungmix/audio_types.hpp"
#include "lungmix/label_algebra.hpp"
#include "lungmix/mask_engine.hpp"
#include "lungmix/rng.hpp"

namespace lungmix {

enum class Strategy { kLungmix, kMixup, kCutmix, kPatchmix };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

inline constexpr std::size_t kPatchSize = 16;

struct LabeledWaveform {
  std::string id;
  std::string dataset;
  Waveform audio;
  LabelVector label;
};

struct LabeledSpectrogram {
  std::string id;
  std::string dataset;
  Spectrogram spectrogram;
  LabelVector label;
};

struct MixRequest {
  LabeledWaveform source_a;
  LabeledWaveform source_b;
  MixParams params;  // params.seed drives every random choice inside the op
  Strategy strategy = Strategy::kLungmix;
  InterpolationMode interpolation = InterpolationMode::kNonlinear;
  PadMode pad = PadMode::noise();
};

/// Everything needed to regenerate a result from its two sources.
struct Provenance {
  std::string source_a;
  std::string source_b;
  std::string dataset_a;
  std::string dataset_b;
  Strategy strategy = Strategy::kLungmix;
  InterpolationMode mode = InterpolationMode::kNonlinear;
  MaskSemantics semantics = MaskSemantics::kLoudnessPrecedence;
  double alpha = 1.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double random_density = 0.5;
  bool shift = true;
  // Filled in by the op that ran.
  std::string rolled = "none";  // "a", "b" or "none"
  std::uint64_t roll_offset = 0;
  std::uint64_t cut_offset = 0;
  std::uint64_t cut_length = 0;
  std::uint64_t patches_replaced = 0;

  bool operator==(const Provenance&) const = default;
};

struct MixResult {
  std::variant<Waveform, Spectrogram> audio;
  InterpolatedLabel label;
  Provenance provenance;

  const Waveform& waveform() const { return std::get<Waveform>(audio); }
  const Spectrogram& spectrogram() const { return std::get<Spectrogram>(audio); }
};

/// Intermediate signals of a lungmix call, after rolling and length alignment.
struct LungmixTrace {
  Waveform a;
  Waveform b;
  BinaryMask m_a;
  BinaryMask m_b;
  BinaryMask r;
  MixMask mask;
};

/// Circular rotation: out[(t + offset) % n] = in[t].
Waveform roll(const Waveform& w, std::size_t offset);
/// roll by a uniform offset in [0, n).
Waveform shift_roll(const Waveform& w, Rng& rng);

/// Per-sample m * a + (1 - m) * b. Returns a exactly where m == 1, b exactly
/// where m == 0, and never leaves [min(a, b), max(a, b)].
double blend_sample(double m, double a, double b);
Waveform blend(std::span<const double> mask, const Waveform& a, const Waveform& b);

MixResult lungmix(const MixRequest& req, LungmixTrace* trace = nullptr);
MixResult vanilla_mixup(const MixRequest& req);
MixResult cutmix(const MixRequest& req);

/// Replaces [offset, offset + round((1 - lambda) * n)) of a with b.
Waveform cut_segment(const Waveform& a, const Waveform& b, double lambda, std::size_t offset);

/// Swaps a seeded subset of round((1 - lambda) * patches) 16x16 patches of a
/// for the co-located patches of b.
MixResult patchmix(const LabeledSpectrogram& a, const LabeledSpectrogram& b,
                   const MixParams& params, InterpolationMode mode);

/// Dispatches on req.strategy for the waveform strategies.
MixResult mix(const MixRequest& req);

}  // namespace lungmix

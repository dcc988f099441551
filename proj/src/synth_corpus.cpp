#include "lungmix/synth_corpus.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "lungmix/error.hpp"
#include "lungmix/rng.hpp"

namespace lungmix {
namespace {

constexpr double kRampSeconds = 0.02;

std::size_t to_samples(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

/// One event per equal slot of the clip, at a uniform offset inside its slot.
std::vector<std::size_t> place_events(std::size_t total, std::size_t length, int count, Rng& rng) {
  std::vector<std::size_t> onsets;
  if (count <= 0) return onsets;
  const std::size_t slot = total / static_cast<std::size_t>(count);
  for (int k = 0; k < count; ++k) {
    onsets.push_back(static_cast<std::size_t>(k) * slot + rng.below(slot - length + 1));
  }
  return onsets;
}

bool has_crackle(UnifiedLabel c) { return c == UnifiedLabel::kCrackle || c == UnifiedLabel::kBoth; }
bool has_wheeze(UnifiedLabel c) { return c == UnifiedLabel::kWheeze || c == UnifiedLabel::kBoth; }

}  // namespace

void validate(const SynthSpec& s) {
  require(s.sample_rate > 0, ErrorKind::kInvalidConfig, "synth: sample_rate must be positive");
  require(s.duration_s > 0.0, ErrorKind::kInvalidConfig, "synth: duration must be positive");
  require(s.noise_floor >= 0.0 && s.crackle_amplitude >= 0.0 && s.wheeze_amplitude >= 0.0,
          ErrorKind::kInvalidConfig, "synth: amplitudes must be non-negative");
  require(s.burst_ms > 0.0 && s.wheeze_seconds > 0.0, ErrorKind::kInvalidConfig,
          "synth: event lengths must be positive");
  require(s.wheeze_hz >= 100.0 && s.wheeze_hz <= 1000.0 && s.wheeze_hz < s.sample_rate / 2.0,
          ErrorKind::kInvalidConfig, "synth: wheeze tone must lie in [100, 1000] Hz");
  if (s.cls == UnifiedLabel::kNormal) return;
  require(s.n_events >= 1, ErrorKind::kInvalidConfig, "synth: abnormal classes need n_events >= 1");
  const std::size_t total = to_samples(s.duration_s, s.sample_rate);
  const std::size_t slot = total / static_cast<std::size_t>(s.n_events);
  const std::size_t burst = to_samples(s.burst_ms / 1000.0, s.sample_rate);
  const std::size_t tone = to_samples(s.wheeze_seconds, s.sample_rate);
  require(burst >= 1 && tone >= 1, ErrorKind::kInvalidConfig, "synth: events shorter than one sample");
  if (has_crackle(s.cls)) {
    require(burst <= slot, ErrorKind::kInvalidConfig, "synth: crackle events do not fit the clip");
  }
  if (has_wheeze(s.cls)) {
    require(tone <= slot, ErrorKind::kInvalidConfig, "synth: wheeze events do not fit the clip");
  }
}

SynthRecord synth(const SynthSpec& spec) {
  validate(spec);
  const int rate = spec.sample_rate;
  const std::size_t total = to_samples(spec.duration_s, rate);
  Rng rng(spec.seed);

  SynthRecord rec;
  rec.audio.sample_rate = rate;
  rec.audio.samples.resize(total);
  auto& x = rec.audio.samples;

  // Two-tap average of uniform noise: triangular amplitudes, lowpass shaped.
  double prev = 2.0 * rng.uniform() - 1.0;
  for (auto& v : x) {
    const double u = 2.0 * rng.uniform() - 1.0;
    v = spec.noise_floor * 0.5 * (u + prev);
    prev = u;
  }

  std::vector<Event> events;
  if (has_crackle(spec.cls)) {
    const std::size_t len = to_samples(spec.burst_ms / 1000.0, rate);
    const double tau = std::max(1.0, static_cast<double>(len) / 5.0);
    for (std::size_t onset : place_events(total, len, spec.n_events, rng)) {
      for (std::size_t i = 0; i < len; ++i) {
        x[onset + i] += spec.crackle_amplitude * std::exp(-static_cast<double>(i) / tau) *
                        (2.0 * rng.uniform() - 1.0);
      }
      events.push_back({static_cast<double>(onset) / rate, static_cast<double>(onset + len) / rate, "crackle"});
    }
  }
  if (has_wheeze(spec.cls)) {
    const std::size_t len = to_samples(spec.wheeze_seconds, rate);
    const double ramp = std::min(kRampSeconds * rate, static_cast<double>(len) / 4.0);
    const double w = 2.0 * std::numbers::pi * spec.wheeze_hz / rate;
    for (std::size_t onset : place_events(total, len, spec.n_events, rng)) {
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      for (std::size_t i = 0; i < len; ++i) {
        const double edge = std::min(static_cast<double>(i), static_cast<double>(len - 1 - i));
        const double env = edge >= ramp ? 1.0 : 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp);
        x[onset + i] += spec.wheeze_amplitude * env * std::sin(w * static_cast<double>(i) + phase);
      }
      events.push_back({static_cast<double>(onset) / rate, static_cast<double>(onset + len) / rate, "wheeze"});
    }
  }

  RecordManifest& m = rec.manifest;
  m.id = spec.id.empty() ? "synth" : spec.id;
  m.audio_path = m.id + ".wav";
  m.dataset = DatasetId::kSynthetic;
  m.split = spec.split;
  m.label_raw = std::string(to_string(spec.cls));
  m.label_unified = spec.cls;
  m.events = std::move(events);
  return rec;
}

std::vector<SynthRecord> synth_corpus(const SynthSpec& base, std::size_t per_class, std::uint64_t seed) {
  std::vector<SynthRecord> out;
  out.reserve(per_class * kUnifiedLabelCount);
  for (std::size_t c = 0; c < kUnifiedLabelCount; ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      SynthSpec spec = base;
      spec.cls = static_cast<UnifiedLabel>(c);
      spec.seed = derive_seed(seed, c * per_class + k);
      char id[64];
      std::snprintf(id, sizeof id, "synth_%s_%03zu", std::string(to_string(spec.cls)).c_str(), k);
      spec.id = id;
      out.push_back(synth(spec));
    }
  }
  return out;
}

}  // namespace lungmix

#include "lungmix/mix_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lungmix/error.hpp"

namespace lungmix {
namespace {

Provenance base_provenance(const MixRequest& req) {
  Provenance p;
  p.source_a = req.source_a.id;
  p.source_b = req.source_b.id;
  p.dataset_a = req.source_a.dataset;
  p.dataset_b = req.source_b.dataset;
  p.strategy = req.strategy;
  p.mode = req.interpolation;
  p.semantics = req.params.semantics;
  p.alpha = req.params.alpha;
  p.lambda = req.params.lambda;
  p.seed = req.params.seed;
  p.random_density = req.params.random_density;
  p.shift = req.params.shift;
  return p;
}

void check_sources(const MixRequest& req, Strategy expected, const char* op) {
  require(req.strategy == expected, ErrorKind::kInvalidConfig,
          std::string(op) + ": request strategy is " + std::string(to_string(req.strategy)));
  validate(req.params);
  require(!req.source_a.audio.empty() && !req.source_b.audio.empty(), ErrorKind::kEmptyAudio,
          std::string(op) + ": empty source");
  require(req.source_a.audio.sample_rate == req.source_b.audio.sample_rate, ErrorKind::kRateMismatch,
          std::string(op) + ": sources at " + std::to_string(req.source_a.audio.sample_rate) +
              " Hz and " + std::to_string(req.source_b.audio.sample_rate) + " Hz");
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kLungmix: return "lungmix";
    case Strategy::kMixup: return "mixup";
    case Strategy::kCutmix: return "cutmix";
    case Strategy::kPatchmix: return "patchmix";
  }
  return "lungmix";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "lungmix") return Strategy::kLungmix;
  if (name == "mixup") return Strategy::kMixup;
  if (name == "cutmix") return Strategy::kCutmix;
  if (name == "patchmix") return Strategy::kPatchmix;
  fail(ErrorKind::kInvalidConfig, "unknown strategy '" + std::string(name) + "'");
}

Waveform roll(const Waveform& w, std::size_t offset) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.size());
  if (w.empty()) return out;
  offset %= w.size();
  std::rotate_copy(w.samples.begin(),
                   w.samples.begin() + static_cast<std::ptrdiff_t>(w.size() - offset),
                   w.samples.end(), out.samples.begin());
  return out;
}

Waveform shift_roll(const Waveform& w, Rng& rng) {
  require(!w.empty(), ErrorKind::kEmptyAudio, "shift_roll: empty input");
  return roll(w, rng.below(w.size()));
}

double blend_sample(double m, double a, double b) {
  if (m == 1.0) return a;
  if (m == 0.0 || a == b) return m == 0.0 ? b : a;
  const double v = m * a + (1.0 - m) * b;
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

Waveform blend(std::span<const double> mask, const Waveform& a, const Waveform& b) {
  require(mask.size() == a.size() && a.size() == b.size(), ErrorKind::kShapeMismatch,
          "blend: mask and sources must share one length");
  require(a.sample_rate == b.sample_rate, ErrorKind::kRateMismatch, "blend: sample rates differ");
  Waveform out;
  out.sample_rate = a.sample_rate;
  out.samples.resize(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    out.samples[t] = blend_sample(mask[t], a.samples[t], b.samples[t]);
  }
  return out;
}

MixResult lungmix(const MixRequest& req, LungmixTrace* trace) {
  check_sources(req, Strategy::kLungmix, "lungmix");
  Rng rng(req.params.seed);
  Provenance prov = base_provenance(req);

  Waveform a = req.source_a.audio;
  Waveform b = req.source_b.audio;
  if (req.params.shift) {
    const bool roll_b = rng.coin();
    Waveform& target = roll_b ? b : a;
    const std::size_t offset = rng.below(target.size());
    target = roll(target, offset);
    prov.rolled = roll_b ? "b" : "a";
    prov.roll_offset = offset;
  }

  // Loudness statistics come from the unpadded signals; padding is never loud.
  BinaryMask m_a = loudness_mask(a);
  BinaryMask m_b = loudness_mask(b);
  const std::size_t n = std::max(a.size(), b.size());
  a = pad_to(a, n, req.pad, rng);
  b = pad_to(b, n, req.pad, rng);
  m_a.resize(n, 0);
  m_b.resize(n, 0);
  BinaryMask r = random_mask(n, req.params.random_density, rng);
  MixMask mask = combine_masks(m_a, m_b, r, req.params.lambda, req.params.semantics);

  MixResult result;
  result.audio = blend(mask.values, a, b);
  result.label = interpolate_label(req.source_a.label, req.source_b.label, req.params.lambda,
                                   req.interpolation);
  result.provenance = std::move(prov);

  if (trace) {
    trace->a = std::move(a);
    trace->b = std::move(b);
    trace->m_a = std::move(m_a);
    trace->m_b = std::move(m_b);
    trace->r = std::move(r);
    trace->mask = std::move(mask);
  }
  return result;
}

MixResult vanilla_mixup(const MixRequest& req) {
  check_sources(req, Strategy::kMixup, "vanilla_mixup");
  Rng rng(req.params.seed);
  const std::size_t n = std::max(req.source_a.audio.size(), req.source_b.audio.size());
  const Waveform a = pad_to(req.source_a.audio, n, req.pad, rng);
  const Waveform b = pad_to(req.source_b.audio, n, req.pad, rng);
  const std::vector<double> mask(n, req.params.lambda);

  MixResult result;
  result.audio = blend(mask, a, b);
  result.label = interpolate_label(req.source_a.label, req.source_b.label, req.params.lambda,
                                   req.interpolation);
  result.provenance = base_provenance(req);
  result.provenance.shift = false;
  return result;
}

Waveform cut_segment(const Waveform& a, const Waveform& b, double lambda, std::size_t offset) {
  require(a.size() == b.size(), ErrorKind::kShapeMismatch, "cut_segment: lengths differ");
  require(a.sample_rate == b.sample_rate, ErrorKind::kRateMismatch, "cut_segment: rates differ");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kInvalidConfig, "cut_segment: lambda out of [0, 1]");
  const auto length = static_cast<std::size_t>(std::llround((1.0 - lambda) * static_cast<double>(a.size())));
  require(offset + length <= a.size(), ErrorKind::kInvalidConfig, "cut_segment: segment exceeds signal");
  Waveform out = a;
  std::copy_n(b.samples.begin() + static_cast<std::ptrdiff_t>(offset), length,
              out.samples.begin() + static_cast<std::ptrdiff_t>(offset));
  return out;
}

MixResult cutmix(const MixRequest& req) {
  check_sources(req, Strategy::kCutmix, "cutmix");
  Rng rng(req.params.seed);
  const std::size_t n = std::max(req.source_a.audio.size(), req.source_b.audio.size());
  const Waveform a = pad_to(req.source_a.audio, n, req.pad, rng);
  const Waveform b = pad_to(req.source_b.audio, n, req.pad, rng);
  const auto length = static_cast<std::size_t>(
      std::llround((1.0 - req.params.lambda) * static_cast<double>(n)));
  const std::size_t offset = rng.below(n - length + 1);

  MixResult result;
  result.audio = cut_segment(a, b, req.params.lambda, offset);
  result.label = interpolate_label(req.source_a.label, req.source_b.label, req.params.lambda,
                                   req.interpolation);
  result.provenance = base_provenance(req);
  result.provenance.shift = false;
  result.provenance.cut_offset = offset;
  result.provenance.cut_length = length;
  return result;
}

MixResult patchmix(const LabeledSpectrogram& a, const LabeledSpectrogram& b,
                   const MixParams& params, InterpolationMode mode) {
  validate(params);
  const Spectrogram& sa = a.spectrogram;
  const Spectrogram& sb = b.spectrogram;
  require(sa.mel_bins() == sb.mel_bins() && sa.frames() == sb.frames(), ErrorKind::kShapeMismatch,
          "patchmix: spectrogram shapes differ");
  require(sa.mel_bins() > 0 && sa.mel_bins() % kPatchSize == 0 && sa.frames() % kPatchSize == 0,
          ErrorKind::kShapeMismatch, "patchmix: shape must tile into 16x16 patches");

  const std::size_t rows = sa.mel_bins() / kPatchSize;
  const std::size_t cols = sa.frames() / kPatchSize;
  const std::size_t total = rows * cols;
  const auto replace = static_cast<std::size_t>(
      std::llround((1.0 - params.lambda) * static_cast<double>(total)));

  Rng rng(params.seed);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < replace; ++i) {
    std::swap(order[i], order[i + rng.below(total - i)]);
  }

  Spectrogram out = sa;
  for (std::size_t i = 0; i < replace; ++i) {
    const std::size_t pr = order[i] / cols;
    const std::size_t pc = order[i] % cols;
    for (std::size_t m = pr * kPatchSize; m < (pr + 1) * kPatchSize; ++m) {
      for (std::size_t f = pc * kPatchSize; f < (pc + 1) * kPatchSize; ++f) out.at(m, f) = sb.at(m, f);
    }
  }

  MixResult result;
  result.audio = std::move(out);
  result.label = interpolate_label(a.label, b.label, params.lambda, mode);
  Provenance& p = result.provenance;
  p.source_a = a.id;
  p.source_b = b.id;
  p.dataset_a = a.dataset;
  p.dataset_b = b.dataset;
  p.strategy = Strategy::kPatchmix;
  p.mode = mode;
  p.semantics = params.semantics;
  p.alpha = params.alpha;
  p.lambda = params.lambda;
  p.seed = params.seed;
  p.random_density = params.random_density;
  p.shift = false;
  p.patches_replaced = replace;
  return result;
}

MixResult mix(const MixRequest& req) {
  switch (req.strategy) {
    case Strategy::kLungmix: return lungmix(req);
    case Strategy::kMixup: return vanilla_mixup(req);
    case Strategy::kCutmix: return cutmix(req);
    case Strategy::kPatchmix: break;
  }
  fail(ErrorKind::kInvalidConfig, "mix: patchmix operates on spectrograms, use patchmix()");
}

}  // namespace lungmix

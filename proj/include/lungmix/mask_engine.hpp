#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lungmix/audio_types.hpp"
#include "lungmix/rng.hpp"

namespace lungmix {

using BinaryMask = std::vector<std::uint8_t>;

/// Per-sample mixing weights; every value is exactly 0, lambda or 1.
struct MixMask {
  std::vector<double> values;
  double lambda = 0.0;

  std::size_t size() const { return values.size(); }
};

enum class MaskSemantics {
  kLoudnessPrecedence,  // lambda on loudness union, else 1 on random mask, else 0
  kMax,                 // max(lambda * loudness union, random mask)
};

struct MixParams {
  double alpha = 1.0;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  double random_density = 0.5;
  MaskSemantics semantics = MaskSemantics::kLoudnessPrecedence;
  bool shift = true;  // apply shift_roll to one source before mixing
};

void validate(const MixParams& p);

/// Draws lambda ~ Beta(alpha, alpha).
double sample_lambda(double alpha, Rng& rng);

/// Bit t set iff |x[t]| > |mean(x) + 2 * std(x)|, population std.
BinaryMask loudness_mask(std::span<const double> samples);
inline BinaryMask loudness_mask(const Waveform& w) { return loudness_mask(w.samples); }

/// Each bit set independently iff U(0,1] > 1 - density.
BinaryMask random_mask(std::size_t length, double density, Rng& rng);

MixMask combine_masks(const BinaryMask& m_i, const BinaryMask& m_j, const BinaryMask& r,
                      double lambda, MaskSemantics semantics);

}  // namespace lungmix

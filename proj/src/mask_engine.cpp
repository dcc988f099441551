#include "lungmix/mask_engine.hpp"

#include <cmath>
#include <string>

#include "lungmix/error.hpp"

namespace lungmix {

void validate(const MixParams& p) {
  require(p.alpha > 0.0 && std::isfinite(p.alpha), ErrorKind::kInvalidConfig, "alpha must be > 0");
  require(p.lambda >= 0.0 && p.lambda <= 1.0, ErrorKind::kInvalidConfig, "lambda must lie in [0, 1]");
  require(p.random_density >= 0.0 && p.random_density <= 1.0, ErrorKind::kInvalidConfig,
          "random_density must lie in [0, 1]");
}

double sample_lambda(double alpha, Rng& rng) {
  require(alpha > 0.0 && std::isfinite(alpha), ErrorKind::kInvalidConfig,
          "sample_lambda: alpha must be > 0");
  return rng.beta(alpha, alpha);
}

BinaryMask loudness_mask(std::span<const double> x) {
  require(!x.empty(), ErrorKind::kEmptyAudio, "loudness_mask: empty input");
  const auto n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double threshold = std::abs(mean + 2.0 * std::sqrt(ss / n));

  BinaryMask mask(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) mask[t] = std::abs(x[t]) > threshold ? 1 : 0;
  return mask;
}

BinaryMask random_mask(std::size_t length, double density, Rng& rng) {
  require(density >= 0.0 && density <= 1.0, ErrorKind::kInvalidConfig,
          "random_mask: density must lie in [0, 1]");
  const double cut = 1.0 - density;
  BinaryMask mask(length);
  for (auto& bit : mask) bit = rng.uniform() > cut ? 1 : 0;
  return mask;
}

MixMask combine_masks(const BinaryMask& m_i, const BinaryMask& m_j, const BinaryMask& r,
                      double lambda, MaskSemantics semantics) {
  require(m_i.size() == m_j.size() && m_i.size() == r.size(), ErrorKind::kShapeMismatch,
          "combine_masks: lengths " + std::to_string(m_i.size()) + ", " +
              std::to_string(m_j.size()) + ", " + std::to_string(r.size()) + " differ");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kInvalidConfig,
          "combine_masks: lambda must lie in [0, 1]");

  MixMask out;
  out.lambda = lambda;
  out.values.resize(m_i.size());
  for (std::size_t t = 0; t < m_i.size(); ++t) {
    const bool loud = m_i[t] || m_j[t];
    double v;
    if (semantics == MaskSemantics::kLoudnessPrecedence) {
      v = loud ? lambda : (r[t] ? 1.0 : 0.0);
    } else {
      v = r[t] ? 1.0 : (loud ? lambda : 0.0);
    }
    out.values[t] = v;
  }
  return out;
}

}  // namespace lungmix

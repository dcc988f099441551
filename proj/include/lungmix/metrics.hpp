#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lungmix/label_algebra.hpp"

namespace lungmix {

struct LabelPair {
  UnifiedLabel truth = UnifiedLabel::kNormal;
  UnifiedLabel predicted = UnifiedLabel::kNormal;
};

/// Row = true class, column = predicted class.
using ConfusionMatrix = std::array<std::array<std::uint64_t, kUnifiedLabelCount>, kUnifiedLabelCount>;

ConfusionMatrix confusion(std::span<const LabelPair> pairs);
ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b);

/// ICBHI scores in percent. Se/Sp are absent when their class group is empty.
struct MetricsReport {
  std::array<std::uint64_t, kUnifiedLabelCount> correct{};  // C_N, C_C, C_W, C_B
  std::array<std::uint64_t, kUnifiedLabelCount> total{};    // N_N, N_C, N_W, N_B
  std::optional<double> se;
  std::optional<double> sp;
  std::optional<double> sc;
};

MetricsReport score(const ConfusionMatrix& m);
MetricsReport score(std::span<const LabelPair> pairs);

/// (se + sp) / 2, absent if either is.
std::optional<double> icbhi_score(std::optional<double> se, std::optional<double> sp);

/// Half-away-from-zero rounding to 2 decimals, for display.
double round_display(double value);

/// Reads {"id", "true", "predicted"} rows. Throws ParseError.
std::vector<LabelPair> load_predictions(const std::filesystem::path& path);

std::string report_to_json(const MetricsReport& report, const ConfusionMatrix& m);
std::string report_to_table(const MetricsReport& report, const ConfusionMatrix& m);

}  // namespace lungmix

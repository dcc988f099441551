#include "lungmix/label_algebra.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <utility>

#include "lungmix/error.hpp"

namespace lungmix {
namespace {

constexpr std::uint32_t kMaxWidth = 20;

void check_same_schema(const LabelVector& a, const LabelVector& b, const char* where) {
  require(a.width == b.width, ErrorKind::kSchemaMismatch,
          std::string(where) + ": label widths " + std::to_string(a.width) + " and " +
              std::to_string(b.width) + " differ");
}

void check_lambda(double lambda, const char* where) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kInvalidConfig,
          std::string(where) + ": lambda must lie in [0, 1]");
}

/// (weight on a, weight on b) summing to one, with the smaller weight derived
/// from the larger so that swapping (a, b, lambda) -> (b, a, 1 - lambda)
/// reproduces the same pair exactly.
std::pair<double, double> convex_weights(double lambda) {
  if (lambda >= 0.5) return {lambda, 1.0 - lambda};
  const double wb = 1.0 - lambda;
  return {1.0 - wb, wb};
}

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

LabelSchema::LabelSchema(std::vector<std::string> abnormal_names)
    : abnormal_names_(std::move(abnormal_names)) {
  require(abnormal_names_.size() <= kMaxWidth, ErrorKind::kInvalidConfig,
          "LabelSchema: at most 20 abnormal classes");
  for (std::size_t i = 0; i < abnormal_names_.size(); ++i) {
    require(!abnormal_names_[i].empty() && abnormal_names_[i] != "normal",
            ErrorKind::kInvalidConfig, "LabelSchema: invalid abnormal class name");
    for (std::size_t j = 0; j < i; ++j) {
      require(abnormal_names_[i] != abnormal_names_[j], ErrorKind::kInvalidConfig,
              "LabelSchema: duplicate class " + abnormal_names_[i]);
    }
  }
}

const LabelSchema& LabelSchema::four_class() {
  static const LabelSchema schema({"crackle", "wheeze"});
  return schema;
}

LabelVector LabelSchema::from_category(std::size_t id) const {
  require(id < category_count(), ErrorKind::kUnknownLabel,
          "category id " + std::to_string(id) + " out of range");
  return {static_cast<std::uint32_t>(id), width()};
}

std::string LabelSchema::category_name(std::size_t id) const {
  require(id < category_count(), ErrorKind::kUnknownLabel,
          "category id " + std::to_string(id) + " out of range");
  if (id == 0) return "normal";
  // The four-class system names its only mixture "both".
  if (width() == 2 && id == 3 && abnormal_names_[0] == "crackle" && abnormal_names_[1] == "wheeze") {
    return "both";
  }
  std::string name;
  for (std::size_t i = 0; i < abnormal_names_.size(); ++i) {
    if (id & (std::size_t{1} << i)) {
      if (!name.empty()) name += '+';
      name += abnormal_names_[i];
    }
  }
  return name;
}

LabelVector LabelSchema::parse(std::string_view name) const {
  const std::string key = lower_trim(name);
  for (std::size_t id = 0; id < category_count(); ++id) {
    if (category_name(id) == key) return from_category(id);
  }
  fail(ErrorKind::kUnknownLabel, "unknown category '" + std::string(name) + "'");
}

LabelVector LabelSchema::abnormal(std::size_t index) const {
  require(index < abnormal_names_.size(), ErrorKind::kUnknownLabel, "abnormal class index out of range");
  return {std::uint32_t{1} << index, width()};
}

std::vector<LabelVector> LabelSchema::enumerate() const {
  std::vector<LabelVector> out;
  out.reserve(category_count());
  for (std::size_t id = 0; id < category_count(); ++id) out.push_back(from_category(id));
  return out;
}

std::size_t powerset_category_count(std::size_t n_classes) {
  require(n_classes >= 1 && n_classes - 1 <= kMaxWidth, ErrorKind::kInvalidConfig,
          "n_classes out of range");
  return std::size_t{1} << (n_classes - 1);
}

std::size_t mixed_category_count(std::size_t n_classes) {
  // Subsets of size >= 2: all, minus the empty set, minus the n - 1 singletons.
  return powerset_category_count(n_classes) - n_classes;
}

std::size_t powerset_category(const LabelVector& y) {
  require(y.width <= kMaxWidth && (y.bits >> y.width) == 0,
          ErrorKind::kSchemaMismatch, "label bits exceed schema width");
  return y.bits;
}

LabelVector unify_or(const LabelVector& a, const LabelVector& b) {
  check_same_schema(a, b, "unify_or");
  return {a.bits | b.bits, a.width};
}

std::string_view to_string(UnifiedLabel label) {
  switch (label) {
    case UnifiedLabel::kNormal: return "normal";
    case UnifiedLabel::kCrackle: return "crackle";
    case UnifiedLabel::kWheeze: return "wheeze";
    case UnifiedLabel::kBoth: return "both";
  }
  return "normal";
}

UnifiedLabel parse_unified_label(std::string_view name) {
  const std::string key = lower_trim(name);
  for (std::size_t i = 0; i < kUnifiedLabelCount; ++i) {
    const auto label = static_cast<UnifiedLabel>(i);
    if (key == to_string(label)) return label;
  }
  fail(ErrorKind::kUnknownLabel, "unknown unified label '" + std::string(name) + "'");
}

LabelVector to_label_vector(UnifiedLabel label) {
  return {static_cast<std::uint32_t>(label), 2};
}

UnifiedLabel to_unified(const LabelVector& y) {
  require(y.width == 2 && y.bits < 4, ErrorKind::kSchemaMismatch,
          "label does not belong to the four-class schema");
  return static_cast<UnifiedLabel>(y.bits);
}

std::string_view to_string(InterpolationMode mode) {
  switch (mode) {
    case InterpolationMode::kLinear: return "linear";
    case InterpolationMode::kNonlinear: return "nonlinear";
    case InterpolationMode::kCombined: return "combined";
    case InterpolationMode::kPreserve: return "preserve";
  }
  return "nonlinear";
}

InterpolationMode parse_interpolation_mode(std::string_view name) {
  const std::string key = lower_trim(name);
  if (key == "linear") return InterpolationMode::kLinear;
  if (key == "nonlinear" || key == "non-linear") return InterpolationMode::kNonlinear;
  if (key == "combined") return InterpolationMode::kCombined;
  if (key == "preserve" || key == "preservation") return InterpolationMode::kPreserve;
  fail(ErrorKind::kInvalidConfig, "unknown interpolation mode '" + std::string(name) + "'");
}

InterpolatedLabel interpolate_label(const LabelVector& y_a, const LabelVector& y_b,
                                    double lambda, InterpolationMode mode) {
  check_same_schema(y_a, y_b, "interpolate_label");
  check_lambda(lambda, "interpolate_label");
  InterpolatedLabel out;
  switch (mode) {
    case InterpolationMode::kLinear:
      out.soft = SoftTarget{y_a, y_b, lambda};
      break;
    case InterpolationMode::kNonlinear:
      out.hard = unify_or(y_a, y_b);
      break;
    case InterpolationMode::kCombined:
      out.hard = unify_or(y_a, y_b);
      out.soft = SoftTarget{y_a, y_b, lambda};
      break;
    case InterpolationMode::kPreserve:
      out.hard = y_a;
      break;
  }
  return out;
}

double cross_entropy(std::span<const double> logits, std::size_t target) {
  require(!logits.empty(), ErrorKind::kShapeMismatch, "cross_entropy: empty logits");
  require(target < logits.size(), ErrorKind::kShapeMismatch, "cross_entropy: target out of range");
  double peak = -std::numeric_limits<double>::infinity();
  for (double l : logits) {
    require(std::isfinite(l), ErrorKind::kNumericalError, "cross_entropy: non-finite logit");
    peak = std::max(peak, l);
  }
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - peak);
  return peak + std::log(sum) - logits[target];
}

double mixup_loss(std::span<const double> logits, const LabelVector& y_a,
                  const LabelVector& y_b, double lambda) {
  check_same_schema(y_a, y_b, "mixup_loss");
  check_lambda(lambda, "mixup_loss");
  require(logits.size() == (std::size_t{1} << y_a.width), ErrorKind::kShapeMismatch,
          "mixup_loss: one logit per powerset category expected");
  const auto [wa, wb] = convex_weights(lambda);
  return wa * cross_entropy(logits, powerset_category(y_a)) +
         wb * cross_entropy(logits, powerset_category(y_b));
}

LossBreakdown lungmix_loss(std::span<const double> logits, const LabelVector& y_a,
                           const LabelVector& y_b, double lambda, const LossWeights& weights) {
  require(weights.lambda1 == 1.0, ErrorKind::kInvalidConfig, "lungmix_loss: lambda1 must be 1");
  if (weights.lambda2) {
    require(std::isfinite(*weights.lambda2), ErrorKind::kNumericalError,
            "lungmix_loss: non-finite lambda2 override");
  }
  LossBreakdown out;
  out.mixup_term = mixup_loss(logits, y_a, y_b, lambda);
  out.ce_term = cross_entropy(logits, powerset_category(unify_or(y_a, y_b)));
  if (weights.lambda2) {
    out.lambda2 = *weights.lambda2;
  } else {
    // Plain-number ratio: scales the mixup term to the magnitude of the CE term.
    out.lambda2 = out.mixup_term == 0.0 ? 0.0 : out.ce_term / out.mixup_term;
  }
  const double weighted_mixup = out.lambda2 == 0.0 ? 0.0 : out.lambda2 * out.mixup_term;
  out.total = weights.lambda1 * out.ce_term + weighted_mixup;
  require(std::isfinite(out.total), ErrorKind::kNumericalError, "lungmix_loss: non-finite result");
  return out;
}

}  // namespace lungmix

#include "lungmix/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "lungmix/error.hpp"

namespace lungmix {

ConfusionMatrix confusion(std::span<const LabelPair> pairs) {
  ConfusionMatrix m{};
  for (const auto& p : pairs) {
    ++m[static_cast<std::size_t>(p.truth)][static_cast<std::size_t>(p.predicted)];
  }
  return m;
}

ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < kUnifiedLabelCount; ++i) {
    for (std::size_t j = 0; j < kUnifiedLabelCount; ++j) m[i][j] = a[i][j] + b[i][j];
  }
  return m;
}

std::optional<double> icbhi_score(std::optional<double> se, std::optional<double> sp) {
  if (!se || !sp) return std::nullopt;
  return (*se + *sp) / 2.0;
}

MetricsReport score(const ConfusionMatrix& m) {
  MetricsReport r;
  for (std::size_t k = 0; k < kUnifiedLabelCount; ++k) {
    r.correct[k] = m[k][k];
    for (std::size_t j = 0; j < kUnifiedLabelCount; ++j) r.total[k] += m[k][j];
  }
  const std::uint64_t abnormal_correct = r.correct[1] + r.correct[2] + r.correct[3];
  const std::uint64_t abnormal_total = r.total[1] + r.total[2] + r.total[3];
  if (abnormal_total > 0) {
    r.se = 100.0 * static_cast<double>(abnormal_correct) / static_cast<double>(abnormal_total);
  }
  if (r.total[0] > 0) {
    r.sp = 100.0 * static_cast<double>(r.correct[0]) / static_cast<double>(r.total[0]);
  }
  r.sc = icbhi_score(r.se, r.sp);
  return r;
}

MetricsReport score(std::span<const LabelPair> pairs) { return score(confusion(pairs)); }

double round_display(double value) { return std::round(value * 100.0) / 100.0; }

std::vector<LabelPair> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open predictions " + path.string());
  std::vector<LabelPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("true") || !j.contains("predicted")) {
        fail(ErrorKind::kParseError, "row needs 'true' and 'predicted'");
      }
      if (j.contains("id") && !j["id"].is_string()) fail(ErrorKind::kParseError, "'id' must be a string");
      pairs.push_back({parse_unified_label(j["true"].get<std::string>()),
                       parse_unified_label(j["predicted"].get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kParseError, where + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::kParseError, where + e.what());
    }
  }
  return pairs;
}

std::string report_to_json(const MetricsReport& r, const ConfusionMatrix& m) {
  nlohmann::ordered_json j;
  auto rate = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  auto shown = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(round_display(*v)) : nlohmann::ordered_json(nullptr);
  };
  j["se"] = rate(r.se);
  j["sp"] = rate(r.sp);
  j["sc"] = rate(r.sc);
  j["display"] = {{"se", shown(r.se)}, {"sp", shown(r.sp)}, {"sc", shown(r.sc)}};
  nlohmann::ordered_json counts;
  for (std::size_t k = 0; k < kUnifiedLabelCount; ++k) {
    const std::string name(to_string(static_cast<UnifiedLabel>(k)));
    counts[name] = {{"correct", r.correct[k]}, {"total", r.total[k]}};
  }
  j["counts"] = std::move(counts);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : m) rows.push_back(row);
  j["confusion"] = std::move(rows);
  return j.dump(2);
}

std::string report_to_table(const MetricsReport& r, const ConfusionMatrix& m) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %8s\n", "true\\pred", "normal", "crackle", "wheeze", "both");
  out += buf;
  for (std::size_t i = 0; i < kUnifiedLabelCount; ++i) {
    std::snprintf(buf, sizeof buf, "%-10s %8llu %8llu %8llu %8llu\n",
                  std::string(to_string(static_cast<UnifiedLabel>(i))).c_str(),
                  static_cast<unsigned long long>(m[i][0]), static_cast<unsigned long long>(m[i][1]),
                  static_cast<unsigned long long>(m[i][2]), static_cast<unsigned long long>(m[i][3]));
    out += buf;
  }
  auto line = [&](const char* name, const std::optional<double>& v) {
    if (v) std::snprintf(buf, sizeof buf, "%-3s %7.2f%%\n", name, round_display(*v));
    else std::snprintf(buf, sizeof buf, "%-3s %8s\n", name, "n/a");
    out += buf;
  };
  out += '\n';
  line("Sp", r.sp);
  line("Se", r.se);
  line("Sc", r.sc);
  return out;
}

}  // namespace lungmix

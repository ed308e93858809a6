#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "convtrack/apprunner.hpp"

namespace convtrack {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // "-0.000000" would break byte-for-byte comparisons between equal results.
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

double parse_field(std::string_view text, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw IoError(where + "bad number '" + std::string(text) + "'");
  return v;
}

std::string curve_key(std::string_view prefix, double threshold, bool percent) {
  char buf[48];
  if (percent)
    std::snprintf(buf, sizeof buf, "%.*s@%.2f", static_cast<int>(prefix.size()), prefix.data(), threshold);
  else
    std::snprintf(buf, sizeof buf, "%.*s@%02d", static_cast<int>(prefix.size()), prefix.data(),
                  static_cast<int>(threshold));
  return buf;
}

}  // namespace

std::string format_results(const ResultsFile& results) {
  std::string out;
  for (const Rect& r : results.rects)
    out += fixed6(r.x) + "," + fixed6(r.y) + "," + fixed6(r.w) + "," + fixed6(r.h) + "\n";
  if (!results.metrics.empty()) {
    out += "#metrics\n";
    for (const auto& [key, value] : results.metrics) out += key + "=" + fixed6(value) + "\n";
  }
  return out;
}

ResultsFile parse_results(std::istream& in, const std::string& source) {
  ResultsFile results;
  std::string line;
  int line_no = 0;
  bool in_metrics = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (line == "#metrics") {
      if (in_metrics) throw IoError(where + "second #metrics line");
      in_metrics = true;
      continue;
    }
    if (line.empty()) continue;
    if (in_metrics) {
      const auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0) throw IoError(where + "expected key=value");
      const std::string key = line.substr(0, eq);
      if (!results.metrics.emplace(key, parse_field(std::string_view(line).substr(eq + 1), where)).second)
        throw IoError(where + "repeated metric '" + key + "'");
      continue;
    }
    double v[4];
    std::string_view rest = line;
    for (int k = 0; k < 4; ++k) {
      const auto comma = rest.find(',');
      if ((k < 3) != (comma != std::string_view::npos)) throw IoError(where + "expected x,y,w,h");
      v[k] = parse_field(rest.substr(0, comma), where);
      if (k < 3) rest = rest.substr(comma + 1);
    }
    results.rects.push_back({v[0], v[1], v[2], v[3]});
  }
  return results;
}

void save_results(const fs::path& path, const ResultsFile& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write results '" + path.string() + "'");
  out << format_results(results);
  if (!out) throw IoError("cannot write results '" + path.string() + "'");
}

ResultsFile load_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read results '" + path.string() + "'");
  return parse_results(in, path.string());
}

std::map<std::string, double> summary_metrics(const OpeSummary& summary) {
  std::map<std::string, double> m;
  m["precision20"] = summary.precision20;
  m["auc"] = summary.auc;
  m["updates"] = summary.updates;
  for (std::size_t k = 0; k < summary.precision.values.size(); ++k)
    m[curve_key("precision", summary.precision.thresholds[k], false)] = summary.precision.values[k];
  for (std::size_t k = 0; k < summary.success.values.size(); ++k)
    m[curve_key("success", summary.success.thresholds[k], true)] = summary.success.values[k];
  return m;
}

Curve curve_from_metrics(const std::map<std::string, double>& metrics, std::string_view prefix) {
  Curve c;
  const std::string head = std::string(prefix) + "@";
  // Keys are zero padded, so map order is threshold order.
  for (auto it = metrics.lower_bound(head); it != metrics.end() && it->first.starts_with(head); ++it) {
    c.thresholds.push_back(parse_field(std::string_view(it->first).substr(head.size()), "metric key: "));
    c.values.push_back(it->second);
  }
  if (c.values.empty())
    throw IoError("metrics hold no '" + std::string(prefix) + "' curve");
  return c;
}

}  // namespace convtrack

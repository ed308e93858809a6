#include <algorithm>
#include <cstdio>
#include <fstream>

#include "convtrack/apprunner.hpp"

namespace convtrack {

namespace {

constexpr double kPanelW = 480.0;
constexpr double kPanelH = 360.0;
constexpr double kLeft = 56.0;
constexpr double kRight = 16.0;
constexpr double kTop = 32.0;
constexpr double kBottom = 48.0;

const char* const kColours[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Panel body in local coordinates (0, 0) .. (kPanelW, kPanelH).
std::string panel(const std::vector<PlotSeries>& series, const std::string& title,
                  const std::string& x_label) {
  require(!series.empty(), "render_plot: no curves");
  double max_x = 0.0;
  for (const auto& s : series) {
    require(!s.curve.thresholds.empty() && s.curve.thresholds.size() == s.curve.values.size(),
            "render_plot: malformed curve '" + s.label + "'");
    max_x = std::max(max_x, s.curve.thresholds.back());
  }
  if (max_x <= 0.0) max_x = 1.0;

  const double plot_w = kPanelW - kLeft - kRight;
  const double plot_h = kPanelH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + plot_w * std::clamp(x / max_x, 0.0, 1.0); };
  auto py = [&](double y) { return kTop + plot_h * (1.0 - std::clamp(y, 0.0, 1.0)); };

  std::string out;
  out += "<text x=\"" + num(kPanelW / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  for (int k = 0; k <= 5; ++k) {
    const double fy = k / 5.0;
    const double fx = max_x * k / 5.0;
    out += "<line class=\"grid\" x1=\"" + num(kLeft) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" +
           num(kLeft + plot_w) + "\" y2=\"" + num(py(fy)) + "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(fy) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(fy) + "</text>\n";
    out += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kTop + plot_h + 16) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + tick_label(fx) + "</text>\n";
  }
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(plot_w) +
         "\" height=\"" + num(plot_h) + "\" fill=\"none\" stroke=\"#000000\"/>\n";
  out += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kPanelH - 10) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + escape(x_label) + "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = kColours[i % std::size(kColours)];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"";
    const Curve& c = series[i].curve;
    for (std::size_t k = 0; k < c.values.size(); ++k) {
      if (k > 0) out += ' ';
      out += num(px(c.thresholds[k])) + "," + num(py(c.values[k]));
    }
    out += "\"/>\n";
    const double ly = kTop + plot_h - 12.0 - 16.0 * (series.size() - 1 - i);
    const double lx = kLeft + plot_w - 170.0;
    out += "<g class=\"legend\"><line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(lx + 18) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + colour +
           "\" stroke-width=\"2\"/><text x=\"" + num(lx + 24) + "\" y=\"" + num(ly) +
           "\" font-size=\"11\">" + escape(series[i].label) + "</text></g>\n";
  }
  return out;
}

std::string document(double width, double height, const std::string& body) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "width=\"" + num(width) + "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) +
         " " + num(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n" + body +
         "</svg>\n";
}

}  // namespace

std::string render_plot(const std::vector<PlotSeries>& series, const std::string& title,
                        const std::string& x_label) {
  return document(kPanelW, kPanelH, panel(series, title, x_label));
}

std::string render_ope_plot(const std::vector<std::string>& names,
                            const std::vector<Curve>& precision, const std::vector<Curve>& success) {
  require(!names.empty(), "render_ope_plot: no results");
  require(names.size() == precision.size() && names.size() == success.size(),
          "render_ope_plot: names and curves differ in count");
  std::vector<PlotSeries> p;
  std::vector<PlotSeries> s;
  char buf[32];
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::snprintf(buf, sizeof buf, " [p@20 %.3f]", precision_at(precision[i], 20.0));
    p.push_back({names[i] + buf, precision[i]});
    std::snprintf(buf, sizeof buf, " [auc %.3f]", auc(success[i]));
    s.push_back({names[i] + buf, success[i]});
  }
  std::string body = "<g class=\"precision\">\n" +
                     panel(p, "Precision plot", "Location error threshold (px)") + "</g>\n";
  body += "<g class=\"success\" transform=\"translate(0," + num(kPanelH) + ")\">\n" +
          panel(s, "Success plot", "Overlap threshold") + "</g>\n";
  return document(kPanelW, 2 * kPanelH, body);
}

void emit_plot(const fs::path& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write plot '" + path.string() + "'");
  out << svg;
  if (!out) throw IoError("cannot write plot '" + path.string() + "'");
}

}  // namespace convtrack

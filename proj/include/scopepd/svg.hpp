#pragma once

// Minimal SVG emitters for the report figures. Output is plain text with
// fixed number formatting so figures diff cleanly between runs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "scopepd/attribution.hpp"
#include "scopepd/metrics.hpp"

namespace scopepd::svg {

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

class Canvas {
 public:
  Canvas(double w, double h) : w_(w), h_(h) {}

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& extra = {}) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
          << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"" << extra << "/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            const std::string& extra = {}) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
          << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\"" << extra << "/>\n";
  }
  void text(double x, double y, std::string_view s, const std::string& anchor = "start",
            int size = 12, const std::string& fill = "#222") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">" << escape(s)
          << "</text>\n";
  }

  std::string str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_, 0) << "\" height=\""
       << fmt(h_, 0) << "\" viewBox=\"0 0 " << fmt(w_, 0) << ' ' << fmt(h_, 0)
       << "\" font-family=\"sans-serif\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << body_.str() << "</svg>\n";
    return os.str();
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

// White-to-blue ramp for v in [0, 1].
inline std::string blue(double v) {
  v = std::clamp(v, 0.0, 1.0);
  auto ch = [&](double lo) { return static_cast<int>(std::lround(255 - (255 - lo) * v)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", ch(8), ch(48), ch(107));
  return buf;
}

inline std::string confusion_heatmap(const NormalizedConfusion& m, const std::string& title) {
  const double cell = 120, left = 90, top = 50;
  Canvas c(left + 2 * cell + 30, top + 2 * cell + 60);
  c.text(left + cell, 25, title, "middle", 14);
  const char* names[2] = {"HC", "PD"};
  for (int r = 0; r < 2; ++r) {
    for (int p = 0; p < 2; ++p) {
      const double x = left + p * cell, y = top + r * cell;
      c.rect(x, y, cell, cell, blue(m[r][p]), " stroke=\"#888\"");
      c.text(x + cell / 2, y + cell / 2 + 6, fmt(m[r][p], 3), "middle", 16,
             m[r][p] > 0.5 ? "white" : "#222");
    }
    c.text(left - 10, top + r * cell + cell / 2 + 5, names[r], "end");
    c.text(left + r * cell + cell / 2, top + 2 * cell + 20, names[r], "middle");
  }
  c.text(left + cell, top + 2 * cell + 45, "Predicted label", "middle");
  c.text(20, top + cell, "True", "middle");
  return c.str();
}

// Horizontal stacked bars: HC mean |phi| then PD mean |phi| per feature.
inline std::string stacked_bars(const GlobalSummary& g, const std::string& title) {
  const double left = 170, top = 50, bar_h = 22, gap = 8, width = 420;
  const double n = static_cast<double>(g.ranked.size());
  Canvas c(left + width + 40, top + n * (bar_h + gap) + 70);
  c.text(left + width / 2, 25, title, "middle", 14);
  double max_total = 0;
  for (const auto& r : g.ranked) max_total = std::max(max_total, r.total());
  const double scale = max_total > 0 ? width / max_total : 0.0;
  for (std::size_t i = 0; i < g.ranked.size(); ++i) {
    const auto& r = g.ranked[i];
    const double y = top + static_cast<double>(i) * (bar_h + gap);
    c.text(left - 8, y + bar_h / 2 + 4, r.feature_name, "end");
    c.rect(left, y, r.mean_abs_hc * scale, bar_h, "#1f77b4");
    c.rect(left + r.mean_abs_hc * scale, y, r.mean_abs_pd * scale, bar_h, "#d62728");
  }
  const double axis_y = top + n * (bar_h + gap);
  c.line(left, axis_y, left + width, axis_y, "#444");
  c.text(left, axis_y + 16, "0", "middle", 10);
  c.text(left + width, axis_y + 16, fmt(max_total, 3), "middle", 10);
  c.text(left + width / 2, axis_y + 34, "mean |SHAP value|", "middle");
  c.rect(left, axis_y + 44, 12, 12, "#1f77b4");
  c.text(left + 16, axis_y + 54, "HC");
  c.rect(left + 60, axis_y + 44, 12, 12, "#d62728");
  c.text(left + 76, axis_y + 54, "PD");
  return c.str();
}

// Bars run from the baseline through each term to the prediction.
inline std::string waterfall_chart(const Waterfall& w, const std::string& title,
                                   const std::string& output_space) {
  struct Bar {
    std::string label;
    double from, to;
  };
  std::vector<Bar> bars;
  double run = w.base_value;
  for (const auto& t : w.terms) {
    std::string label = t.feature_name;
    if (!std::isnan(t.value)) label += " = " + csv::format_number(t.value);
    bars.push_back({label, run, run + t.phi});
    run += t.phi;
  }
  if (w.remainder_count > 0) {
    bars.push_back({std::to_string(w.remainder_count) + " other features", run, run + w.remainder});
    run += w.remainder;
  }
  double lo = std::min(w.base_value, w.prediction), hi = std::max(w.base_value, w.prediction);
  for (const auto& b : bars) {
    lo = std::min({lo, b.from, b.to});
    hi = std::max({hi, b.from, b.to});
  }
  if (hi - lo < 1e-12) hi = lo + 1;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double left = 230, top = 60, bar_h = 22, gap = 8, width = 420;
  const double n = static_cast<double>(bars.size());
  Canvas c(left + width + 60, top + n * (bar_h + gap) + 60);
  c.text(left + width / 2, 25, title, "middle", 14);
  auto px = [&](double v) { return left + (v - lo) / (hi - lo) * width; };
  c.text(left, 45,
         "f(x) = " + fmt(w.prediction, 3) + "   E[f(X)] = " + fmt(w.base_value, 3) + "   (" +
             output_space + ")",
         "start", 11);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double y = top + static_cast<double>(i) * (bar_h + gap);
    const double x0 = px(std::min(b.from, b.to)), x1 = px(std::max(b.from, b.to));
    const double delta = b.to - b.from;
    c.text(left - 8, y + bar_h / 2 + 4, b.label, "end", 11);
    c.rect(x0, y, std::max(x1 - x0, 0.5), bar_h, delta >= 0 ? "#d62728" : "#1f77b4");
    c.text(x1 + 4, y + bar_h / 2 + 4, (delta >= 0 ? "+" : "") + fmt(delta, 3), "start", 10);
  }
  const double axis_y = top + n * (bar_h + gap);
  c.line(px(w.base_value), top - 4, px(w.base_value), axis_y, "#888",
         " stroke-dasharray=\"4 3\"");
  c.line(px(w.prediction), top - 4, px(w.prediction), axis_y, "#222");
  c.line(left, axis_y, left + width, axis_y, "#444");
  c.text(left, axis_y + 16, fmt(lo, 3), "middle", 10);
  c.text(left + width, axis_y + 16, fmt(hi, 3), "middle", 10);
  return c.str();
}

}  // namespace scopepd::svg

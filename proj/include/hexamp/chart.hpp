#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hexamp {

/// Minimal multi-series SVG line chart (no display dependencies).
class SvgChart {
 public:
  SvgChart(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_series(const std::string& name, const std::vector<double>& y) {
    series_.push_back({name, y});
  }

  std::string render(int width = 760, int height = 420) const {
    const double ml = 60, mr = 150, mt = 40, mb = 45;
    const double pw = width - ml - mr, ph = height - mt - mb;
    double ymin = 0, ymax = 1;
    std::size_t xmax = 1;
    bool first = true;
    for (const auto& s : series_) {
      xmax = std::max(xmax, s.y.size());
      for (double v : s.y) {
        if (!std::isfinite(v)) continue;
        if (first) { ymin = ymax = v; first = false; }
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
    if (ymax - ymin < 1e-12) { ymax += 1.0; ymin -= 1.0; }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
       << "' viewBox='0 0 " << width << " " << height << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << width / 2 << "' y='22' text-anchor='middle' font-size='15' "
          "font-family='sans-serif'>" << title_ << "</text>\n";
    // axes
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + ph
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw << "' y2='" << mt + ph
       << "' stroke='black'/>\n";
    os << "<text x='" << ml + pw / 2 << "' y='" << height - 10
       << "' text-anchor='middle' font-size='12' font-family='sans-serif'>" << x_label_
       << "</text>\n";
    os << "<text x='16' y='" << mt + ph / 2 << "' text-anchor='middle' font-size='12' "
          "font-family='sans-serif' transform='rotate(-90 16 " << mt + ph / 2 << ")'>"
       << y_label_ << "</text>\n";
    // y ticks
    for (int k = 0; k <= 4; ++k) {
      const double v = ymin + (ymax - ymin) * k / 4.0;
      const double y = mt + ph - ph * k / 4.0;
      os << "<line x1='" << ml - 4 << "' y1='" << y << "' x2='" << ml << "' y2='" << y
         << "' stroke='black'/>\n";
      os << "<text x='" << ml - 8 << "' y='" << y + 4
         << "' text-anchor='end' font-size='10' font-family='sans-serif'>";
      os.precision(3);
      os << v << "</text>\n";
    }
    // x ticks
    for (int k = 0; k <= 4; ++k) {
      const double fx = static_cast<double>(k) / 4.0;
      const double x = ml + pw * fx;
      os << "<line x1='" << x << "' y1='" << mt + ph << "' x2='" << x << "' y2='" << mt + ph + 4
         << "' stroke='black'/>\n";
      os << "<text x='" << x << "' y='" << mt + ph + 16
         << "' text-anchor='middle' font-size='10' font-family='sans-serif'>"
         << static_cast<int>(std::lround(fx * (xmax > 1 ? xmax - 1 : 1))) << "</text>\n";
    }
    // series
    for (std::size_t si = 0; si < series_.size(); ++si) {
      const auto& s = series_[si];
      const char* color = colors[si % 8];
      os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
      for (std::size_t i = 0; i < s.y.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        const double x = ml + (xmax > 1 ? pw * i / (xmax - 1) : 0.0);
        const double y = mt + ph - ph * (s.y[i] - ymin) / (ymax - ymin);
        os << x << "," << y << " ";
      }
      os << "'/>\n";
      const double ly = mt + 14 + 16 * si;
      os << "<line x1='" << ml + pw + 10 << "' y1='" << ly - 4 << "' x2='" << ml + pw + 30
         << "' y2='" << ly - 4 << "' stroke='" << color << "' stroke-width='2'/>\n";
      os << "<text x='" << ml + pw + 34 << "' y='" << ly
         << "' font-size='11' font-family='sans-serif'>" << s.name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
  }

  void save(const std::string& path, int width = 760, int height = 420) const {
    std::ofstream os(path);
    os << render(width, height);
  }

 private:
  struct Series {
    std::string name;
    std::vector<double> y;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
};

}  // namespace hexamp

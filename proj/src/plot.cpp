#include "fgd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fgd/errors.hpp"

namespace fgd {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series, bool log_y) {
  const double width = 720, height = 480;
  const double ml = 80, mr = 30, mt = 50, mb = 60;  // margins
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  double smallest_pos = std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      if (y > 0.0) smallest_pos = std::min(smallest_pos, y);
    }
  }
  if (!std::isfinite(xmin)) throw Error("write_line_chart_svg: no data");
  if (log_y && !std::isfinite(smallest_pos)) smallest_pos = 1e-16;

  auto y_of = [&](double y) {
    if (!log_y) return y;
    return std::log10(std::max(y, smallest_pos));
  };
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      const double yy = y_of(y);
      ymin = std::min(ymin, yy);
      ymax = std::max(ymax, yy);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (y_of(y) - ymin) / (ymax - ymin) * ph; };

  std::ofstream out(path);
  if (!out) throw Error("write_line_chart_svg: cannot open " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-size=\"16\">" << title << "</text>\n";

  // Axes box and ticks.
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / ticks;
    const double gx = px(fx);
    out << "<line x1=\"" << gx << "\" y1=\"" << mt + ph << "\" x2=\"" << gx
        << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << gx << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(fx) << "</text>\n";
    const double fy = ymin + (ymax - ymin) * i / ticks;
    const double gy = mt + ph - (fy - ymin) / (ymax - ymin) * ph;
    const std::string label = log_y ? ("1e" + fmt(fy)) : fmt(fy);
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml
        << "\" y2=\"" << gy << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 15
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n"
      << "<text x=\"20\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 "
      << mt + ph / 2 << ")\">" << y_label << "</text>\n";

  // Data polylines and legend.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[si].points)
      out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    const double ly = mt + 16 + 16 * static_cast<double>(si);
    out << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly << "\" x2=\""
        << ml + pw - 125 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << ml + pw - 120 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << series[si].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace fgd

#include "probekit/report.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "probekit/common.hpp"

namespace probekit {

namespace fs = std::filesystem;

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

void write_json_report(const nlohmann::json& report, const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p);
  require(out.good(), "unwritable path: " + path);
  out << report.dump(2) << "\n";
  require(out.good(), "write failed: " + path);
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path);
  require(out.good(), "unwritable path: " + path);
  out << header << "\n";
  for (const auto& r : rows) out << r << "\n";
  require(out.good(), "write failed: " + path);
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::vector<std::string>& x_labels,
                          const std::vector<ChartSeries>& series, const std::string& y_label) {
  require(!x_labels.empty() && !series.empty(), "chart: nothing to plot");
  for (const auto& s : series)
    require(s.values.size() == x_labels.size(), "chart: series '" + s.name + "' length mismatch");

  double lo = series[0].values[0], hi = lo;
  for (const auto& s : series)
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double w = 720, h = 420, ml = 64, mr = 150, mt = 40, mb = 56;
  const double pw = w - ml - mr, ph = h - mt - mb;
  const size_t nx = x_labels.size();
  auto px = [&](size_t i) {
    return nx == 1 ? ml + pw / 2 : ml + pw * static_cast<double>(i) / static_cast<double>(nx - 1);
  };
  auto py = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
      << "' viewBox='0 0 " << w << " " << h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='15' "
      << "font-family='sans-serif'>" << title << "</text>\n";

  for (int g = 0; g <= 4; ++g) {
    const double v = lo + (hi - lo) * g / 4.0;
    const double y = py(v);
    svg << "<line x1='" << ml << "' y1='" << y << "' x2='" << ml + pw << "' y2='" << y
        << "' stroke='#dddddd'/>\n"
        << "<text x='" << ml - 8 << "' y='" << y + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>"
        << fmt(std::round(v * 100.0) / 100.0) << "</text>\n";
  }
  svg << "<text x='16' y='" << mt + ph / 2
      << "' font-size='12' font-family='sans-serif' transform='rotate(-90 16 " << mt + ph / 2
      << ")' text-anchor='middle'>" << y_label << "</text>\n";

  for (size_t i = 0; i < nx; ++i) {
    svg << "<text x='" << px(i) << "' y='" << mt + ph + 20
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>" << x_labels[i]
        << "</text>\n";
  }
  svg << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw << "' y2='" << mt + ph
      << "' stroke='black'/>\n"
      << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + ph
      << "' stroke='black'/>\n";

  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (size_t i = 0; i < nx; ++i) svg << px(i) << "," << py(series[s].values[i]) << " ";
    svg << "'/>\n";
    for (size_t i = 0; i < nx; ++i)
      svg << "<circle cx='" << px(i) << "' cy='" << py(series[s].values[i])
          << "' r='3' fill='" << color << "'/>\n";
    const double ly = mt + 16 + 18 * static_cast<double>(s);
    svg << "<line x1='" << ml + pw + 10 << "' y1='" << ly << "' x2='" << ml + pw + 30 << "' y2='"
        << ly << "' stroke='" << color << "' stroke-width='2'/>\n"
        << "<text x='" << ml + pw + 36 << "' y='" << ly + 4
        << "' font-size='11' font-family='sans-serif'>" << series[s].name << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  require(out.good(), "unwritable path: " + path);
  out << svg.str();
}

}  // namespace probekit

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace probekit {

// UTC, second resolution. The one report field allowed to differ between
// otherwise identical runs.
std::string iso_timestamp();

// JSON primary; a CSV mirror goes next to it with the extension swapped.
void write_json_report(const nlohmann::json& report, const std::string& path);

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows);

struct ChartSeries {
  std::string name;
  std::vector<double> values;
};

// Minimal SVG line chart: one point per x label, one polyline per series.
void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::vector<std::string>& x_labels,
                          const std::vector<ChartSeries>& series, const std::string& y_label);

}  // namespace probekit

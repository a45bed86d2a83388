// Copyright 2026 The agrl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "agrl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "agrl/error.hpp"

namespace agrl {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

}  // namespace

std::string reward_curve_svg(const std::vector<StepTelemetry>& telemetry, const PlotOptions& o) {
  if (telemetry.empty()) throw ValidationError("plot: telemetry is empty");
  if (o.width < 200 || o.height < 150) throw ConfigError("plot: canvas too small");

  const double left = 60, right = 20, top = 40, bottom = 45;
  const double pw = o.width - left - right, ph = o.height - top - bottom;
  double y_max = 0.0;
  for (const auto& t : telemetry) y_max = std::max(y_max, t.mean_reward);
  y_max = std::max(1.0, std::ceil(y_max));
  const double n = static_cast<double>(telemetry.size());
  const auto px = [&](std::size_t i) { return left + (n > 1 ? pw * static_cast<double>(i) / (n - 1) : pw / 2); };
  const auto py = [&](double v) { return top + ph * (1.0 - std::clamp(v, 0.0, y_max) / y_max); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(o.width) + "\" height=\"" +
                    std::to_string(o.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(o.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(o.title) +
         "</text>\n";

  for (int k = 0; k <= 4; ++k) {
    const double v = y_max * k / 4.0;
    const std::string y = fmt(py(v));
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + y + "\" x2=\"" + fmt(left + pw) + "\" y2=\"" + y +
           "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fmt(left - 6) + "\" y=\"" + y + "\" text-anchor=\"end\" dominant-baseline=\"middle\">" +
           fmt(v) + "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const auto i = static_cast<std::size_t>(std::lround((n - 1) * k / 5.0));
    svg += "<text x=\"" + fmt(px(i)) + "\" y=\"" + fmt(top + ph + 16) + "\" text-anchor=\"middle\">" +
           std::to_string(telemetry[i].step) + "</text>\n";
  }
  svg += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(o.height - 8.0) + "\" text-anchor=\"middle\">step</text>\n";
  svg += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";

  std::string raw;
  for (std::size_t i = 0; i < telemetry.size(); ++i)
    raw += (i ? " " : "") + fmt(px(i)) + "," + fmt(py(telemetry[i].mean_reward));
  svg += "<polyline fill=\"none\" stroke=\"#9ecae1\" stroke-width=\"1\" points=\"" + raw + "\"/>\n";

  if (o.smoothing_window > 1) {
    std::string smooth;
    double acc = 0.0;
    for (std::size_t i = 0; i < telemetry.size(); ++i) {
      acc += telemetry[i].mean_reward;
      if (i >= o.smoothing_window) acc -= telemetry[i - o.smoothing_window].mean_reward;
      const double m = acc / static_cast<double>(std::min(i + 1, o.smoothing_window));
      smooth += (i ? " " : "") + fmt(px(i)) + "," + fmt(py(m));
    }
    svg += "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"" + smooth + "\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace agrl

/*
 * Copyright 2026 The ntkal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ntkal/error.hpp"
#include "ntkal/experiment.hpp"

namespace ntkal {
namespace {

struct Series {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> half_width;  // 1.96 · stderr, 0 for a single seed
  bool banded = false;
};

std::string num(double v) {
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

std::map<std::string, Series> aggregate(const std::vector<CycleRecord>& records) {
  // strategy -> cycle -> accuracies over seeds
  std::map<std::string, std::map<std::size_t, std::vector<double>>> groups;
  for (const auto& r : records) groups[r.strategy][r.cycle].push_back(r.test_accuracy);
  std::map<std::string, Series> out;
  for (const auto& [name, cycles] : groups) {
    Series s;
    for (const auto& [cycle, acc] : cycles) {
      const double n = static_cast<double>(acc.size());
      double mean = 0.0;
      for (double a : acc) mean += a;
      mean /= n;
      double hw = 0.0;
      if (acc.size() > 1) {
        double ss = 0.0;
        for (double a : acc) ss += (a - mean) * (a - mean);
        hw = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        s.banded = true;
      }
      s.x.push_back(static_cast<double>(cycle));
      s.mean.push_back(mean);
      s.half_width.push_back(hw);
    }
    out.emplace(name, std::move(s));
  }
  return out;
}

}  // namespace

std::string render_accuracy_svg(const std::vector<CycleRecord>& records,
                                const std::string& title) {
  if (records.empty()) throw EmptyInputError("report: no records to plot");
  const auto series = aggregate(records);

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [name, s] : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.mean[i] - s.half_width[i]);
      ymax = std::max(ymax, s.mean[i] + s.half_width[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  const double pad = std::max(0.01, 0.05 * (ymax - ymin));
  ymin = std::max(0.0, ymin - pad);
  ymax = std::min(1.0, ymax + pad);
  if (ymax <= ymin) ymax = ymin + 0.01;

  constexpr double kW = 720, kH = 440, kLeft = 70, kRight = 190, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"15\">" << escape(title) << "</text>\n";

  // axes and ticks
  svg << "<g stroke=\"#333\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << kTop + ph << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + ph << "\"/>\n</g>\n";
  const std::size_t xticks = std::min<std::size_t>(10, static_cast<std::size_t>(xmax - xmin));
  for (std::size_t i = 0; i <= xticks; ++i) {
    const double xv = xmin + (xmax - xmin) * static_cast<double>(i) / static_cast<double>(xticks);
    const double rx = std::round(xv);
    svg << "<text x=\"" << num(px(rx)) << "\" y=\"" << num(kTop + ph + 18)
        << "\" text-anchor=\"middle\">" << static_cast<long long>(rx) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << kLeft + pw
        << "\" y2=\"" << num(py(yv)) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(yv) + 4)
        << "\" text-anchor=\"end\">" << num(yv * 100.0) << "</text>\n";
  }
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">cycle</text>\n";
  svg << "<text transform=\"translate(18 " << num(kTop + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">test accuracy (%)</text>\n";

  std::size_t k = 0;
  for (const auto& [name, s] : series) {
    const char* color = kColors[k % 10];
    if (s.banded) {
      svg << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" "
          << "stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        svg << num(px(s.x[i])) << "," << num(py(s.mean[i] + s.half_width[i])) << " ";
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        svg << num(px(s.x[i])) << "," << num(py(s.mean[i] - s.half_width[i])) << " ";
      }
      svg << "\"/>\n";
    }
    svg << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      svg << num(px(s.x[i])) << "," << num(py(s.mean[i])) << " ";
    }
    svg << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    svg << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << num(ly) << "\" x2=\""
        << kLeft + pw + 40 << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kLeft + pw + 46 << "\" y=\"" << num(ly + 4) << "\">"
        << escape(name) << "</text>\n";
    ++k;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_report(const std::vector<std::string>& csv_paths, const std::string& out_path) {
  if (csv_paths.empty()) throw EmptyInputError("report: no input CSV files");
  std::vector<CycleRecord> all;
  for (const auto& path : csv_paths) {
    auto recs = read_records_csv(path);
    if (recs.empty()) throw FormatError(path + ": CSV has a header but no rows");
    all.insert(all.end(), recs.begin(), recs.end());
  }
  const std::string svg = render_accuracy_svg(all);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + out_path + "'");
  out << svg;
}

}  // namespace ntkal

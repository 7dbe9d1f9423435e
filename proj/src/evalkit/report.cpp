// Copyright (c) the hdcsvc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hdc/evalkit/report.hpp"

#include "hdc/evalkit/image_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hdc::evalkit {

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_num(const std::string& s, const std::filesystem::path& p, std::size_t line) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::runtime_error(p.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

constexpr const char* kHeader = "sequence,lambda,bpp,psnr";

}  // namespace

void write_csv(const std::filesystem::path& p, const std::vector<RDRow>& rows) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << kHeader << '\n';
  for (const auto& r : rows) {
    if (r.sequence.find_first_of(",\n\r") != std::string::npos)
      throw std::invalid_argument("sequence names cannot contain commas or newlines");
    os << r.sequence << ',' << num(r.lambda) << ',' << num(r.bpp) << ',' << num(r.psnr) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

std::vector<RDRow> read_csv(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::string line;
  if (!std::getline(is, line) || line != kHeader) throw std::runtime_error(p.string() + ": expected header " + kHeader);
  std::vector<RDRow> rows;
  for (std::size_t n = 2; std::getline(is, line); ++n) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 4) throw std::runtime_error(p.string() + ":" + std::to_string(n) + ": expected 4 fields");
    rows.push_back({f[0], parse_num(f[1], p, n), parse_num(f[2], p, n), parse_num(f[3], p, n)});
  }
  return rows;
}

std::map<std::string, RDCurve> curves_by_sequence(const std::vector<RDRow>& rows) {
  std::map<std::string, std::vector<RDPoint>> pts;
  for (const auto& r : rows) pts[r.sequence].push_back({r.bpp, r.psnr});
  std::map<std::string, RDCurve> out;
  for (auto& [seq, p] : pts) out.emplace(seq, RDCurve(std::move(p)));
  return out;
}

std::vector<BdEntry> emit_report(const std::map<std::string, std::vector<RDRow>>& results, const std::string& anchor,
                                 const std::filesystem::path& out_dir) {
  const auto a = results.find(anchor);
  if (a == results.end()) throw std::invalid_argument("anchor '" + anchor + "' is not among the results");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  // Rows that do not form a valid curve are kept in the CSVs but get no
  // BD-rate and no plot.
  std::map<std::string, std::map<std::string, RDCurve>> curves;
  std::map<std::string, std::map<std::string, std::string>> invalid;
  for (const auto& [label, rows] : results) {
    write_csv(out_dir / (label + ".csv"), rows);
    std::map<std::string, std::vector<RDRow>> by_seq;
    for (const auto& r : rows) by_seq[r.sequence].push_back(r);
    for (const auto& [seq, sr] : by_seq) {
      try {
        curves[label].emplace(seq, curves_by_sequence(sr).at(seq));
      } catch (const std::invalid_argument& e) {
        invalid[label][seq] = e.what();
      }
    }
  }
  std::vector<BdEntry> table;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::set<std::string> anchor_seqs;
  for (const auto& r : a->second) anchor_seqs.insert(r.sequence);
  for (const auto& [label, rows] : results) {
    std::set<std::string> seqs;
    for (const auto& r : rows) seqs.insert(r.sequence);
    for (const auto& seq : seqs) {
      if (!anchor_seqs.count(seq)) continue;
      if (invalid[anchor].count(seq)) {
        table.push_back({label, seq, nan, "anchor: " + invalid[anchor][seq]});
      } else if (invalid[label].count(seq)) {
        table.push_back({label, seq, nan, invalid[label][seq]});
      } else {
        try {
          table.push_back({label, seq, bd_rate(curves[anchor].at(seq), curves[label].at(seq)), ""});
        } catch (const std::domain_error& e) {
          table.push_back({label, seq, nan, e.what()});
        }
      }
    }
  }
  {
    std::ofstream os(out_dir / "bd_rate.csv");
    if (!os) throw std::runtime_error("cannot write " + (out_dir / "bd_rate.csv").string());
    os << "label,sequence,bd_rate\n";
    for (const auto& e : table)
      os << e.label << ',' << e.sequence << ',' << (std::isnan(e.bd_rate) ? "nan" : num(e.bd_rate)) << '\n';
  }
  std::set<std::string> plotted;
  for (const auto& [label, by_seq] : curves)
    for (const auto& [seq, c] : by_seq) plotted.insert(seq);
  for (const auto& seq : plotted) {
    std::vector<std::pair<std::string, RDCurve>> plot;
    for (const auto& [label, by_seq] : curves) {
      const auto it = by_seq.find(seq);
      if (it != by_seq.end()) plot.emplace_back(label, it->second);
    }
    plot_curves(out_dir / ("rd_" + seq + ".png"), plot);
  }
  return table;
}

namespace {

struct Canvas {
  int w, h;
  std::vector<std::uint8_t> px;
  Canvas(int w_, int h_) : w(w_), h(h_), px(std::size_t(w_) * std::size_t(h_) * 3, 255) {}
  void set(int x, int y, const std::uint8_t* c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    std::copy(c, c + 3, px.begin() + (std::ptrdiff_t(y) * w + x) * 3);
  }
  void line(double x0, double y0, double x1, double y1, const std::uint8_t* c) {
    const int steps = int(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = double(s) / steps;
      const int x = int(std::lround(x0 + t * (x1 - x0))), y = int(std::lround(y0 + t * (y1 - y0)));
      set(x, y, c);
      set(x, y + 1, c);
    }
  }
  void box(int cx, int cy, int r, const std::uint8_t* c) {
    for (int y = cy - r; y <= cy + r; ++y)
      for (int x = cx - r; x <= cx + r; ++x) set(x, y, c);
  }
};

}  // namespace

void plot_curves(const std::filesystem::path& p, const std::vector<std::pair<std::string, RDCurve>>& curves, int width,
                 int height) {
  if (width < 64 || height < 64) throw std::invalid_argument("plot: canvas too small");
  static constexpr std::uint8_t kPalette[][3] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},
                                                 {148, 103, 189}, {255, 127, 14}, {23, 190, 207}};
  static constexpr std::uint8_t kAxis[3] = {0, 0, 0};
  Canvas cv(width, height);
  double bx0 = 1e300, bx1 = -1e300, py0 = 1e300, py1 = -1e300;
  for (const auto& [label, c] : curves)
    for (const auto& pt : c.points()) {
      bx0 = std::min(bx0, pt.bpp);
      bx1 = std::max(bx1, pt.bpp);
      py0 = std::min(py0, pt.psnr);
      py1 = std::max(py1, pt.psnr);
    }
  const int m = 40;
  if (!curves.empty()) {
    const double sx = bx1 > bx0 ? (width - 2 * m) / (bx1 - bx0) : 0, sy = py1 > py0 ? (height - 2 * m) / (py1 - py0) : 0;
    auto X = [&](double b) { return m + (b - bx0) * sx; };
    auto Y = [&](double q) { return height - m - (q - py0) * sy; };
    for (std::size_t k = 0; k < curves.size(); ++k) {
      const auto* col = kPalette[k % 6];
      const auto& pts = curves[k].second.points();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        cv.box(int(std::lround(X(pts[i].bpp))), int(std::lround(Y(pts[i].psnr))), 2, col);
        if (i) cv.line(X(pts[i - 1].bpp), Y(pts[i - 1].psnr), X(pts[i].bpp), Y(pts[i].psnr), col);
      }
      cv.box(width - m + 8, m + int(k) * 12, 4, col);  // legend swatch, in label order
    }
  }
  cv.line(m, height - m, width - m, height - m, kAxis);
  cv.line(m, m, m, height - m, kAxis);

  write_png_rgb8(p, width, height, cv.px);
}

}  // namespace hdc::evalkit

#pragma once

// Output plumbing: deterministic CSV tables, a small SVG line plotter and
// little-endian complex64 dumps of transmit/echo frames.

#include "damisac/common.hpp"
#include "damisac/waveform.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace damisac {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for the specials.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

class CsvTable {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<Cell> row) {
    require(row.size() == header_.size(), "CSV row has " + std::to_string(row.size()) + " cells, header has " +
                                              std::to_string(header_.size()));
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) {
      std::vector<std::string> cells;
      for (const auto& c : r) cells.push_back(render(c));
      append_line(out, cells);
    }
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os << str();
  }

 private:
  static std::string render(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  /// Optional fixed y range; values below y_min are clipped to it.
  double y_min = -kInf;
  double y_max = kInf;
};

namespace detail {
inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline std::string fmt(double v, const char* spec = "%.4g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}
}  // namespace detail

/// Plain SVG: axes, five ticks per axis, one polyline per series. Non-finite points break the line.
inline std::string render_svg(const LinePlot& plot) {
  constexpr double W = 720, H = 440, L = 70, R = 160, T = 40, B = 55;
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, std::max(s.y[i], plot.y_min));
      y1 = std::max(y1, std::min(s.y[i], plot.y_max));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (std::isfinite(plot.y_min)) y0 = plot.y_min;
  if (std::isfinite(plot.y_max)) y1 = plot.y_max;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::clamp(y, y0, y1) - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                 "#7f7f7f"};
  using detail::fmt;
  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::xml_escape(plot.title) + "</text>\n";
  o += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(W - L - R) + "\" height=\"" +
       fmt(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    o += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(H - B + 16) + "\" text-anchor=\"middle\">" + fmt(xv) +
         "</text>\n";
    o += "<text x=\"" + fmt(L - 6) + "\" y=\"" + fmt(py(yv) + 4) + "\" text-anchor=\"end\">" + fmt(yv) +
         "</text>\n";
  }
  o += "<text x=\"" + fmt(L + (W - L - R) / 2) + "\" y=\"" + fmt(H - 12) + "\" text-anchor=\"middle\">" +
       detail::xml_escape(plot.x_label) + "</text>\n";
  o += "<text transform=\"translate(16," + fmt(T + (H - T - B) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::xml_escape(plot.y_label) + "</text>\n";
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = colors[k % 8];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.3\" points=\"" + pts +
             "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      pts += fmt(px(s.x[i]), "%.2f") + "," + fmt(py(s.y[i]), "%.2f") + " ";
    }
    flush();
    const double ly = T + 14 + 16.0 * static_cast<double>(k);
    o += "<line x1=\"" + fmt(W - R + 10) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(W - R + 30) + "\" y2=\"" +
         fmt(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fmt(W - R + 35) + "\" y=\"" + fmt(ly) + "\">" + detail::xml_escape(s.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

inline void write_svg(const std::filesystem::path& path, const LinePlot& plot) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << render_svg(plot);
}

namespace detail {
inline void put_f32_le(std::ofstream& os, double v) {
  auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  if constexpr (std::endian::native == std::endian::big)
    bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
  os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}
}  // namespace detail

/// Little-endian interleaved complex64 (float32 re, float32 im), in storage order.
inline void write_complex64(const std::filesystem::path& path, const CVec& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    detail::put_f32_le(os, v(i).real());
    detail::put_f32_le(os, v(i).imag());
  }
}

/// Time-major dump of a transmit frame: for each n from -history, all M antennas.
inline void write_frame_complex64(const std::filesystem::path& path, const TxFrame& tx) {
  const CMat& s = tx.samples;
  write_complex64(path, Eigen::Map<const CVec>(s.data(), s.size()));
}

}  // namespace damisac

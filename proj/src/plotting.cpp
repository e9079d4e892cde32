#include "advface/plotting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "advface/errors.hpp"

namespace advface {

namespace {

constexpr int kWidth = 640, kHeight = 400;
constexpr int kLeft = 70, kRight = 20, kTop = 36, kBottom = 50;
const cv::Scalar kInk(40, 40, 40), kGrid(225, 225, 225), kWhite(255, 255, 255);

cv::Scalar palette(std::size_t i) {
  // BGR
  static const cv::Scalar colours[] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44},
                                       {40, 39, 214},  {189, 103, 148}, {75, 86, 140},
                                       {194, 119, 227}, {127, 127, 127}};
  return colours[i % std::size(colours)];
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void text(cv::Mat& img, const std::string& s, cv::Point at, double scale = 0.4) {
  cv::putText(img, s, at, cv::FONT_HERSHEY_SIMPLEX, scale, kInk, 1, cv::LINE_AA);
}

struct Frame {
  double x0, x1, y0, y1;
  cv::Point map(double x, double y) const {
    const double fx = x1 > x0 ? (x - x0) / (x1 - x0) : 0.5;
    const double fy = y1 > y0 ? (y - y0) / (y1 - y0) : 0.5;
    return {kLeft + static_cast<int>(std::lround(fx * (kWidth - kLeft - kRight))),
            kHeight - kBottom - static_cast<int>(std::lround(fy * (kHeight - kTop - kBottom)))};
  }
};

void draw_axes(cv::Mat& img, const Frame& f, const std::string& title, const std::string& x_label,
               bool x_ticks) {
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    const auto p = f.map(f.x0, y);
    cv::line(img, {kLeft, p.y}, {kWidth - kRight, p.y}, kGrid, 1);
    text(img, tick(y), {8, p.y + 4});
    if (x_ticks) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
      const auto q = f.map(x, f.y0);
      text(img, tick(x), {q.x - 12, kHeight - kBottom + 18});
    }
  }
  cv::rectangle(img, {kLeft, kTop}, {kWidth - kRight, kHeight - kBottom}, kInk, 1);
  text(img, title, {kLeft, kTop - 12}, 0.55);
  if (!x_label.empty()) text(img, x_label, {kWidth / 2 - 20, kHeight - 10});
}

void save(const std::filesystem::path& path, const cv::Mat& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), img)) throw InputError("cannot write " + path.string());
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Series>& series, const std::string& x_label) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  const Frame frame{x0, x1, y0 - pad, y1 + pad};

  cv::Mat img(kHeight, kWidth, CV_8UC3, kWhite);
  draw_axes(img, frame, title, x_label, true);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::vector<cv::Point> pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) pts.push_back(frame.map(s.x[i], s.y[i]));
    }
    if (pts.size() == 1) cv::circle(img, pts[0], 2, palette(k), cv::FILLED, cv::LINE_AA);
    if (pts.size() > 1) cv::polylines(img, pts, false, palette(k), 1, cv::LINE_AA);
  }
  if (series.size() > 1) {
    for (std::size_t k = 0; k < series.size(); ++k) {
      const int y = kTop + 14 + static_cast<int>(k) * 14;
      cv::line(img, {kWidth - kRight - 130, y - 4}, {kWidth - kRight - 110, y - 4}, palette(k), 2);
      text(img, series[k].label, {kWidth - kRight - 104, y});
    }
  }
  save(path, img);
}

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values,
                     const std::vector<double>& errors) {
  if (labels.size() != values.size() || (!errors.empty() && errors.size() != values.size())) {
    throw InputError("bar chart: labels, values and errors must align");
  }
  double y1 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    y1 = std::max(y1, values[i] + (errors.empty() ? 0.0 : errors[i]));
  }
  if (y1 <= 0.0) y1 = 1.0;
  const Frame frame{0.0, static_cast<double>(std::max<std::size_t>(values.size(), 1)), 0.0, y1 * 1.1};
  cv::Mat img(kHeight, kWidth, CV_8UC3, kWhite);
  draw_axes(img, frame, title, "", false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto base = frame.map(i + 0.2, 0.0), top = frame.map(i + 0.8, std::max(values[i], 0.0));
    cv::rectangle(img, {base.x, top.y}, {top.x, base.y}, palette(i), cv::FILLED);
    if (!errors.empty()) {
      const auto hi = frame.map(i + 0.5, values[i] + errors[i]);
      const auto lo = frame.map(i + 0.5, std::max(values[i] - errors[i], 0.0));
      cv::line(img, hi, lo, kInk, 1, cv::LINE_AA);
      cv::line(img, {hi.x - 4, hi.y}, {hi.x + 4, hi.y}, kInk, 1);
      cv::line(img, {lo.x - 4, lo.y}, {lo.x + 4, lo.y}, kInk, 1);
    }
    text(img, labels[i], {base.x, kHeight - kBottom + 16}, 0.35);
  }
  save(path, img);
}

}  // namespace advface

#include "emogan/plots.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "emogan/errors.hpp"

namespace emogan {

const char* palette_color(int index) {
  const auto n = static_cast<int>(kPaletteSize);
  return kPalette[((index % n) + n) % n];
}

namespace {

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }

  void finish() {
    if (!(x0 <= x1)) {
      x0 = 0.0;
      x1 = 1.0;
    }
    if (!(y0 <= y1)) {
      y0 = 0.0;
      y1 = 1.0;
    }
    if (x1 - x0 < 1e-12) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    const double px = 0.05 * (x1 - x0);
    const double py = 0.05 * (y1 - y0);
    x0 -= px;
    x1 += px;
    y0 -= py;
    y1 += py;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(const PlotFrame& frame, Bounds b) : f_(frame), b_(b) {
    left_ = 70.0;
    right_ = f_.width - 150.0;
    top_ = 40.0;
    bottom_ = f_.height - 50.0;
  }

  double sx(double x) const { return left_ + (x - b_.x0) / (b_.x1 - b_.x0) * (right_ - left_); }
  double sy(double y) const { return bottom_ - (y - b_.y0) / (b_.y1 - b_.y0) * (bottom_ - top_); }

  void open() {
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(f_.width) +
            "\" height=\"" + std::to_string(f_.height) + "\" viewBox=\"0 0 " +
            std::to_string(f_.width) + " " + std::to_string(f_.height) + "\">\n";
    out_ += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(f_.width) + "\" height=\"" +
            std::to_string(f_.height) + "\" fill=\"white\"/>\n";
    out_ += "<text x=\"" + fmt(f_.width / 2.0) +
            "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
            escape(f_.title) + "</text>\n";
    out_ += "<rect x=\"" + fmt(left_) + "\" y=\"" + fmt(top_) + "\" width=\"" +
            fmt(right_ - left_) + "\" height=\"" + fmt(bottom_ - top_) +
            "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double t = i / 4.0;
      const double xv = b_.x0 + t * (b_.x1 - b_.x0);
      const double yv = b_.y0 + t * (b_.y1 - b_.y0);
      out_ += "<text x=\"" + fmt(sx(xv)) + "\" y=\"" + fmt(bottom_ + 16) +
              "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(xv) +
              "</text>\n";
      out_ += "<text x=\"" + fmt(left_ - 6) + "\" y=\"" + fmt(sy(yv) + 3) +
              "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(yv) +
              "</text>\n";
    }
    out_ += "<text x=\"" + fmt((left_ + right_) / 2) + "\" y=\"" + fmt(f_.height - 12.0) +
            "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
            escape(f_.x_label) + "</text>\n";
    out_ += "<text x=\"16\" y=\"" + fmt((top_ + bottom_) / 2) +
            "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
            "transform=\"rotate(-90 16 " +
            fmt((top_ + bottom_) / 2) + ")\">" + escape(f_.y_label) + "</text>\n";
  }

  void marker(double x, double y, const char* color, char shape) {
    const std::string cx = fmt(sx(x));
    const std::string cy = fmt(sy(y));
    if (shape == 'x') {
      const double px = sx(x), py = sy(y);
      out_ += "<path d=\"M" + fmt(px - 2.5) + " " + fmt(py - 2.5) + "L" + fmt(px + 2.5) + " " +
              fmt(py + 2.5) + "M" + fmt(px - 2.5) + " " + fmt(py + 2.5) + "L" + fmt(px + 2.5) +
              " " + fmt(py - 2.5) + "\" stroke=\"" + color + "\"/>\n";
    } else if (shape == 's') {
      out_ += "<rect x=\"" + fmt(sx(x) - 2) + "\" y=\"" + fmt(sy(y) - 2) +
              "\" width=\"4.00\" height=\"4.00\" fill=\"" + color + "\" fill-opacity=\"0.6\"/>\n";
    } else {
      out_ += "<circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"2.00\" fill=\"" + color +
              "\" fill-opacity=\"0.6\"/>\n";
    }
  }

  void polyline(const LineSeries& s) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fmt(sx(s.x[i])) + "," + fmt(sy(s.y[i]));
    }
    if (pts.empty()) return;
    out_ += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
            palette_color(s.color_index) + "\" stroke-width=\"1.5\"" +
            (s.dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
  }

  void legend(std::size_t slot, const std::string& name, const char* color) {
    const double y = top_ + 12.0 + 16.0 * static_cast<double>(slot);
    out_ += "<rect x=\"" + fmt(right_ + 12) + "\" y=\"" + fmt(y - 8) +
            "\" width=\"10.00\" height=\"10.00\" fill=\"" + color + "\"/>\n";
    out_ += "<text x=\"" + fmt(right_ + 28) + "\" y=\"" + fmt(y + 1) +
            "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(name) + "</text>\n";
  }

  std::string close() {
    out_ += "</svg>\n";
    return std::move(out_);
  }

 private:
  PlotFrame f_;
  Bounds b_;
  double left_, right_, top_, bottom_;
  std::string out_;
};

}  // namespace

std::string scatter_svg(const PlotFrame& frame, const std::vector<ScatterSeries>& series) {
  Bounds b;
  for (const auto& s : series) {
    if (s.points.rows() > 0 && s.points.cols() != 2) {
      throw ShapeError("scatter_svg: series '" + s.name + "' is not two-dimensional");
    }
    if (!s.classes.empty() && s.classes.size() != static_cast<std::size_t>(s.points.rows())) {
      throw ShapeError("scatter_svg: series '" + s.name + "' needs one class per point");
    }
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) b.add(s.points(i, 0), s.points(i, 1));
  }
  b.finish();
  Canvas c(frame, b);
  c.open();
  std::size_t slot = 0;
  for (const auto& s : series) {
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
      const int color = s.classes.empty() ? s.color_index : s.classes[static_cast<std::size_t>(i)];
      c.marker(s.points(i, 0), s.points(i, 1), palette_color(color), s.marker);
    }
    if (s.classes.empty()) {
      c.legend(slot++, s.name, palette_color(s.color_index));
    }
  }
  // Class legend for labelled series.
  std::vector<int> seen;
  for (const auto& s : series) {
    for (int k : s.classes) {
      if (std::find(seen.begin(), seen.end(), k) == seen.end()) seen.push_back(k);
    }
  }
  std::sort(seen.begin(), seen.end());
  for (int k : seen) c.legend(slot++, "class " + std::to_string(k), palette_color(k));
  return c.close();
}

std::string line_svg(const PlotFrame& frame, const std::vector<LineSeries>& series) {
  Bounds b;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ShapeError("line_svg: x/y length mismatch in " + s.name);
    for (std::size_t i = 0; i < s.x.size(); ++i) b.add(s.x[i], s.y[i]);
  }
  b.finish();
  Canvas c(frame, b);
  c.open();
  std::size_t slot = 0;
  for (const auto& s : series) {
    c.polyline(s);
    c.legend(slot++, s.name, palette_color(s.color_index));
  }
  return c.close();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

Matrix Projection::apply(const Matrix& rows) const {
  if (rows.cols() != mean.size()) throw ShapeError("Projection::apply: dimension mismatch");
  return (rows.rowwise() - mean) * components;
}

Projection pca2(const Matrix& fit_rows) {
  if (fit_rows.rows() < 2) throw DegenerateDataError("pca2: need at least two rows");
  if (fit_rows.cols() < 2) throw ShapeError("pca2: need at least two columns");
  Projection p;
  p.mean = fit_rows.colwise().mean();
  const Matrix centered = fit_rows.rowwise() - p.mean;
  const Matrix cov = centered.transpose() * centered / static_cast<double>(fit_rows.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::Index d = cov.rows();
  p.components.resize(d, 2);
  for (int k = 0; k < 2; ++k) {
    Vector v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    p.components.col(k) = v;
  }
  return p;
}

}  // namespace emogan

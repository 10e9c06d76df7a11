#include "cfid/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cfid/csv_io.hpp"

namespace cfid {

namespace {

std::string fmt(double x, const char* spec = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

// Just enough SVG for the shipped charts.
class SvgCanvas {
 public:
  SvgCanvas(int width, int height) : w_(width), h_(height) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_
          << "\" height=\"" << h_ << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n"
          << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double width = 1.0) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
          << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << color << "\" stroke-width=\""
          << fmt(width) << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& color, double width = 1.5) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
          << fmt(width) << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << fmt(x) << "," << fmt(y) << " ";
    body_ << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
          << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "start") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
          << "</text>\n";
  }
  std::string finish() {
    body_ << "</svg>\n";
    return body_.str();
  }

 private:
  int w_, h_;
  std::ostringstream body_;
};

constexpr double kMarginLeft = 55.0, kMarginRight = 55.0;
constexpr double kMarginTop = 25.0, kMarginBottom = 35.0;

double lerp(double a, double b, double t) { return a + (b - a) * t; }

std::string heat_color(double t) {  // white -> red
  t = std::clamp(t, 0.0, 1.0);
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#ff%02x%02x", g, g);
  return buf;
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace) {
  std::string out = "iter,loss,train_acc,lr,is_best\n";
  for (const auto& r : trace.rows) {
    out += std::to_string(r.iter);
    out += ',';
    out += fmt(r.loss, "%.17g");
    out += ',';
    out += fmt(r.train_acc, "%.17g");
    out += ',';
    out += fmt(r.lr, "%.17g");
    out += ',';
    out += r.is_best ? '1' : '0';
    out += '\n';
  }
  atomic_write_file(path, out);
}

void write_trace_svg(const std::filesystem::path& path, const TrainingTrace& trace) {
  const int W = 640, H = 360;
  SvgCanvas svg(W, H);
  if (trace.rows.empty()) {
    atomic_write_file(path, svg.finish());
    return;
  }
  double lo = trace.rows.front().loss, hi = lo;
  for (const auto& r : trace.rows) {
    lo = std::min(lo, r.loss);
    hi = std::max(hi, r.loss);
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double x0 = kMarginLeft, x1 = W - kMarginRight;
  const double y0 = H - kMarginBottom, y1 = kMarginTop;
  const double n = static_cast<double>(trace.rows.size() - 1);

  auto xat = [&](int i) { return n > 0 ? lerp(x0, x1, static_cast<double>(i) / n) : x0; };

  svg.line(x0, y0, x1, y0, "#444");
  svg.line(x0, y0, x0, y1, "#444");
  svg.line(x1, y0, x1, y1, "#bbb");

  std::vector<std::pair<double, double>> loss_pts, acc_pts;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& r = trace.rows[i];
    loss_pts.emplace_back(xat(static_cast<int>(i)), lerp(y0, y1, (r.loss - lo) / (hi - lo)));
    acc_pts.emplace_back(xat(static_cast<int>(i)), lerp(y0, y1, r.train_acc));
  }
  svg.polyline(loss_pts, "#c0392b");
  svg.polyline(acc_pts, "#2a6fbb");

  svg.text(x0 - 6, y0 + 4, fmt(lo, "%.4g"), 10, "end");
  svg.text(x0 - 6, y1 + 4, fmt(hi, "%.4g"), 10, "end");
  svg.text(x1 + 6, y0 + 4, "0", 10, "start");
  svg.text(x1 + 6, y1 + 4, "1", 10, "start");
  svg.text((x0 + x1) / 2, H - 10, "iteration", 11, "middle");
  svg.text(x0, y1 - 8, "loss", 11, "start");
  svg.text(x1, y1 - 8, "train accuracy", 11, "end");
  atomic_write_file(path, svg.finish());
}

void write_contributions_csv(const std::filesystem::path& path, const Vector8& c) {
  std::string out = "feature,contribution\n";
  for (int j = 0; j < 8; ++j) {
    out += RawFeatureVector::names()[static_cast<std::size_t>(j)];
    out += ',';
    out += fmt(c(j), "%.17g");
    out += '\n';
  }
  atomic_write_file(path, out);
}

void write_contributions_svg(const std::filesystem::path& path, const Vector8& c) {
  const int W = 560, H = 320;
  SvgCanvas svg(W, H);
  const double x0 = kMarginLeft, x1 = W - 20.0;
  const double y0 = H - 70.0, y1 = kMarginTop;
  const double cmax = std::max(1e-12, c.maxCoeff());
  const double band = (x1 - x0) / 8.0;
  svg.line(x0, y0, x1, y0, "#444");
  svg.line(x0, y0, x0, y1, "#444");
  for (int j = 0; j < 8; ++j) {
    const double hgt = (y0 - y1) * (c(j) / cmax);
    svg.rect(x0 + band * j + band * 0.15, y0 - hgt, band * 0.7, hgt, "#2a6fbb");
    svg.text(x0 + band * j + band * 0.5, y0 + 14, "f" + std::to_string(j + 1), 10, "middle");
    svg.text(x0 + band * j + band * 0.5, y0 - hgt - 4, fmt(c(j), "%.3g"), 9, "middle");
  }
  svg.text(x0 - 6, y1 + 4, fmt(cmax, "%.3g"), 10, "end");
  svg.text((x0 + x1) / 2, H - 28, "feature contribution C(f_j)", 11, "middle");
  atomic_write_file(path, svg.finish());
}

void write_features_csv(const std::filesystem::path& path, const LabeledFeatures& data) {
  std::string out = "driver_id,window_id,f1,f2,f3,f4,f5,f6,f7,f8\n";
  for (std::size_t k = 0; k < data.driver_ids.size(); ++k) {
    for (std::size_t n = 0; n < data.features[k].size(); ++n) {
      out += data.driver_ids[k];
      out += ',';
      out += std::to_string(n);
      for (double v : data.features[k][n].f) {
        out += ',';
        out += fmt(v, "%.17g");
      }
      out += '\n';
    }
  }
  atomic_write_file(path, out);
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  std::string out = "gt\\pred";
  for (const auto& l : cm.labels) out += "," + l;
  out += ",recall\n";
  const Eigen::VectorXd rec = cm.recall();
  for (Eigen::Index i = 0; i < cm.counts.rows(); ++i) {
    out += cm.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < cm.counts.cols(); ++j)
      out += "," + std::to_string(cm.counts(i, j));
    out += "," + (std::isnan(rec(i)) ? std::string("n/a") : fmt(rec(i), "%.4f"));
    out += '\n';
  }
  atomic_write_file(path, out);
}

void write_accuracy_curve_csv(const std::filesystem::path& path,
                              const std::vector<EvalResult>& results) {
  std::string out = "n_sequences,accuracy,trials\n";
  for (const auto& r : results) {
    out += std::to_string(r.n_sequences);
    out += ',';
    out += fmt(r.accuracy, "%.17g");
    out += ',';
    out += std::to_string(r.confusion.total());
    out += '\n';
  }
  atomic_write_file(path, out);
}

void write_accuracy_curve_svg(const std::filesystem::path& path,
                              const std::vector<EvalResult>& results) {
  const int W = 560, H = 320;
  SvgCanvas svg(W, H);
  if (!results.empty()) {
    const double x0 = kMarginLeft, x1 = W - 25.0;
    const double y0 = H - kMarginBottom, y1 = kMarginTop;
    int nmax = 1;
    for (const auto& r : results) nmax = std::max(nmax, r.n_sequences);
    svg.line(x0, y0, x1, y0, "#444");
    svg.line(x0, y0, x0, y1, "#444");
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : results) {
      const double x = lerp(x0, x1, (r.n_sequences - 1.0) / std::max(1.0, nmax - 1.0));
      pts.emplace_back(x, lerp(y0, y1, r.accuracy));
      svg.text(x, y0 + 14, std::to_string(r.n_sequences), 10, "middle");
      svg.text(x, lerp(y0, y1, r.accuracy) - 6, fmt(r.accuracy, "%.3f"), 9, "middle");
    }
    svg.polyline(pts, "#2a6fbb");
    svg.text(x0 - 6, y0 + 4, "0", 10, "end");
    svg.text(x0 - 6, y1 + 4, "1", 10, "end");
    svg.text((x0 + x1) / 2, H - 10, "sequences per trial", 11, "middle");
  }
  atomic_write_file(path, svg.finish());
}

static std::string axis_label(const SweepAxis& a, std::size_t i) {
  const double v = a.values[i];
  if (a.name == "T" || a.name == "overlap") return fmt(v, "%g");
  return std::to_string(static_cast<long>(v));
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
  const auto& axes = result.spec.axes;
  const std::size_t n1 = axes.size() > 1 ? axes[1].values.size() : 1;
  std::string out;
  for (const char* block : {"train", "test"}) {
    out += std::string(block) + "_accuracy\n";
    out += axes[0].name + (axes.size() > 1 ? "\\" + axes[1].name : std::string());
    if (axes.size() > 1)
      for (std::size_t j = 0; j < n1; ++j) out += "," + axis_label(axes[1], j);
    else
      out += ",value";
    out += '\n';
    for (std::size_t i = 0; i < axes[0].values.size(); ++i) {
      out += axis_label(axes[0], i);
      for (std::size_t j = 0; j < n1; ++j) {
        const auto& cell = result.cells[i * n1 + j];
        const double v =
            std::string(block) == "train" ? cell.mean_train_acc() : cell.mean_test_acc();
        out += ",";
        out += std::isnan(v) ? std::string("n/a") : fmt(v, "%.4f");
      }
      out += '\n';
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

void write_sweep_svg(const std::filesystem::path& path, const SweepResult& result) {
  const auto& axes = result.spec.axes;
  const std::size_t n0 = axes[0].values.size();
  const std::size_t n1 = axes.size() > 1 ? axes[1].values.size() : 1;
  const double cell_w = 52, cell_h = 26;
  const int W = static_cast<int>(kMarginLeft + cell_w * (n1 + 1) + 30);
  const int H = static_cast<int>(kMarginTop + cell_h * (n0 + 2) + 40);
  SvgCanvas svg(W, H);

  double lo = 1.0, hi = 0.0;
  for (const auto& c : result.cells) {
    const double v = c.mean_test_acc();
    if (!std::isnan(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1e-9;

  svg.text(kMarginLeft, kMarginTop - 6, "mean test accuracy", 12, "start");
  for (std::size_t j = 0; j < n1; ++j)
    svg.text(kMarginLeft + cell_w * (j + 1) + cell_w / 2, kMarginTop + cell_h - 8,
             axes.size() > 1 ? axis_label(axes[1], j) : "", 10, "middle");
  for (std::size_t i = 0; i < n0; ++i) {
    const double y = kMarginTop + cell_h * (i + 1);
    svg.text(kMarginLeft + cell_w / 2, y + cell_h - 8, axis_label(axes[0], i), 10, "middle");
    for (std::size_t j = 0; j < n1; ++j) {
      const auto& cell = result.cells[i * n1 + j];
      const double v = cell.mean_test_acc();
      const double x = kMarginLeft + cell_w * (j + 1);
      svg.rect(x, y, cell_w - 2, cell_h - 2,
               std::isnan(v) ? "#eeeeee" : heat_color((v - lo) / (hi - lo)));
      svg.text(x + cell_w / 2 - 1, y + cell_h - 8,
               std::isnan(v) ? std::string("n/a") : fmt(v, "%.3f"), 10, "middle");
    }
  }
  atomic_write_file(path, svg.finish());
}

std::string hash_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cfid

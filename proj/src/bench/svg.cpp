#include "zoq/bench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "zoq/bench/csv.hpp"
#include "zoq/errors.hpp"

namespace zoq::bench {

namespace {

constexpr double kWidth = 760;
constexpr double kHeight = 480;
constexpr double kLeft = 80;
constexpr double kRight = 200;
constexpr double kTop = 40;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::vector<double> linear_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
  return ticks;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (spec.log_y && !(s.y[i] > 0)) continue;
      const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  if (spec.log_y) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : linear_ticks(xmin, xmax)) {
    const double x = px(t);
    o << "<line x1=\"" << num(x) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(x) << "\" y2=\""
      << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(x) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
      << num(t) << "</text>\n";
  }
  std::vector<double> yticks;
  if (spec.log_y) {
    const int step = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / 8.0)));
    for (double e = ymin; e <= ymax + 1e-9; e += step) yticks.push_back(e);
  } else {
    yticks = linear_ticks(ymin, ymax);
  }
  for (double t : yticks) {
    const double y = py(t);
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft + pw << "\" y2=\""
      << num(y) << "\" stroke=\"#dddddd\"/>\n";
    const std::string label = spec.log_y ? "1e" + num(t) : num(t);
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << label
      << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(20," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y_label) << (spec.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.6\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (spec.log_y && !(s.y[i] > 0)) continue;
      const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      o << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(y));
      first = false;
    }
    o << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    const double lx = kLeft + pw + 15;
    o << "<g class=\"legend\"><line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 25
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    o << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text></g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

namespace {

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> f;
  std::vector<double> gap;
};

struct SummaryFile {
  std::filesystem::path path;
  std::string tag;
  std::map<long, std::vector<Curve>> by_budget;
};

double parse_number(const std::string& s, const std::filesystem::path& file) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(file.string() + ": not a number: '" + s + "'");
  }
}

SummaryFile read_summary(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header != kSummaryColumns) throw ConfigError(path.string() + ": not a summary CSV (unexpected header)");
  SummaryFile out;
  out.path = path;
  out.tag = path.parent_path().filename().string();
  if (out.tag.empty() || out.tag == ".") out.tag = path.stem().string();
  const auto c_combo = t.column("combo");
  const auto c_budget = t.column("budget");
  const auto c_q = t.column("cum_queries");
  const auto c_f = t.column("mean_f");
  const auto c_gap = t.column("mean_gap");
  for (const auto& row : t.rows) {
    const long budget = static_cast<long>(parse_number(row[c_budget], path));
    auto& curves = out.by_budget[budget];
    if (curves.empty() || curves.back().label != row[c_combo]) curves.push_back({row[c_combo], {}, {}, {}});
    curves.back().x.push_back(parse_number(row[c_q], path));
    curves.back().f.push_back(parse_number(row[c_f], path));
    curves.back().gap.push_back(parse_number(row[c_gap], path));
  }
  return out;
}

}  // namespace

std::vector<std::filesystem::path> plot_summaries(const std::vector<std::filesystem::path>& inputs,
                                                  const std::filesystem::path& out_dir) {
  if (inputs.empty()) throw ConfigError("plot: no summary files given");
  std::vector<SummaryFile> files;
  for (const auto& p : inputs) files.push_back(read_summary(p));

  auto budgets_of = [](const SummaryFile& f) {
    std::set<long> b;
    for (const auto& [k, _] : f.by_budget) b.insert(k);
    return b;
  };
  const auto budgets = budgets_of(files.front());
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (budgets_of(files[i]) != budgets) {
      throw ConfigError("plot: query axes differ between " + files.front().path.string() + " and " +
                        files[i].path.string() + " (different budgets)");
    }
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  const bool prefix = files.size() > 1;
  for (long budget : budgets) {
    std::vector<const Curve*> curves;
    std::vector<std::string> labels;
    for (const auto& f : files) {
      for (const auto& c : f.by_budget.at(budget)) {
        curves.push_back(&c);
        labels.push_back(prefix ? f.tag + "/" + c.label : c.label);
      }
    }
    auto all_positive = [&](auto member) {
      for (const Curve* c : curves) {
        for (double v : c->*member) {
          if (!(v > 0) || !std::isfinite(v)) return false;
        }
      }
      return true;
    };
    PlotSpec spec;
    spec.title = files.front().tag + ", K = " + std::to_string(budget);
    std::vector<double> Curve::*member = &Curve::f;
    if (all_positive(&Curve::f)) {
      spec.log_y = true;
      spec.y_label = "mean objective";
    } else if (all_positive(&Curve::gap)) {
      spec.log_y = true;
      spec.y_label = "mean gap f - f*";
      member = &Curve::gap;
    } else {
      spec.y_label = "mean objective";
    }
    for (std::size_t i = 0; i < curves.size(); ++i) {
      spec.series.push_back({labels[i], curves[i]->x, curves[i]->*member});
    }
    const auto path = out_dir / (files.front().tag + "_K" + std::to_string(budget) + ".svg");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << render_svg(spec);
    written.push_back(path);
  }
  return written;
}

}  // namespace zoq::bench

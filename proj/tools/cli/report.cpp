// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "imagine/error.hpp"

namespace imagine::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
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

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Plot area is 60..580 by 40..320 inside a 640x400 canvas.
class Svg {
 public:
  Svg(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    body_ << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n"
          << "<text x=\"320\" y=\"380\" text-anchor=\"middle\" font-size=\"13\">" << escape(xlabel) << "</text>\n"
          << "<text x=\"16\" y=\"180\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 180)\">"
          << escape(ylabel) << "</text>\n";
  }

  void axes(double x0, double x1, const std::vector<std::pair<double, std::string>>& xticks) {
    x0_ = x0;
    x1_ = x1 == x0 ? x0 + 1 : x1;
    body_ << "<line x1=\"60\" y1=\"320\" x2=\"580\" y2=\"320\" stroke=\"black\"/>\n"
          << "<line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"320\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double v = y0_ + (y1_ - y0_) * i / 4.0;
      body_ << "<line x1=\"56\" y1=\"" << py(v) << "\" x2=\"580\" y2=\"" << py(v)
            << "\" stroke=\"#ddd\"/>\n<text x=\"52\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
            << num(v, 3) << "</text>\n";
    }
    for (const auto& [x, label] : xticks) {
      body_ << "<text x=\"" << px(x) << "\" y=\"336\" text-anchor=\"middle\" font-size=\"11\">" << escape(label)
            << "</text>\n";
    }
  }

  void y_range(double y0, double y1) {
    y0_ = y0;
    y1_ = y1 <= y0 ? y0 + 1 : y1;
  }

  void line(const Series& s, const std::string& color) {
    std::ostringstream pts;
    for (const auto& [x, y] : s.points) pts << px(x) << "," << py(y) << " ";
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts.str()
          << "\"/>\n";
    for (const auto& [x, y] : s.points) {
      body_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
  }

  void bar(double x_center, double width_px, double y, const std::string& color) {
    const double top = py(y);
    body_ << "<rect x=\"" << px(x_center) - width_px / 2 << "\" y=\"" << top << "\" width=\"" << width_px
          << "\" height=\"" << 320 - top << "\" fill=\"" << color << "\"/>\n";
  }

  void legend(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double y = 52 + 16.0 * static_cast<double>(i);
      body_ << "<rect x=\"470\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\"" << kColors[i % kColors.size()]
            << "\"/>\n<text x=\"485\" y=\"" << y << "\" font-size=\"11\">" << escape(names[i]) << "</text>\n";
    }
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\" "
           "font-family=\"sans-serif\">\n<rect width=\"640\" height=\"400\" fill=\"white\"/>\n" +
           body_.str() + "</svg>\n";
  }

 private:
  double px(double x) const { return 60 + 520 * (x - x0_) / (x1_ - x0_); }
  double py(double y) const { return 320 - 280 * (y - y0_) / (y1_ - y0_); }

  std::ostringstream body_;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
};

std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series) {
  double x0 = 1e300, x1 = -1e300;
  std::set<double> xs;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      xs.insert(x);
    }
  }
  Svg svg(title, xlabel, ylabel);
  svg.y_range(0, 1);
  std::vector<std::pair<double, std::string>> ticks;
  for (double x : xs) ticks.emplace_back(x, num(x));
  svg.axes(x0, x1, ticks);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < series.size(); ++i) {
    svg.line(series[i], kColors[i % kColors.size()]);
    names.push_back(series[i].name);
  }
  svg.legend(names);
  return svg.str();
}

struct RunInfo {
  fs::path dir;
  json doc;
  std::string label;
};

}  // namespace

void cmd_report(const std::vector<fs::path>& runs, const fs::path& out) {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "report needs at least one run directory");
  std::vector<RunInfo> infos;
  for (const auto& dir : runs) {
    json doc = read_json(dir / "results.json");
    if (!doc.is_object() || doc.value("schema", "") != kResultsSchema || doc.value("version", 0) != kFormatVersion) {
      throw Error(ErrorCode::SchemaMismatch, (dir / "results.json").string() + " is not a results file");
    }
    const std::string label = doc.value("mode", "?") + "/" + doc.value("policy", "?") + " (" +
                              dir.filename().string() + ")";
    infos.push_back({dir, std::move(doc), label});
  }
  const std::string task = infos[0].doc.value("task", "");
  for (const auto& r : infos) {
    if (r.doc.value("task", "") != task) {
      throw Error(ErrorCode::SchemaMismatch, "runs cover different tasks: " + task + " and " + r.doc.value("task", ""));
    }
  }
  fs::create_directories(out);

  std::vector<std::string> metric_names;
  for (const auto& [k, _] : infos[0].doc.at("metrics").items()) metric_names.push_back(k);
  for (const auto& r : infos) {
    std::vector<std::string> mine;
    for (const auto& [k, _] : r.doc.at("metrics").items()) mine.push_back(k);
    if (mine != metric_names) throw Error(ErrorCode::SchemaMismatch, r.dir.string() + " reports different metrics");
  }

  std::string csv = "run,task,mode,policy,dataset,instances,errors";
  for (const auto& m : metric_names) csv += "," + m;
  csv += "\n";
  for (const auto& r : infos) {
    csv += r.dir.filename().string() + "," + task + "," + r.doc.value("mode", "") + "," + r.doc.value("policy", "") +
           "," + r.doc.value("dataset_source", "") + "," + std::to_string(r.doc.value("instances", 0)) + "," +
           std::to_string(r.doc.value("errors", 0));
    for (const auto& m : metric_names) csv += "," + num(r.doc["metrics"][m].get<double>(), 6);
    csv += "\n";
  }
  write_text(out / "comparison.csv", csv);

  // Metric comparison across runs: grouped bars.
  {
    Svg svg("Metrics by run (" + task + ")", "metric", "value");
    double ymax = 1;
    for (const auto& r : infos) {
      for (const auto& m : metric_names) ymax = std::max(ymax, r.doc["metrics"][m].get<double>());
    }
    svg.y_range(0, ymax);
    std::vector<std::pair<double, std::string>> ticks;
    for (std::size_t i = 0; i < metric_names.size(); ++i) ticks.emplace_back(static_cast<double>(i), metric_names[i]);
    svg.axes(-0.5, static_cast<double>(metric_names.size()) - 0.5, ticks);
    const double group_px = 520.0 / static_cast<double>(metric_names.size()) * 0.8;
    const double bar_px = group_px / static_cast<double>(infos.size());
    const double per_unit = 520.0 / static_cast<double>(metric_names.size());
    std::vector<std::string> names;
    for (std::size_t k = 0; k < infos.size(); ++k) {
      for (std::size_t i = 0; i < metric_names.size(); ++i) {
        const double offset = (-group_px / 2 + bar_px * (static_cast<double>(k) + 0.5)) / per_unit;
        svg.bar(static_cast<double>(i) + offset, bar_px * 0.9, infos[k].doc["metrics"][metric_names[i]].get<double>(),
                kColors[k % kColors.size()]);
      }
      names.push_back(infos[k].label);
    }
    svg.legend(names);
    write_text(out / "metrics_by_run.svg", svg.str());
  }

  std::vector<Series> by_n;
  for (const auto& r : infos) {
    if (!r.doc.contains("by_count")) continue;
    Series s{r.label, {}};
    for (const auto& row : r.doc["by_count"]) s.points.emplace_back(row["n"].get<double>(), row["success_rate"].get<double>());
    by_n.push_back(std::move(s));
  }
  if (!by_n.empty()) {
    write_text(out / "success_vs_objects.svg",
               line_plot("Success rate vs. number of objects", "objects", "success rate", by_n));
    std::string t = "run,objects,instances,success_rate\n";
    for (const auto& r : infos) {
      if (!r.doc.contains("by_count")) continue;
      for (const auto& row : r.doc["by_count"]) {
        t += r.dir.filename().string() + "," + std::to_string(row["n"].get<int>()) + "," +
             std::to_string(row["instances"].get<int>()) + "," + num(row["success_rate"].get<double>(), 6) + "\n";
      }
    }
    write_text(out / "success_vs_objects.csv", t);
  }

  std::vector<Series> sweeps;
  std::string sweep_csv = "run,budget_kind,budget,solved,total,solvable_rate\n";
  for (const auto& r : infos) {
    if (!r.doc.contains("sweep")) continue;
    const std::string kind = r.doc["sweep"].value("budget", "");
    Series s{r.label, {}};
    for (const auto& row : r.doc["sweep"]["rows"]) {
      s.points.emplace_back(row["budget"].get<double>(), row["solvable_rate"].get<double>());
      sweep_csv += r.dir.filename().string() + "," + kind + "," + std::to_string(row["budget"].get<int>()) + "," +
                   std::to_string(row["solved"].get<int>()) + "," + std::to_string(row["total"].get<int>()) + "," +
                   num(row["solvable_rate"].get<double>(), 6) + "\n";
    }
    sweeps.push_back(std::move(s));
  }
  if (!sweeps.empty()) {
    write_text(out / "solvable_vs_budget.svg",
               line_plot("Solvable rate vs. reasoning steps", "budget", "solvable rate", sweeps));
    write_text(out / "solvable_vs_budget.csv", sweep_csv);
  }
  spdlog::info("report for {} run(s) in {}", infos.size(), out.string());
}

}  // namespace imagine::cli

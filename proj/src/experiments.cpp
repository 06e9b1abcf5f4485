#include "adagcl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace adagcl {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series) {
  const double W = 640, H = 420;
  const double ml = 70, mr = 150, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin < xmax)) xmax = xmin + 1;
  if (!(ymin < ymax)) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  const auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  const auto py = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#ff7f0e", "#9467bd", "#8c564b"};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write chart: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" << title
      << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << px(fx) << "\" y=\"" << H - mb + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" << fmt(fx) << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" << fmt(fy) << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << py(fy) << "\" x2=\"" << W - mr
        << "\" y2=\"" << py(fy)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 18 "
      << (mt + H - mb) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& [x, y] : series[s].points)
      out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    for (const auto& [x, y] : series[s].points)
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\""
        << W - mr + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - mr + 36 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << series[s].name << "</text>\n";
  }
  out << "</svg>\n";
}

void write_noise_report(const NoiseReport& rep, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream csv(dir + "/noise.csv");
    csv << "model,ratio,recall20,ndcg20,relative_drop\n";
    for (const auto& r : rep.rows)
      csv << r.model << ',' << fmt(r.ratio) << ',' << fmt(r.recall20) << ','
          << fmt(r.ndcg20) << ',' << fmt(r.relative_drop) << '\n';
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rep.rows)
    j.push_back({{"model", r.model},
                 {"ratio", r.ratio},
                 {"recall20", r.recall20},
                 {"ndcg20", r.ndcg20},
                 {"relative_drop", r.relative_drop}});
  std::ofstream js(dir + "/noise.json");
  js << j.dump(2) << '\n';

  std::map<std::string, ChartSeries> by_model;
  for (const auto& r : rep.rows) {
    by_model[r.model].name = r.model;
    by_model[r.model].points.emplace_back(r.ratio, r.relative_drop);
  }
  std::vector<ChartSeries> series;
  for (auto& [name, s] : by_model) series.push_back(std::move(s));
  write_line_chart(dir + "/noise.svg", "Relative Recall@20 degradation",
                   "noise ratio", "relative drop", series);
}

void write_sparsity_report(const SparsityReport& rep, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream csv(dir + "/sparsity.csv");
    csv << "axis,group,range,entities,evaluable_users,recall20,ndcg20\n";
    for (const auto& r : rep.rows)
      csv << r.axis << ',' << r.group << ',' << r.range << ',' << r.entities
          << ',' << r.evaluable_users << ',' << fmt(r.recall20) << ','
          << fmt(r.ndcg20) << '\n';
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rep.rows)
    j.push_back({{"axis", r.axis},
                 {"group", r.group},
                 {"range", r.range},
                 {"entities", r.entities},
                 {"evaluable_users", r.evaluable_users},
                 {"recall20", r.recall20},
                 {"ndcg20", r.ndcg20}});
  std::ofstream js(dir + "/sparsity.json");
  js << j.dump(2) << '\n';
}

void write_sweep_report(const SweepReport& rep, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream csv(dir + "/sweep.csv");
    csv << "lambda1,recall20,ndcg20,best_epoch\n";
    for (const auto& r : rep.rows)
      csv << fmt(r.lambda1) << ',' << fmt(r.recall20) << ',' << fmt(r.ndcg20)
          << ',' << r.best_epoch << '\n';
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rep.rows)
    j.push_back({{"lambda1", r.lambda1},
                 {"recall20", r.recall20},
                 {"ndcg20", r.ndcg20},
                 {"best_epoch", r.best_epoch}});
  std::ofstream js(dir + "/sweep.json");
  js << j.dump(2) << '\n';

  ChartSeries recall{"recall@20", {}}, ndcg{"ndcg@20", {}};
  for (const auto& r : rep.rows) {
    recall.points.emplace_back(std::log10(r.lambda1), r.recall20);
    ndcg.points.emplace_back(std::log10(r.lambda1), r.ndcg20);
  }
  std::reverse(recall.points.begin(), recall.points.end());
  std::reverse(ndcg.points.begin(), ndcg.points.end());
  write_line_chart(dir + "/sweep.svg", "SSL weight sweep", "log10(lambda1)",
                   "metric", {recall, ndcg});
}

void write_eval_report(const EvalReport& rep, const std::string& json_path,
                       const std::string& csv_path,
                       const nlohmann::json& metadata) {
  {
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write eval csv: " + csv_path);
    csv << "cutoff,recall,ndcg,users\n";
    for (int n : rep.cutoffs)
      csv << n << ',' << fmt(rep.recall.at(n)) << ',' << fmt(rep.ndcg.at(n))
          << ',' << rep.users.size() << '\n';
  }
  nlohmann::json j;
  j["mode"] = rep.mode;
  j["cutoffs"] = rep.cutoffs;
  j["user_count"] = rep.users.size();
  if (!metadata.is_null() && !metadata.empty()) j["metadata"] = metadata;
  for (int n : rep.cutoffs) {
    const std::string key = std::to_string(n);
    j["recall"][key] = rep.recall.at(n);
    j["ndcg"][key] = rep.ndcg.at(n);
    j["per_user_recall"][key] = rep.per_user_recall.at(n);
    j["per_user_ndcg"][key] = rep.per_user_ndcg.at(n);
  }
  std::ofstream js(json_path);
  if (!js) throw DataError("cannot write eval json: " + json_path);
  js << j.dump(2) << '\n';
}

}  // namespace adagcl

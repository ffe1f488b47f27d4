#include "owf/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace owf {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= line.size()) {
    size_t next = line.find(',', pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s == "-" || s.empty()) return std::nullopt;
  return std::stod(s);
}

std::string fmt(double v) {
  char buf[40];
  snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("-"); }

// Extract a named parameter ("M", "K", "dist") from "K=1;M=0.9;..." strings.
std::optional<std::string> param_value(const std::string& params, const std::string& name) {
  size_t pos = 0;
  while (pos < params.size()) {
    size_t next = params.find(';', pos);
    std::string piece =
        next == std::string::npos ? params.substr(pos) : params.substr(pos, next - pos);
    size_t eq = piece.find('=');
    if (eq != std::string::npos && piece.substr(0, eq) == name) return piece.substr(eq + 1);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return std::nullopt;
}

}  // namespace

std::vector<ResultRecord> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results: " + path);
  std::vector<ResultRecord> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen && line.rfind("classifier,", 0) == 0) {
      header_seen = true;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 17) throw ParseError("bad results row in " + path + ": " + line);
    ResultRecord r;
    r.classifier = f[0];
    r.po = f[1];
    r.params = f[2];
    r.r = std::stod(f[3]);
    r.counts.n_p = std::stoll(f[4]);
    r.counts.n_n = std::stoll(f[5]);
    r.counts.n_tp = std::stoll(f[6]);
    r.counts.n_wp = std::stoll(f[7]);
    r.counts.n_fp = std::stoll(f[8]);
    r.r_tp = std::stod(f[9]);
    r.r_wp = std::stod(f[10]);
    r.r_fp = std::stod(f[11]);
    r.pi_point = parse_opt(f[12]);
    r.pi_lower = parse_opt(f[13]);
    r.pi_upper = parse_opt(f[14]);
    r.method = f[15];
    r.recall_ok = f[16] == "1";
    out.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("results file has no schema header: " + path);
  return out;
}

namespace {

const ResultRecord* best_cell(const std::vector<ResultRecord>& records,
                              const std::string& classifier, const std::string& po, double r) {
  const ResultRecord* winner = nullptr;
  for (const auto& rec : records) {
    if (rec.classifier != classifier || rec.po != po || rec.r != r) continue;
    if (!rec.recall_ok || !rec.pi_lower) continue;
    if (!winner || *rec.pi_lower > *winner->pi_lower) winner = &rec;
  }
  return winner;
}

void write_best_rows(std::ostream& out, const std::vector<ResultRecord>& records,
                     const std::vector<std::string>& classifiers,
                     const std::vector<std::string>& pos, const std::vector<double>& r_values) {
  for (const auto& classifier : classifiers) {
    for (const auto& po : pos) {
      for (double r : r_values) {
        const ResultRecord* best = best_cell(records, classifier, po, r);
        out << classifier << "," << po << "," << fmt(r) << ",";
        if (!best) {
          out << "no admissible point,-,-,-,-,-\n";
        } else {
          out << best->params << "," << fmt_opt(best->pi_point) << ","
              << fmt_opt(best->pi_lower) << "," << fmt_opt(best->pi_upper) << "," << best->method
              << "," << fmt(best->r_tp) << "\n";
        }
      }
    }
  }
}

}  // namespace

void render(const ReportSpec& spec) {
  std::vector<ResultRecord> records;
  for (const auto& path : spec.input_files) {
    auto part = read_results_csv(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  if (records.empty()) throw Error("render: no result rows in inputs");

  std::set<std::string> classifier_set;
  for (const auto& r : records) classifier_set.insert(r.classifier);

  std::ofstream out(spec.output_path);
  if (!out) throw IoError("cannot write report: " + spec.output_path);
  out << "# owf-report v1\n";
  out << "classifier,po,r,params,pi_point,pi_lower,pi_upper,method,recall\n";

  std::vector<std::string> classifiers;
  switch (spec.table) {
    case ReportTable::BASELINE:
    case ReportTable::CONFIDENCE:
    case ReportTable::DISTANCE:
    case ReportTable::DEFENSE:
      for (const auto& c : classifier_set)
        if (c.rfind("ens", 0) != 0) classifiers.push_back(c);
      break;
    case ReportTable::ENSEMBLE:
      for (const auto& c : classifier_set)
        if (c.rfind("ens[", 0) == 0) classifiers.push_back(c);
      break;
  }
  if (classifiers.empty()) throw Error("render: no matching classifiers in inputs");

  switch (spec.table) {
    case ReportTable::BASELINE:
      write_best_rows(out, records, classifiers, {"baseline"}, spec.r_values);
      break;
    case ReportTable::CONFIDENCE:
      write_best_rows(out, records, classifiers, {"confidence"}, spec.r_values);
      break;
    case ReportTable::DISTANCE:
      write_best_rows(out, records, classifiers, {"tooclose", "toofar"}, spec.r_values);
      break;
    case ReportTable::ENSEMBLE:
      write_best_rows(out, records, classifiers, {"unanimous"}, spec.r_values);
      break;
    case ReportTable::DEFENSE:
      write_best_rows(out, records, classifiers, {"baseline", "confidence"}, spec.r_values);
      break;
  }
  if (!out) throw IoError("report write failed: " + spec.output_path);
}

void render_curve(const std::vector<ResultRecord>& records, const std::string& classifier,
                  const std::string& po, const std::string& x_param, double r,
                  const std::string& output_path) {
  std::vector<std::pair<double, double>> points;
  for (const auto& rec : records) {
    if (rec.classifier != classifier || rec.po != po || rec.r != r) continue;
    if (!rec.recall_ok) continue;  // below the recall floor: discarded, as reported
    auto x = param_value(rec.params, x_param);
    if (!x) continue;
    double y = rec.pi_lower ? *rec.pi_lower : rec.pi_point.value_or(0.0);
    points.emplace_back(std::stod(*x), y);
  }
  if (points.empty()) throw Error("render_curve: no rows for " + classifier + "/" + po);
  std::sort(points.begin(), points.end());

  std::ofstream out(output_path);
  if (!out) throw IoError("cannot write curve: " + output_path);
  for (const auto& [x, y] : points) out << fmt(x) << " " << fmt(y) << "\n";
  if (!out) throw IoError("curve write failed: " + output_path);

  std::ofstream plot(output_path + ".gp");
  if (plot) {
    plot << "set xlabel '" << x_param << "'\n";
    plot << "set ylabel 'pi_" << fmt(r) << " lower bound'\n";
    plot << "plot '" << output_path << "' using 1:2 with linespoints title '" << classifier
         << " " << po << "'\n";
  }
}

}  // namespace owf

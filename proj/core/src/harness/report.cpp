#include "rdfs/harness/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <tuple>

namespace rdfs::harness {

using nlohmann::json;

namespace {

std::size_t condition_rank(const std::string& c) {
  const auto all = report_conditions();
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), c) - all.begin());
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string task_title(const std::string& task) {
  if (task == "resize") return "Resize";
  if (task == "median") return "Median Filtering";
  if (task == "clahe") return "CL-AHE";
  return task;
}

std::string condition_title(const std::string& condition) {
  if (condition == kNoAttack) return "No Attk";
  if (condition == "pgd") return "PGD";
  if (condition == "fgsm") return "FGSM";
  if (condition == "bfgs") return "BFGS";
  return condition;
}

std::vector<ReportRow> aggregate(const std::vector<RepResult>& results, const std::string& architecture,
                                 std::size_t n) {
  std::vector<const RepResult*> sorted;
  for (const auto& r : results) sorted.push_back(&r);
  auto key = [](const RepResult* r) {
    return std::make_tuple(r->task, static_cast<int>(r->kind), r->k, condition_rank(r->condition), r->condition,
                           r->rep);
  };
  std::sort(sorted.begin(), sorted.end(), [&](auto* a, auto* b) { return key(a) < key(b); });

  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && std::get<0>(key(sorted[j])) == std::get<0>(key(sorted[i])) &&
           sorted[j]->kind == sorted[i]->kind && sorted[j]->k == sorted[i]->k &&
           sorted[j]->condition == sorted[i]->condition) {
      if (j > i && sorted[j]->rep == sorted[j - 1]->rep)
        throw std::invalid_argument("aggregate: repetition " + std::to_string(sorted[j]->rep) + " appears twice");
      ++j;
    }
    const std::size_t m = j - i;
    double sum = 0;
    for (std::size_t t = i; t < j; ++t) sum += sorted[t]->accuracy;
    const double mean = sum / static_cast<double>(m);
    double ss = 0;
    for (std::size_t t = i; t < j; ++t) ss += (sorted[t]->accuracy - mean) * (sorted[t]->accuracy - mean);
    ReportRow row;
    row.task = sorted[i]->task;
    row.architecture = architecture;
    row.kind = sorted[i]->kind;
    row.k = sorted[i]->k;
    row.k_is_n = sorted[i]->k == n;
    row.condition = sorted[i]->condition;
    row.mean = mean;
    row.std = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
    row.repetitions = m;
    rows.push_back(std::move(row));
    i = j;
  }
  return rows;
}

RenderedReport render_report(const std::vector<ReportRow>& rows, const ReportLayout& layout) {
  RenderedReport out;
  const auto conditions = report_conditions();
  std::map<std::tuple<std::string, int, std::size_t, std::string>, const ReportRow*> index;
  for (const auto& r : rows) index[{r.task, static_cast<int>(r.kind), r.k, r.condition}] = &r;

  std::ostringstream summary;
  summary << "Architecture " << layout.architecture << ", N = " << layout.n << "\n";
  summary << "Cells hold the arithmetic mean (and, in the _std tables, the sample standard deviation) of the\n"
             "reduced-detector accuracy in percent over repetitions, each with its own secret feature subset.\n"
             "Under attack, accuracy is the share of successful adversarial examples still detected as manipulated.\n";

  for (auto kind : layout.kinds) {
    const std::string kname(defence::kind_name(kind));
    std::string header = "K";
    for (const auto& t : layout.tasks) {
      for (const auto& c : conditions) header += "," + task_title(t) + " " + condition_title(c);
    }
    std::string mean_csv = header + "\n";
    std::string std_csv = header + "\n";
    std::size_t reps_min = SIZE_MAX, reps_max = 0;
    for (std::size_t k : layout.k_values) {
      const std::string label = k == layout.n ? "N" : std::to_string(k);
      std::string mean_line = label, std_line = label;
      for (const auto& t : layout.tasks) {
        for (const auto& c : conditions) {
          const auto it = index.find({t, static_cast<int>(kind), k, c});
          mean_line += ",";
          std_line += ",";
          if (it == index.end()) {
            out.missing.push_back(t + "/" + kname + "/" + label + "/" + c);
            continue;
          }
          mean_line += fixed2(it->second->mean);
          std_line += fixed2(it->second->std);
          reps_min = std::min(reps_min, it->second->repetitions);
          reps_max = std::max(reps_max, it->second->repetitions);
        }
      }
      mean_csv += mean_line + "\n";
      std_csv += std_line + "\n";
    }
    const std::string stem = "report_" + layout.architecture + "_" + kname;
    out.files[stem + "_mean.csv"] = mean_csv;
    out.files[stem + "_std.csv"] = std_csv;
    summary << "\n" << stem << "_mean.csv: ";
    if (reps_max == 0) summary << "no data\n";
    else if (reps_min == reps_max) summary << reps_max << " repetitions per cell\n";
    else summary << "between " << reps_min << " and " << reps_max << " repetitions per cell\n";
  }
  summary << "\nMissing cells: " << out.missing.size() << "\n";
  for (const auto& m : out.missing) summary << "  " << m << "\n";
  out.files["summary_" + layout.architecture + ".txt"] = summary.str();
  return out;
}

std::string results_jsonl(const std::vector<RepResult>& results) {
  std::string out;
  for (const auto& r : results) {
    out += json{{"task", r.task},
                {"kind", defence::kind_name(r.kind)},
                {"K", r.k},
                {"rep", r.rep},
                {"condition", r.condition},
                {"accuracy", r.accuracy},
                {"samples", r.samples}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<RepResult> parse_results_jsonl(const std::string& text) {
  std::vector<RepResult> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      RepResult r;
      r.task = j.at("task");
      r.kind = defence::parse_kind(j.at("kind").get<std::string>());
      r.k = j.at("K");
      r.rep = j.at("rep");
      r.condition = j.at("condition");
      r.accuracy = j.at("accuracy");
      r.samples = j.at("samples");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error("results line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rdfs::harness

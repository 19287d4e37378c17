#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rdfs/harness/experiment.hpp"

namespace rdfs::harness {

struct ReportRow {
  std::string task;
  std::string architecture;
  defence::ReducedKind kind = defence::ReducedKind::fc;
  std::size_t k = 0;
  bool k_is_n = false;
  std::string condition;
  /// Over repetitions, in percent. std is the sample standard deviation (0 for one repetition).
  double mean = 0;
  double std = 0;
  std::size_t repetitions = 0;
};

/// One row per (task, kind, K, condition), in that sort order with the
/// conditions in report order. Repetitions are summed in repetition order,
/// so the result does not depend on the order the rows arrive in.
std::vector<ReportRow> aggregate(const std::vector<RepResult>& results, const std::string& architecture,
                                 std::size_t n);

struct ReportLayout {
  std::string architecture;
  std::vector<std::string> tasks;
  std::vector<defence::ReducedKind> kinds;
  /// Ascending, N included when wanted.
  std::vector<std::size_t> k_values;
  std::size_t n = 0;
};

struct RenderedReport {
  /// File name -> contents; report_<arch>_<kind>_{mean,std}.csv and summary_<arch>.txt.
  std::map<std::string, std::string> files;
  /// "task/kind/K/condition" of every empty cell.
  std::vector<std::string> missing;
};

/// CSV tables laid out with a K column (N for the full set) followed by
/// No Attk, PGD, FGSM, BFGS for each task, values to two decimals. Missing
/// cells are left empty and listed in the summary.
RenderedReport render_report(const std::vector<ReportRow>& rows, const ReportLayout& layout);

std::string results_jsonl(const std::vector<RepResult>& results);
std::vector<RepResult> parse_results_jsonl(const std::string& text);

/// "Resize", "Median Filtering", "CL-AHE".
std::string task_title(const std::string& task);
/// "No Attk", "PGD", "FGSM", "BFGS".
std::string condition_title(const std::string& condition);

}  // namespace rdfs::harness

#pragma once

// Metrics bundles, batch runs, policy comparison and report files.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcs/config.hpp"
#include "rcs/sim.hpp"

namespace rcs {

struct HistogramRow {
  std::string bucket;
  std::size_t count = 0;
  friend bool operator==(const HistogramRow&, const HistogramRow&) = default;
};

struct RetrievalSample {
  std::uint64_t request = 0;
  double waiting = 0.0;
  double delivery1 = 0.0;
  double digging = 0.0;
  double delivery2 = 0.0;
  double total = 0.0;
  friend bool operator==(const RetrievalSample&, const RetrievalSample&) = default;
};

struct SeriesRow {
  std::size_t index = 0;
  double value = 0.0;
  friend bool operator==(const SeriesRow&, const SeriesRow&) = default;
};

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const Summary&, const Summary&) = default;
};

struct ExceedanceRow {
  int threshold = 0;  // seconds
  std::size_t count = 0;
  friend bool operator==(const ExceedanceRow&, const ExceedanceRow&) = default;
};

struct RobotTime {
  double overall = 0.0;
  double delivery = 0.0;
  double gripper = 0.0;
  friend bool operator==(const RobotTime&, const RobotTime&) = default;
};

inline constexpr int kExceedanceThresholds[] = {30, 40, 50, 60, 70, 80, 90};
inline constexpr std::size_t kMovingWindow = 1000;

struct ReportBundle {
  std::string scenario;  // key of the scenario without policy, seed and randomization
  std::string policy;
  std::uint64_t seed = 0;
  int randomization = 0;
  int empty_level = 0;
  std::size_t requests = 0;
  std::size_t served = 0;  // requests that needed robot work
  std::size_t zero_task = 0;
  std::vector<HistogramRow> depth_histogram;       // bucket 0 = at a workstation
  std::vector<HistogramRow> bins_above_histogram;  // first bucket = at a workstation
  std::vector<RetrievalSample> samples;
  std::vector<SeriesRow> moving_average;
  std::vector<SeriesRow> moving_max;
  Summary summary;
  std::vector<ExceedanceRow> exceedance;
  RobotTime robot_time;
  std::optional<std::size_t> lambda;
  std::optional<std::size_t> lambda_epsilon;
  double surface_fraction = 0.0;  // served requests whose target was the top bin of its stack

  friend bool operator==(const ReportBundle&, const ReportBundle&) = default;
};

/// Linear-interpolation quantile of sorted data.
double quantile(std::span<const double> sorted, double q);

Summary summarize(std::span<const double> values);

/// Trailing window of `window` samples (shorter at the start).
std::vector<SeriesRow> moving_average(std::span<const double> values, std::size_t window);
std::vector<SeriesRow> moving_maximum(std::span<const double> values, std::size_t window);

/// Key identifying a config apart from policy, seed and randomization.
std::string scenario_key(const ScenarioConfig& config);

ReportBundle make_bundle(const EventLog& log, const std::string& scenario, int height);

/// Stable file-name stem for a bundle, e.g. "lcp_r40_s1".
std::string bundle_name(const ReportBundle& bundle);

std::string bundle_to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(const std::string& text);

/// One CSV document per metric, keyed by file name.
std::vector<std::pair<std::string, std::string>> bundle_csv(const ReportBundle& bundle);
/// Rebuilds a bundle from the documents produced by bundle_csv.
ReportBundle bundle_from_csv(const std::vector<std::pair<std::string, std::string>>& files);

struct ComparisonRow {
  std::string metric;
  double reference = 0.0;
  double baseline = 0.0;
  std::optional<double> reduction_percent;  // nullopt when the baseline is 0 and reference is not
};

struct Comparison {
  std::string reference_policy;
  std::string baseline_policy;
  int randomization = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<ComparisonRow> rows;
};

/// Percent reduction (baseline - reference) / baseline * 100 in exceedance
/// counts per threshold and in robot working time, summed over seeds.
/// Throws Error(Validation) when the two sides differ in anything but policy.
Comparison compare_bundles(std::span<const ReportBundle> reference,
                           std::span<const ReportBundle> baseline);

/// Every other policy against `reference`, per randomization level.
std::vector<Comparison> compare_policies(std::span<const ReportBundle> bundles,
                                         const std::string& reference = "lcp");

struct AggregateRow {
  std::string policy;
  int randomization = 0;
  std::size_t runs = 0;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one run
};

struct BatchFailure {
  std::string policy;
  int randomization = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct BatchResult {
  std::vector<ReportBundle> bundles;
  std::vector<BatchFailure> failures;
  std::vector<AggregateRow> aggregate;
};

std::vector<AggregateRow> aggregate_bundles(std::span<const ReportBundle> bundles);

/// Runs every (policy, randomization, seed) cell of the batch section. A
/// failing run is recorded and the batch continues.
BatchResult run_batch(const ScenarioConfig& config);

std::string aggregate_csv(std::span<const AggregateRow> rows);
std::string comparison_csv(std::span<const Comparison> comparisons);

/// Writes <dir>/<bundle>/<metric>.csv, <dir>/<bundle>.json, aggregate.csv,
/// comparison.csv and failures.csv. Throws Error(Io) naming the path on
/// failure.
void emit_reports(const BatchResult& result, const std::string& dir);

/// Reads every <bundle>.json in a directory (sorted by file name).
std::vector<ReportBundle> load_bundles(const std::string& dir);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace rcs

#include "rcs/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace rcs {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Parse, "not a number: '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Parse, "not an integer: '" + s + "'");
  }
  return v;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, std::size_t columns,
                                                const std::string& name) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != columns) {
      throw Error(ErrorKind::Parse, name + ": expected " + std::to_string(columns) + " columns");
    }
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : values) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  s.median = quantile(v, 0.5);
  s.q1 = quantile(v, 0.25);
  s.q3 = quantile(v, 0.75);
  s.iqr = s.q3 - s.q1;
  s.min = v.front();
  s.max = v.back();
  return s;
}

std::vector<SeriesRow> moving_average(std::span<const double> values, std::size_t window) {
  std::vector<SeriesRow> out;
  out.reserve(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    const std::size_t n = std::min(i + 1, window);
    out.push_back({i + 1, sum / static_cast<double>(n)});
  }
  return out;
}

std::vector<SeriesRow> moving_maximum(std::span<const double> values, std::size_t window) {
  std::vector<SeriesRow> out;
  out.reserve(values.size());
  std::deque<std::size_t> best;  // indices with decreasing values
  for (std::size_t i = 0; i < values.size(); ++i) {
    while (!best.empty() && values[best.back()] <= values[i]) best.pop_back();
    best.push_back(i);
    if (best.front() + window <= i) best.pop_front();
    out.push_back({i + 1, values[best.front()]});
  }
  return out;
}

std::string scenario_key(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  c.policy = PolicyKind::LayerComplete;
  c.seed = 0;
  c.initial_randomization = 0;
  c.batch = {};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize_config(c))));
  return buf;
}

ReportBundle make_bundle(const EventLog& log, const std::string& scenario, int height) {
  ReportBundle b;
  b.scenario = scenario;
  b.policy = log.policy;
  b.seed = log.seed;
  b.randomization = log.initial_randomization;
  b.empty_level = log.empty_level;
  b.requests = log.requests.size();
  b.lambda = log.lambda;
  b.lambda_epsilon = log.lambda_epsilon;
  if (log.requests.empty()) return b;

  std::vector<std::size_t> depth(static_cast<std::size_t>(height) + 1, 0);
  std::vector<std::size_t> above(static_cast<std::size_t>(height) + 1, 0);
  std::vector<double> totals;
  totals.reserve(log.requests.size());
  std::size_t surface = 0;
  for (const auto& r : log.requests) {
    if (r.zero_task) {
      ++b.zero_task;
      ++depth[0];
      ++above[0];
    } else {
      ++b.served;
      ++depth[static_cast<std::size_t>(r.depth)];
      ++above[static_cast<std::size_t>(r.bins_above) + 1];
      if (r.bins_above == 0) ++surface;
    }
    b.samples.push_back({r.id, r.waiting, r.delivery1, r.digging, r.delivery2, r.retrieval_time});
    totals.push_back(r.retrieval_time);
  }
  for (std::size_t i = 0; i < depth.size(); ++i) b.depth_histogram.push_back({std::to_string(i), depth[i]});
  b.bins_above_histogram.push_back({"workstation", above[0]});
  for (std::size_t i = 1; i < above.size(); ++i) {
    b.bins_above_histogram.push_back({std::to_string(i - 1), above[i]});
  }
  b.moving_average = moving_average(totals, kMovingWindow);
  b.moving_max = moving_maximum(totals, kMovingWindow);
  b.summary = summarize(totals);
  for (int t : kExceedanceThresholds) {
    const auto n = static_cast<std::size_t>(
        std::count_if(totals.begin(), totals.end(), [t](double v) { return v >= t; }));
    b.exceedance.push_back({t, n});
  }
  for (const auto& r : log.robots) {
    b.robot_time.delivery += r.delivery;
    b.robot_time.gripper += r.gripper;
  }
  b.robot_time.overall = b.robot_time.delivery + b.robot_time.gripper;
  b.surface_fraction = b.served ? static_cast<double>(surface) / static_cast<double>(b.served) : 0.0;
  return b;
}

std::string bundle_name(const ReportBundle& b) {
  return b.policy + "_r" + std::to_string(b.randomization) + "_s" + std::to_string(b.seed);
}

namespace {

ordered opt_json(const std::optional<std::size_t>& v) { return v ? ordered(*v) : ordered(nullptr); }

std::optional<std::size_t> opt_size(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<std::size_t>();
}

}  // namespace

std::string bundle_to_json(const ReportBundle& b) {
  auto hist = [](const std::vector<HistogramRow>& h) {
    ordered a = ordered::array();
    for (const auto& r : h) a.push_back({{"bucket", r.bucket}, {"count", r.count}});
    return a;
  };
  auto series = [](const std::vector<SeriesRow>& s) {
    ordered a = ordered::array();
    for (const auto& r : s) a.push_back({r.index, r.value});
    return a;
  };
  ordered samples = ordered::array();
  for (const auto& s : b.samples) {
    samples.push_back({s.request, s.waiting, s.delivery1, s.digging, s.delivery2, s.total});
  }
  ordered exceed = ordered::array();
  for (const auto& e : b.exceedance) exceed.push_back({{"threshold", e.threshold}, {"count", e.count}});
  ordered doc = {
      {"scenario", b.scenario},
      {"policy", b.policy},
      {"seed", b.seed},
      {"randomization", b.randomization},
      {"empty_level", b.empty_level},
      {"requests", b.requests},
      {"served", b.served},
      {"zero_task", b.zero_task},
      {"lambda", opt_json(b.lambda)},
      {"lambda_epsilon", opt_json(b.lambda_epsilon)},
      {"surface_fraction", b.surface_fraction},
      {"summary",
       {{"mean", b.summary.mean},
        {"median", b.summary.median},
        {"q1", b.summary.q1},
        {"q3", b.summary.q3},
        {"iqr", b.summary.iqr},
        {"min", b.summary.min},
        {"max", b.summary.max}}},
      {"robot_time",
       {{"overall", b.robot_time.overall},
        {"delivery", b.robot_time.delivery},
        {"gripper", b.robot_time.gripper}}},
      {"exceedance", exceed},
      {"depth_histogram", hist(b.depth_histogram)},
      {"bins_above_histogram", hist(b.bins_above_histogram)},
      {"moving_average", series(b.moving_average)},
      {"moving_max", series(b.moving_max)},
      {"samples_columns", {"request", "waiting", "delivery1", "digging", "delivery2", "retrieval_time"}},
      {"samples", samples}};
  return doc.dump(2) + "\n";
}

ReportBundle bundle_from_json(const std::string& text) {
  ReportBundle b;
  try {
    const json j = json::parse(text);
    b.scenario = j.at("scenario").get<std::string>();
    b.policy = j.at("policy").get<std::string>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.randomization = j.at("randomization").get<int>();
    b.empty_level = j.at("empty_level").get<int>();
    b.requests = j.at("requests").get<std::size_t>();
    b.served = j.at("served").get<std::size_t>();
    b.zero_task = j.at("zero_task").get<std::size_t>();
    b.lambda = opt_size(j.at("lambda"));
    b.lambda_epsilon = opt_size(j.at("lambda_epsilon"));
    b.surface_fraction = j.at("surface_fraction").get<double>();
    const json& s = j.at("summary");
    b.summary = {s.at("mean").get<double>(), s.at("median").get<double>(), s.at("q1").get<double>(),
                 s.at("q3").get<double>(),   s.at("iqr").get<double>(),    s.at("min").get<double>(),
                 s.at("max").get<double>()};
    const json& r = j.at("robot_time");
    b.robot_time = {r.at("overall").get<double>(), r.at("delivery").get<double>(),
                    r.at("gripper").get<double>()};
    for (const auto& e : j.at("exceedance")) {
      b.exceedance.push_back({e.at("threshold").get<int>(), e.at("count").get<std::size_t>()});
    }
    for (const auto& h : j.at("depth_histogram")) {
      b.depth_histogram.push_back({h.at("bucket").get<std::string>(), h.at("count").get<std::size_t>()});
    }
    for (const auto& h : j.at("bins_above_histogram")) {
      b.bins_above_histogram.push_back(
          {h.at("bucket").get<std::string>(), h.at("count").get<std::size_t>()});
    }
    for (const auto& p : j.at("moving_average")) {
      b.moving_average.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
    }
    for (const auto& p : j.at("moving_max")) {
      b.moving_max.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
    }
    for (const auto& p : j.at("samples")) {
      b.samples.push_back({p.at(0).get<std::uint64_t>(), p.at(1).get<double>(), p.at(2).get<double>(),
                           p.at(3).get<double>(), p.at(4).get<double>(), p.at(5).get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("bundle JSON: ") + e.what());
  }
  return b;
}

std::vector<std::pair<std::string, std::string>> bundle_csv(const ReportBundle& b) {
  std::vector<std::pair<std::string, std::string>> files;
  const bool any = b.requests > 0;
  {
    std::string s = "key,value\n";
    s += "scenario," + b.scenario + "\n";
    s += "policy," + b.policy + "\n";
    s += "seed," + std::to_string(b.seed) + "\n";
    s += "randomization," + std::to_string(b.randomization) + "\n";
    s += "empty_level," + std::to_string(b.empty_level) + "\n";
    s += "requests," + std::to_string(b.requests) + "\n";
    s += "served," + std::to_string(b.served) + "\n";
    s += "zero_task," + std::to_string(b.zero_task) + "\n";
    s += "lambda," + (b.lambda ? std::to_string(*b.lambda) : std::string()) + "\n";
    s += "lambda_epsilon," + (b.lambda_epsilon ? std::to_string(*b.lambda_epsilon) : std::string()) + "\n";
    s += "surface_fraction," + num(b.surface_fraction) + "\n";
    files.emplace_back("meta.csv", s);
  }
  auto hist = [](const std::vector<HistogramRow>& h) {
    std::string s = "bucket,count\n";
    for (const auto& r : h) s += r.bucket + "," + std::to_string(r.count) + "\n";
    return s;
  };
  files.emplace_back("depth.csv", hist(b.depth_histogram));
  files.emplace_back("bins_above.csv", hist(b.bins_above_histogram));
  {
    std::string s = "request,waiting,delivery1,digging,delivery2,retrieval_time\n";
    for (const auto& r : b.samples) {
      s += std::to_string(r.request) + "," + num(r.waiting) + "," + num(r.delivery1) + "," +
           num(r.digging) + "," + num(r.delivery2) + "," + num(r.total) + "\n";
    }
    files.emplace_back("samples.csv", s);
  }
  auto series = [](const std::vector<SeriesRow>& v) {
    std::string s = "request_index,value\n";
    for (const auto& r : v) s += std::to_string(r.index) + "," + num(r.value) + "\n";
    return s;
  };
  files.emplace_back("moving_average.csv", series(b.moving_average));
  files.emplace_back("moving_max.csv", series(b.moving_max));
  {
    std::string s = "metric,value\n";
    if (any) {
      s += "mean," + num(b.summary.mean) + "\n";
      s += "median," + num(b.summary.median) + "\n";
      s += "q1," + num(b.summary.q1) + "\n";
      s += "q3," + num(b.summary.q3) + "\n";
      s += "iqr," + num(b.summary.iqr) + "\n";
      s += "min," + num(b.summary.min) + "\n";
      s += "max," + num(b.summary.max) + "\n";
    }
    files.emplace_back("summary.csv", s);
  }
  {
    std::string s = "threshold_s,count\n";
    for (const auto& e : b.exceedance) s += std::to_string(e.threshold) + "," + std::to_string(e.count) + "\n";
    files.emplace_back("exceedance.csv", s);
  }
  {
    std::string s = "metric,seconds\n";
    if (any) {
      s += "overall," + num(b.robot_time.overall) + "\n";
      s += "delivery," + num(b.robot_time.delivery) + "\n";
      s += "gripper," + num(b.robot_time.gripper) + "\n";
    }
    files.emplace_back("robot_time.csv", s);
  }
  return files;
}

ReportBundle bundle_from_csv(const std::vector<std::pair<std::string, std::string>>& files) {
  std::map<std::string, std::string> by_name(files.begin(), files.end());
  auto get = [&](const std::string& name) -> const std::string& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(ErrorKind::Parse, "bundle CSV: missing " + name);
    return it->second;
  };
  ReportBundle b;
  for (const auto& row : parse_csv(get("meta.csv"), 2, "meta.csv")) {
    const std::string& k = row[0];
    const std::string& v = row[1];
    if (k == "scenario") b.scenario = v;
    else if (k == "policy") b.policy = v;
    else if (k == "seed") b.seed = parse_u64(v);
    else if (k == "randomization") b.randomization = static_cast<int>(parse_u64(v));
    else if (k == "empty_level") b.empty_level = static_cast<int>(parse_u64(v));
    else if (k == "requests") b.requests = parse_u64(v);
    else if (k == "served") b.served = parse_u64(v);
    else if (k == "zero_task") b.zero_task = parse_u64(v);
    else if (k == "lambda") b.lambda = v.empty() ? std::nullopt : std::optional<std::size_t>(parse_u64(v));
    else if (k == "lambda_epsilon") b.lambda_epsilon = v.empty() ? std::nullopt : std::optional<std::size_t>(parse_u64(v));
    else if (k == "surface_fraction") b.surface_fraction = parse_double(v);
    else throw Error(ErrorKind::Parse, "meta.csv: unknown key " + k);
  }
  for (const auto& row : parse_csv(get("depth.csv"), 2, "depth.csv")) {
    b.depth_histogram.push_back({row[0], parse_u64(row[1])});
  }
  for (const auto& row : parse_csv(get("bins_above.csv"), 2, "bins_above.csv")) {
    b.bins_above_histogram.push_back({row[0], parse_u64(row[1])});
  }
  for (const auto& row : parse_csv(get("samples.csv"), 6, "samples.csv")) {
    b.samples.push_back({parse_u64(row[0]), parse_double(row[1]), parse_double(row[2]),
                         parse_double(row[3]), parse_double(row[4]), parse_double(row[5])});
  }
  for (const auto& row : parse_csv(get("moving_average.csv"), 2, "moving_average.csv")) {
    b.moving_average.push_back({parse_u64(row[0]), parse_double(row[1])});
  }
  for (const auto& row : parse_csv(get("moving_max.csv"), 2, "moving_max.csv")) {
    b.moving_max.push_back({parse_u64(row[0]), parse_double(row[1])});
  }
  for (const auto& row : parse_csv(get("summary.csv"), 2, "summary.csv")) {
    const double v = parse_double(row[1]);
    if (row[0] == "mean") b.summary.mean = v;
    else if (row[0] == "median") b.summary.median = v;
    else if (row[0] == "q1") b.summary.q1 = v;
    else if (row[0] == "q3") b.summary.q3 = v;
    else if (row[0] == "iqr") b.summary.iqr = v;
    else if (row[0] == "min") b.summary.min = v;
    else if (row[0] == "max") b.summary.max = v;
  }
  for (const auto& row : parse_csv(get("exceedance.csv"), 2, "exceedance.csv")) {
    b.exceedance.push_back({static_cast<int>(parse_u64(row[0])), parse_u64(row[1])});
  }
  for (const auto& row : parse_csv(get("robot_time.csv"), 2, "robot_time.csv")) {
    const double v = parse_double(row[1]);
    if (row[0] == "overall") b.robot_time.overall = v;
    else if (row[0] == "delivery") b.robot_time.delivery = v;
    else if (row[0] == "gripper") b.robot_time.gripper = v;
  }
  return b;
}

namespace {

std::vector<std::uint64_t> seeds_of(std::span<const ReportBundle> bundles) {
  std::vector<std::uint64_t> s;
  for (const auto& b : bundles) s.push_back(b.seed);
  std::sort(s.begin(), s.end());
  return s;
}

ComparisonRow reduction(const std::string& metric, double reference, double baseline) {
  ComparisonRow r{metric, reference, baseline, std::nullopt};
  if (baseline != 0.0) {
    r.reduction_percent = (baseline - reference) / baseline * 100.0;
  } else if (reference == 0.0) {
    r.reduction_percent = 0.0;
  }
  return r;
}

}  // namespace

Comparison compare_bundles(std::span<const ReportBundle> reference,
                           std::span<const ReportBundle> baseline) {
  if (reference.empty() || baseline.empty()) {
    throw Error(ErrorKind::Validation, "compare: both sides need at least one bundle");
  }
  const ReportBundle& first = reference.front();
  auto same_side = [](std::span<const ReportBundle> side) {
    return std::all_of(side.begin(), side.end(),
                       [&](const ReportBundle& b) { return b.policy == side.front().policy; });
  };
  if (!same_side(reference) || !same_side(baseline)) {
    throw Error(ErrorKind::Validation, "compare: mixed policies on one side");
  }
  for (const auto* side : {&reference, &baseline}) {
    for (const auto& b : *side) {
      if (b.scenario != first.scenario || b.randomization != first.randomization ||
          b.empty_level != first.empty_level) {
        throw Error(ErrorKind::Validation, "compare: mismatched scenarios (" + bundle_name(first) +
                                               " vs " + bundle_name(b) + ")");
      }
    }
  }
  const auto seeds = seeds_of(reference);
  if (seeds != seeds_of(baseline)) {
    throw Error(ErrorKind::Validation, "compare: seed sets differ");
  }
  Comparison c;
  c.reference_policy = first.policy;
  c.baseline_policy = baseline.front().policy;
  c.randomization = first.randomization;
  c.seeds = seeds;
  for (std::size_t t = 0; t < std::size(kExceedanceThresholds); ++t) {
    double ref = 0.0;
    double base = 0.0;
    for (const auto& b : reference) ref += b.exceedance.empty() ? 0.0 : static_cast<double>(b.exceedance[t].count);
    for (const auto& b : baseline) base += b.exceedance.empty() ? 0.0 : static_cast<double>(b.exceedance[t].count);
    c.rows.push_back(reduction("exceed_" + std::to_string(kExceedanceThresholds[t]), ref, base));
  }
  auto total = [](std::span<const ReportBundle> side, double RobotTime::*field) {
    double s = 0.0;
    for (const auto& b : side) s += b.robot_time.*field;
    return s;
  };
  c.rows.push_back(reduction("robot_overall", total(reference, &RobotTime::overall),
                             total(baseline, &RobotTime::overall)));
  c.rows.push_back(reduction("robot_delivery", total(reference, &RobotTime::delivery),
                             total(baseline, &RobotTime::delivery)));
  c.rows.push_back(reduction("robot_gripper", total(reference, &RobotTime::gripper),
                             total(baseline, &RobotTime::gripper)));
  return c;
}

std::vector<Comparison> compare_policies(std::span<const ReportBundle> bundles,
                                         const std::string& reference) {
  std::vector<Comparison> out;
  if (bundles.empty()) return out;
  std::vector<int> levels;
  std::vector<std::string> policies;
  for (const auto& b : bundles) {
    if (b.scenario != bundles.front().scenario) {
      throw Error(ErrorKind::Validation, "compare: bundles come from different scenarios");
    }
    if (std::find(levels.begin(), levels.end(), b.randomization) == levels.end()) {
      levels.push_back(b.randomization);
    }
    if (std::find(policies.begin(), policies.end(), b.policy) == policies.end()) {
      policies.push_back(b.policy);
    }
  }
  if (std::find(policies.begin(), policies.end(), reference) == policies.end()) {
    throw Error(ErrorKind::Validation, "compare: no bundles for reference policy " + reference);
  }
  std::sort(levels.begin(), levels.end());
  for (int level : levels) {
    auto pick = [&](const std::string& policy) {
      std::vector<ReportBundle> v;
      for (const auto& b : bundles) {
        if (b.policy == policy && b.randomization == level) v.push_back(b);
      }
      return v;
    };
    const auto ref = pick(reference);
    for (const auto& p : policies) {
      if (p == reference) continue;
      const auto base = pick(p);
      if (ref.empty() || base.empty()) {
        throw Error(ErrorKind::Validation, "compare: randomization " + std::to_string(level) +
                                               " lacks bundles for " + (ref.empty() ? reference : p));
      }
      out.push_back(compare_bundles(ref, base));
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate_bundles(std::span<const ReportBundle> bundles) {
  std::vector<std::pair<std::string, int>> cells;
  for (const auto& b : bundles) {
    const auto key = std::make_pair(b.policy, b.randomization);
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
  }
  using Metric = std::pair<const char*, double (*)(const ReportBundle&)>;
  static const Metric metrics[] = {
      {"mean_retrieval", [](const ReportBundle& b) { return b.summary.mean; }},
      {"median_retrieval", [](const ReportBundle& b) { return b.summary.median; }},
      {"iqr_retrieval", [](const ReportBundle& b) { return b.summary.iqr; }},
      {"surface_fraction", [](const ReportBundle& b) { return b.surface_fraction; }},
      {"exceed_30", [](const ReportBundle& b) {
         return b.exceedance.empty() ? 0.0 : static_cast<double>(b.exceedance.front().count);
       }},
      {"robot_overall", [](const ReportBundle& b) { return b.robot_time.overall; }},
      {"robot_delivery", [](const ReportBundle& b) { return b.robot_time.delivery; }},
      {"robot_gripper", [](const ReportBundle& b) { return b.robot_time.gripper; }},
  };
  std::vector<AggregateRow> out;
  for (const auto& [policy, level] : cells) {
    std::vector<const ReportBundle*> members;
    for (const auto& b : bundles) {
      if (b.policy == policy && b.randomization == level) members.push_back(&b);
    }
    for (const auto& [name, get] : metrics) {
      double sum = 0.0;
      for (const auto* b : members) sum += get(*b);
      const double mean = sum / static_cast<double>(members.size());
      double ss = 0.0;
      for (const auto* b : members) ss += (get(*b) - mean) * (get(*b) - mean);
      const double sd = members.size() > 1 ? std::sqrt(ss / static_cast<double>(members.size() - 1)) : 0.0;
      out.push_back({policy, level, members.size(), name, mean, sd});
    }
  }
  return out;
}

BatchResult run_batch(const ScenarioConfig& config) {
  if (config.batch.seeds.empty()) throw Error(ErrorKind::Validation, "batch needs at least one seed");
  const std::vector<PolicyKind> policies =
      config.batch.policies.empty() ? std::vector<PolicyKind>{config.policy} : config.batch.policies;
  const std::vector<int> levels = config.batch.randomizations.empty()
                                      ? std::vector<int>{config.initial_randomization}
                                      : config.batch.randomizations;
  const std::string key = scenario_key(config);
  BatchResult result;
  for (PolicyKind p : policies) {
    for (int level : levels) {
      for (std::uint64_t seed : config.batch.seeds) {
        try {
          const EventLog log = run(make_scenario(config, p, level, seed));
          result.bundles.push_back(make_bundle(log, key, config.grid.height));
        } catch (const Error& e) {
          result.failures.push_back({to_string(p), level, seed, e.what()});
        }
      }
    }
  }
  result.aggregate = aggregate_bundles(result.bundles);
  return result;
}

std::string aggregate_csv(std::span<const AggregateRow> rows) {
  std::string s = "policy,randomization,runs,metric,mean,stddev\n";
  for (const auto& r : rows) {
    s += r.policy + "," + std::to_string(r.randomization) + "," + std::to_string(r.runs) + "," +
         r.metric + "," + num(r.mean) + "," + num(r.stddev) + "\n";
  }
  return s;
}

std::string comparison_csv(std::span<const Comparison> comparisons) {
  std::string s = "reference,baseline,randomization,seeds,metric,reference_value,baseline_value,reduction_percent\n";
  for (const auto& c : comparisons) {
    for (const auto& r : c.rows) {
      s += c.reference_policy + "," + c.baseline_policy + "," + std::to_string(c.randomization) + "," +
           std::to_string(c.seeds.size()) + "," + r.metric + "," + num(r.reference) + "," +
           num(r.baseline) + "," + (r.reduction_percent ? num(*r.reduction_percent) : std::string()) +
           "\n";
    }
  }
  return s;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit_reports(const BatchResult& result, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir + "': " + ec.message());
  for (const auto& b : result.bundles) {
    const fs::path sub = fs::path(dir) / bundle_name(b);
    fs::create_directories(sub, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + sub.string() + "': " + ec.message());
    for (const auto& [name, text] : bundle_csv(b)) write_text_file((sub / name).string(), text);
    write_text_file((fs::path(dir) / (bundle_name(b) + ".json")).string(), bundle_to_json(b));
  }
  write_text_file((fs::path(dir) / "aggregate.csv").string(), aggregate_csv(result.aggregate));
  std::string failures = "policy,randomization,seed,message\n";
  for (const auto& f : result.failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::replace(msg.begin(), msg.end(), ',', ';');
    failures += f.policy + "," + std::to_string(f.randomization) + "," + std::to_string(f.seed) + "," + msg + "\n";
  }
  write_text_file((fs::path(dir) / "failures.csv").string(), failures);
  std::vector<Comparison> comparisons;
  const bool has_lcp = std::any_of(result.bundles.begin(), result.bundles.end(),
                                   [](const ReportBundle& b) { return b.policy == "lcp"; });
  if (has_lcp) comparisons = compare_policies(result.bundles);
  write_text_file((fs::path(dir) / "comparison.csv").string(), comparison_csv(comparisons));
}

std::vector<ReportBundle> load_bundles(const std::string& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".json") files.push_back(it->path());
  }
  if (ec) throw Error(ErrorKind::Io, "cannot list '" + dir + "': " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<ReportBundle> out;
  for (const auto& f : files) out.push_back(bundle_from_json(read_text_file(f.string())));
  return out;
}

}  // namespace rcs

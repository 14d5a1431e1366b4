// Command-line front end. Uses the C interface only.

#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rcs/rcs.h"

namespace {

int fail(rcs_status st) {
  std::fprintf(stderr, "error (%s): %s\n", rcs_status_name(st), rcs_last_error());
  return static_cast<int>(st);
}

void print_and_free(char* s) {
  std::fputs(s, stdout);
  rcs_string_free(s);
}

struct ConfigHandle {
  rcs_config* ptr = nullptr;
  ~ConfigHandle() { rcs_config_free(ptr); }
};

rcs_status open_config(const std::string& path, ConfigHandle& h) {
  if (path.empty()) return rcs_config_default(&h.ptr);
  return rcs_config_load(path.c_str(), &h.ptr);
}

struct Overrides {
  std::string policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> randomization;
  std::optional<std::uint64_t> requests;
  std::optional<double> hours;

  void attach(CLI::App* app) {
    app->add_option("--policy", policy, "lcp, delayed or immediate");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--randomization", randomization, "initial randomization in percent")
        ->check(CLI::Range(0, 100));
    auto* req = app->add_option("--requests", requests, "horizon in requests");
    app->add_option("--hours", hours, "horizon in hours")->excludes(req);
  }

  rcs_status apply(rcs_config* c) const {
    rcs_status st = RCS_OK;
    if (!policy.empty() && (st = rcs_config_set_policy(c, policy.c_str())) != RCS_OK) return st;
    if (seed && (st = rcs_config_set_seed(c, *seed)) != RCS_OK) return st;
    if (randomization && (st = rcs_config_set_randomization(c, *randomization)) != RCS_OK) return st;
    if (requests && (st = rcs_config_set_horizon_requests(c, *requests)) != RCS_OK) return st;
    if (hours && (st = rcs_config_set_horizon_hours(c, *hours)) != RCS_OK) return st;
    return st;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compact storage policies and robot simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rcs_version()));

  std::string config_path;
  Overrides ov;

  auto* validate = app.add_subcommand("validate", "check a config and print it normalized");
  validate->add_option("config", config_path, "config JSON")->required()->check(CLI::ExistingFile);

  auto* solve = app.add_subcommand("solve", "optimal empty level and layout");
  solve->add_option("config", config_path, "config JSON (default scenario if omitted)");
  solve->add_option("--policy", ov.policy, "lcp reserves a buffer stack");

  auto* simulate = app.add_subcommand("simulate", "run one simulation");
  std::string out_dir;
  bool events = false;
  simulate->add_option("config", config_path, "config JSON (default scenario if omitted)");
  ov.attach(simulate);
  simulate->add_option("--out", out_dir, "write events and metrics to this directory");
  simulate->add_flag("--events", events, "print the NDJSON event log instead of the bundle");

  auto* batch = app.add_subcommand("batch", "run every policy, randomization and seed of the batch section");
  batch->add_option("config", config_path, "config JSON (default scenario if omitted)");
  batch->add_option("--out", out_dir, "report directory")->required();

  auto* compare = app.add_subcommand("compare", "percent reductions against a reference policy");
  std::string compare_dir;
  std::string reference = "lcp";
  compare->add_option("dir", compare_dir, "directory with bundle JSON files")->required();
  compare->add_option("--reference", reference, "reference policy");

  auto* lut = app.add_subcommand("lut", "placement-cost lookup table as CSV");
  int height = 12;
  int max_layer = 22;
  lut->add_option("--height", height, "rows h_e = 0..height-1");
  lut->add_option("--max-layer", max_layer, "last layer column");

  CLI11_PARSE(app, argc, argv);

  if (*lut) {
    char* csv = nullptr;
    const rcs_status st = rcs_lut_csv(height, max_layer, &csv);
    if (st != RCS_OK) return fail(st);
    print_and_free(csv);
    return 0;
  }

  if (*compare) {
    char* csv = nullptr;
    const rcs_status st = rcs_compare_dir(compare_dir.c_str(), reference.c_str(), &csv);
    if (st != RCS_OK) return fail(st);
    print_and_free(csv);
    return 0;
  }

  ConfigHandle cfg;
  rcs_status st = open_config(config_path, cfg);
  if (st != RCS_OK) return fail(st);

  if (*validate) {
    char* json = nullptr;
    if ((st = rcs_config_to_json(cfg.ptr, &json)) != RCS_OK) return fail(st);
    print_and_free(json);
    return 0;
  }

  if (*solve) {
    if ((st = ov.apply(cfg.ptr)) != RCS_OK) return fail(st);
    char* json = nullptr;
    if ((st = rcs_solve(cfg.ptr, &json)) != RCS_OK) return fail(st);
    print_and_free(json);
    return 0;
  }

  if (*simulate) {
    if ((st = ov.apply(cfg.ptr)) != RCS_OK) return fail(st);
    rcs_run* run = nullptr;
    if ((st = rcs_simulate(cfg.ptr, &run)) != RCS_OK) return fail(st);
    if (!out_dir.empty() && (st = rcs_run_write(run, out_dir.c_str())) != RCS_OK) {
      rcs_run_free(run);
      return fail(st);
    }
    char* text = nullptr;
    st = events ? rcs_run_events(run, &text) : rcs_run_bundle_json(run, &text);
    rcs_run_free(run);
    if (st != RCS_OK) return fail(st);
    print_and_free(text);
    return 0;
  }

  if (*batch) {
    rcs_batch* b = nullptr;
    if ((st = rcs_batch_run(cfg.ptr, &b)) != RCS_OK) return fail(st);
    st = rcs_batch_write(b, out_dir.c_str());
    const std::size_t runs = rcs_batch_bundle_count(b);
    const std::size_t failures = rcs_batch_failure_count(b);
    rcs_batch_free(b);
    if (st != RCS_OK) return fail(st);
    std::printf("%zu runs, %zu failed, reports in %s\n", runs, failures, out_dir.c_str());
    return failures == 0 ? 0 : 1;
  }
  return 0;
}

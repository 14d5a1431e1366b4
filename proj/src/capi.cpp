#include "rcs/rcs.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include <json.hpp>

#include "rcs/config.hpp"
#include "rcs/cost.hpp"
#include "rcs/report.hpp"
#include "rcs/sim.hpp"
#include "rcs/solver.hpp"

struct rcs_config {
  rcs::ScenarioConfig config;
};

struct rcs_run {
  rcs::EventLog log;
  rcs::ReportBundle bundle;
};

struct rcs_batch {
  rcs::BatchResult result;
};

namespace {

thread_local std::string g_last_error;

rcs_status status_of(rcs::ErrorKind kind) {
  switch (kind) {
    case rcs::ErrorKind::Validation: return RCS_E_VALIDATION;
    case rcs::ErrorKind::Domain: return RCS_E_DOMAIN;
    case rcs::ErrorKind::Capacity: return RCS_E_CAPACITY;
    case rcs::ErrorKind::Parse: return RCS_E_PARSE;
    case rcs::ErrorKind::Io: return RCS_E_IO;
    case rcs::ErrorKind::Deadlock: return RCS_E_DEADLOCK;
  }
  return RCS_E_INTERNAL;
}

template <class F>
rcs_status guard(F&& body) {
  g_last_error.clear();
  try {
    body();
    return RCS_OK;
  } catch (const rcs::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RCS_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RCS_E_INTERNAL;
  }
}

rcs_status bad_argument(const char* what) {
  g_last_error = what;
  return RCS_E_ARGUMENT;
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* rcs_version(void) { return "1.0.0"; }

const char* rcs_status_name(rcs_status status) {
  switch (status) {
    case RCS_OK: return "ok";
    case RCS_E_VALIDATION: return "validation";
    case RCS_E_DOMAIN: return "domain";
    case RCS_E_CAPACITY: return "capacity";
    case RCS_E_PARSE: return "parse";
    case RCS_E_IO: return "io";
    case RCS_E_DEADLOCK: return "deadlock";
    case RCS_E_ARGUMENT: return "argument";
    case RCS_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* rcs_last_error(void) { return g_last_error.c_str(); }

void rcs_string_free(char* s) { std::free(s); }

rcs_status rcs_config_default(rcs_config** out) {
  if (!out) return bad_argument("out is NULL");
  return guard([&] { *out = new rcs_config{rcs::default_config()}; });
}

rcs_status rcs_config_parse(const char* json, rcs_config** out) {
  if (!json || !out) return bad_argument("json or out is NULL");
  return guard([&] { *out = new rcs_config{rcs::parse_config(json)}; });
}

rcs_status rcs_config_load(const char* path, rcs_config** out) {
  if (!path || !out) return bad_argument("path or out is NULL");
  return guard([&] { *out = new rcs_config{rcs::load_config(path)}; });
}

rcs_status rcs_config_to_json(const rcs_config* config, char** out) {
  if (!config || !out) return bad_argument("config or out is NULL");
  return guard([&] { *out = dup(rcs::serialize_config(config->config)); });
}

rcs_status rcs_config_set_policy(rcs_config* config, const char* policy) {
  if (!config || !policy) return bad_argument("config or policy is NULL");
  return guard([&] { config->config.policy = rcs::parse_policy_kind(policy); });
}

rcs_status rcs_config_set_seed(rcs_config* config, uint64_t seed) {
  if (!config) return bad_argument("config is NULL");
  config->config.seed = seed;
  return RCS_OK;
}

rcs_status rcs_config_set_randomization(rcs_config* config, int percent) {
  if (!config) return bad_argument("config is NULL");
  if (percent < 0 || percent > 100) {
    g_last_error = "randomization must lie in 0..100";
    return RCS_E_VALIDATION;
  }
  config->config.initial_randomization = percent;
  return RCS_OK;
}

rcs_status rcs_config_set_horizon_requests(rcs_config* config, uint64_t requests) {
  if (!config) return bad_argument("config is NULL");
  config->config.horizon_requests = static_cast<std::size_t>(requests);
  config->config.horizon_hours.reset();
  return RCS_OK;
}

rcs_status rcs_config_set_horizon_hours(rcs_config* config, double hours) {
  if (!config) return bad_argument("config is NULL");
  if (!(hours >= 0.0)) {
    g_last_error = "horizon hours must be non-negative";
    return RCS_E_VALIDATION;
  }
  config->config.horizon_hours = hours;
  config->config.horizon_requests.reset();
  return RCS_OK;
}

void rcs_config_free(rcs_config* config) { delete config; }

rcs_status rcs_solve(const rcs_config* config, char** out_json) {
  if (!config || !out_json) return bad_argument("config or out_json is NULL");
  return guard([&] {
    const rcs::Scenario sc = rcs::make_scenario(config->config);
    const bool buffer = sc.policy == rcs::PolicyKind::LayerComplete;
    const rcs::CostTable table(sc.spec.height);
    const auto search = rcs::optimal_empty_level(sc.spec, sc.catalog, table, buffer);
    const auto layout = rcs::solve_layout(sc.spec, sc.catalog, sc.empty_level, buffer);
    nlohmann::ordered_json costs = nlohmann::ordered_json::array();
    for (std::size_t he = 0; he < search.expected_cost.size(); ++he) {
      const auto& v = search.expected_cost[he];
      costs.push_back({{"empty_level", he},
                       {"expected_cost", v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr)}});
    }
    nlohmann::ordered_json doc = {
        {"optimal_empty_level", search.empty_level},
        {"empty_level", layout.spec.empty_level()},
        {"fill_level", layout.spec.fill_level},
        {"bins", layout.catalog.size()},
        {"occupied_stacks", layout.spec.occupied_stacks(layout.catalog.size())},
        {"expected_cost", rcs::expected_cost(layout.bgc, layout.catalog, table)},
        {"candidates", costs},
        {"bgc", layout.bgc.to_matrix()}};
    *out_json = dup(doc.dump(2) + "\n");
  });
}

rcs_status rcs_simulate(const rcs_config* config, rcs_run** out) {
  if (!config || !out) return bad_argument("config or out is NULL");
  return guard([&] {
    auto* r = new rcs_run;
    try {
      r->log = rcs::run(rcs::make_scenario(config->config));
      r->bundle = rcs::make_bundle(r->log, rcs::scenario_key(config->config), config->config.grid.height);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

rcs_status rcs_run_events(const rcs_run* run, char** out_ndjson) {
  if (!run || !out_ndjson) return bad_argument("run or out_ndjson is NULL");
  return guard([&] { *out_ndjson = dup(run->log.to_ndjson()); });
}

rcs_status rcs_run_bundle_json(const rcs_run* run, char** out_json) {
  if (!run || !out_json) return bad_argument("run or out_json is NULL");
  return guard([&] { *out_json = dup(rcs::bundle_to_json(run->bundle)); });
}

rcs_status rcs_run_write(const rcs_run* run, const char* dir) {
  if (!run || !dir) return bad_argument("run or dir is NULL");
  return guard([&] {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw rcs::Error(rcs::ErrorKind::Io, std::string("cannot create '") + dir + "': " + ec.message());
    const fs::path base(dir);
    rcs::write_text_file((base / "events.ndjson").string(), run->log.to_ndjson());
    rcs::write_text_file((base / "bundle.json").string(), rcs::bundle_to_json(run->bundle));
    for (const auto& [name, text] : rcs::bundle_csv(run->bundle)) {
      rcs::write_text_file((base / name).string(), text);
    }
  });
}

void rcs_run_free(rcs_run* run) { delete run; }

rcs_status rcs_batch_run(const rcs_config* config, rcs_batch** out) {
  if (!config || !out) return bad_argument("config or out is NULL");
  return guard([&] { *out = new rcs_batch{rcs::run_batch(config->config)}; });
}

size_t rcs_batch_bundle_count(const rcs_batch* batch) {
  return batch ? batch->result.bundles.size() : 0;
}

size_t rcs_batch_failure_count(const rcs_batch* batch) {
  return batch ? batch->result.failures.size() : 0;
}

rcs_status rcs_batch_aggregate_csv(const rcs_batch* batch, char** out_csv) {
  if (!batch || !out_csv) return bad_argument("batch or out_csv is NULL");
  return guard([&] { *out_csv = dup(rcs::aggregate_csv(batch->result.aggregate)); });
}

rcs_status rcs_batch_write(const rcs_batch* batch, const char* dir) {
  if (!batch || !dir) return bad_argument("batch or dir is NULL");
  return guard([&] { rcs::emit_reports(batch->result, dir); });
}

void rcs_batch_free(rcs_batch* batch) { delete batch; }

rcs_status rcs_compare_dir(const char* dir, const char* reference, char** out_csv) {
  if (!dir || !out_csv) return bad_argument("dir or out_csv is NULL");
  return guard([&] {
    const auto bundles = rcs::load_bundles(dir);
    if (bundles.empty()) {
      throw rcs::Error(rcs::ErrorKind::Validation, std::string("no bundle JSON files in '") + dir + "'");
    }
    const auto cmp = rcs::compare_policies(bundles, reference ? reference : "lcp");
    *out_csv = dup(rcs::comparison_csv(cmp));
  });
}

rcs_status rcs_lut_csv(int height, int max_layer, char** out_csv) {
  if (!out_csv) return bad_argument("out_csv is NULL");
  return guard([&] {
    if (max_layer < 1 || max_layer > 2 * height) {
      throw rcs::Error(rcs::ErrorKind::Domain, "max layer must lie in 1..2*height");
    }
    *out_csv = dup(rcs::cost_table_csv(rcs::CostTable(height), max_layer));
  });
}

rcs_status rcs_retrieval_cost(int layer, int empty_level, int64_t* out) {
  if (!out) return bad_argument("out is NULL");
  return guard([&] {
    const rcs::CostTable table(std::max({1, empty_level + 1, (layer + 1) / 2}));
    *out = rcs::retrieval_cost(layer, empty_level, table);
  });
}

rcs_status rcs_expected_transform_requests(const double* p, size_t n, double* out) {
  if ((!p && n > 0) || !out) return bad_argument("p or out is NULL");
  return guard([&] { *out = rcs::expected_transform_requests(std::span<const double>(p, n)); });
}

}  // extern "C"

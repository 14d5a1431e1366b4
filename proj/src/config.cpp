#include "rcs/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rcs {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

std::vector<double> popularity_weights(const PopularityModel& m, std::size_t count) {
  std::vector<double> w(count, 0.0);
  if (m.model == "zipf") {
    for (std::size_t i = 0; i < count; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), m.s);
  } else if (m.model == "truncated_geometric") {
    for (std::size_t i = 0; i < count; ++i) w[i] = std::pow(m.q, static_cast<double>(i));
  } else if (m.model == "piecewise") {
    const auto n = static_cast<double>(count);
    const auto popular = static_cast<std::size_t>(std::llround(m.popular_fraction * n));
    const auto zero = static_cast<std::size_t>(std::llround(m.zero_tail_fraction * n));
    if (popular == 0 || popular + zero > count) {
      throw Error(ErrorKind::Validation, "piecewise popularity: segments do not fit the bin count");
    }
    const std::size_t middle = count - popular - zero;
    if (middle == 0 && std::abs(m.popular_mass - 1.0) > 1e-12) {
      throw Error(ErrorKind::Validation,
                  "piecewise popularity: no middle segment, so popular_mass must be 1");
    }
    auto segment = [&](std::size_t begin, std::size_t len, double mass) {
      double sum = 0.0;
      for (std::size_t i = 0; i < len; ++i) sum += std::pow(m.decay, static_cast<double>(i));
      for (std::size_t i = 0; i < len; ++i) {
        w[begin + i] = mass * std::pow(m.decay, static_cast<double>(i)) / sum;
      }
    };
    segment(0, popular, middle == 0 ? 1.0 : m.popular_mass);
    segment(popular, middle, 1.0 - m.popular_mass);
  } else if (m.model == "explicit") {
    if (m.weights.size() != count) {
      throw Error(ErrorKind::Validation, "explicit popularity: " + std::to_string(m.weights.size()) +
                                             " weights for " + std::to_string(count) + " bins");
    }
    w = m.weights;
  } else {
    throw Error(ErrorKind::Validation, "unknown popularity model '" + m.model + "'");
  }
  return w;
}

ScenarioConfig default_config() {
  ScenarioConfig c;
  c.grid.rows = 6;
  c.grid.cols = 8;
  c.grid.height = 6;
  c.grid.reserve_fraction = 0.2;
  c.grid.workstations = {{2, 5}, {5, 5}};
  c.grid.buffer_stack = 40;
  c.empty_level = 1;
  c.horizon_hours = 10.0;
  c.batch.policies = {PolicyKind::LayerComplete, PolicyKind::DelayedReshuffle,
                      PolicyKind::ImmediateReshuffle};
  c.batch.randomizations = {0, 40, 100};
  c.batch.seeds = {1};
  return c;
}

namespace {

class Reader {
 public:
  Reader(const json* obj, std::string path, std::vector<std::string>& errors,
         std::set<std::string> allowed)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_) return;
    if (!obj_->is_object()) {
      fail("", "expected an object");
      obj_ = nullptr;
      return;
    }
    for (const auto& [key, value] : obj_->items()) {
      if (!allowed.count(key)) fail(key, "unknown key");
    }
  }

  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }
  const json* child(const std::string& key) const { return has(key) ? &obj_->at(key) : nullptr; }
  std::string at(const std::string& key) const { return path_ + "/" + key; }

  void fail(const std::string& key, const std::string& what) {
    errors_.push_back((key.empty() ? (path_.empty() ? "/" : path_) : at(key)) + ": " + what);
  }

  void number(const std::string& key, double& out, const std::function<bool(double)>& ok,
              const char* requirement) {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_number()) return fail(key, "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d) || (ok && !ok(d))) return fail(key, requirement);
    out = d;
  }

  template <class Int>
  void integer(const std::string& key, Int& out, long long lo, long long hi) {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_number_integer()) return fail(key, "expected an integer");
    if (v->is_number_unsigned()) {
      const auto u = v->get<std::uint64_t>();
      if ((lo > 0 && u < static_cast<std::uint64_t>(lo)) || (hi >= 0 && u > static_cast<std::uint64_t>(hi))) {
        return range(key, lo, hi);
      }
      out = static_cast<Int>(u);
      return;
    }
    const auto i = v->get<long long>();
    if (i < lo || (hi >= 0 && i > hi)) return range(key, lo, hi);
    out = static_cast<Int>(i);
  }

  void seed(const std::string& key, std::uint64_t& out) {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      return fail(key, "expected a non-negative integer");
    }
    out = v->get<std::uint64_t>();
  }

  void string(const std::string& key, std::string& out) {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_string()) return fail(key, "expected a string");
    out = v->get<std::string>();
  }

 private:
  void range(const std::string& key, long long lo, long long hi) {
    fail(key, hi >= 0 ? "must lie in " + std::to_string(lo) + ".." + std::to_string(hi)
                      : "must be at least " + std::to_string(lo));
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>& errors_;
};

bool positive(double v) { return v > 0.0; }

Coord parse_coord(const json& v, const std::string& path, std::vector<std::string>& errors) {
  Coord c;
  Reader r(&v, path, errors, {"x", "y"});
  if (!r.has("x") || !r.has("y")) {
    errors.push_back(path + ": workstation needs x and y");
  }
  r.integer("x", c.x, 0, -1);
  r.integer("y", c.y, 0, -1);
  return c;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c = default_config();
  std::vector<std::string> errors;
  Reader root(&doc, "", errors, {"grid", "bins", "policy", "robots", "orders", "run", "batch"});

  // grid
  {
    Reader g(root.child("grid"), "/grid", errors,
             {"rows", "cols", "height", "reserve_fraction", "cell_length", "cell_width",
              "bin_height", "workstations", "buffer_stack"});
    g.integer("rows", c.grid.rows, 1, 10000);
    g.integer("cols", c.grid.cols, 1, 10000);
    g.integer("height", c.grid.height, 1, 1000);
    g.number("reserve_fraction", c.grid.reserve_fraction, [](double v) { return v >= 0 && v < 1; },
             "must lie in [0, 1)");
    g.number("cell_length", c.grid.cell_length, positive, "must be positive");
    g.number("cell_width", c.grid.cell_width, positive, "must be positive");
    g.number("bin_height", c.grid.bin_height, positive, "must be positive");
    if (const json* ws = g.child("workstations")) {
      if (!ws->is_array() || ws->empty()) {
        errors.push_back("/grid/workstations: expected a non-empty array");
      } else {
        c.grid.workstations.clear();
        for (std::size_t i = 0; i < ws->size(); ++i) {
          c.grid.workstations.push_back(
              parse_coord((*ws)[i], "/grid/workstations/" + std::to_string(i), errors));
        }
      }
    }
    if (const json* b = g.child("buffer_stack")) {
      if (b->is_null()) {
        c.grid.buffer_stack.reset();
      } else {
        StackId s = 0;
        g.integer("buffer_stack", s, 0, -1);
        c.grid.buffer_stack = s;
      }
    }
  }

  // bins
  {
    Reader b(root.child("bins"), "/bins", errors, {"count", "popularity"});
    b.integer("count", c.bin_count, 1, -1);
    Reader p(b.child("popularity"), "/bins/popularity", errors,
             {"model", "s", "q", "popular_fraction", "popular_mass", "zero_tail_fraction", "decay",
              "weights"});
    p.string("model", c.popularity.model);
    const std::string& model = c.popularity.model;
    if (model != "zipf" && model != "truncated_geometric" && model != "piecewise" &&
        model != "explicit") {
      p.fail("model", "must be one of zipf, truncated_geometric, piecewise, explicit");
    }
    p.number("s", c.popularity.s, [](double v) { return v >= 0; }, "must be non-negative");
    p.number("q", c.popularity.q, [](double v) { return v > 0 && v <= 1; }, "must lie in (0, 1]");
    p.number("popular_fraction", c.popularity.popular_fraction,
             [](double v) { return v > 0 && v <= 1; }, "must lie in (0, 1]");
    p.number("popular_mass", c.popularity.popular_mass, [](double v) { return v > 0 && v <= 1; },
             "must lie in (0, 1]");
    p.number("zero_tail_fraction", c.popularity.zero_tail_fraction,
             [](double v) { return v >= 0 && v < 1; }, "must lie in [0, 1)");
    p.number("decay", c.popularity.decay, [](double v) { return v > 0 && v <= 1; },
             "must lie in (0, 1]");
    if (const json* w = p.child("weights")) {
      if (!w->is_array()) {
        p.fail("weights", "expected an array of numbers");
      } else {
        c.popularity.weights.clear();
        for (std::size_t i = 0; i < w->size(); ++i) {
          const json& v = (*w)[i];
          if (!v.is_number() || v.get<double>() < 0 || !std::isfinite(v.get<double>())) {
            errors.push_back("/bins/popularity/weights/" + std::to_string(i) +
                             ": expected a non-negative number");
          } else {
            c.popularity.weights.push_back(v.get<double>());
          }
        }
      }
    }
    if (model == "piecewise" &&
        c.popularity.popular_fraction + c.popularity.zero_tail_fraction > 1.0 + 1e-12) {
      errors.push_back("/bins/popularity: popular_fraction + zero_tail_fraction exceeds 1");
    }
  }

  // policy
  {
    const json* pj = root.child("policy");
    if (!pj || (pj->is_object() && pj->empty())) {
      errors.push_back("/policy: policy required");
    } else {
      Reader p(pj, "/policy", errors, {"kind", "buffer_check_period", "epsilon"});
      if (!p.has("kind")) {
        errors.push_back("/policy/kind: policy required");
      } else {
        std::string kind;
        p.string("kind", kind);
        try {
          c.policy = parse_policy_kind(kind);
        } catch (const Error& e) {
          p.fail("kind", e.what());
        }
      }
      p.number("buffer_check_period", c.check_period, positive, "must be positive");
      p.number("epsilon", c.epsilon, [](double v) { return v > 0 && v <= 1; }, "must lie in (0, 1]");
    }
  }

  // robots
  {
    Reader r(root.child("robots"), "/robots", errors,
             {"count", "top_speed", "acceleration", "lift_speed", "load", "unload", "turn"});
    r.integer("count", c.robots, 1, 100000);
    r.number("top_speed", c.kinematics.top_speed, positive, "must be positive");
    r.number("acceleration", c.kinematics.acceleration, positive, "must be positive");
    r.number("lift_speed", c.kinematics.lift_speed, positive, "must be positive");
    r.number("load", c.kinematics.load, positive, "must be positive");
    r.number("unload", c.kinematics.unload, positive, "must be positive");
    r.number("turn", c.kinematics.turn, positive, "must be positive");
  }

  // orders
  {
    Reader o(root.child("orders"), "/orders", errors, {"rate_per_minute", "processing_time"});
    o.number("rate_per_minute", c.request_rate, positive, "must be positive");
    o.number("processing_time", c.processing_time, [](double v) { return v >= 0; },
             "must be non-negative");
  }

  // run
  {
    Reader r(root.child("run"), "/run", errors,
             {"horizon_hours", "horizon_requests", "seed", "initial_randomization",
              "snapshot_cadence", "empty_level"});
    if (r.has("horizon_hours") && r.has("horizon_requests")) {
      errors.push_back("/run: set only one of horizon_hours and horizon_requests");
    }
    if (r.has("horizon_hours")) {
      double h = 0;
      r.number("horizon_hours", h, [](double v) { return v >= 0; }, "must be non-negative");
      c.horizon_hours = h;
      c.horizon_requests.reset();
    }
    if (r.has("horizon_requests")) {
      std::size_t n = 0;
      r.integer("horizon_requests", n, 0, -1);
      c.horizon_requests = n;
      c.horizon_hours.reset();
    }
    r.seed("seed", c.seed);
    r.integer("initial_randomization", c.initial_randomization, 0, 100);
    r.integer("snapshot_cadence", c.snapshot_cadence, 0, -1);
    if (const json* e = r.child("empty_level")) {
      if (e->is_string() && e->get<std::string>() == "auto") {
        c.empty_level.reset();
      } else if (e->is_number_integer()) {
        int he = 0;
        r.integer("empty_level", he, 0, 100000);
        c.empty_level = he;
      } else {
        r.fail("empty_level", "expected \"auto\" or an integer");
      }
    }
  }

  // batch
  {
    Reader b(root.child("batch"), "/batch", errors, {"policies", "randomizations", "seeds"});
    if (const json* p = b.child("policies")) {
      if (!p->is_array() || p->empty()) {
        b.fail("policies", "expected a non-empty array");
      } else {
        c.batch.policies.clear();
        for (std::size_t i = 0; i < p->size(); ++i) {
          const std::string path = "/batch/policies/" + std::to_string(i);
          if (!(*p)[i].is_string()) {
            errors.push_back(path + ": expected a string");
            continue;
          }
          try {
            c.batch.policies.push_back(parse_policy_kind((*p)[i].get<std::string>()));
          } catch (const Error& e) {
            errors.push_back(path + ": " + e.what());
          }
        }
      }
    }
    if (const json* r = b.child("randomizations")) {
      if (!r->is_array() || r->empty()) {
        b.fail("randomizations", "expected a non-empty array");
      } else {
        c.batch.randomizations.clear();
        for (std::size_t i = 0; i < r->size(); ++i) {
          const json& v = (*r)[i];
          if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 100) {
            errors.push_back("/batch/randomizations/" + std::to_string(i) + ": must lie in 0..100");
          } else {
            c.batch.randomizations.push_back(v.get<int>());
          }
        }
      }
    }
    if (const json* s = b.child("seeds")) {
      if (!s->is_array() || s->empty()) {
        b.fail("seeds", "expected a non-empty array");
      } else {
        c.batch.seeds.clear();
        for (std::size_t i = 0; i < s->size(); ++i) {
          const json& v = (*s)[i];
          if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            errors.push_back("/batch/seeds/" + std::to_string(i) + ": expected a non-negative integer");
          } else {
            c.batch.seeds.push_back(v.get<std::uint64_t>());
          }
        }
      }
    }
  }

  // Cross-field checks, only once the fields themselves are sane.
  if (errors.empty()) {
    if (c.empty_level && *c.empty_level >= c.grid.height) {
      errors.push_back("/run/empty_level: must be below grid height");
    }
    // Baselines ignore the buffer stack, so only LCP runs constrain it.
    bool lcp = c.policy == PolicyKind::LayerComplete;
    for (PolicyKind k : c.batch.policies) lcp = lcp || k == PolicyKind::LayerComplete;
    if (lcp && !c.grid.buffer_stack) {
      errors.push_back("/grid/buffer_stack: policy lcp requires a buffer stack");
    }
    if (c.grid.buffer_stack && static_cast<int>(*c.grid.buffer_stack) >= c.grid.stack_count()) {
      errors.push_back("/grid/buffer_stack: outside the footprint");
    }
    try {
      popularity_weights(c.popularity, c.bin_count);
    } catch (const Error& e) {
      errors.push_back(std::string("/bins/popularity: ") + e.what());
    }
  }
  if (errors.empty()) {
    try {
      const Scenario sc = make_scenario(c);
      const OptimalLayout layout = solve_layout(sc.spec, sc.catalog, sc.empty_level,
                                                sc.policy == PolicyKind::LayerComplete);
      validate_grid_spec(layout.spec, layout.catalog.size());
    } catch (const Error& e) {
      errors.push_back(std::string("/grid: ") + e.what());
    }
  }

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(ErrorKind::Validation, msg);
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& c) {
  ordered ws = ordered::array();
  for (const Coord& w : c.grid.workstations) ws.push_back({{"x", w.x}, {"y", w.y}});
  ordered grid = {{"rows", c.grid.rows},
                  {"cols", c.grid.cols},
                  {"height", c.grid.height},
                  {"reserve_fraction", c.grid.reserve_fraction},
                  {"cell_length", c.grid.cell_length},
                  {"cell_width", c.grid.cell_width},
                  {"bin_height", c.grid.bin_height},
                  {"workstations", ws},
                  {"buffer_stack", c.grid.buffer_stack ? ordered(*c.grid.buffer_stack) : ordered(nullptr)}};
  ordered pop = {{"model", c.popularity.model}};
  if (c.popularity.model == "zipf") pop["s"] = c.popularity.s;
  if (c.popularity.model == "truncated_geometric") pop["q"] = c.popularity.q;
  if (c.popularity.model == "piecewise") {
    pop["popular_fraction"] = c.popularity.popular_fraction;
    pop["popular_mass"] = c.popularity.popular_mass;
    pop["zero_tail_fraction"] = c.popularity.zero_tail_fraction;
    pop["decay"] = c.popularity.decay;
  }
  if (c.popularity.model == "explicit") pop["weights"] = c.popularity.weights;
  ordered run = ordered::object();
  if (c.horizon_requests) {
    run["horizon_requests"] = *c.horizon_requests;
  } else {
    run["horizon_hours"] = c.horizon_hours.value_or(10.0);
  }
  run["seed"] = c.seed;
  run["initial_randomization"] = c.initial_randomization;
  run["snapshot_cadence"] = c.snapshot_cadence;
  run["empty_level"] = c.empty_level ? ordered(*c.empty_level) : ordered("auto");
  ordered policies = ordered::array();
  for (PolicyKind k : c.batch.policies) policies.push_back(to_string(k));
  ordered doc = {
      {"grid", grid},
      {"bins", {{"count", c.bin_count}, {"popularity", pop}}},
      {"policy",
       {{"kind", to_string(c.policy)},
        {"buffer_check_period", c.check_period},
        {"epsilon", c.epsilon}}},
      {"robots",
       {{"count", c.robots},
        {"top_speed", c.kinematics.top_speed},
        {"acceleration", c.kinematics.acceleration},
        {"lift_speed", c.kinematics.lift_speed},
        {"load", c.kinematics.load},
        {"unload", c.kinematics.unload},
        {"turn", c.kinematics.turn}}},
      {"orders", {{"rate_per_minute", c.request_rate}, {"processing_time", c.processing_time}}},
      {"run", run},
      {"batch",
       {{"policies", policies},
        {"randomizations", c.batch.randomizations},
        {"seeds", c.batch.seeds}}}};
  return doc.dump(2) + "\n";
}

Scenario make_scenario(const ScenarioConfig& c, std::optional<PolicyKind> policy,
                       std::optional<int> randomization, std::optional<std::uint64_t> seed) {
  Scenario s;
  s.spec = c.grid;
  s.policy = policy.value_or(c.policy);
  if (s.policy != PolicyKind::LayerComplete) s.spec.buffer_stack.reset();
  const auto weights = popularity_weights(c.popularity, c.bin_count);
  s.catalog = normalize_catalog(weights);
  s.check_period = c.check_period;
  s.epsilon = c.epsilon;
  s.robots = c.robots;
  s.kinematics = c.kinematics;
  s.request_rate = c.request_rate;
  s.processing_time = c.processing_time;
  if (c.horizon_requests) {
    s.horizon.requests = *c.horizon_requests;
  } else {
    s.horizon.seconds = c.horizon_hours.value_or(10.0) * 3600.0;
  }
  s.seed = seed.value_or(c.seed);
  s.initial_randomization = randomization.value_or(c.initial_randomization);
  s.empty_level = c.empty_level;
  s.snapshot_cadence = c.snapshot_cadence;
  return s;
}

}  // namespace rcs

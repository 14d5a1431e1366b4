#pragma once

// Small hand-built and random instances shared by the test suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "rcs/model.hpp"
#include "rcs/solver.hpp"

namespace fixtures {

inline rcs::GridSpec grid(int rows, int cols, int height, int fill) {
  rcs::GridSpec g;
  g.rows = rows;
  g.cols = cols;
  g.height = height;
  g.fill_level = fill;
  return g;
}

/// Optimal layout at h_e = 0 on a rows x cols grid of the given height.
inline rcs::OptimalLayout layout(int rows, int cols, int height, const rcs::BinCatalog& catalog) {
  return rcs::solve_layout(grid(rows, cols, height, height), catalog, 0, false);
}

struct RepeatedPopularity {
  rcs::OptimalLayout optimal;
  rcs::LayerGroups groups;
  rcs::Bgc pictured;  // stack 0 complete, stacks 1 and 2 not
};

/// Three stacks of height three, nine bins: p1 = 0.4, p2 = 0.3, p3 = 0.06 and
/// six bins at 0.04. Bins 1-3 form layer group 1; bins 4-9 may go to group
/// 2 or 3.
inline RepeatedPopularity repeated_popularity() {
  const rcs::BinCatalog c({0.4, 0.3, 0.06, 0.04, 0.04, 0.04, 0.04, 0.04, 0.04});
  RepeatedPopularity r;
  r.optimal = layout(1, 3, 3, c);
  r.groups = rcs::LayerGroups(r.optimal.bgc, r.optimal.catalog);
  r.pictured = rcs::Bgc::from_matrix({{1, 2, 7}, {4, 3, 8}, {5, 6, 9}});
  return r;
}

struct Instance {
  rcs::GridSpec spec;
  rcs::BinCatalog catalog;
  std::vector<std::int64_t> weights;  // integer weights in bin-ID order
  int empty_level = 0;
};

/// Random single-row grid with M * H <= max_cells, a random empty level and
/// integer popularity weights (ties likely).
inline Instance random_instance(std::mt19937_64& rng, int max_cells) {
  Instance inst;
  const int H = std::uniform_int_distribution<int>(1, max_cells)(rng);
  const int M = std::uniform_int_distribution<int>(1, max_cells / H)(rng);
  const int he = std::uniform_int_distribution<int>(0, H - 1)(rng);
  const int hc = H - he;
  const int n = std::uniform_int_distribution<int>(1, M * hc)(rng);
  inst.spec = grid(1, M, H, hc);
  inst.empty_level = he;
  std::uniform_int_distribution<int> w(0, 6);
  for (int i = 0; i < n; ++i) inst.weights.push_back(w(rng));
  std::sort(inst.weights.begin(), inst.weights.end(), std::greater<>());
  if (inst.weights[0] == 0) inst.weights[0] = 1;
  std::vector<double> raw(inst.weights.begin(), inst.weights.end());
  inst.catalog = rcs::normalize_catalog(raw);
  return inst;
}

struct StackSample {
  rcs::LayerGroups groups;
  std::vector<rcs::BinId> bins;
};

/// Layer groups of a random optimal layout (h_c <= 6, popularity ties from a
/// small value set) and a random stack of distinct bins, usually of size h_c.
inline StackSample random_stack(std::mt19937_64& rng) {
  const int hc = std::uniform_int_distribution<int>(1, 6)(rng);
  const int mf = std::uniform_int_distribution<int>(1, 3)(rng);
  const int n = hc * mf;
  std::vector<double> raw(static_cast<std::size_t>(n));
  std::uniform_int_distribution<int> level(1, 3);
  for (double& x : raw) x = level(rng);
  const auto lay = layout(1, mf, hc, rcs::normalize_catalog(raw));
  StackSample s;
  s.groups = rcs::LayerGroups(lay.bgc, lay.catalog);
  std::vector<rcs::BinId> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = static_cast<rcs::BinId>(i + 1);
  std::shuffle(ids.begin(), ids.end(), rng);
  int size = hc;
  if (std::uniform_int_distribution<int>(0, 4)(rng) == 0) size = std::uniform_int_distribution<int>(0, std::min(n, 6))(rng);
  ids.resize(static_cast<std::size_t>(std::min(size, n)));
  s.bins = std::move(ids);
  return s;
}

}  // namespace fixtures

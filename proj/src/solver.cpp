#include "rcs/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

namespace rcs {

Bgc build_optimal_bgc(const GridSpec& spec, const BinCatalog& padded, int empty_level) {
  const int H = spec.height;
  if (empty_level < 0 || empty_level >= H) {
    throw Error(ErrorKind::Domain, "optimal bgc: empty level outside 0..H-1");
  }
  const auto fill = static_cast<std::size_t>(H - empty_level);
  const std::size_t n = padded.size();
  if (n == 0 || n % fill != 0) {
    throw Error(ErrorKind::Validation, "optimal bgc: bin count " + std::to_string(n) +
                                           " is not a multiple of fill level " +
                                           std::to_string(fill));
  }
  const std::size_t mf = n / fill;
  if (mf > static_cast<std::size_t>(spec.stack_count())) {
    throw Error(ErrorKind::Capacity, "optimal bgc: " + std::to_string(mf) +
                                         " occupied stacks needed, grid has " +
                                         std::to_string(spec.stack_count()));
  }
  Bgc bgc(H, spec.stack_count());
  for (std::size_t s = 0; s < mf; ++s) {
    for (int l = H; l > empty_level; --l) {
      const auto rank = static_cast<std::size_t>(l - empty_level - 1);
      bgc.push(static_cast<StackId>(s), static_cast<BinId>(rank * mf + s + 1));
    }
  }
  return bgc;
}

EmptyLevelSearch optimal_empty_level(const GridSpec& spec, const BinCatalog& catalog,
                                     const CostTable& table, bool reserve_buffer) {
  EmptyLevelSearch out;
  const int max_he = spec.height - std::max(1, spec.min_fill_level());
  std::optional<double> best;
  for (int he = 0; he <= max_he; ++he) {
    GridSpec level = spec;
    level.fill_level = spec.height - he;
    const BinCatalog padded = pad_with_empty_bins(level.fill_level, catalog);
    const int mf = level.occupied_stacks(padded.size());
    if (mf + (reserve_buffer ? 1 : 0) > spec.stack_count()) {
      out.expected_cost.push_back(std::nullopt);
      continue;
    }
    const double e = expected_cost(build_optimal_bgc(level, padded, he), padded, table);
    out.expected_cost.push_back(e);
    // Strictly better by more than rounding noise; otherwise keep the smaller h_e.
    if (!best || e < *best - 1e-12 * std::max(1.0, std::abs(*best))) {
      best = e;
      out.empty_level = he;
    }
  }
  if (!best) {
    throw Error(ErrorKind::Capacity, "no empty level fits " + std::to_string(catalog.size()) +
                                         " bins into " + std::to_string(spec.stack_count()) +
                                         " stacks");
  }
  return out;
}

OptimalLayout solve_layout(GridSpec spec, const BinCatalog& catalog,
                           std::optional<int> forced_empty_level, bool reserve_buffer) {
  const CostTable table(spec.height);
  OptimalLayout out;
  if (forced_empty_level) {
    out.search.empty_level = *forced_empty_level;
  } else {
    out.search = optimal_empty_level(spec, catalog, table, reserve_buffer);
  }
  const int he = out.search.empty_level;
  if (he < 0 || he >= spec.height) throw Error(ErrorKind::Validation, "empty level outside 0..H-1");
  spec.fill_level = spec.height - he;
  out.catalog = pad_with_empty_bins(spec.fill_level, catalog);
  out.bgc = build_optimal_bgc(spec, out.catalog, he);
  out.spec = std::move(spec);
  return out;
}

LayerGroups::LayerGroups(const Bgc& optimal, const BinCatalog& catalog) {
  const std::size_t n = catalog.size();
  group_.assign(n + 1, 0);
  class_.assign(n + 1, -1);
  int top = optimal.height() + 1;
  int bottom = 0;
  for (int m = 0; m < optimal.stack_count(); ++m) {
    const auto st = optimal.stack(static_cast<StackId>(m));
    if (st.empty()) continue;
    if (optimal.temporary_occupied(static_cast<StackId>(m))) {
      throw Error(ErrorKind::Validation, "layer groups: temporary cell in use");
    }
    occupied_.push_back(static_cast<StackId>(m));
    top = std::min(top, optimal.height() - static_cast<int>(st.size()) + 1);
    bottom = std::max(bottom, optimal.height());
  }
  if (occupied_.empty()) throw Error(ErrorKind::Validation, "layer groups: empty configuration");
  empty_level_ = top - 1;
  groups_ = bottom - empty_level_;
  per_group_ = occupied_.size();
  members_.assign(static_cast<std::size_t>(groups_), {});
  for (StackId m : occupied_) {
    if (optimal.fill_level(m) != groups_) {
      throw Error(ErrorKind::Validation, "layer groups: occupied stacks differ in fill level");
    }
    for (int l = empty_level_ + 1; l <= optimal.height(); ++l) {
      const BinId b = optimal.cell(l, m);
      if (b > n) throw Error(ErrorKind::Validation, "layer groups: bin outside catalog");
      group_[b] = l - empty_level_;
      members_[static_cast<std::size_t>(l - empty_level_ - 1)].push_back(b);
    }
  }
  for (auto& g : members_) std::sort(g.begin(), g.end());

  // Equality classes: bins sharing an exact popularity value.
  std::map<double, int> class_of_value;
  for (BinId b = 1; b <= n; ++b) {
    if (group_[b] == 0) continue;
    const auto [it, inserted] =
        class_of_value.try_emplace(catalog.popularity(b), static_cast<int>(class_groups_.size()));
    if (inserted) class_groups_.emplace_back();
    class_[b] = it->second;
    class_groups_[static_cast<std::size_t>(it->second)].push_back(group_[b]);
  }
  for (auto& g : class_groups_) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }
}

std::span<const int> LayerGroups::candidates(BinId bin) const {
  if (bin >= class_.size() || class_[bin] < 0) return {};
  return class_groups_[static_cast<std::size_t>(class_[bin])];
}

LayerGroups assign_layer_groups(const Bgc& optimal, const BinCatalog& catalog) {
  return LayerGroups(optimal, catalog);
}

namespace {

bool augment(std::size_t bin, std::span<const BinId> bins, const LayerGroups& groups, int limit,
             std::vector<int>& owner, std::vector<char>& visited) {
  for (int g : groups.candidates(bins[bin])) {
    if (g > limit) break;
    if (visited[static_cast<std::size_t>(g)]) continue;
    visited[static_cast<std::size_t>(g)] = 1;
    const int holder = owner[static_cast<std::size_t>(g)];
    if (holder < 0 || augment(static_cast<std::size_t>(holder), bins, groups, limit, owner, visited)) {
      owner[static_cast<std::size_t>(g)] = static_cast<int>(bin);
      return true;
    }
  }
  return false;
}

}  // namespace

int classified_groups(std::span<const BinId> bins, const LayerGroups& groups, int group_limit,
                      std::vector<int>* assignment) {
  const int limit = group_limit > 0 ? std::min(group_limit, groups.group_count())
                                    : groups.group_count();
  std::vector<int> owner(static_cast<std::size_t>(limit) + 1, -1);
  std::vector<char> visited(static_cast<std::size_t>(limit) + 1);
  int matched = 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    std::fill(visited.begin(), visited.end(), 0);
    if (augment(i, bins, groups, limit, owner, visited)) ++matched;
    if (matched == limit) break;
  }
  if (assignment) {
    assignment->assign(bins.size(), 0);
    for (int g = 1; g <= limit; ++g) {
      const int holder = owner[static_cast<std::size_t>(g)];
      if (holder >= 0) (*assignment)[static_cast<std::size_t>(holder)] = g;
    }
  }
  return matched;
}

bool is_layer_complete(std::span<const BinId> stack_bins, const LayerGroups& groups) {
  if (static_cast<int>(stack_bins.size()) != groups.group_count()) return false;
  return classified_groups(stack_bins, groups) == groups.group_count();
}

bool is_equivalent_optimal(const Bgc& bgc, const LayerGroups& groups) {
  return std::all_of(groups.occupied_stacks().begin(), groups.occupied_stacks().end(),
                     [&](StackId m) { return is_layer_complete(bgc.stack(m), groups); });
}

int popular_group_count(const LayerGroups& groups, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorKind::Domain, "epsilon must lie in (0, 1]");
  }
  const int k = static_cast<int>(std::ceil(groups.group_count() * epsilon - 1e-9));
  return std::clamp(k, 1, groups.group_count());
}

bool is_quasi_equivalent_optimal(const Bgc& bgc, const LayerGroups& groups, double epsilon) {
  const int k = popular_group_count(groups, epsilon);
  return std::all_of(groups.occupied_stacks().begin(), groups.occupied_stacks().end(),
                     [&](StackId m) { return classified_groups(bgc.stack(m), groups, k) == k; });
}

int stack_distance(const StackMultiset& a, const StackMultiset& b) {
  StackMultiset sa = a;
  StackMultiset sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  StackMultiset diff;
  std::set_symmetric_difference(sa.begin(), sa.end(), sb.begin(), sb.end(),
                                std::back_inserter(diff));
  return static_cast<int>(diff.size());
}

StackMultiset stack_labels(std::span<const BinId> stack_bins, const LayerGroups& groups) {
  std::vector<int> assignment;
  classified_groups(stack_bins, groups, 0, &assignment);
  StackMultiset labels;
  labels.reserve(stack_bins.size());
  for (std::size_t i = 0; i < stack_bins.size(); ++i) {
    labels.push_back(assignment[i] > 0 ? assignment[i] : groups.group_of(stack_bins[i]));
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

int stack_distance_to_complete(std::span<const BinId> stack_bins, const LayerGroups& groups) {
  // Unmatched bins always carry a group that is already covered, so the
  // symmetric difference against {1..h_c} is n + h_c - 2k.
  const int k = classified_groups(stack_bins, groups);
  return static_cast<int>(stack_bins.size()) + groups.group_count() - 2 * k;
}

long distance_to_equivalent_optimal(const Bgc& bgc, const LayerGroups& groups) {
  long total = 0;
  for (StackId m : groups.occupied_stacks()) total += stack_distance_to_complete(bgc.stack(m), groups);
  return total;
}

double expected_transform_requests(std::span<const double> out_of_place_p) {
  if (out_of_place_p.size() > 20) {
    throw Error(ErrorKind::Domain, "coupon collector: more than 20 out-of-place bins");
  }
  double sum = 0.0;
  for (double p : out_of_place_p) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorKind::Validation, "coupon collector: negative or non-finite probability");
    }
    sum += p;
  }
  if (sum > 1.0 + 1e-12) throw Error(ErrorKind::Validation, "coupon collector: probabilities exceed 1");
  if (out_of_place_p.empty()) return 0.0;
  if (std::any_of(out_of_place_p.begin(), out_of_place_p.end(), [](double p) { return p == 0.0; })) {
    return std::numeric_limits<double>::infinity();
  }

  // Setup 1 adds the in-place remainder as one more coupon; Setup 2 does not.
  std::vector<double> coupons(out_of_place_p.begin(), out_of_place_p.end());
  if (1.0 - sum > 1e-12) coupons.push_back(1.0 - sum);

  const std::size_t n = coupons.size();
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  std::vector<double> mass(std::size_t{1} << n, 0.0);
  long double total = 0.0L;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    if (mask != 0) {
      const auto low = static_cast<std::size_t>(std::countr_zero(mask));
      mass[mask] = mass[mask & (mask - 1)] + coupons[low];
    }
    const auto q = static_cast<std::size_t>(std::popcount(mask));
    const long double term = 1.0L / (1.0L - static_cast<long double>(mass[mask]));
    total += ((n - 1 - q) % 2 == 0) ? term : -term;
  }
  return static_cast<double>(total);
}

}  // namespace rcs

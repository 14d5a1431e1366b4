#pragma once

// Optimal configurations, layer groups, layer-completeness and distances.

#include <optional>
#include <span>
#include <vector>

#include "rcs/cost.hpp"
#include "rcs/model.hpp"

namespace rcs {

/// Optimal configuration at a given empty level: layer h_e+1 holds bins
/// 1..m_f, layer h_e+2 the next m_f bins and so on; within a layer bins go to
/// stacks 0, 1, ... in ascending ID. `padded` must have h_c | N.
Bgc build_optimal_bgc(const GridSpec& spec, const BinCatalog& padded, int empty_level);

struct EmptyLevelSearch {
  int empty_level = 0;
  /// Expected single-request cost per candidate h_e; nullopt when the
  /// candidate does not fit the grid.
  std::vector<std::optional<double>> expected_cost;
};

/// Evaluates every candidate h_e in 0..H-floor(H(1-tau)) (re-padding the
/// catalog at each fill level) and returns the cheapest; ties go to the
/// smaller h_e. `reserve_buffer` keeps one stack free for a buffer.
EmptyLevelSearch optimal_empty_level(const GridSpec& spec, const BinCatalog& catalog,
                                     const CostTable& table, bool reserve_buffer = false);

/// Everything needed to start from an optimal configuration.
struct OptimalLayout {
  GridSpec spec;        // fill_level set to the chosen h_c
  BinCatalog catalog;   // padded
  Bgc bgc;
  EmptyLevelSearch search;
};

/// Picks the empty level (or uses `forced_empty_level`), pads the catalog and
/// builds the optimal configuration.
OptimalLayout solve_layout(GridSpec spec, const BinCatalog& catalog,
                           std::optional<int> forced_empty_level, bool reserve_buffer);

/// Bin-to-layer-group map derived from an optimal configuration, plus the
/// classes of bins with identical popularity. A bin may be classified into
/// any group that contains a bin of its popularity class.
class LayerGroups {
 public:
  LayerGroups() = default;
  LayerGroups(const Bgc& optimal, const BinCatalog& catalog);

  int group_count() const noexcept { return groups_; }
  int empty_level() const noexcept { return empty_level_; }
  std::size_t bins_per_group() const noexcept { return per_group_; }

  /// Group of the bin in the optimal configuration (1-based), 0 if unknown.
  int group_of(BinId bin) const noexcept {
    return bin < group_.size() ? group_[bin] : 0;
  }
  /// Groups the bin may be classified into, ascending.
  std::span<const int> candidates(BinId bin) const;
  int equality_class(BinId bin) const { return class_.at(bin); }
  std::span<const BinId> members(int group) const { return members_.at(group - 1); }
  std::span<const StackId> occupied_stacks() const noexcept { return occupied_; }

 private:
  int groups_ = 0;
  int empty_level_ = 0;
  std::size_t per_group_ = 0;
  std::vector<int> group_;  // indexed by bin ID
  std::vector<int> class_;  // indexed by bin ID
  std::vector<std::vector<int>> class_groups_;
  std::vector<std::vector<BinId>> members_;
  std::vector<StackId> occupied_;
};

LayerGroups assign_layer_groups(const Bgc& optimal, const BinCatalog& catalog);

/// Largest number of distinct groups among 1..group_limit (0 = all) that the
/// bins can be classified into, one group per bin. When `assignment` is given
/// it receives the chosen group per bin (0 = unmatched).
int classified_groups(std::span<const BinId> bins, const LayerGroups& groups, int group_limit = 0,
                      std::vector<int>* assignment = nullptr);

/// A stack is layer-complete when its bins classify one-to-one onto all
/// groups.
bool is_layer_complete(std::span<const BinId> stack_bins, const LayerGroups& groups);

/// Every stack that was occupied in the optimal configuration is
/// layer-complete (buffer and unused stacks are ignored).
bool is_equivalent_optimal(const Bgc& bgc, const LayerGroups& groups);

/// Number of leading groups ceil(h_c * epsilon) that a quasi-equivalent
/// configuration must cover in every occupied stack.
int popular_group_count(const LayerGroups& groups, double epsilon);

bool is_quasi_equivalent_optimal(const Bgc& bgc, const LayerGroups& groups, double epsilon);

/// Multiset of layer-group labels, kept sorted.
using StackMultiset = std::vector<int>;

int stack_distance(const StackMultiset& a, const StackMultiset& b);

/// Labels of a stack under the best classification: matched bins take their
/// matched group, the rest their own group.
StackMultiset stack_labels(std::span<const BinId> stack_bins, const LayerGroups& groups);

/// Distance of one stack to the layer-complete multiset {1..h_c}.
int stack_distance_to_complete(std::span<const BinId> stack_bins, const LayerGroups& groups);

/// Sum of stack_distance_to_complete over the occupied stacks.
long distance_to_equivalent_optimal(const Bgc& bgc, const LayerGroups& groups);

/// Expected number of requests until every out-of-place bin has been
/// requested at least once (coupon collector with unequal probabilities).
/// When the entries sum below 1 the remainder is an extra coupon. Returns
/// +infinity if any entry is 0. Throws for more than 20 entries or negative
/// entries.
double expected_transform_requests(std::span<const double> out_of_place_p);

}  // namespace rcs

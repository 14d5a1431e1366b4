#pragma once

// Grid, bin and configuration data model.
//
// Conventions used throughout the library:
//  * Bin IDs are 1-based; 0 marks an empty cell.
//  * Stack IDs are 0-based and row-major over the footprint.
//  * Layers are 1-based from the top of the grid (layer 1 is the top cell,
//    layer H the bottom cell). Layer 0 is the temporary cell above a stack.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcs {

using BinId = std::uint32_t;
using StackId = std::uint32_t;

inline constexpr BinId kEmptyCell = 0;

/// Bins with normalized popularity, indexed so that a smaller ID is at least
/// as popular as a larger one.
class BinCatalog {
 public:
  BinCatalog() = default;
  explicit BinCatalog(std::vector<double> popularity, std::vector<std::size_t> source_index = {});

  std::size_t size() const noexcept { return popularity_.size(); }
  double popularity(BinId bin) const { return popularity_.at(bin - 1); }
  std::span<const double> popularities() const noexcept { return popularity_; }

  /// Position of the bin in the raw weight vector it was normalized from;
  /// padding bins report npos.
  std::size_t source_index(BinId bin) const { return source_index_.at(bin - 1); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const BinCatalog&, const BinCatalog&) = default;

 private:
  std::vector<double> popularity_;
  std::vector<std::size_t> source_index_;
};

/// Divides by the sum and re-indexes bins in non-increasing popularity order
/// (stable: ties keep their input order).
BinCatalog normalize_catalog(std::span<const double> raw_weights);

/// Appends zero-popularity bins until the bin count is a multiple of
/// fill_level.
BinCatalog pad_with_empty_bins(int fill_level, const BinCatalog& catalog);

struct Coord {
  int x = 0;  // column
  int y = 0;  // row
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

int manhattan(Coord a, Coord b) noexcept;

/// Static description of the storage grid.
struct GridSpec {
  int rows = 6;
  int cols = 8;
  int height = 6;                // H
  double reserve_fraction = 0.0; // tau
  int fill_level = 6;            // h_c
  double cell_length = 0.65;     // metres along x
  double cell_width = 0.45;      // metres along y
  double bin_height = 0.33;      // metres
  std::vector<Coord> workstations;
  std::optional<StackId> buffer_stack;

  int stack_count() const noexcept { return rows * cols; }
  int empty_level() const noexcept { return height - fill_level; }
  /// H(1 - tau) rounded down.
  int min_fill_level() const noexcept;
  /// ceil(bins / fill_level).
  int occupied_stacks(std::size_t bins) const noexcept;

  Coord coord(StackId stack) const noexcept;
  StackId stack_at(Coord c) const noexcept;
  bool contains(Coord c) const noexcept;
  bool on_perimeter(Coord c) const noexcept;
};

/// Throws Error(Validation) listing every broken GridSpec invariant for a grid
/// that stores `bins` bins (already padded).
void validate_grid_spec(const GridSpec& spec, std::size_t bins);

/// Dense H x M view of a configuration: rows are layers 1..H top-down,
/// columns are stacks.
using Matrix = std::vector<std::vector<BinId>>;

/// Bin grid configuration. Each stack is stored bottom-up, so gravity holds by
/// construction. A stack may hold H + 1 bins while digging; the extra bin sits
/// in the temporary cell and is not part of the H x M matrix.
class Bgc {
 public:
  Bgc() = default;
  Bgc(int height, int stacks);

  /// Throws Error(Validation) on a floating bin, duplicate ID or bad shape.
  static Bgc from_matrix(const Matrix& cells);
  Matrix to_matrix() const;

  int height() const noexcept { return height_; }
  int stack_count() const noexcept { return static_cast<int>(stacks_.size()); }

  /// Bottom-up contents of a stack, temporary cell included.
  std::span<const BinId> stack(StackId m) const { return stacks_.at(m); }
  /// Bins in normal cells (the temporary cell is not counted).
  int fill_level(StackId m) const;
  int empty_cells(StackId m) const { return height_ - fill_level(m); }
  bool temporary_occupied(StackId m) const;

  /// 0 for an empty cell; layer 0 addresses the temporary cell.
  BinId cell(int layer, StackId m) const;
  /// Layer occupied by the bin at bottom-up index `index` of a stack.
  int layer_at(std::size_t index) const noexcept { return height_ - static_cast<int>(index); }
  /// Layer at which the next pushed bin would land.
  int next_layer(StackId m) const { return height_ - static_cast<int>(stacks_.at(m).size()); }

  std::optional<StackId> stack_of(BinId bin) const;
  /// Layer of a bin, or nullopt when it is not in the grid.
  std::optional<int> layer_of(BinId bin) const;
  std::size_t bin_count() const noexcept { return bins_; }

  void push(StackId m, BinId bin);
  BinId pop(StackId m);
  /// Removes a bin from anywhere in its stack; bins above it drop one cell.
  void remove(BinId bin);

  friend bool operator==(const Bgc& a, const Bgc& b) {
    return a.height_ == b.height_ && a.stacks_ == b.stacks_;
  }

 private:
  int height_ = 0;
  std::vector<std::vector<BinId>> stacks_;
  std::vector<StackId> where_;  // indexed by bin ID; kNowhere when absent
  std::size_t bins_ = 0;

  static constexpr StackId kNowhere = static_cast<StackId>(-1);
};

std::vector<int> fill_levels(const Bgc& bgc);

/// Smallest layer holding a bin in a stack, or nullopt for an empty stack.
std::optional<int> surface_layer(const Bgc& bgc, StackId m);

struct Violation {
  std::string kind;  // "shape", "unknown ID", "duplicate ID", "missing ID", ...
  int layer = 0;
  int stack = -1;
  BinId bin = kEmptyCell;
  std::string message;
};

/// Checks the block form of an initial configuration: the first m_f stacks
/// filled in layers h_e+1..H with every ID of 1..N exactly once, all other
/// cells empty. Returns every violation found.
std::vector<Violation> validate_initial_bgc(const GridSpec& spec, std::size_t bin_count,
                                            const Matrix& cells);

}  // namespace rcs

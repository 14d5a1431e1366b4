#include "rcs/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rcs/error.hpp"

namespace rcs {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    case ErrorKind::Deadlock: return "deadlock";
  }
  return "unknown";
}

BinCatalog::BinCatalog(std::vector<double> popularity, std::vector<std::size_t> source_index)
    : popularity_(std::move(popularity)), source_index_(std::move(source_index)) {
  if (source_index_.empty()) {
    source_index_.resize(popularity_.size());
    std::iota(source_index_.begin(), source_index_.end(), std::size_t{0});
  }
  if (source_index_.size() != popularity_.size()) {
    throw Error(ErrorKind::Validation, "catalog: source index size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < popularity_.size(); ++i) {
    const double p = popularity_[i];
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorKind::Validation, "catalog: popularity of bin " + std::to_string(i + 1) +
                                             " is negative or not finite");
    }
    if (i > 0 && p > popularity_[i - 1]) {
      throw Error(ErrorKind::Validation, "catalog: bin " + std::to_string(i + 1) +
                                             " is more popular than bin " + std::to_string(i));
    }
    sum += p;
  }
  if (!popularity_.empty() && std::abs(sum - 1.0) > 1e-12) {
    throw Error(ErrorKind::Validation, "catalog: popularities do not sum to 1");
  }
}

BinCatalog normalize_catalog(std::span<const double> raw_weights) {
  if (raw_weights.empty()) throw Error(ErrorKind::Validation, "catalog: no bins");
  double total = 0.0;
  for (std::size_t i = 0; i < raw_weights.size(); ++i) {
    const double w = raw_weights[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorKind::Validation,
                  "catalog: weight " + std::to_string(i) + " is negative or not finite");
    }
    total += w;
  }
  if (total <= 0.0) throw Error(ErrorKind::Validation, "catalog: all weights are zero");

  std::vector<std::size_t> order(raw_weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw_weights[a] > raw_weights[b]; });

  std::vector<double> p(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) p[i] = raw_weights[order[i]] / total;

  return BinCatalog(std::move(p), std::move(order));
}

BinCatalog pad_with_empty_bins(int fill_level, const BinCatalog& catalog) {
  if (fill_level < 1) throw Error(ErrorKind::Domain, "pad: fill level must be positive");
  const std::size_t n = catalog.size();
  const std::size_t hc = static_cast<std::size_t>(fill_level);
  const std::size_t padded = (n + hc - 1) / hc * hc;
  if (padded == n) return catalog;
  std::vector<double> p(catalog.popularities().begin(), catalog.popularities().end());
  std::vector<std::size_t> src;
  src.reserve(padded);
  for (BinId b = 1; b <= n; ++b) src.push_back(catalog.source_index(b));
  p.resize(padded, 0.0);
  src.resize(padded, BinCatalog::npos);
  return BinCatalog(std::move(p), std::move(src));
}

int manhattan(Coord a, Coord b) noexcept { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

int GridSpec::min_fill_level() const noexcept {
  return static_cast<int>(std::floor(height * (1.0 - reserve_fraction) + 1e-9));
}

int GridSpec::occupied_stacks(std::size_t bins) const noexcept {
  if (fill_level <= 0) return 0;
  return static_cast<int>((bins + fill_level - 1) / fill_level);
}

Coord GridSpec::coord(StackId stack) const noexcept {
  return Coord{static_cast<int>(stack) % cols, static_cast<int>(stack) / cols};
}

StackId GridSpec::stack_at(Coord c) const noexcept {
  return static_cast<StackId>(c.y * cols + c.x);
}

bool GridSpec::contains(Coord c) const noexcept {
  return c.x >= 0 && c.y >= 0 && c.x < cols && c.y < rows;
}

bool GridSpec::on_perimeter(Coord c) const noexcept {
  return contains(c) && (c.x == 0 || c.y == 0 || c.x == cols - 1 || c.y == rows - 1);
}

void validate_grid_spec(const GridSpec& spec, std::size_t bins) {
  std::vector<std::string> problems;
  if (spec.rows < 1 || spec.cols < 1) problems.push_back("footprint must be at least 1x1");
  if (spec.height < 1) problems.push_back("height must be at least 1");
  if (!(spec.reserve_fraction >= 0.0 && spec.reserve_fraction < 1.0)) {
    problems.push_back("reserve fraction must lie in [0, 1)");
  }
  if (spec.fill_level < std::max(1, spec.min_fill_level()) || spec.fill_level > spec.height) {
    problems.push_back("fill level " + std::to_string(spec.fill_level) + " outside [" +
                       std::to_string(spec.min_fill_level()) + ", " + std::to_string(spec.height) +
                       "]");
  }
  if (!(spec.cell_length > 0 && spec.cell_width > 0 && spec.bin_height > 0)) {
    problems.push_back("cell dimensions must be positive");
  }
  const int mf = spec.occupied_stacks(bins);
  const int spare = spec.buffer_stack ? 1 : 0;
  if (problems.empty() && mf + spare > spec.stack_count()) {
    problems.push_back(std::to_string(mf) + " occupied stacks" + (spare ? " plus a buffer" : "") +
                       " exceed " + std::to_string(spec.stack_count()) + " stacks");
  }
  if (spec.buffer_stack) {
    const auto b = static_cast<int>(*spec.buffer_stack);
    if (b < mf || b >= spec.stack_count()) {
      problems.push_back("buffer stack " + std::to_string(b) + " must be an unoccupied stack");
    }
  }
  for (std::size_t i = 0; i < spec.workstations.size(); ++i) {
    const Coord c = spec.workstations[i];
    const std::string name = "workstation " + std::to_string(i) + " (" + std::to_string(c.x) +
                             "," + std::to_string(c.y) + ")";
    if (!spec.on_perimeter(c)) {
      problems.push_back(name + " is not on the footprint perimeter");
      continue;
    }
    const auto s = static_cast<int>(spec.stack_at(c));
    if (s < mf) problems.push_back(name + " sits on an occupied stack");
    if (spec.buffer_stack && static_cast<int>(*spec.buffer_stack) == s) {
      problems.push_back(name + " sits on the buffer stack");
    }
  }
  if (spec.workstations.empty()) problems.push_back("at least one workstation is required");
  if (!problems.empty()) {
    std::ostringstream os;
    os << "grid spec invalid:";
    for (const auto& p : problems) os << "\n  - " << p;
    throw Error(ErrorKind::Validation, os.str());
  }
}

Bgc::Bgc(int height, int stacks) : height_(height), stacks_(static_cast<std::size_t>(stacks)) {
  if (height < 1 || stacks < 1) throw Error(ErrorKind::Validation, "bgc: empty shape");
}

Bgc Bgc::from_matrix(const Matrix& cells) {
  if (cells.empty() || cells.front().empty()) throw Error(ErrorKind::Validation, "bgc: empty matrix");
  const int h = static_cast<int>(cells.size());
  const int m = static_cast<int>(cells.front().size());
  Bgc out(h, m);
  for (const auto& row : cells) {
    if (static_cast<int>(row.size()) != m) throw Error(ErrorKind::Validation, "bgc: ragged matrix");
  }
  for (int s = 0; s < m; ++s) {
    bool seen_bin = false;
    for (int l = 1; l <= h; ++l) {
      const BinId b = cells[l - 1][s];
      if (b != kEmptyCell) {
        seen_bin = true;
      } else if (seen_bin) {
        throw Error(ErrorKind::Validation, "bgc: empty cell below a bin in stack " +
                                               std::to_string(s) + " layer " + std::to_string(l));
      }
    }
    for (int l = h; l >= 1; --l) {
      const BinId b = cells[l - 1][s];
      if (b == kEmptyCell) break;
      if (out.stack_of(b)) {
        throw Error(ErrorKind::Validation, "bgc: duplicate bin " + std::to_string(b));
      }
      out.push(static_cast<StackId>(s), b);
    }
  }
  return out;
}

Matrix Bgc::to_matrix() const {
  Matrix cells(static_cast<std::size_t>(height_), std::vector<BinId>(stacks_.size(), kEmptyCell));
  for (std::size_t s = 0; s < stacks_.size(); ++s) {
    const auto& st = stacks_[s];
    for (std::size_t i = 0; i < st.size() && static_cast<int>(i) < height_; ++i) {
      cells[static_cast<std::size_t>(height_) - 1 - i][s] = st[i];
    }
  }
  return cells;
}

int Bgc::fill_level(StackId m) const {
  return std::min(static_cast<int>(stacks_.at(m).size()), height_);
}

bool Bgc::temporary_occupied(StackId m) const {
  return static_cast<int>(stacks_.at(m).size()) > height_;
}

BinId Bgc::cell(int layer, StackId m) const {
  const auto& st = stacks_.at(m);
  const int index = height_ - layer;
  if (layer < 0 || index < 0 || index >= static_cast<int>(st.size())) return kEmptyCell;
  return st[static_cast<std::size_t>(index)];
}

std::optional<StackId> Bgc::stack_of(BinId bin) const {
  if (bin == kEmptyCell || bin >= where_.size() || where_[bin] == kNowhere) return std::nullopt;
  return where_[bin];
}

std::optional<int> Bgc::layer_of(BinId bin) const {
  const auto s = stack_of(bin);
  if (!s) return std::nullopt;
  const auto& st = stacks_[*s];
  const auto it = std::find(st.begin(), st.end(), bin);
  return layer_at(static_cast<std::size_t>(it - st.begin()));
}

void Bgc::push(StackId m, BinId bin) {
  auto& st = stacks_.at(m);
  if (bin == kEmptyCell) throw Error(ErrorKind::Domain, "bgc: cannot push the empty ID");
  if (static_cast<int>(st.size()) > height_) {
    throw Error(ErrorKind::Capacity, "bgc: stack " + std::to_string(m) + " is full");
  }
  if (bin >= where_.size()) where_.resize(bin + 1, kNowhere);
  if (where_[bin] != kNowhere) {
    throw Error(ErrorKind::Validation, "bgc: bin " + std::to_string(bin) + " is already stored");
  }
  st.push_back(bin);
  where_[bin] = m;
  ++bins_;
}

BinId Bgc::pop(StackId m) {
  auto& st = stacks_.at(m);
  if (st.empty()) throw Error(ErrorKind::Domain, "bgc: pop from empty stack " + std::to_string(m));
  const BinId b = st.back();
  st.pop_back();
  where_[b] = kNowhere;
  --bins_;
  return b;
}

void Bgc::remove(BinId bin) {
  const auto s = stack_of(bin);
  if (!s) throw Error(ErrorKind::Domain, "bgc: bin " + std::to_string(bin) + " is not stored");
  auto& st = stacks_[*s];
  st.erase(std::find(st.begin(), st.end(), bin));
  where_[bin] = kNowhere;
  --bins_;
}

std::vector<int> fill_levels(const Bgc& bgc) {
  std::vector<int> h(static_cast<std::size_t>(bgc.stack_count()));
  for (int m = 0; m < bgc.stack_count(); ++m) h[m] = bgc.fill_level(static_cast<StackId>(m));
  return h;
}

std::optional<int> surface_layer(const Bgc& bgc, StackId m) {
  const int h = bgc.fill_level(m);
  if (h == 0) return std::nullopt;
  return bgc.height() - h + 1;
}

std::vector<Violation> validate_initial_bgc(const GridSpec& spec, std::size_t bin_count,
                                            const Matrix& cells) {
  std::vector<Violation> out;
  const int H = spec.height;
  const int M = spec.stack_count();
  if (static_cast<int>(cells.size()) != H ||
      std::any_of(cells.begin(), cells.end(),
                  [&](const auto& row) { return static_cast<int>(row.size()) != M; })) {
    out.push_back({"shape", 0, -1, kEmptyCell,
                   "matrix must be " + std::to_string(H) + "x" + std::to_string(M)});
    return out;
  }
  const int he = spec.empty_level();
  const int mf = spec.occupied_stacks(bin_count);
  std::vector<int> seen(bin_count + 1, 0);
  for (int l = 1; l <= H; ++l) {
    for (int m = 0; m < M; ++m) {
      const BinId b = cells[l - 1][m];
      const bool in_block = l > he && m < mf;
      if (b == kEmptyCell) {
        if (in_block) {
          out.push_back({"empty in fill region", l, m, b,
                         "cell (" + std::to_string(l) + "," + std::to_string(m) + ") is empty"});
        }
        continue;
      }
      if (b > bin_count) {
        out.push_back({"unknown ID", l, m, b, "bin " + std::to_string(b) + " is not in 1..N"});
        continue;
      }
      if (++seen[b] == 2) {
        out.push_back({"duplicate ID", l, m, b, "bin " + std::to_string(b) + " appears twice"});
      }
      if (l <= he) {
        out.push_back({"above fill region", l, m, b,
                       "bin " + std::to_string(b) + " sits in layer " + std::to_string(l) +
                           " <= empty level " + std::to_string(he)});
      } else if (m >= mf) {
        out.push_back({"outside occupied stacks", l, m, b,
                       "bin " + std::to_string(b) + " sits in unoccupied stack " +
                           std::to_string(m)});
      }
    }
  }
  for (BinId b = 1; b <= bin_count; ++b) {
    if (seen[b] == 0) {
      out.push_back({"missing ID", 0, -1, b, "bin " + std::to_string(b) + " is missing"});
    }
  }
  return out;
}

}  // namespace rcs

#pragma once

// Level multi-indices, full tensor-product grids on [0,1]^d and
// piecewise-multilinear interpolation.
//
// Node storage is lexicographic in the index tuple (j_1, ..., j_d) with j_d
// varying fastest; node j sits at x = (j_1 h_1, ..., j_d h_d). Boundary nodes
// are stored explicitly.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstring>
#include <istream>
#include <iterator>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsecombine {

class LevelIndex {
 public:
  LevelIndex() = default;
  explicit LevelIndex(std::vector<int> levels) : levels_(std::move(levels)) { validate(); }
  LevelIndex(std::initializer_list<int> levels) : levels_(levels) { validate(); }

  /// Isotropic level (n, ..., n).
  static LevelIndex isotropic(int dim, int level) {
    return LevelIndex(std::vector<int>(static_cast<std::size_t>(dim), level));
  }

  int dim() const { return static_cast<int>(levels_.size()); }
  int operator[](int j) const { return levels_[static_cast<std::size_t>(j)]; }
  std::span<const int> levels() const { return levels_; }

  /// |l|_1
  int sum() const {
    int s = 0;
    for (int l : levels_) s += l;
    return s;
  }
  int min() const { return *std::min_element(levels_.begin(), levels_.end()); }

  std::vector<double> mesh_widths() const {
    std::vector<double> h(levels_.size());
    for (std::size_t j = 0; j < levels_.size(); ++j) h[j] = std::ldexp(1.0, -levels_[j]);
    return h;
  }

  /// Nodes per direction, boundary included: 2^l + 1.
  std::uint64_t points(int j) const { return (std::uint64_t{1} << levels_[static_cast<std::size_t>(j)]) + 1; }

  std::uint64_t node_count() const {
    std::uint64_t n = 1;
    for (int j = 0; j < dim(); ++j) n *= points(j);
    return n;
  }

  std::uint64_t interior_count() const {
    std::uint64_t n = 1;
    for (int j = 0; j < dim(); ++j) n *= points(j) - 2;
    return n;
  }

  /// Bisects every direction in `directions` (0-based).
  LevelIndex refine(std::span<const int> directions) const {
    LevelIndex out = *this;
    for (int j : directions) {
      if (j < 0 || j >= dim())
        throw std::out_of_range("refine: direction " + std::to_string(j) + " out of range for d=" +
                                std::to_string(dim()));
      ++out.levels_[static_cast<std::size_t>(j)];
    }
    return out;
  }

  /// Refines the directions whose bit is set in `mask` (bit j <-> direction j).
  LevelIndex refine_mask(std::uint64_t mask) const {
    LevelIndex out = *this;
    for (int j = 0; j < dim(); ++j)
      if (mask & (std::uint64_t{1} << j)) ++out.levels_[static_cast<std::size_t>(j)];
    return out;
  }

  /// Adds `offset` to every component.
  LevelIndex shifted(int offset) const {
    std::vector<int> l = levels_;
    for (int& v : l) v += offset;
    return LevelIndex(std::move(l));
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t j = 0; j < levels_.size(); ++j) {
      if (j) s += ",";
      s += std::to_string(levels_[j]);
    }
    return s + ")";
  }

  friend auto operator<=>(const LevelIndex&, const LevelIndex&) = default;
  friend bool operator==(const LevelIndex&, const LevelIndex&) = default;

 private:
  void validate() const {
    if (levels_.empty()) throw std::invalid_argument("LevelIndex: dimension must be >= 1");
    for (int l : levels_) {
      if (l < 0) throw std::invalid_argument("LevelIndex: negative level");
      if (l > 40) throw std::invalid_argument("LevelIndex: level too large");
    }
  }

  std::vector<int> levels_;
};

inline std::vector<double> mesh_widths(const LevelIndex& l) { return l.mesh_widths(); }

inline LevelIndex refine(const LevelIndex& l, std::span<const int> directions) { return l.refine(directions); }

struct Point {
  std::vector<double> coords;

  int dim() const { return static_cast<int>(coords.size()); }
  double operator[](int j) const { return coords[static_cast<std::size_t>(j)]; }

  bool in_unit_cube() const {
    return std::all_of(coords.begin(), coords.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
  }
};

/// Row-major strides for the node array of `level` (last direction contiguous).
inline std::vector<std::size_t> node_strides(const LevelIndex& level) {
  std::vector<std::size_t> strides(static_cast<std::size_t>(level.dim()));
  std::size_t s = 1;
  for (int j = level.dim() - 1; j >= 0; --j) {
    strides[static_cast<std::size_t>(j)] = s;
    s *= static_cast<std::size_t>(level.points(j));
  }
  return strides;
}

class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(LevelIndex level, std::vector<double> values)
      : level_(std::move(level)), values_(std::move(values)) {
    if (values_.size() != level_.node_count())
      throw std::invalid_argument("GridFunction: expected " + std::to_string(level_.node_count()) +
                                  " values, got " + std::to_string(values_.size()));
  }

  /// Samples `fn(Point)` at every node.
  template <class Fn>
  static GridFunction sample(const LevelIndex& level, Fn&& fn);

  const LevelIndex& level() const { return level_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  int dim() const { return level_.dim(); }

 private:
  LevelIndex level_;
  std::vector<double> values_;
};

/// One node of a tensor grid.
struct Node {
  std::vector<int> index;
  Point point;
};

/// Input range over all nodes of a level in lexicographic order.
class NodeRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Node;
    using difference_type = std::ptrdiff_t;
    using reference = const Node&;
    using pointer = const Node*;

    iterator() = default;
    iterator(const LevelIndex* level, bool end) : level_(level), done_(end) {
      if (!end) {
        node_.index.assign(static_cast<std::size_t>(level->dim()), 0);
        node_.point.coords.assign(static_cast<std::size_t>(level->dim()), 0.0);
      }
    }

    reference operator*() const { return node_; }
    pointer operator->() const { return &node_; }

    iterator& operator++() {
      for (int j = level_->dim() - 1; j >= 0; --j) {
        auto& idx = node_.index[static_cast<std::size_t>(j)];
        if (static_cast<std::uint64_t>(++idx) < level_->points(j)) {
          node_.point.coords[static_cast<std::size_t>(j)] = std::ldexp(static_cast<double>(idx), -(*level_)[j]);
          return *this;
        }
        idx = 0;
        node_.point.coords[static_cast<std::size_t>(j)] = 0.0;
      }
      done_ = true;
      return *this;
    }
    void operator++(int) { ++*this; }

    friend bool operator==(const iterator& a, const iterator& b) { return a.done_ == b.done_; }

   private:
    const LevelIndex* level_ = nullptr;
    bool done_ = true;
    Node node_;
  };

  explicit NodeRange(LevelIndex level) : level_(std::move(level)) {}
  iterator begin() const { return iterator(&level_, false); }
  iterator end() const { return iterator(&level_, true); }

 private:
  LevelIndex level_;
};

inline NodeRange enumerate_nodes(const LevelIndex& level) { return NodeRange(level); }

template <class Fn>
GridFunction GridFunction::sample(const LevelIndex& level, Fn&& fn) {
  std::vector<double> values;
  values.reserve(level.node_count());
  for (const Node& node : enumerate_nodes(level)) values.push_back(fn(node.point));
  return GridFunction(level, std::move(values));
}

/// Value of the piecewise d-linear interpolant of `g` at `x`.
///
/// A coordinate on a cell face belongs to the lower cell; x_j = 1 uses the
/// last cell.
inline double multilinear_eval(const GridFunction& g, const Point& x) {
  const int d = g.dim();
  if (x.dim() != d)
    throw std::invalid_argument("multilinear_eval: point has dimension " + std::to_string(x.dim()) +
                                ", grid has " + std::to_string(d));
  if (!x.in_unit_cube()) throw std::domain_error("multilinear_eval: point outside [0,1]^d");

  const auto strides = node_strides(g.level());
  std::size_t base = 0;
  std::vector<double> weight(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const double cells = std::ldexp(1.0, g.level()[j]);
    const double t = x[j] * cells;
    const double cell = std::max(0.0, std::ceil(t) - 1.0);
    weight[static_cast<std::size_t>(j)] = t - cell;
    base += static_cast<std::size_t>(cell) * strides[static_cast<std::size_t>(j)];
  }

  double value = 0.0;
  const std::uint64_t corners = std::uint64_t{1} << d;
  for (std::uint64_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t offset = base;
    for (int j = 0; j < d; ++j) {
      const double t = weight[static_cast<std::size_t>(j)];
      if (c & (std::uint64_t{1} << j)) {
        w *= t;
        offset += strides[static_cast<std::size_t>(j)];
      } else {
        w *= 1.0 - t;
      }
    }
    if (w != 0.0) value += w * g[offset];
  }
  return value;
}

// Binary cache format: uint32 d, d x uint32 levels, then node_count float64
// values in lexicographic order. All little-endian.
namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    value = std::bit_cast<T>(bytes);
  }
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw std::runtime_error("GridFunction: truncated stream");
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    value = std::bit_cast<T>(bytes);
  }
  return value;
}

}  // namespace detail

inline void write_grid_function(std::ostream& os, const GridFunction& g) {
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  for (int l : g.level().levels()) detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(l));
  for (double v : g.values()) detail::write_le<double>(os, v);
}

inline GridFunction read_grid_function(std::istream& is) {
  const auto d = detail::read_le<std::uint32_t>(is);
  if (d == 0 || d > 64) throw std::runtime_error("GridFunction: bad dimension in header");
  std::vector<int> levels(d);
  for (auto& l : levels) l = static_cast<int>(detail::read_le<std::uint32_t>(is));
  LevelIndex level(std::move(levels));
  std::vector<double> values(level.node_count());
  for (auto& v : values) v = detail::read_le<double>(is);
  return GridFunction(std::move(level), std::move(values));
}

}  // namespace sparsecombine

#include "sparsecombine/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace sparsecombine;

TEST(LevelIndex, MeshWidths) {
  EXPECT_EQ(mesh_widths(LevelIndex{0, 0}), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(mesh_widths(LevelIndex{3}), (std::vector<double>{0.125}));
  EXPECT_EQ(mesh_widths(LevelIndex{2, 5, 1}), (std::vector<double>{0.25, 0.03125, 0.5}));
}

TEST(LevelIndex, Refine) {
  const std::vector<int> none, first{0}, first_third{0, 2};
  EXPECT_EQ(refine(LevelIndex{2, 2}, none), (LevelIndex{2, 2}));
  EXPECT_EQ(refine(LevelIndex{2, 2}, first), (LevelIndex{3, 2}));
  EXPECT_EQ(refine(LevelIndex{1, 0, 4}, first_third), (LevelIndex{2, 0, 5}));
  const std::vector<int> bad{3};
  EXPECT_THROW(refine(LevelIndex{1, 1}, bad), std::out_of_range);
}

TEST(LevelIndex, RejectsInvalid) {
  EXPECT_THROW(LevelIndex(std::vector<int>{}), std::invalid_argument);
  EXPECT_THROW((LevelIndex{1, -1}), std::invalid_argument);
}

TEST(LevelIndex, CountsMatchClosedFormsForRandomLevels) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<int> l(static_cast<std::size_t>(d));
    for (int& v : l) v = std::uniform_int_distribution<int>(0, 6)(rng);
    const LevelIndex level(l);
    std::uint64_t nodes = 1, interior = 1;
    for (int v : l) {
      nodes *= (1U << v) + 1;
      interior *= (1U << v) - 1;
    }
    EXPECT_EQ(level.node_count(), nodes);
    EXPECT_EQ(level.interior_count(), interior);
  }
  EXPECT_EQ((LevelIndex{0, 3}).interior_count(), 0U);
}

TEST(EnumerateNodes, OneDimensional) {
  std::vector<double> xs;
  std::vector<int> idx;
  for (const auto& node : enumerate_nodes(LevelIndex{1})) {
    xs.push_back(node.point[0]);
    idx.push_back(node.index[0]);
  }
  EXPECT_EQ(xs, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(idx, (std::vector<int>{0, 1, 2}));
}

TEST(EnumerateNodes, CornersOfUnitSquare) {
  std::vector<std::vector<double>> pts;
  for (const auto& node : enumerate_nodes(LevelIndex{0, 0})) pts.push_back(node.point.coords);
  EXPECT_EQ(pts, (std::vector<std::vector<double>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(EnumerateNodes, LexicographicWithLastIndexFastest) {
  std::vector<Node> nodes;
  for (const auto& node : enumerate_nodes(LevelIndex{2, 1})) nodes.push_back(node);
  ASSERT_EQ(nodes.size(), 15U);
  EXPECT_EQ(nodes.front().index, (std::vector<int>{0, 0}));
  EXPECT_EQ(nodes.front().point.coords, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(nodes[1].index, (std::vector<int>{0, 1}));
  EXPECT_EQ(nodes.back().index, (std::vector<int>{4, 2}));
  EXPECT_EQ(nodes.back().point.coords, (std::vector<double>{1.0, 1.0}));
}

TEST(GridFunction, RejectsWrongLength) {
  EXPECT_THROW(GridFunction(LevelIndex{1}, {0.0, 1.0}), std::invalid_argument);
}

TEST(MultilinearEval, ConstantIsReproduced) {
  const auto g = GridFunction::sample(LevelIndex{2, 3}, [](const Point&) { return 3.5; });
  for (const auto& x : {Point{{0.0, 0.0}}, Point{{0.3, 0.91}}, Point{{1.0, 0.5}}})
    EXPECT_DOUBLE_EQ(multilinear_eval(g, x), 3.5);
}

TEST(MultilinearEval, LinearSegmentMidpoint) {
  const GridFunction g(LevelIndex{1}, {0.0, 0.5, 0.0});
  EXPECT_DOUBLE_EQ(multilinear_eval(g, Point{{0.25}}), 0.25);
}

TEST(MultilinearEval, BilinearProductMatchesTensorWeights) {
  const auto g = GridFunction::sample(LevelIndex{1, 1}, [](const Point& x) { return x[0] * x[1]; });
  // Cell [0, 0.5] x [0.5, 1]: local coordinates s = 0.6, t = 0.4.
  const double s = 0.3 / 0.5, t = (0.7 - 0.5) / 0.5;
  const double f00 = 0.0 * 0.5, f10 = 0.5 * 0.5, f01 = 0.0 * 1.0, f11 = 0.5 * 1.0;
  const double oracle = (1 - s) * (1 - t) * f00 + s * (1 - t) * f10 + (1 - s) * t * f01 + s * t * f11;
  EXPECT_NEAR(oracle, 0.21, 1e-15);
  EXPECT_NEAR(multilinear_eval(g, Point{{0.3, 0.7}}), 0.21, 1e-15);
}

TEST(MultilinearEval, ExactAtNodesAndOnFaces) {
  const auto g = GridFunction::sample(LevelIndex{2, 1}, [](const Point& x) { return std::sin(3 * x[0]) + x[1] * x[1]; });
  for (const auto& node : enumerate_nodes(g.level()))
    EXPECT_DOUBLE_EQ(multilinear_eval(g, node.point), std::sin(3 * node.point[0]) + node.point[1] * node.point[1]);
}

TEST(MultilinearEval, OutsideCubeIsAnError) {
  const auto g = GridFunction::sample(LevelIndex{1, 1}, [](const Point&) { return 0.0; });
  EXPECT_THROW(multilinear_eval(g, Point{{1.1, 0.5}}), std::domain_error);
  EXPECT_THROW(multilinear_eval(g, Point{{-0.01, 0.5}}), std::domain_error);
  EXPECT_THROW(multilinear_eval(g, Point{{0.5}}), std::invalid_argument);
}

// Any function that is multilinear on every cell is reproduced; a product of
// per-direction piecewise-linear functions with breakpoints on the grid is one.
TEST(MultilinearEval, ReproducesCellwiseMultilinearFunctions) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int d = 1; d <= 4; ++d) {
    std::vector<int> l(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) l[static_cast<std::size_t>(j)] = 1 + j % 3;
    const LevelIndex level(l);
    // Per-direction nodal tables of piecewise-linear factors.
    std::vector<std::vector<double>> tables(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
      for (std::uint64_t k = 0; k < level.points(j); ++k) tables[static_cast<std::size_t>(j)].push_back(unit(rng) - 0.5);
    auto factor = [&](int j, double x) {
      const auto& t = tables[static_cast<std::size_t>(j)];
      const double cells = static_cast<double>(t.size() - 1);
      const double s = x * cells;
      const auto c = std::min(static_cast<std::size_t>(s), t.size() - 2);
      const double w = s - static_cast<double>(c);
      return (1 - w) * t[c] + w * t[c + 1];
    };
    auto fn = [&](const Point& x) {
      double v = 1.0;
      for (int j = 0; j < d; ++j) v *= factor(j, x[j]);
      return v;
    };
    const auto g = GridFunction::sample(level, fn);
    for (int trial = 0; trial < 100; ++trial) {
      Point x;
      for (int j = 0; j < d; ++j) x.coords.push_back(unit(rng));
      const double expected = fn(x);
      EXPECT_NEAR(multilinear_eval(g, x), expected, 1e-14 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(MultilinearEval, InterpolationErrorIsSecondOrder) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto u = [](const Point& x) {
    double p = 1.0;
    for (double xi : x.coords) p *= std::sin(std::numbers::pi * xi);
    return p;
  };
  for (int d = 1; d <= 3; ++d) {
    std::vector<Point> pts(1000);
    for (auto& x : pts)
      for (int j = 0; j < d; ++j) x.coords.push_back(unit(rng));
    auto max_error = [&](int n) {
      const auto g = GridFunction::sample(LevelIndex::isotropic(d, n), u);
      double e = 0.0;
      for (const auto& x : pts) e = std::max(e, std::abs(multilinear_eval(g, x) - u(x)));
      return e;
    };
    for (int n = 4; n <= 8; ++n) {
      if (d == 3 && n > 7) break;  // 257^3 nodes: skipped for runtime
      const double ratio = max_error(n) / max_error(n + 1);
      EXPECT_GE(ratio, 3.2) << "d=" << d << " n=" << n;
      EXPECT_LE(ratio, 4.8) << "d=" << d << " n=" << n;
    }
  }
}

TEST(GridFunction, BinaryCacheRoundTrip) {
  const auto g = GridFunction::sample(LevelIndex{2, 0, 1}, [](const Point& x) { return x[0] - 2 * x[2] + 0.1; });
  std::stringstream buffer;
  write_grid_function(buffer, g);
  // header: 4 bytes d + 3 x 4 bytes levels, then doubles
  EXPECT_EQ(buffer.str().size(), 4 + 3 * 4 + g.level().node_count() * 8);
  const auto back = read_grid_function(buffer);
  EXPECT_EQ(back.level(), g.level());
  EXPECT_TRUE(std::equal(back.values().begin(), back.values().end(), g.values().begin()));
  EXPECT_EQ(static_cast<unsigned char>(buffer.str()[0]), 3);  // little-endian d
}

TEST(GridFunction, TruncatedCacheIsRejected) {
  const auto g = GridFunction::sample(LevelIndex{1}, [](const Point&) { return 1.0; });
  std::stringstream buffer;
  write_grid_function(buffer, g);
  std::string bytes = buffer.str();
  bytes.pop_back();
  std::stringstream truncated(bytes);
  EXPECT_THROW(read_grid_function(truncated), std::runtime_error);
}

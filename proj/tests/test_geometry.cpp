#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bottleseg/geometry.hpp"
#include "oracles.hpp"

using namespace bottleseg;

namespace {

Polygon poly(std::initializer_list<Point> pts) { return Polygon{std::vector<Point>(pts)}; }

BinaryMask random_mask(std::mt19937& rng, int max_dim, double density = 0.5) {
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::bernoulli_distribution bit(density);
  BinaryMask m(dim(rng), dim(rng));
  for (std::int64_t r = 0; r < m.height(); ++r) {
    for (std::int64_t c = 0; c < m.width(); ++c) m.set(r, c, bit(rng));
  }
  return m;
}

}  // namespace

TEST(Rasterize, AxisAlignedSquare) {
  const BinaryMask m = rasterize_polygon(poly({{0, 0}, {4, 0}, {4, 4}, {0, 4}}), 8, 8);
  EXPECT_EQ(m.count(), 16);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) EXPECT_EQ(m.at(r, c), r < 4 && c < 4) << r << "," << c;
  }
}

TEST(Rasterize, DegeneratePointPolygonIsEmpty) {
  const BinaryMask m = rasterize_polygon(poly({{3, 3}, {3, 3}, {3, 3}}), 6, 6);
  EXPECT_EQ(m.count(), 0);
}

TEST(Rasterize, TriangleMatchesCenterEnumeration) {
  const Polygon tri = poly({{0, 0}, {6, 0}, {0, 6}});
  const BinaryMask m = rasterize_polygon(tri, 6, 6);
  const oracle::Grid g = oracle::rasterize(tri, 6, 6);
  EXPECT_EQ(oracle::from_mask(m).px, g.px);
  // Centers (c+.5, r+.5) with c + r + 1 < 6: 5+4+3+2+1 = 15.
  EXPECT_EQ(m.count(), 15);
}

TEST(Rasterize, EdgeOwnershipIsHalfOpen) {
  // Square edges pass through pixel centers: x = 0.5 .. 2.5, y = 0.5 .. 2.5.
  // Left and top edges are owned, right and bottom are not.
  const BinaryMask m = rasterize_polygon(poly({{0.5, 0.5}, {2.5, 0.5}, {2.5, 2.5}, {0.5, 2.5}}), 4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(m.at(r, c), r < 2 && c < 2) << r << "," << c;
  }
}

TEST(Rasterize, ClipsVerticesOutsideGrid) {
  const BinaryMask m = rasterize_polygon(poly({{-5, -5}, {50, -5}, {50, 50}, {-5, 50}}), 3, 4);
  EXPECT_EQ(m.count(), 12);
}

TEST(Rasterize, RejectsInvalidPolygons) {
  try {
    rasterize_polygon(poly({{0, 0}, {1, 1}}), 4, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidPolygon);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(rasterize_polygon(poly({{0, 0}, {nan, 1}, {2, 2}}), 4, 4), Error);
  EXPECT_THROW(rasterize_polygon(poly({{0, 0}, {1, 0}, {0, 1}}), 0, 4), Error);
}

TEST(Rasterize, RandomPolygonsMatchOracle) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> dim(1, 32);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = dim(rng), w = dim(rng);
    std::uniform_real_distribution<double> xs(-2.0, w + 2.0), ys(-2.0, h + 2.0);
    std::uniform_int_distribution<int> nv(3, 9);
    Polygon p;
    for (int k = nv(rng); k > 0; --k) p.vertices.push_back({xs(rng), ys(rng)});
    EXPECT_EQ(oracle::from_mask(rasterize_polygon(p, h, w)).px, oracle::rasterize(p, h, w).px);
  }
}

TEST(Rasterize, MultiPolygonIsUnion) {
  const std::vector<Polygon> parts{poly({{0, 0}, {2, 0}, {2, 2}, {0, 2}}),
                                   poly({{1, 1}, {3, 1}, {3, 3}, {1, 3}})};
  EXPECT_EQ(rasterize_polygons(parts, 4, 4).count(), 7);
}

TEST(Rle, EncodeExamples) {
  BinaryMask zeros(2, 2);
  EXPECT_EQ(rle_encode(zeros).counts(), (std::vector<std::uint32_t>{4}));

  BinaryMask center(3, 3);
  center.set(1, 1);
  EXPECT_EQ(rle_encode(center).counts(), (std::vector<std::uint32_t>{4, 1, 4}));

  BinaryMask ones(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) ones.set(r, c);
  EXPECT_EQ(rle_encode(ones).counts(), (std::vector<std::uint32_t>{0, 4}));
}

TEST(Rle, EncodeIsColumnMajor) {
  BinaryMask m(2, 3);
  m.set(0, 1);  // linear index col*h + row = 2
  EXPECT_EQ(rle_encode(m).counts(), (std::vector<std::uint32_t>{2, 1, 3}));
}

TEST(Rle, DecodeExamples) {
  EXPECT_EQ(rle_decode(RleMask(2, 2, {4})).count(), 0);
  const BinaryMask m = rle_decode(RleMask(3, 3, {4, 1, 4}));
  EXPECT_EQ(m.count(), 1);
  EXPECT_TRUE(m.at(1, 1));
}

TEST(Rle, RejectsInconsistentCounts) {
  try {
    RleMask(3, 3, {4, 1, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentRle);
  }
  EXPECT_THROW(RleMask(2, 2, {2, 0, 2}), Error);
  EXPECT_NO_THROW(RleMask(2, 2, {0, 4}));
}

TEST(Rle, RoundTripAndCanonicalForm) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_real_distribution<double> dens(0.0, 1.0);
    const BinaryMask m = random_mask(rng, 32, dens(rng));
    const RleMask rle = rle_encode(m);
    ASSERT_EQ(rle_decode(rle), m);
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < rle.counts().size(); ++i) {
      if (i > 0) ASSERT_GT(rle.counts()[i], 0u);
      sum += rle.counts()[i];
    }
    ASSERT_EQ(sum, m.height() * m.width());
    ASSERT_EQ(rle.area(), m.count());
  }
}

TEST(MaskIou, Examples) {
  BinaryMask left(10, 10), top(10, 10);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) {
      if (c < 5) left.set(r, c);
      if (r < 5) top.set(r, c);
    }
  }
  const RleMask a = rle_encode(left), b = rle_encode(top);
  EXPECT_DOUBLE_EQ(mask_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(mask_iou(a, b), 25.0 / 75.0);
  EXPECT_DOUBLE_EQ(oracle::iou(oracle::from_mask(left), oracle::from_mask(top)), 25.0 / 75.0);

  BinaryMask right(10, 10);
  for (int r = 0; r < 10; ++r)
    for (int c = 5; c < 10; ++c) right.set(r, c);
  EXPECT_DOUBLE_EQ(mask_iou(a, rle_encode(right)), 0.0);

  // Crowd rule: |a n b| / |a|.
  EXPECT_DOUBLE_EQ(mask_iou(a, b, true), 25.0 / 50.0);
  const RleMask empty = rle_encode(BinaryMask(10, 10));
  EXPECT_DOUBLE_EQ(mask_iou(empty, empty), 0.0);
  EXPECT_DOUBLE_EQ(mask_iou(empty, a, true), 0.0);
}

TEST(MaskIou, DimensionMismatchThrows) {
  try {
    mask_iou(rle_encode(BinaryMask(2, 3)), rle_encode(BinaryMask(3, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(MaskIou, MatchesPixelEnumerationAndIsSymmetric) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> dim(1, 16);
  std::bernoulli_distribution bit(0.4);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = dim(rng), w = dim(rng);
    oracle::Grid ga(h, w), gb(h, w);
    for (auto& v : ga.px) v = bit(rng);
    for (auto& v : gb.px) v = bit(rng);
    const RleMask a = rle_encode(oracle::to_mask(ga)), b = rle_encode(oracle::to_mask(gb));
    const double ab = mask_iou(a, b);
    EXPECT_EQ(ab, oracle::iou(ga, gb));
    EXPECT_EQ(ab, mask_iou(b, a));
    EXPECT_EQ(mask_iou(a, b, true), oracle::iou(ga, gb, true));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    if (ga.count() > 0) EXPECT_EQ(mask_iou(a, a), 1.0);
  }
}

TEST(BBoxIou, Examples) {
  const BBox a{0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(bbox_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(bbox_iou(a, {5, 5, 10, 10}), 25.0 / 175.0);
  EXPECT_DOUBLE_EQ(bbox_iou({3, 3, 0, 0}, a), 0.0);
  EXPECT_DOUBLE_EQ(bbox_iou({3, 3, 0, 0}, {3, 3, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(bbox_iou({20, 20, 5, 5}, a), 0.0);
}

TEST(BBoxIou, AgreesWithFineGridCount) {
  // 25/175 cross-checked by counting 0.1-pixel cells.
  const BBox a{0, 0, 10, 10}, b{5, 5, 10, 10};
  int inter = 0, uni = 0;
  for (int i = 0; i < 150; ++i) {
    for (int j = 0; j < 150; ++j) {
      const double x = (i + 0.5) / 10, y = (j + 0.5) / 10;
      const bool in_a = x < 10 && y < 10;
      const bool in_b = x >= 5 && y >= 5;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  EXPECT_NEAR(bbox_iou(a, b), double(inter) / uni, 1e-12);
}

TEST(BBoxIou, EqualsMaskIouOnIntegerBoxes) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> coord(0, 20);
  for (int trial = 0; trial < 300; ++trial) {
    const int ax = coord(rng), ay = coord(rng), bx = coord(rng), by = coord(rng);
    std::uniform_int_distribution<int> ext(0, 12);
    const int aw = ext(rng), ah = ext(rng), bw = ext(rng), bh = ext(rng);
    const auto ga = oracle::box_grid(32, 32, ax, ay, aw, ah);
    const auto gb = oracle::box_grid(32, 32, bx, by, bw, bh);
    const double via_mask = mask_iou(rle_encode(oracle::to_mask(ga)), rle_encode(oracle::to_mask(gb)));
    EXPECT_NEAR(bbox_iou({double(ax), double(ay), double(aw), double(ah)},
                         {double(bx), double(by), double(bw), double(bh)}),
                via_mask, 1e-9);
  }
}

TEST(BBoxFromMask, Examples) {
  BinaryMask m(3, 3);
  m.set(1, 1);
  EXPECT_EQ(bbox_from_mask(rle_encode(m)), (BBox{1, 1, 1, 1}));
  EXPECT_EQ(bbox_from_mask(rle_encode(BinaryMask(4, 4))), (BBox{0, 0, 0, 0}));
}

TEST(BBoxFromMask, MatchesExhaustiveScan) {
  std::mt19937 rng(9);
  std::bernoulli_distribution bit(0.1);
  for (int trial = 0; trial < 500; ++trial) {
    oracle::Grid g(12, 12);
    for (auto& v : g.px) v = bit(rng);
    EXPECT_EQ(bbox_from_mask(rle_encode(oracle::to_mask(g))), oracle::bbox_scan(g));
  }
  // Runs that wrap across columns.
  std::mt19937 rng2(10);
  std::uniform_int_distribution<int> dim(1, 9);
  std::bernoulli_distribution dense(0.7);
  for (int trial = 0; trial < 500; ++trial) {
    oracle::Grid g(dim(rng2), dim(rng2));
    for (auto& v : g.px) v = dense(rng2);
    EXPECT_EQ(bbox_from_mask(rle_encode(oracle::to_mask(g))), oracle::bbox_scan(g));
  }
}

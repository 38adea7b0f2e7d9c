#pragma once

#include <cstdint>

#include "bottleseg/geometry.hpp"

namespace bottleseg {

inline constexpr std::int64_t kDefaultTargetSize = 1024;

// Fit-long-side resize followed by zero padding to a target x target square.
// The short axis is padded on both sides; the odd pixel goes bottom/right.
struct SquarePadTransform {
  std::int64_t src_h = 0;
  std::int64_t src_w = 0;
  std::int64_t target = kDefaultTargetSize;
  double scale = 1.0;
  std::int64_t scaled_h = 0;
  std::int64_t scaled_w = 0;
  std::int64_t pad_top = 0;
  std::int64_t pad_bottom = 0;
  std::int64_t pad_left = 0;
  std::int64_t pad_right = 0;
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;
};

SquarePadTransform compute_square_pad(std::int64_t src_h, std::int64_t src_w,
                                      std::int64_t target = kDefaultTargetSize);

enum class TransformDirection { Forward, Inverse };

Point transform_point(const Point& p, const SquarePadTransform& t, TransformDirection dir);
Polygon transform_polygon(const Polygon& poly, const SquarePadTransform& t,
                          TransformDirection dir);

// Left-right mirror: x -> width - x.
Polygon flip_horizontal(const Polygon& poly, double width);

}  // namespace bottleseg

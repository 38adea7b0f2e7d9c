#include "bottleseg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bottleseg {

SquarePadTransform compute_square_pad(std::int64_t src_h, std::int64_t src_w,
                                      std::int64_t target) {
  if (src_h < 1 || src_w < 1 || target < 1) {
    throw Error(ErrorKind::InvalidArgument, "resize dimensions must be >= 1");
  }
  SquarePadTransform t;
  t.src_h = src_h;
  t.src_w = src_w;
  t.target = target;
  t.scale = static_cast<double>(target) / static_cast<double>(std::max(src_h, src_w));

  auto scaled = [&](std::int64_t n) {
    const auto v = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * t.scale + 0.5));
    return std::clamp<std::int64_t>(v, 1, target);
  };
  t.scaled_h = scaled(src_h);
  t.scaled_w = scaled(src_w);

  const std::int64_t extra_h = target - t.scaled_h;
  const std::int64_t extra_w = target - t.scaled_w;
  t.pad_top = extra_h / 2;
  t.pad_bottom = extra_h - t.pad_top;
  t.pad_left = extra_w / 2;
  t.pad_right = extra_w - t.pad_left;
  t.out_h = target;
  t.out_w = target;
  return t;
}

Point transform_point(const Point& p, const SquarePadTransform& t, TransformDirection dir) {
  const auto top = static_cast<double>(t.pad_top);
  const auto left = static_cast<double>(t.pad_left);
  if (dir == TransformDirection::Forward) {
    return {p.x * t.scale + left, p.y * t.scale + top};
  }
  return {(p.x - left) / t.scale, (p.y - top) / t.scale};
}

Polygon transform_polygon(const Polygon& poly, const SquarePadTransform& t,
                          TransformDirection dir) {
  Polygon out;
  out.vertices.reserve(poly.vertices.size());
  for (const auto& p : poly.vertices) out.vertices.push_back(transform_point(p, t, dir));
  return out;
}

Polygon flip_horizontal(const Polygon& poly, double width) {
  Polygon out;
  out.vertices.reserve(poly.vertices.size());
  for (const auto& p : poly.vertices) out.vertices.push_back({width - p.x, p.y});
  return out;
}

}  // namespace bottleseg

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bottleseg/error.hpp"

namespace bottleseg {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Closed polygon in continuous image coordinates (pixel (r,c) covers
// [c,c+1)x[r,r+1)). The last vertex connects back to the first.
struct Polygon {
  std::vector<Point> vertices;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

// Throws ErrorKind::InvalidPolygon on fewer than 3 vertices or a non-finite
// coordinate. Vertices off the image are allowed; rasterization clips them.
void validate_polygon(const Polygon& poly);

// Row-major boolean grid.
class BinaryMask {
 public:
  BinaryMask(std::int64_t height, std::int64_t width);

  std::int64_t height() const noexcept { return height_; }
  std::int64_t width() const noexcept { return width_; }

  bool at(std::int64_t row, std::int64_t col) const {
    return bits_[static_cast<std::size_t>(row * width_ + col)] != 0;
  }
  void set(std::int64_t row, std::int64_t col, bool value = true) {
    bits_[static_cast<std::size_t>(row * width_ + col)] = value ? 1 : 0;
  }

  std::int64_t count() const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::int64_t height_;
  std::int64_t width_;
  std::vector<std::uint8_t> bits_;
};

// Column-major run-length mask, COCO convention: runs alternate
// background/foreground starting with background. Only the first count may
// be zero.
class RleMask {
 public:
  // Throws ErrorKind::InconsistentRle if the counts do not tile h*w exactly
  // or contain an interior zero run.
  RleMask(std::int64_t height, std::int64_t width, std::vector<std::uint32_t> counts);

  std::int64_t height() const noexcept { return height_; }
  std::int64_t width() const noexcept { return width_; }
  const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }

  // Number of foreground pixels.
  std::int64_t area() const noexcept;

  friend bool operator==(const RleMask&, const RleMask&) = default;

 private:
  std::int64_t height_;
  std::int64_t width_;
  std::vector<std::uint32_t> counts_;
};

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

BinaryMask rasterize_polygon(const Polygon& poly, std::int64_t height, std::int64_t width);

// Union of the rasterized polygons; an empty list yields an empty mask.
BinaryMask rasterize_polygons(std::span<const Polygon> polys, std::int64_t height,
                              std::int64_t width);

RleMask rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const RleMask& rle);

// |a n b| / |a u b|, or |a n b| / |a| when b is an ignore (crowd) region.
// 0/0 is 0.
double mask_iou(const RleMask& a, const RleMask& b, bool b_is_ignore = false);

// Foreground pixels shared by both masks.
std::int64_t mask_intersection(const RleMask& a, const RleMask& b);

double bbox_iou(const BBox& a, const BBox& b, bool b_is_ignore = false);

// Tightest pixel-aligned box around the foreground; (0,0,0,0) when empty.
BBox bbox_from_mask(const RleMask& mask);

}  // namespace bottleseg

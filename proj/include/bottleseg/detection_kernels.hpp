#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bottleseg/geometry.hpp"

namespace bottleseg {

struct ScoredBox {
  BBox bbox;
  double score = 0.0;
  std::string category;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

// Greedy per-category non-max suppression. Candidates are visited by
// descending score (stable on ties); a box survives iff its IoU with every
// previously kept box of its category is below `iou_threshold`.
std::vector<ScoredBox> nms(std::span<const ScoredBox> candidates, double iou_threshold);

// Keeps boxes with score >= min_conf, in input order.
std::vector<ScoredBox> confidence_filter(std::span<const ScoredBox> candidates, double min_conf);

// The `max_instances` best-scored boxes, by descending score (stable on ties).
std::vector<ScoredBox> cap_detections(std::span<const ScoredBox> candidates,
                                      std::size_t max_instances);

// Index permutation ordering `scores` descending, ties by position.
std::vector<std::size_t> descending_score_order(std::span<const double> scores);

// Dense (channel, row, col) feature map.
class FeatureGrid {
 public:
  FeatureGrid(std::int64_t channels, std::int64_t height, std::int64_t width);
  FeatureGrid(std::int64_t channels, std::int64_t height, std::int64_t width,
              std::vector<double> values);

  std::int64_t channels() const noexcept { return channels_; }
  std::int64_t height() const noexcept { return height_; }
  std::int64_t width() const noexcept { return width_; }

  double at(std::int64_t ch, std::int64_t row, std::int64_t col) const {
    return values_[index(ch, row, col)];
  }
  double& at(std::int64_t ch, std::int64_t row, std::int64_t col) {
    return values_[index(ch, row, col)];
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t index(std::int64_t ch, std::int64_t row, std::int64_t col) const {
    return static_cast<std::size_t>((ch * height_ + row) * width_ + col);
  }

  std::int64_t channels_;
  std::int64_t height_;
  std::int64_t width_;
  std::vector<double> values_;
};

// Region in feature-grid coordinates; cell (r,c) sits at (x=c, y=r).
struct Roi {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
};

inline constexpr std::int64_t kDefaultSamplesPerBin = 2;

// Bilinear RoIAlign without coordinate quantization. Each of the
// out_h x out_w bins averages samples_per_bin^2 evenly spaced interior
// samples; samples outside the grid read the clamped border value.
FeatureGrid roi_align(const FeatureGrid& grid, const Roi& roi, std::int64_t out_h,
                      std::int64_t out_w, std::int64_t samples_per_bin = kDefaultSamplesPerBin);

// Bilinear value of one channel at continuous (x, y), clamped to the grid.
double bilinear_sample(const FeatureGrid& grid, std::int64_t channel, double x, double y);

}  // namespace bottleseg

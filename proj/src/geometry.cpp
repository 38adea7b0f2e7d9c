#include "bottleseg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bottleseg {

namespace {

void require_dims(std::int64_t height, std::int64_t width) {
  if (height < 1 || width < 1) {
    throw Error(ErrorKind::InvalidArgument,
                "mask dimensions must be >= 1, got " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
}

// Fills `out` with the x coordinates where the horizontal line y = py crosses
// the polygon outline. An edge counts iff its endpoints lie on opposite sides
// of py under the half-open rule (y > py), so each vertex is counted once.
void scanline_crossings(const Polygon& poly, double py, std::vector<double>& out) {
  out.clear();
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = v[i];
    const Point& b = v[j];
    if ((a.y > py) != (b.y > py)) {
      out.push_back((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
    }
  }
  std::sort(out.begin(), out.end());
}

void fill_polygon(const Polygon& poly, BinaryMask& mask) {
  double ymin = poly.vertices.front().y;
  double ymax = ymin;
  for (const auto& p : poly.vertices) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const std::int64_t h = mask.height();
  const std::int64_t w = mask.width();
  const auto row_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(ymin - 0.5)));
  const auto row_hi = std::min<std::int64_t>(h - 1, static_cast<std::int64_t>(std::ceil(ymax)));

  std::vector<double> xs;
  for (std::int64_t r = row_lo; r <= row_hi; ++r) {
    const double py = static_cast<double>(r) + 0.5;
    scanline_crossings(poly, py, xs);
    if (xs.empty()) continue;
    // Pixel center px is inside iff an odd number of crossings lie strictly
    // to its right.
    std::size_t at_or_left = 0;
    for (std::int64_t c = 0; c < w; ++c) {
      const double px = static_cast<double>(c) + 0.5;
      while (at_or_left < xs.size() && xs[at_or_left] <= px) ++at_or_left;
      if (((xs.size() - at_or_left) & 1U) != 0) mask.set(r, c);
    }
  }
}

}  // namespace

void validate_polygon(const Polygon& poly) {
  if (poly.vertices.size() < 3) {
    throw Error(ErrorKind::InvalidPolygon,
                "polygon needs at least 3 vertices, got " + std::to_string(poly.vertices.size()));
  }
  for (const auto& p : poly.vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::InvalidPolygon, "polygon has a non-finite coordinate");
    }
  }
}

BinaryMask::BinaryMask(std::int64_t height, std::int64_t width) : height_(height), width_(width) {
  require_dims(height, width);
  bits_.assign(static_cast<std::size_t>(height * width), 0);
}

std::int64_t BinaryMask::count() const noexcept {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

RleMask::RleMask(std::int64_t height, std::int64_t width, std::vector<std::uint32_t> counts)
    : height_(height), width_(width), counts_(std::move(counts)) {
  require_dims(height, width);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (i > 0 && counts_[i] == 0) {
      throw Error(ErrorKind::InconsistentRle,
                  "zero-length run at interior position " + std::to_string(i));
    }
    total += counts_[i];
  }
  if (total != height * width) {
    throw Error(ErrorKind::InconsistentRle, "run lengths sum to " + std::to_string(total) +
                                                ", expected " + std::to_string(height * width));
  }
}

std::int64_t RleMask::area() const noexcept {
  std::int64_t a = 0;
  for (std::size_t i = 1; i < counts_.size(); i += 2) a += counts_[i];
  return a;
}

BinaryMask rasterize_polygon(const Polygon& poly, std::int64_t height, std::int64_t width) {
  validate_polygon(poly);
  BinaryMask mask(height, width);
  fill_polygon(poly, mask);
  return mask;
}

BinaryMask rasterize_polygons(std::span<const Polygon> polys, std::int64_t height,
                              std::int64_t width) {
  for (const auto& p : polys) validate_polygon(p);
  BinaryMask mask(height, width);
  for (const auto& p : polys) fill_polygon(p, mask);
  return mask;
}

RleMask rle_encode(const BinaryMask& mask) {
  std::vector<std::uint32_t> counts;
  bool current = false;
  std::uint32_t run = 0;
  for (std::int64_t c = 0; c < mask.width(); ++c) {
    for (std::int64_t r = 0; r < mask.height(); ++r) {
      if (mask.at(r, c) != current) {
        counts.push_back(run);
        run = 0;
        current = !current;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return RleMask(mask.height(), mask.width(), std::move(counts));
}

BinaryMask rle_decode(const RleMask& rle) {
  BinaryMask mask(rle.height(), rle.width());
  const std::int64_t h = rle.height();
  std::int64_t idx = 0;
  bool value = false;
  for (std::uint32_t run : rle.counts()) {
    if (value) {
      for (std::int64_t k = idx; k < idx + run; ++k) mask.set(k % h, k / h);
    }
    idx += run;
    value = !value;
  }
  return mask;
}

std::int64_t mask_intersection(const RleMask& a, const RleMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorKind::DimensionMismatch,
                "mask dimensions differ: " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()));
  }
  const auto& ca = a.counts();
  const auto& cb = b.counts();
  std::size_t ia = 0;
  std::size_t ib = 0;
  std::int64_t left_a = ca[0];
  std::int64_t left_b = cb[0];
  bool va = false;
  bool vb = false;
  std::int64_t inter = 0;
  // Walk both run lists in lockstep over the shared linear index.
  while (ia < ca.size() && ib < cb.size()) {
    const std::int64_t step = std::min(left_a, left_b);
    if (va && vb) inter += step;
    left_a -= step;
    left_b -= step;
    if (left_a == 0) {
      if (++ia < ca.size()) left_a = ca[ia];
      va = !va;
    }
    if (left_b == 0) {
      if (++ib < cb.size()) left_b = cb[ib];
      vb = !vb;
    }
  }
  return inter;
}

double mask_iou(const RleMask& a, const RleMask& b, bool b_is_ignore) {
  const auto inter = static_cast<double>(mask_intersection(a, b));
  const auto area_a = static_cast<double>(a.area());
  const double denom = b_is_ignore ? area_a : area_a + static_cast<double>(b.area()) - inter;
  return denom > 0.0 ? inter / denom : 0.0;
}

double bbox_iou(const BBox& a, const BBox& b, bool b_is_ignore) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double denom = b_is_ignore ? a.area() : a.area() + b.area() - inter;
  return denom > 0.0 ? inter / denom : 0.0;
}

BBox bbox_from_mask(const RleMask& mask) {
  const std::int64_t h = mask.height();
  std::int64_t xmin = mask.width();
  std::int64_t xmax = -1;
  std::int64_t ymin = h;
  std::int64_t ymax = -1;
  std::int64_t idx = 0;
  const auto& counts = mask.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::int64_t start = idx;
    idx += counts[i];
    if ((i & 1U) == 0 || counts[i] == 0) continue;
    const std::int64_t last = idx - 1;
    const std::int64_t c0 = start / h;
    const std::int64_t c1 = last / h;
    xmin = std::min(xmin, c0);
    xmax = std::max(xmax, c1);
    if (c0 == c1) {
      ymin = std::min(ymin, start % h);
      ymax = std::max(ymax, last % h);
    } else {
      // The run wraps through a column boundary: it touches row h-1 of c0
      // and row 0 of c0+1.
      ymin = 0;
      ymax = h - 1;
    }
  }
  if (xmax < 0) return BBox{};
  return BBox{static_cast<double>(xmin), static_cast<double>(ymin),
              static_cast<double>(xmax - xmin + 1), static_cast<double>(ymax - ymin + 1)};
}

}  // namespace bottleseg

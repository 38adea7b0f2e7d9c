#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bottleseg/geometry.hpp"

namespace bottleseg {

// One annotated object. Polygon instances carry `polygons`; instances read
// from RLE-segmented COCO annotations carry `mask` instead.
struct Instance {
  std::vector<Polygon> polygons;
  std::optional<RleMask> mask;
  std::string category;
  bool is_ignore = false;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct DatasetRecord {
  std::int64_t image_id = 0;
  std::string file_name;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<Instance> instances;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct ImageSize {
  std::int64_t height = 0;
  std::int64_t width = 0;
};

using DimensionManifest = std::map<std::string, ImageSize, std::less<>>;

// Rows of `file_name height width`; blank lines and `#` comments skipped.
// The last two fields are the dimensions, so file names may contain spaces.
DimensionManifest parse_dimension_manifest(std::string_view text);

struct ViaOptions {
  // region_attributes key holding the class label.
  std::string label_key = "name";
  // Label used when a region has no `label_key` attribute.
  std::string default_label = "bottle";
};

// Parses a VIA 2.x annotation export (or a full project holding
// `_via_img_metadata`). Image ids are assigned 1..N in document order and
// polygon vertices are clamped to the image rectangle.
std::vector<DatasetRecord> parse_via(std::string_view project_text, const DimensionManifest& dims,
                                     const ViaOptions& options = {});

// Foreground mask of an instance on an h x w image.
RleMask instance_mask(const Instance& inst, std::int64_t height, std::int64_t width);

// Throws on non-positive dimensions or duplicate image ids.
void validate_records(std::span<const DatasetRecord> records);

// COCO dataset document. Category ids are the 1-based positions in
// `category_names`; images and annotations are ordered by image id.
std::string export_coco(std::span<const DatasetRecord> records,
                        std::span<const std::string> category_names);

struct CocoCategory {
  std::int64_t id = 0;
  std::string name;
};

struct CocoDataset {
  std::vector<CocoCategory> categories;  // sorted by id
  std::vector<DatasetRecord> records;    // in document order

  std::vector<std::string> category_names() const;
  // Throws ErrorKind::UnknownCategory for an id not in `categories`.
  const std::string& category_name(std::int64_t id) const;
};

CocoDataset import_coco(std::string_view document);

struct DatasetStats {
  std::int64_t num_images = 0;
  std::int64_t num_annotated_images = 0;
  std::int64_t total_instances = 0;
  std::int64_t min_pixel_area = 0;
  std::int64_t max_pixel_area = 0;
  std::map<std::string, std::int64_t> per_category;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(std::span<const DatasetRecord> records);

}  // namespace bottleseg

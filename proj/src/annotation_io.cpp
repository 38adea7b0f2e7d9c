#include "bottleseg/annotation_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace bottleseg {

using detail::Json;

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_positive(std::string_view token, std::int64_t& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end && out >= 1;
}

Polygon clamp_polygon(Polygon poly, std::int64_t height, std::int64_t width) {
  for (auto& p : poly.vertices) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(width));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(height));
  }
  return poly;
}

std::string region_label(const Json& attrs, const ViaOptions& options, const std::string& where) {
  if (attrs.is_null()) return options.default_label;
  if (!attrs.is_object()) detail::schema_error(where, "region_attributes must be an object");
  auto it = attrs.find(options.label_key);
  if (it == attrs.end()) return options.default_label;
  if (it->is_string() && !it->get_ref<const std::string&>().empty()) {
    return it->get<std::string>();
  }
  // Checkbox/dropdown attributes export as {"label": true, ...}.
  if (it->is_object()) {
    for (const auto& [key, value] : it->items()) {
      if (value.is_boolean() && value.get<bool>()) return key;
    }
  }
  throw Error(ErrorKind::Region, where + ": attribute '" + options.label_key +
                                     "' does not hold a usable class label");
}

DatasetRecord parse_via_entry(const Json& entry, const std::string& key, std::int64_t image_id,
                              const DimensionManifest& dims, const ViaOptions& options) {
  const std::string path = "via[" + key + "]";
  DatasetRecord rec;
  rec.image_id = image_id;
  rec.file_name = detail::as_string(detail::field(entry, "filename", path), path + ".filename");

  auto dim = dims.find(rec.file_name);
  if (dim == dims.end()) {
    throw Error(ErrorKind::MissingMetadata,
                "no dimension entry for image '" + rec.file_name + "'");
  }
  rec.height = dim->second.height;
  rec.width = dim->second.width;

  auto regions_it = entry.find("regions");
  if (regions_it == entry.end() || regions_it->is_null()) return rec;
  const Json& regions = *regions_it;
  if (!regions.is_array() && !regions.is_object()) {
    detail::schema_error(path + ".regions", "expected an array");
  }

  std::size_t index = 0;
  for (const auto& region : regions) {
    const std::string where = "image '" + rec.file_name + "' region " + std::to_string(index);
    const std::string rpath = path + ".regions[" + std::to_string(index) + "]";
    const Json& shape = detail::field(region, "shape_attributes", rpath);
    const std::string& name =
        detail::as_string(detail::field(shape, "name", rpath + ".shape_attributes"),
                          rpath + ".shape_attributes.name");
    if (name != "polygon") {
      throw Error(ErrorKind::Region,
                  where + ": shape '" + name + "' is not supported (polygon regions only)");
    }
    const Json& xs = detail::as_array(detail::field(shape, "all_points_x", rpath),
                                      rpath + ".shape_attributes.all_points_x");
    const Json& ys = detail::as_array(detail::field(shape, "all_points_y", rpath),
                                      rpath + ".shape_attributes.all_points_y");
    if (xs.size() != ys.size()) {
      throw Error(ErrorKind::Region, where + ": all_points_x has " + std::to_string(xs.size()) +
                                         " entries but all_points_y has " +
                                         std::to_string(ys.size()));
    }
    if (xs.size() < 3) {
      throw Error(ErrorKind::Region,
                  where + ": polygon needs at least 3 points, got " + std::to_string(xs.size()));
    }
    Polygon poly;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      poly.vertices.push_back({detail::as_number(xs[k], rpath + ".all_points_x"),
                               detail::as_number(ys[k], rpath + ".all_points_y")});
    }
    validate_polygon(poly);

    Instance inst;
    inst.polygons.push_back(clamp_polygon(std::move(poly), rec.height, rec.width));
    auto attrs = region.find("region_attributes");
    inst.category = region_label(attrs == region.end() ? Json() : *attrs, options, where);
    rec.instances.push_back(std::move(inst));
    ++index;
  }
  return rec;
}

Json polygon_to_json(const Polygon& poly) {
  Json flat = Json::array();
  for (const auto& p : poly.vertices) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  return flat;
}

Json bbox_to_json(const BBox& b) { return Json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

DimensionManifest parse_dimension_manifest(std::string_view text) {
  DimensionManifest out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    ImageSize size;
    if (tokens.size() < 3 || !parse_positive(tokens[tokens.size() - 2], size.height) ||
        !parse_positive(tokens.back(), size.width)) {
      throw Error(ErrorKind::Parse, "dimension manifest line " + std::to_string(line_no) +
                                        ": expected 'file_name height width'");
    }
    // Rejoin the name from the original line so interior spacing survives.
    const auto* name_begin = tokens.front().data();
    const auto* name_end = tokens[tokens.size() - 3].data() + tokens[tokens.size() - 3].size();
    std::string name(name_begin, name_end);
    if (!out.emplace(name, size).second) {
      throw Error(ErrorKind::Parse, "dimension manifest line " + std::to_string(line_no) +
                                        ": duplicate entry for '" + name + "'");
    }
  }
  return out;
}

std::vector<DatasetRecord> parse_via(std::string_view project_text, const DimensionManifest& dims,
                                     const ViaOptions& options) {
  const Json doc = detail::parse_json(project_text, "VIA project");
  const Json* entries = &doc;
  if (auto it = doc.find("_via_img_metadata"); doc.is_object() && it != doc.end()) {
    entries = &*it;
  }
  if (!entries->is_object()) detail::schema_error("via", "expected an object of image entries");

  std::vector<DatasetRecord> records;
  std::int64_t next_id = 1;
  for (const auto& [key, entry] : entries->items()) {
    records.push_back(parse_via_entry(entry, key, next_id++, dims, options));
  }
  return records;
}

RleMask instance_mask(const Instance& inst, std::int64_t height, std::int64_t width) {
  if (inst.mask) {
    if (inst.mask->height() != height || inst.mask->width() != width) {
      throw Error(ErrorKind::DimensionMismatch, "instance mask does not match image dimensions");
    }
    return *inst.mask;
  }
  return rle_encode(rasterize_polygons(inst.polygons, height, width));
}

void validate_records(std::span<const DatasetRecord> records) {
  std::set<std::int64_t> seen;
  for (const auto& rec : records) {
    if (rec.height < 1 || rec.width < 1) {
      throw Error(ErrorKind::InvalidArgument,
                  "image " + std::to_string(rec.image_id) + " has non-positive dimensions");
    }
    if (!seen.insert(rec.image_id).second) {
      throw Error(ErrorKind::DuplicateImageId,
                  "duplicate image_id " + std::to_string(rec.image_id));
    }
  }
}

std::string export_coco(std::span<const DatasetRecord> records,
                        std::span<const std::string> category_names) {
  validate_records(records);

  std::map<std::string, std::int64_t, std::less<>> category_ids;
  for (std::size_t i = 0; i < category_names.size(); ++i) {
    category_ids.emplace(category_names[i], static_cast<std::int64_t>(i + 1));
  }

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].image_id < records[b].image_id;
  });

  Json images = Json::array();
  Json annotations = Json::array();
  std::int64_t next_ann = 1;
  for (std::size_t idx : order) {
    const DatasetRecord& rec = records[idx];
    Json img;
    img["id"] = rec.image_id;
    img["file_name"] = rec.file_name;
    img["height"] = rec.height;
    img["width"] = rec.width;
    images.push_back(std::move(img));

    for (const auto& inst : rec.instances) {
      auto cat = category_ids.find(inst.category);
      if (cat == category_ids.end()) {
        throw Error(ErrorKind::UnknownCategory, "image " + std::to_string(rec.image_id) +
                                                    ": category '" + inst.category +
                                                    "' is not in the category list");
      }
      const RleMask mask = instance_mask(inst, rec.height, rec.width);

      Json ann;
      ann["id"] = next_ann++;
      ann["image_id"] = rec.image_id;
      ann["category_id"] = cat->second;
      if (inst.mask) {
        Json seg;
        seg["size"] = Json::array({mask.height(), mask.width()});
        seg["counts"] = mask.counts();
        ann["segmentation"] = std::move(seg);
      } else {
        Json seg = Json::array();
        for (const auto& poly : inst.polygons) seg.push_back(polygon_to_json(poly));
        ann["segmentation"] = std::move(seg);
      }
      ann["area"] = mask.area();
      ann["bbox"] = bbox_to_json(bbox_from_mask(mask));
      ann["iscrowd"] = inst.is_ignore ? 1 : 0;
      annotations.push_back(std::move(ann));
    }
  }

  Json categories = Json::array();
  for (std::size_t i = 0; i < category_names.size(); ++i) {
    Json c;
    c["id"] = static_cast<std::int64_t>(i + 1);
    c["name"] = category_names[i];
    categories.push_back(std::move(c));
  }

  Json doc;
  doc["images"] = std::move(images);
  doc["annotations"] = std::move(annotations);
  doc["categories"] = std::move(categories);
  return doc.dump(1) + "\n";
}

std::vector<std::string> CocoDataset::category_names() const {
  std::vector<std::string> names;
  names.reserve(categories.size());
  for (const auto& c : categories) names.push_back(c.name);
  return names;
}

const std::string& CocoDataset::category_name(std::int64_t id) const {
  for (const auto& c : categories) {
    if (c.id == id) return c.name;
  }
  throw Error(ErrorKind::UnknownCategory, "unknown category_id " + std::to_string(id));
}

CocoDataset import_coco(std::string_view document) {
  const Json doc = detail::parse_json(document, "COCO dataset");
  CocoDataset out;

  if (auto it = doc.find("categories"); doc.is_object() && it != doc.end()) {
    const Json& cats = detail::as_array(*it, "categories");
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const std::string path = "categories[" + std::to_string(i) + "]";
      out.categories.push_back(
          {detail::as_int(detail::field(cats[i], "id", path), path + ".id"),
           detail::as_string(detail::field(cats[i], "name", path), path + ".name")});
    }
  }
  std::stable_sort(out.categories.begin(), out.categories.end(),
                   [](const CocoCategory& a, const CocoCategory& b) { return a.id < b.id; });

  const Json& images = detail::as_array(detail::field(doc, "images", "document"), "images");
  std::map<std::int64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string path = "images[" + std::to_string(i) + "]";
    DatasetRecord rec;
    rec.image_id = detail::as_int(detail::field(images[i], "id", path), path + ".id");
    rec.file_name =
        detail::as_string(detail::field(images[i], "file_name", path), path + ".file_name");
    rec.height = detail::as_int(detail::field(images[i], "height", path), path + ".height");
    rec.width = detail::as_int(detail::field(images[i], "width", path), path + ".width");
    if (rec.height < 1 || rec.width < 1) detail::schema_error(path, "non-positive dimensions");
    if (!by_id.emplace(rec.image_id, out.records.size()).second) {
      throw Error(ErrorKind::DuplicateImageId,
                  "duplicate image_id " + std::to_string(rec.image_id));
    }
    out.records.push_back(std::move(rec));
  }

  auto anns_it = doc.find("annotations");
  if (anns_it == doc.end()) return out;
  const Json& anns = detail::as_array(*anns_it, "annotations");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string path = "annotations[" + std::to_string(i) + "]";
    const Json& a = anns[i];
    const std::int64_t image_id =
        detail::as_int(detail::field(a, "image_id", path), path + ".image_id");
    auto rec_it = by_id.find(image_id);
    if (rec_it == by_id.end()) {
      throw Error(ErrorKind::ReferentialIntegrity,
                  path + ": image_id " + std::to_string(image_id) + " has no image entry");
    }
    DatasetRecord& rec = out.records[rec_it->second];

    Instance inst;
    const std::int64_t cat_id =
        detail::as_int(detail::field(a, "category_id", path), path + ".category_id");
    try {
      inst.category = out.category_name(cat_id);
    } catch (const Error&) {
      throw Error(ErrorKind::ReferentialIntegrity,
                  path + ": category_id " + std::to_string(cat_id) + " has no category entry");
    }
    if (auto crowd = a.find("iscrowd"); crowd != a.end()) {
      inst.is_ignore = detail::as_bool(*crowd, path + ".iscrowd");
    }

    const Json& seg = detail::field(a, "segmentation", path);
    if (seg.is_array()) {
      for (std::size_t k = 0; k < seg.size(); ++k) {
        const std::string ppath = path + ".segmentation[" + std::to_string(k) + "]";
        const Json& flat = detail::as_array(seg[k], ppath);
        if (flat.size() % 2 != 0 || flat.size() < 6) {
          detail::schema_error(ppath, "polygon must hold an even number (>= 6) of coordinates");
        }
        Polygon poly;
        for (std::size_t v = 0; v < flat.size(); v += 2) {
          poly.vertices.push_back({detail::as_number(flat[v], ppath),
                                   detail::as_number(flat[v + 1], ppath)});
        }
        validate_polygon(poly);
        inst.polygons.push_back(clamp_polygon(std::move(poly), rec.height, rec.width));
      }
    } else if (seg.is_object()) {
      const Json& size = detail::as_array(detail::field(seg, "size", path + ".segmentation"),
                                          path + ".segmentation.size");
      if (size.size() != 2) detail::schema_error(path + ".segmentation.size", "expected [h, w]");
      const Json& counts = detail::field(seg, "counts", path + ".segmentation");
      if (counts.is_string()) {
        detail::schema_error(path + ".segmentation.counts",
                             "compressed RLE strings are not supported; use an integer list");
      }
      std::vector<std::uint32_t> runs;
      for (const auto& c : detail::as_array(counts, path + ".segmentation.counts")) {
        const auto v = detail::as_int(c, path + ".segmentation.counts");
        if (v < 0) detail::schema_error(path + ".segmentation.counts", "negative run length");
        runs.push_back(static_cast<std::uint32_t>(v));
      }
      RleMask mask(detail::as_int(size[0], path + ".segmentation.size"),
                   detail::as_int(size[1], path + ".segmentation.size"), std::move(runs));
      if (mask.height() != rec.height || mask.width() != rec.width) {
        throw Error(ErrorKind::DimensionMismatch,
                    path + ": RLE size does not match image " + std::to_string(rec.image_id));
      }
      inst.mask = std::move(mask);
    } else {
      detail::schema_error(path + ".segmentation", "expected polygon list or RLE object");
    }
    rec.instances.push_back(std::move(inst));
  }
  return out;
}

DatasetStats dataset_stats(std::span<const DatasetRecord> records) {
  DatasetStats s;
  s.num_images = static_cast<std::int64_t>(records.size());
  bool first = true;
  for (const auto& rec : records) {
    const auto n = static_cast<std::int64_t>(rec.instances.size());
    s.total_instances += n;
    if (n > 0) ++s.num_annotated_images;
    const std::int64_t area = rec.height * rec.width;
    s.min_pixel_area = first ? area : std::min(s.min_pixel_area, area);
    s.max_pixel_area = first ? area : std::max(s.max_pixel_area, area);
    first = false;
    for (const auto& inst : rec.instances) ++s.per_category[inst.category];
  }
  return s;
}

}  // namespace bottleseg

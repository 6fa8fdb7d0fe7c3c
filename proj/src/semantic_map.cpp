#include "pgen/semantic_map.hpp"

#include <algorithm>
#include <stdexcept>

namespace pgen {

void SemanticMap::validate() const {
  if (labels.rows() < 1 || labels.cols() < 1) throw std::invalid_argument("semantic map must be at least 1x1");
  taxonomy.validate();
  int n = taxonomy.group_count();
  for (int y = 0; y < labels.rows(); ++y)
    for (int x = 0; x < labels.cols(); ++x)
      if (labels(y, x) >= n)
        throw std::invalid_argument("semantic map cell exceeds taxonomy group count");
}

SemanticMap reduce_labels(const SemanticMap& map, const ReductionTable& table) {
  if (!(map.taxonomy == table.source))
    throw std::invalid_argument("reduce_labels: map taxonomy '" + map.taxonomy.name +
                                "' does not match table source '" + table.source.name + "'");
  SemanticMap out;
  out.taxonomy = table.target;
  out.labels.resize(map.labels.rows(), map.labels.cols());
  for (int y = 0; y < map.labels.rows(); ++y)
    for (int x = 0; x < map.labels.cols(); ++x)
      out.labels(y, x) = std::uint8_t(table.mapping[map.labels(y, x)]);
  return out;
}

static LabelGrid nn_resize(const LabelGrid& in, int out_h, int out_w) {
  LabelGrid out(out_h, out_w);
  int in_h = int(in.rows()), in_w = int(in.cols());
  for (int y = 0; y < out_h; ++y) {
    int sy = nn_index(y, in_h, out_h);
    for (int x = 0; x < out_w; ++x) out(y, x) = in(sy, nn_index(x, in_w, out_w));
  }
  return out;
}

std::pair<SemanticMap, PlacementRecord> resize_pad_rect(const SemanticMap& map, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_pad: output side must be >= 1");
  if (map.labels.rows() < 1 || map.labels.cols() < 1) throw std::invalid_argument("resize_pad: empty map");
  int h = map.height(), w = map.width();
  // One scale for both axes, the tighter constraint wins.
  double scale = std::min(double(out_h) / h, double(out_w) / w);
  // Integer content dims: floor, recomputed with integer arithmetic so the
  // record inverts exactly.
  int content_h, content_w;
  if (double(out_h) * w <= double(out_w) * h) {
    content_h = out_h;
    content_w = std::max(1, int((std::int64_t(w) * out_h) / h));
  } else {
    content_w = out_w;
    content_h = std::max(1, int((std::int64_t(h) * out_w) / w));
  }
  int pad_left = (out_w - content_w) / 2;
  int pad_top = (out_h - content_h) / 2;

  SemanticMap out;
  out.taxonomy = map.taxonomy;
  out.labels = LabelGrid::Zero(out_h, out_w);
  LabelGrid content = nn_resize(map.labels, content_h, content_w);
  out.labels.block(pad_top, pad_left, content_h, content_w) = content;

  PlacementRecord rec;
  rec.scale = scale;
  rec.pad_left = pad_left;
  rec.pad_top = pad_top;
  rec.crop_box = {0, 0, w, h};
  rec.content_w = content_w;
  rec.content_h = content_h;
  rec.canvas_w = out_w;
  rec.canvas_h = out_h;
  return {std::move(out), rec};
}

std::pair<SemanticMap, PlacementRecord> resize_pad(const SemanticMap& map, int side) {
  return resize_pad_rect(map, side, side);
}

Box foreground_box(const LabelGrid& grid) {
  int min_x = int(grid.cols()), min_y = int(grid.rows()), max_x = -1, max_y = -1;
  for (int y = 0; y < grid.rows(); ++y)
    for (int x = 0; x < grid.cols(); ++x)
      if (grid(y, x) > 0) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
      }
  if (max_x < 0) return {};
  return {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

SemanticMap center_crop_resize(const SemanticMap& map, int side) {
  Box fg = foreground_box(map.labels);
  if (fg.w == 0) throw std::invalid_argument("center_crop_resize: no person present (all-background map)");
  // Crop the tight foreground box; resize_pad realizes the square expansion
  // (scale by side / longer box side, content centered with zero padding).
  SemanticMap crop;
  crop.taxonomy = map.taxonomy;
  crop.labels = map.labels.block(fg.y, fg.x, fg.h, fg.w);
  return resize_pad(crop, side).first;
}

BodyHeatmap to_heatmap(const SemanticMap& map) {
  if (map.taxonomy.group_count() != 7)
    throw std::invalid_argument("to_heatmap expects the 7-group stage-3 taxonomy, got '" + map.taxonomy.name + "'");
  BodyHeatmap hm;
  hm.taxonomy = map.taxonomy;
  int c = map.taxonomy.group_count() - 1;
  hm.channels.assign(c, LabelGrid::Zero(map.height(), map.width()));
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      int v = map.labels(y, x);
      if (v > 0) hm.channels[v - 1](y, x) = 1;
    }
  return hm;
}

SemanticMap from_heatmap(const BodyHeatmap& hm) {
  SemanticMap out;
  out.taxonomy = hm.taxonomy;
  if (hm.channels.empty()) throw std::invalid_argument("from_heatmap: empty heatmap");
  out.labels = LabelGrid::Zero(hm.channels[0].rows(), hm.channels[0].cols());
  for (int k = 0; k < hm.channel_count(); ++k)
    for (int y = 0; y < hm.channels[k].rows(); ++y)
      for (int x = 0; x < hm.channels[k].cols(); ++x)
        if (hm.channels[k](y, x)) out.labels(y, x) = std::uint8_t(k + 1);
  return out;
}

SemanticMap merge_scene_maps(const std::vector<SemanticMap>& scene_maps) {
  if (scene_maps.empty()) throw std::invalid_argument("merge_scene_maps: empty scene");
  SemanticMap out;
  out.taxonomy = scene_maps[0].taxonomy;
  out.labels = LabelGrid::Zero(scene_maps[0].height(), scene_maps[0].width());
  for (const SemanticMap& m : scene_maps) {
    if (m.height() != out.height() || m.width() != out.width())
      throw std::invalid_argument("merge_scene_maps: person maps disagree on scene dimensions");
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.labels(y, x) > 0) out.labels(y, x) = m.labels(y, x);
  }
  return out;
}

std::pair<SemanticMap, SemanticMap> build_context_pair(const std::vector<SemanticMap>& scene_maps,
                                                       int target_index) {
  if (scene_maps.size() < 2)
    throw std::invalid_argument("build_context_pair: need at least 2 person maps in the scene");
  if (target_index < 0 || target_index >= int(scene_maps.size()))
    throw std::invalid_argument("build_context_pair: target index out of range");
  std::vector<SemanticMap> context_maps;
  for (int i = 0; i < int(scene_maps.size()); ++i)
    if (i != target_index) context_maps.push_back(scene_maps[i]);
  return {merge_scene_maps(context_maps), scene_maps[target_index]};
}

}  // namespace pgen

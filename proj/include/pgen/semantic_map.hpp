#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "pgen/taxonomy.hpp"

namespace pgen {

// Row-major so that a grid row is contiguous in memory, matching raster order.
using LabelGrid = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-channel integer label grid under a named taxonomy.
struct SemanticMap {
  LabelGrid labels;
  LabelTaxonomy taxonomy;

  int height() const { return int(labels.rows()); }
  int width() const { return int(labels.cols()); }
  bool has_foreground() const { return (labels.array() > 0).any(); }

  // Throws std::invalid_argument on out-of-range labels or empty grid.
  void validate() const;
};

// Per-region binary channel stack; channel k-1 indicates label k.
struct BodyHeatmap {
  std::vector<LabelGrid> channels;
  LabelTaxonomy taxonomy;

  int channel_count() const { return int(channels.size()); }
};

struct Box {
  int x = 0, y = 0, w = 0, h = 0;
  bool operator==(const Box&) const = default;
};

// Geometry linking a canonical canvas back to the original region it came
// from: the crop_box (original coordinates) was scaled by `scale` to
// content_w x content_h and placed at (pad_left, pad_top) on the canvas.
// Content dims are stored as integers so the inverse transform is exact.
struct PlacementRecord {
  double scale = 1.0;
  int pad_left = 0, pad_top = 0;
  Box crop_box;
  int content_w = 0, content_h = 0;
  int canvas_w = 0, canvas_h = 0;

  bool operator==(const PlacementRecord&) const = default;
};

// Nearest-neighbor index mapping used everywhere a grid is rescaled:
// destination index i of a dst_len axis reads source index i*src_len/dst_len.
inline int nn_index(int i, int src_len, int dst_len) {
  return int((std::int64_t(i) * src_len) / dst_len);
}

// Pointwise label-group merge. Throws on taxonomy mismatch.
SemanticMap reduce_labels(const SemanticMap& map, const ReductionTable& table);

// Aspect-preserving nearest-neighbor resize to side x side with zero padding,
// content centered, the odd pixel going to the right/bottom pad.
std::pair<SemanticMap, PlacementRecord> resize_pad(const SemanticMap& map, int side);

// Same geometry as resize_pad but to an h x w rectangle.
std::pair<SemanticMap, PlacementRecord> resize_pad_rect(const SemanticMap& map, int out_h, int out_w);

// Crop to the tight foreground box, then resize_pad to side x side; the
// square expansion of the box is realized as centered zero padding. Throws if
// the map has no foreground.
SemanticMap center_crop_resize(const SemanticMap& map, int side);

// Stage-3 map to 6-channel binary heatmap; channel k-1 indicates label k.
BodyHeatmap to_heatmap(const SemanticMap& map);

// Inverse of to_heatmap: argmax-plus-one over channels, all-zero pixel -> 0.
SemanticMap from_heatmap(const BodyHeatmap& hm);

// Split a multi-person scene into (context = union of all but target, target
// alone). Later maps overwrite earlier ones where persons overlap.
std::pair<SemanticMap, SemanticMap> build_context_pair(const std::vector<SemanticMap>& scene_maps,
                                                       int target_index);

// Union of all person maps under the scene z-order (later overwrites earlier).
SemanticMap merge_scene_maps(const std::vector<SemanticMap>& scene_maps);

// Tight bounding box of nonzero cells. Returns w=h=0 when empty.
Box foreground_box(const LabelGrid& grid);

}  // namespace pgen

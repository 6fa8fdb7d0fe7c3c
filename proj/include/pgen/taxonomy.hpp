#pragma once

#include <string>
#include <vector>

namespace pgen {

// A named set of label groups. Index 0 is always background.
struct LabelTaxonomy {
  std::string name;
  std::vector<std::string> group_names;

  int group_count() const { return int(group_names.size()); }
  bool operator==(const LabelTaxonomy& other) const { return name == other.name && group_names == other.group_names; }

  // Throws std::invalid_argument if the taxonomy is malformed.
  void validate() const;
};

// Total map from source label indices to target label indices.
struct ReductionTable {
  LabelTaxonomy source;
  LabelTaxonomy target;
  std::vector<int> mapping;  // mapping[src_index] = target_index

  void validate() const;
};

namespace taxonomies {

// 19-group LV-MHP-v1 annotation labels.
const LabelTaxonomy& mhp19();
// 8-group reduced taxonomy used by the coarse generation stage.
const LabelTaxonomy& stage1_8();
// 16-group DeepFashion annotation labels.
const LabelTaxonomy& deepfashion16();
// 7-group reduced taxonomy used by refinement and rendering.
const LabelTaxonomy& stage3_7();

const LabelTaxonomy& by_name(const std::string& name);

// mhp-19 -> stage1-8 merge table.
const ReductionTable& mhp_to_stage1();
// deepfashion-16 -> stage3-7 merge table.
const ReductionTable& deepfashion_to_stage3();

}  // namespace taxonomies

// Text format: "taxonomy <name>" / one "group <idx> <name>" line per group, or
// "reduction <src> <dst>" / one "map <src_idx> <dst_idx>" line per source label.
LabelTaxonomy load_taxonomy(const std::string& path);
ReductionTable load_reduction_table(const std::string& path);
void save_taxonomy(const LabelTaxonomy& t, const std::string& path);
void save_reduction_table(const ReductionTable& t, const std::string& path);

}  // namespace pgen

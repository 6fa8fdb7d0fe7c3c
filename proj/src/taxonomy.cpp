#include "pgen/taxonomy.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pgen {

void LabelTaxonomy::validate() const {
  if (group_names.empty()) throw std::invalid_argument("taxonomy '" + name + "' has no groups");
  int n = group_count();
  if (n != 7 && n != 8 && n != 16 && n != 19)
    throw std::invalid_argument("taxonomy '" + name + "' has unsupported group count " + std::to_string(n));
  if (group_names[0].find("background") == std::string::npos)
    throw std::invalid_argument("taxonomy '" + name + "' group 0 must be background");
}

void ReductionTable::validate() const {
  source.validate();
  target.validate();
  if (int(mapping.size()) != source.group_count())
    throw std::invalid_argument("reduction table does not cover every source label");
  for (int m : mapping)
    if (m < 0 || m >= target.group_count())
      throw std::invalid_argument("reduction table maps outside the target taxonomy");
  if (mapping[0] != 0) throw std::invalid_argument("background must map to background");
}

namespace taxonomies {

const LabelTaxonomy& mhp19() {
  static const LabelTaxonomy t{
      "mhp-19",
      {"background", "hat", "hair", "sunglasses", "upper clothes", "skirt", "pants", "dress", "belt", "left shoe",
       "right shoe", "face", "left leg", "right leg", "left arm", "right arm", "bag", "scarf", "torso skin"}};
  return t;
}

const LabelTaxonomy& stage1_8() {
  static const LabelTaxonomy t{
      "stage1-8",
      {"background + bag", "hair", "face", "both arms + torso skin", "hat + sunglasses + upper clothes + dress + scarf",
       "skirt + pants + belt", "both legs", "both shoes"}};
  return t;
}

const LabelTaxonomy& deepfashion16() {
  static const LabelTaxonomy t{
      "deepfashion-16",
      {"background", "bag", "hair", "headwear", "face", "eyeglass", "neckwear", "skin", "top", "dress", "outer",
       "skirt", "belt", "pants", "leggings", "footwear"}};
  return t;
}

const LabelTaxonomy& stage3_7() {
  static const LabelTaxonomy t{
      "stage3-7",
      {"background + bag", "hair + headwear", "face + eyeglass", "neckwear + skin", "top + dress + outer",
       "skirt + belt + pants", "leggings + footwear"}};
  return t;
}

const LabelTaxonomy& by_name(const std::string& name) {
  if (name == "mhp-19") return mhp19();
  if (name == "stage1-8") return stage1_8();
  if (name == "deepfashion-16") return deepfashion16();
  if (name == "stage3-7") return stage3_7();
  throw std::invalid_argument("unknown taxonomy '" + name + "'");
}

const ReductionTable& mhp_to_stage1() {
  // background+bag(0), hair(1), face(2), both arms+torso skin(3),
  // hat+sunglasses+upper clothes+dress+scarf(4), skirt+pants+belt(5),
  // both legs(6), both shoes(7)
  static const ReductionTable t{
      mhp19(), stage1_8(),
      {0,   // background
       4,   // hat
       1,   // hair
       4,   // sunglasses
       4,   // upper clothes
       5,   // skirt
       5,   // pants
       4,   // dress
       5,   // belt
       7,   // left shoe
       7,   // right shoe
       2,   // face
       6,   // left leg
       6,   // right leg
       3,   // left arm
       3,   // right arm
       0,   // bag
       4,   // scarf
       3}}; // torso skin
  return t;
}

const ReductionTable& deepfashion_to_stage3() {
  // background+bag(0), hair+headwear(1), face+eyeglass(2), neckwear+skin(3),
  // top+dress+outer(4), skirt+belt+pants(5), leggings+footwear(6)
  static const ReductionTable t{
      deepfashion16(), stage3_7(),
      {0,   // background
       0,   // bag
       1,   // hair
       1,   // headwear
       2,   // face
       2,   // eyeglass
       3,   // neckwear
       3,   // skin
       4,   // top
       4,   // dress
       4,   // outer
       5,   // skirt
       5,   // belt
       5,   // pants
       6,   // leggings
       6}}; // footwear
  return t;
}

}  // namespace taxonomies

LabelTaxonomy load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open taxonomy file: " + path);
  LabelTaxonomy t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "taxonomy") {
      ss >> t.name;
    } else if (kind == "group") {
      int idx;
      ss >> idx;
      std::string name;
      std::getline(ss, name);
      if (!name.empty() && name[0] == ' ') name.erase(0, 1);
      if (idx != int(t.group_names.size()))
        throw std::runtime_error("taxonomy file has out-of-order group indices: " + path);
      t.group_names.push_back(name);
    }
  }
  t.validate();
  return t;
}

ReductionTable load_reduction_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reduction table: " + path);
  ReductionTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "reduction") {
      std::string src, dst;
      ss >> src >> dst;
      t.source = taxonomies::by_name(src);
      t.target = taxonomies::by_name(dst);
      t.mapping.assign(t.source.group_count(), -1);
    } else if (kind == "map") {
      int s, d;
      ss >> s >> d;
      if (s < 0 || s >= int(t.mapping.size())) throw std::runtime_error("map line outside source taxonomy: " + path);
      t.mapping[s] = d;
    }
  }
  t.validate();
  return t;
}

void save_taxonomy(const LabelTaxonomy& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write taxonomy file: " + path);
  out << "taxonomy " << t.name << "\n";
  for (int i = 0; i < t.group_count(); ++i) out << "group " << i << " " << t.group_names[i] << "\n";
}

void save_reduction_table(const ReductionTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write reduction table: " + path);
  out << "reduction " << t.source.name << " " << t.target.name << "\n";
  for (int i = 0; i < int(t.mapping.size()); ++i) out << "map " << i << " " << t.mapping[i] << "\n";
}

}  // namespace pgen

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pgen/kmeans.hpp"
#include "pgen/nn/backbone.hpp"
#include "pgen/semantic_map.hpp"

namespace pgen {

// Fixed injective label->RGB palette for the 7 stage-3 groups; it defines the
// encoded feature space, so it is frozen here and mirrored in
// share/palette_stage3.txt.
inline const std::array<std::array<std::uint8_t, 3>, 7>& stage3_palette() {
  static const std::array<std::array<std::uint8_t, 3>, 7> p{{
      {0, 0, 0},        // background + bag
      {128, 0, 0},      // hair + headwear
      {255, 204, 153},  // face + eyeglass
      {0, 128, 128},    // neckwear + skin
      {0, 0, 255},      // top + dress + outer
      {255, 255, 0},    // skirt + belt + pants
      {0, 255, 0},      // leggings + footwear
  }};
  return p;
}

// Palette rendering to a 1x3xHxW tensor in [-1, 1].
nn::Tensor<float> map_to_rgb_tensor(const SemanticMap& map);

// Externally pretrained deep feature encoder: 3x128x128 in, 512x4x4 out.
// Weights are fixed; implementations must be deterministic.
class FeatureExtractor {
public:
  virtual ~FeatureExtractor() = default;
  virtual nn::Tensor<float> encode(const nn::Tensor<float>& rgb) = 0;
};

// Stand-in with the 19-layer backbone topology and deterministically seeded
// weights. Real pretrained weights can be loaded into the same topology via
// the checkpoint loader; either way the weights never change after
// construction.
class SeededFeatureExtractor : public FeatureExtractor {
public:
  explicit SeededFeatureExtractor(std::uint64_t seed = 2718281828,
                                  std::vector<int> block_widths = {64, 128, 256, 512, 512})
      : backbone_(std::move(block_widths), {}, seed) {}

  nn::Tensor<float> encode(const nn::Tensor<float>& rgb) override {
    nn::Tensor<float> out = backbone_.forward(rgb);
    if (out.c != 512 || out.h != 4 || out.w != 4)
      throw std::runtime_error("feature extractor produced " + nn::Tensor<float>::shape_str(out.n, out.c, out.h, out.w) +
                               ", expected Nx512x4x4");
    return out;
  }

  nn::VggBackbone<float>& backbone() { return backbone_; }

private:
  nn::VggBackbone<float> backbone_;
};

// 128x128 canonicalization (resize_pad), palette rendering, backbone pass,
// adaptive average pooling to 512x1x1, flattened.
Eigen::VectorXf encode_map(const SemanticMap& map, FeatureExtractor& fx);

// Raw pixel features: canonicalize to the 256x176 source geometry, downscale
// to 32x22 by nearest neighbor, flatten row-major to 704 label values.
Eigen::VectorXf encode_pixels(const SemanticMap& map);

enum class FeatureScheme { Encoded512, Pixel704 };
const char* scheme_tag(FeatureScheme s);
FeatureScheme scheme_from_tag(const std::string& tag);
int scheme_dim(FeatureScheme s);

struct KBEntry {
  std::int64_t id = 0;
  SemanticMap map;  // stage-3 fine map
  Eigen::VectorXf feature;
  int cluster_id = 0;
  std::string gender;  // "women" | "men"
};

struct KnowledgeBase {
  FeatureScheme scheme = FeatureScheme::Encoded512;
  std::vector<KBEntry> entries;
  ClusterModel<double> clusters;

  int feature_dim() const { return entries.empty() ? scheme_dim(scheme) : int(entries[0].feature.size()); }
};

struct KBSample {
  SemanticMap map;
  std::string gender;
};

// Encodes every sample under `scheme` (fx required for Encoded512), fits the
// cluster model and assigns entries.
KnowledgeBase build_knowledge_base(const std::vector<KBSample>& samples, FeatureScheme scheme,
                                   FeatureExtractor* fx, const KMeansParams& params);

struct RetrievalHit {
  const KBEntry* entry;
  double score;
};

// Candidates are the query's cluster members, optionally gender-filtered,
// ranked by cosine similarity descending with ties broken by entry id.
std::vector<RetrievalHit> retrieve(const KnowledgeBase& kb, const Eigen::VectorXf& query_feature,
                                   const std::optional<std::string>& gender, int top_k);

struct AblationRow {
  int k;
  // mean cosine of the top match / top-5 matches per gender split
  double top1_men, top1_women, top1_overall;
  double top5_men, top5_women, top5_overall;
};

struct AblationReport {
  FeatureScheme scheme;
  std::vector<AblationRow> rows;  // K = 8, 16, 32, 64
};

// Refits the cluster model for each K and scores every query against its
// cluster pool. The men/women columns take the queries tagged with that
// gender against the same-gender pool; the overall column takes every query
// against the unfiltered pool.
AblationReport ablation_stats(const KnowledgeBase& kb, const std::vector<Eigen::VectorXf>& queries,
                              const std::vector<std::string>& query_genders,
                              const std::vector<int>& ks = {8, 16, 32, 64});

std::string format_ablation_report(const AblationReport& report);

// Directory layout: manifest.txt + features.f32 (little-endian float32 row
// major) + centroids.f64 + maps/<id>.pgm. The manifest carries the scheme
// tag, clustering params, the entry table and a checksum of the binary files.
void save_kb(const KnowledgeBase& kb, const std::string& dir);
KnowledgeBase load_kb(const std::string& dir);

double cosine_similarity(const Eigen::VectorXf& a, const Eigen::VectorXf& b);

}  // namespace pgen

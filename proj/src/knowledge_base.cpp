#include "pgen/knowledge_base.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pgen/raster.hpp"

namespace fs = std::filesystem;

namespace pgen {

static_assert(std::endian::native == std::endian::little, "binary feature files are little-endian");

nn::Tensor<float> map_to_rgb_tensor(const SemanticMap& map) {
  const auto& palette = stage3_palette();
  if (map.taxonomy.group_count() > int(palette.size()))
    throw std::invalid_argument("map_to_rgb_tensor: palette covers the 7-group taxonomy only");
  nn::Tensor<float> t(1, 3, map.height(), map.width());
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      const auto& rgb = palette[map.labels(y, x)];
      for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = float(rgb[c]) / 127.5f - 1.0f;
    }
  return t;
}

Eigen::VectorXf encode_map(const SemanticMap& map, FeatureExtractor& fx) {
  const SemanticMap* canonical = &map;
  SemanticMap resized;
  if (map.height() != 128 || map.width() != 128) {
    resized = resize_pad(map, 128).first;
    canonical = &resized;
  }
  nn::Tensor<float> features = fx.encode(map_to_rgb_tensor(*canonical));
  // adaptive average pooling 512x4x4 -> 512x1x1
  Eigen::VectorXf out(features.c);
  for (int c = 0; c < features.c; ++c) {
    const float* plane = features.plane_ptr(0, c);
    double acc = 0;
    for (int i = 0; i < features.plane_size(); ++i) acc += plane[i];
    out[c] = float(acc / features.plane_size());
  }
  return out;
}

Eigen::VectorXf encode_pixels(const SemanticMap& map) {
  const SemanticMap* canonical = &map;
  SemanticMap resized;
  if (map.height() != 256 || map.width() != 176) {
    resized = resize_pad_rect(map, 256, 176).first;
    canonical = &resized;
  }
  // 256x176 -> 32x22, same 1/8 factor on both axes
  Eigen::VectorXf out(704);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 22; ++x)
      out[y * 22 + x] = float(canonical->labels(nn_index(y, 256, 32), nn_index(x, 176, 22)));
  return out;
}

const char* scheme_tag(FeatureScheme s) { return s == FeatureScheme::Encoded512 ? "encoded-512" : "pixel-704"; }

FeatureScheme scheme_from_tag(const std::string& tag) {
  if (tag == "encoded-512") return FeatureScheme::Encoded512;
  if (tag == "pixel-704") return FeatureScheme::Pixel704;
  throw std::runtime_error("unknown feature scheme tag '" + tag + "'");
}

int scheme_dim(FeatureScheme s) { return s == FeatureScheme::Encoded512 ? 512 : 704; }

double cosine_similarity(const Eigen::VectorXf& a, const Eigen::VectorXf& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

KnowledgeBase build_knowledge_base(const std::vector<KBSample>& samples, FeatureScheme scheme,
                                   FeatureExtractor* fx, const KMeansParams& params) {
  if (samples.empty()) throw std::invalid_argument("build_knowledge_base: no samples");
  if (scheme == FeatureScheme::Encoded512 && fx == nullptr)
    throw std::invalid_argument("build_knowledge_base: encoded scheme needs a feature extractor");
  KnowledgeBase kb;
  kb.scheme = scheme;
  kb.entries.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    KBEntry e;
    e.id = std::int64_t(i);
    e.map = samples[i].map;
    e.gender = samples[i].gender;
    e.feature = scheme == FeatureScheme::Encoded512 ? encode_map(e.map, *fx) : encode_pixels(e.map);
    kb.entries.push_back(std::move(e));
  }
  FeatureMatrix<double> feats(samples.size(), kb.entries[0].feature.size());
  for (std::size_t i = 0; i < kb.entries.size(); ++i) feats.row(i) = kb.entries[i].feature.cast<double>();
  kb.clusters = fit_clusters(feats, params);
  for (auto& e : kb.entries) {
    Eigen::VectorXd f = e.feature.cast<double>();
    e.cluster_id = assign_cluster(kb.clusters, f);
  }
  return kb;
}

std::vector<RetrievalHit> retrieve(const KnowledgeBase& kb, const Eigen::VectorXf& query_feature,
                                   const std::optional<std::string>& gender, int top_k) {
  if (kb.entries.empty()) throw std::invalid_argument("retrieve: knowledge base is empty");
  if (top_k < 1) throw std::invalid_argument("retrieve: top_k must be >= 1");
  if (int(query_feature.size()) != kb.feature_dim())
    throw std::invalid_argument("retrieve: query dimension does not match the knowledge base scheme");
  Eigen::VectorXd q = query_feature.cast<double>();
  int cluster = assign_cluster(kb.clusters, q);
  std::vector<RetrievalHit> pool;
  for (const auto& e : kb.entries) {
    if (e.cluster_id != cluster) continue;
    if (gender && e.gender != *gender) continue;
    pool.push_back({&e, cosine_similarity(query_feature, e.feature)});
  }
  if (pool.empty()) {
    std::string hint = gender ? "no '" + *gender + "' samples in cluster " + std::to_string(cluster) +
                                    "; drop the gender filter or rebuild the knowledge base with more samples"
                              : "cluster " + std::to_string(cluster) + " is empty";
    throw std::runtime_error("retrieve: empty candidate pool (" + hint + ")");
  }
  std::sort(pool.begin(), pool.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entry->id < b.entry->id;
  });
  if (int(pool.size()) > top_k) pool.resize(top_k);
  return pool;
}

AblationReport ablation_stats(const KnowledgeBase& kb, const std::vector<Eigen::VectorXf>& queries,
                              const std::vector<std::string>& query_genders, const std::vector<int>& ks) {
  AblationReport report;
  report.scheme = kb.scheme;
  if (query_genders.size() != queries.size())
    throw std::invalid_argument("ablation_stats: need one gender tag per query");
  for (const auto& q : queries)
    if (int(q.size()) != kb.feature_dim())
      throw std::invalid_argument("ablation_stats: query dimension does not match the knowledge base scheme");

  FeatureMatrix<double> feats(kb.entries.size(), kb.feature_dim());
  for (std::size_t i = 0; i < kb.entries.size(); ++i) feats.row(i) = kb.entries[i].feature.cast<double>();

  for (int k : ks) {
    KMeansParams p = kb.clusters.params;
    p.k = k;
    ClusterModel<double> model = fit_clusters(feats, p);
    std::vector<int> labels = assign_all(model, feats);

    struct Split {
      double top1 = 0, top5 = 0;
      int count = 0;
    };
    Split splits[3];  // men, women, overall
    const std::string genders[2] = {"men", "women"};
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const auto& q = queries[qi];
      Eigen::VectorXd qd = q.cast<double>();
      int cluster = assign_cluster(model, qd);
      for (int s = 0; s < 3; ++s) {
        if (s < 2 && query_genders[qi] != genders[s]) continue;
        std::vector<double> scores;
        for (std::size_t i = 0; i < kb.entries.size(); ++i) {
          if (labels[i] != cluster) continue;
          if (s < 2 && kb.entries[i].gender != genders[s]) continue;
          scores.push_back(cosine_similarity(q, kb.entries[i].feature));
        }
        if (scores.empty()) continue;
        std::sort(scores.begin(), scores.end(), std::greater<>());
        splits[s].top1 += scores[0];
        int m = std::min<std::size_t>(5, scores.size());
        double acc = 0;
        for (int i = 0; i < m; ++i) acc += scores[i];
        splits[s].top5 += acc / m;
        ++splits[s].count;
      }
    }
    AblationRow row{};
    row.k = k;
    auto mean = [](const Split& s, bool top1) { return s.count ? (top1 ? s.top1 : s.top5) / s.count : 0.0; };
    row.top1_men = mean(splits[0], true);
    row.top1_women = mean(splits[1], true);
    row.top1_overall = mean(splits[2], true);
    row.top5_men = mean(splits[0], false);
    row.top5_women = mean(splits[1], false);
    row.top5_overall = mean(splits[2], false);
    report.rows.push_back(row);
  }
  return report;
}

std::string format_ablation_report(const AblationReport& report) {
  std::ostringstream out;
  out << "feature scheme: " << scheme_tag(report.scheme) << "\n";
  out << "               |  avg cosine of top match   |  avg cosine of top 5 matches\n";
  out << "               |   men    women   overall   |   men    women   overall\n";
  char line[160];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "K = %-10d | %7.4f  %7.4f  %7.4f  | %7.4f  %7.4f  %7.4f\n", r.k, r.top1_men,
                  r.top1_women, r.top1_overall, r.top5_men, r.top5_women, r.top5_overall);
    out << line;
  }
  return out.str();
}

namespace {

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t len, std::uint64_t h = 14695981039346656037ull) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

void write_blob(const fs::path& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data), std::streamsize(bytes));
}

std::vector<std::uint8_t> read_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> buf(std::size_t(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  return buf;
}

}  // namespace

void save_kb(const KnowledgeBase& kb, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "maps");
  const int n = int(kb.entries.size()), d = kb.feature_dim();

  std::vector<float> feat_flat(std::size_t(n) * d);
  for (int i = 0; i < n; ++i)
    std::copy_n(kb.entries[i].feature.data(), d, feat_flat.begin() + std::size_t(i) * d);
  write_blob(fs::path(dir) / "features.f32", feat_flat.data(), feat_flat.size() * sizeof(float));

  std::vector<double> cent_flat(std::size_t(kb.clusters.k) * d);
  for (int i = 0; i < kb.clusters.k; ++i)
    std::copy_n(kb.clusters.centroids.row(i).data(), d, cent_flat.begin() + std::size_t(i) * d);
  write_blob(fs::path(dir) / "centroids.f64", cent_flat.data(), cent_flat.size() * sizeof(double));

  std::uint64_t checksum = fnv1a(reinterpret_cast<const std::uint8_t*>(feat_flat.data()), feat_flat.size() * 4);
  checksum = fnv1a(reinterpret_cast<const std::uint8_t*>(cent_flat.data()), cent_flat.size() * 8, checksum);

  std::ofstream man(fs::path(dir) / "manifest.txt");
  if (!man) throw std::runtime_error("cannot write kb manifest in " + dir);
  man << "kbversion 1\n";
  man << "scheme " << scheme_tag(kb.scheme) << "\n";
  man << "taxonomy " << (kb.entries.empty() ? "stage3-7" : kb.entries[0].map.taxonomy.name) << "\n";
  man << "dim " << d << "\n";
  man << "entries " << n << "\n";
  const auto& p = kb.clusters.params;
  man << std::setprecision(17);
  man << "kmeans " << p.k << " " << p.tolerance << " " << p.max_iter << " " << p.n_init << " " << p.seed << "\n";
  man << "inertia " << kb.clusters.inertia << "\n";
  man << "checksum " << checksum << "\n";
  for (const auto& e : kb.entries) {
    std::string rel = "maps/" + std::to_string(e.id) + ".pgm";
    man << "entry " << e.id << " " << e.gender << " " << e.cluster_id << " " << rel << "\n";
    write_semantic_map(e.map, (fs::path(dir) / rel).string());
  }
}

KnowledgeBase load_kb(const std::string& dir) {
  std::ifstream man(fs::path(dir) / "manifest.txt");
  if (!man) throw std::runtime_error("cannot open kb manifest in " + dir);
  KnowledgeBase kb;
  int n = 0, d = 0;
  std::uint64_t stored_checksum = 0;
  double stored_inertia = 0;
  std::string taxonomy_name = "stage3-7";
  std::string line;
  struct Row {
    std::int64_t id;
    std::string gender;
    int cluster;
    std::string rel;
  };
  std::vector<Row> rows;
  int version = -1;
  while (std::getline(man, line)) {
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "kbversion") {
      ss >> version;
    } else if (kind == "scheme") {
      std::string tag;
      ss >> tag;
      kb.scheme = scheme_from_tag(tag);
    } else if (kind == "taxonomy") {
      ss >> taxonomy_name;
    } else if (kind == "dim") {
      ss >> d;
    } else if (kind == "entries") {
      ss >> n;
    } else if (kind == "kmeans") {
      ss >> kb.clusters.params.k >> kb.clusters.params.tolerance >> kb.clusters.params.max_iter >>
          kb.clusters.params.n_init >> kb.clusters.params.seed;
    } else if (kind == "inertia") {
      ss >> stored_inertia;
    } else if (kind == "checksum") {
      ss >> stored_checksum;
    } else if (kind == "entry") {
      Row r;
      ss >> r.id >> r.gender >> r.cluster >> r.rel;
      rows.push_back(r);
    }
  }
  if (version != 1) throw std::runtime_error("unsupported kb version in " + dir);
  if (int(rows.size()) != n) throw std::runtime_error("kb manifest entry count mismatch in " + dir);

  auto feat_bytes = read_blob(fs::path(dir) / "features.f32");
  auto cent_bytes = read_blob(fs::path(dir) / "centroids.f64");
  std::uint64_t checksum = fnv1a(feat_bytes.data(), feat_bytes.size());
  checksum = fnv1a(cent_bytes.data(), cent_bytes.size(), checksum);
  if (checksum != stored_checksum) throw std::runtime_error("kb checksum mismatch in " + dir + " (corrupted files)");
  if (feat_bytes.size() != std::size_t(n) * d * 4) throw std::runtime_error("kb feature file size mismatch in " + dir);

  kb.clusters.k = kb.clusters.params.k;
  kb.clusters.inertia = stored_inertia;
  if (cent_bytes.size() != std::size_t(kb.clusters.k) * d * 8)
    throw std::runtime_error("kb centroid file size mismatch in " + dir);
  kb.clusters.centroids.resize(kb.clusters.k, d);
  std::memcpy(kb.clusters.centroids.data(), cent_bytes.data(), cent_bytes.size());

  const LabelTaxonomy& tax = taxonomies::by_name(taxonomy_name);
  const float* feats = reinterpret_cast<const float*>(feat_bytes.data());
  for (int i = 0; i < n; ++i) {
    KBEntry e;
    e.id = rows[i].id;
    e.gender = rows[i].gender;
    e.cluster_id = rows[i].cluster;
    e.feature = Eigen::Map<const Eigen::VectorXf>(feats + std::size_t(i) * d, d);
    e.map = read_semantic_map((fs::path(dir) / rows[i].rel).string(), tax);
    kb.entries.push_back(std::move(e));
  }
  return kb;
}

}  // namespace pgen

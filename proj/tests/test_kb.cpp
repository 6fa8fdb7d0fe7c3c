#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pgen/knowledge_base.hpp"
#include "pgen/rng.hpp"

using namespace pgen;

namespace {

// Small seeded extractor: narrow trunk, final block at 512 to honor the
// 512x4x4 output contract.
SeededFeatureExtractor& test_extractor() {
  static SeededFeatureExtractor fx(99, {8, 16, 32, 64, 512});
  return fx;
}

SemanticMap figure_map(Rng& rng, int h = 64, int w = 48) {
  SemanticMap m;
  m.taxonomy = taxonomies::stage3_7();
  m.labels = LabelGrid::Zero(h, w);
  int cx = 8 + int(rng.uniform_int(std::uint64_t(w - 16)));
  int cy = 8 + int(rng.uniform_int(std::uint64_t(h - 24)));
  int bw = 6 + int(rng.uniform_int(8)), bh = 10 + int(rng.uniform_int(10));
  for (int y = cy; y < std::min(h, cy + bh); ++y)
    for (int x = cx; x < std::min(w, cx + bw); ++x) m.labels(y, x) = 4;   // torso wear
  for (int y = std::max(0, cy - 6); y < cy; ++y)
    for (int x = cx + 1; x < std::min(w, cx + bw - 1); ++x) m.labels(y, x) = 2;  // face
  for (int y = cy + bh; y < std::min(h, cy + bh + 8); ++y)
    for (int x = cx + 1; x < std::min(w, cx + bw - 1); ++x) m.labels(y, x) = 5;  // legs wear
  return m;
}

KnowledgeBase small_kb(int n, FeatureScheme scheme, int k = 3, std::uint64_t seed = 12) {
  Rng rng(seed);
  std::vector<KBSample> samples;
  for (int i = 0; i < n; ++i) samples.push_back({figure_map(rng), i % 2 ? "women" : "men"});
  KMeansParams p;
  p.k = k;
  p.seed = 7;
  return build_knowledge_base(samples, scheme, scheme == FeatureScheme::Encoded512 ? &test_extractor() : nullptr, p);
}

}  // namespace

TEST_CASE("encode_map") {
  Rng rng(3);
  SemanticMap m = figure_map(rng, 128, 128);

  SUBCASE("adaptive pooling of constant channels returns the constants") {
    // direct check of the pooling stage through a stub extractor
    struct ConstExtractor : FeatureExtractor {
      nn::Tensor<float> encode(const nn::Tensor<float>&) override {
        nn::Tensor<float> t(1, 512, 4, 4);
        for (int c = 0; c < 512; ++c)
          for (int i = 0; i < 16; ++i) t.plane_ptr(0, c)[i] = float(c) * 0.5f;
        return t;
      }
    } fx;
    Eigen::VectorXf v = encode_map(m, fx);
    REQUIRE(v.size() == 512);
    for (int c = 0; c < 512; ++c) CHECK(v[c] == doctest::Approx(c * 0.5).epsilon(1e-7));
  }

  SUBCASE("identical maps encode to identical vectors bitwise") {
    Eigen::VectorXf a = encode_map(m, test_extractor());
    Eigen::VectorXf b = encode_map(m, test_extractor());
    CHECK((a.array() == b.array()).all());
  }

  SUBCASE("one-pixel perturbation keeps cosine above 0.99") {
    Eigen::VectorXf a = encode_map(m, test_extractor());
    SemanticMap m2 = m;
    Box fg = foreground_box(m2.labels);
    m2.labels(fg.y, fg.x) = m2.labels(fg.y, fg.x) == 4 ? 5 : 4;
    Eigen::VectorXf b = encode_map(m2, test_extractor());
    CHECK(cosine_similarity(a, b) > 0.99);
  }
}

TEST_CASE("encode_pixels") {
  SUBCASE("all-background map gives the zero vector") {
    SemanticMap m;
    m.taxonomy = taxonomies::stage3_7();
    m.labels = LabelGrid::Zero(256, 176);
    Eigen::VectorXf v = encode_pixels(m);
    REQUIRE(v.size() == 704);
    CHECK((v.array() == 0).all());
  }

  SUBCASE("source geometry flattens to exactly 704 raw labels") {
    SemanticMap m;
    m.taxonomy = taxonomies::stage3_7();
    m.labels = LabelGrid::Constant(256, 176, 5);
    Eigen::VectorXf v = encode_pixels(m);
    REQUIRE(v.size() == 704);
    CHECK((v.array() == 5.0f).all());
  }

  SUBCASE("other geometries are canonicalized first") {
    Rng rng(4);
    SemanticMap m = figure_map(rng, 100, 80);
    Eigen::VectorXf v = encode_pixels(m);
    CHECK(v.size() == 704);
  }
}

TEST_CASE("retrieve") {
  KnowledgeBase kb = small_kb(24, FeatureScheme::Encoded512);

  SUBCASE("self-query returns itself first with score 1") {
    const KBEntry& probe = kb.entries[5];
    auto hits = retrieve(kb, probe.feature, std::nullopt, 3);
    REQUIRE(!hits.empty());
    CHECK(hits[0].entry->id == probe.id);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("orthogonal query scores zero against an orthogonal entry") {
    Eigen::VectorXf a = Eigen::VectorXf::Zero(4), b = Eigen::VectorXf::Zero(4);
    a[0] = 1;
    b[1] = 1;
    CHECK(cosine_similarity(a, b) == 0.0);
  }

  SUBCASE("ranking equals brute-force cosine sort within the cluster") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      int n = 5 + int(rng.uniform_int(196));
      int dim = 8;
      KnowledgeBase rkb;
      rkb.scheme = FeatureScheme::Encoded512;
      FeatureMatrix<double> feats(n, dim);
      for (int i = 0; i < n; ++i) {
        KBEntry e;
        e.id = i;
        e.gender = rng.uniform() < 0.5 ? "women" : "men";
        e.feature.resize(dim);
        for (int j = 0; j < dim; ++j) e.feature[j] = float(rng.normal());
        feats.row(i) = e.feature.cast<double>();
        rkb.entries.push_back(std::move(e));
      }
      KMeansParams p;
      p.k = 3;
      p.seed = rng.next();
      rkb.clusters = fit_clusters(feats, p);
      for (auto& e : rkb.entries) {
        Eigen::VectorXd f = e.feature.cast<double>();
        e.cluster_id = assign_cluster(rkb.clusters, f);
      }
      Eigen::VectorXf q(dim);
      for (int j = 0; j < dim; ++j) q[j] = float(rng.normal());
      Eigen::VectorXd qd = q.cast<double>();
      int cluster = assign_cluster(rkb.clusters, qd);

      auto hits = retrieve(rkb, q, std::nullopt, n);
      // oracle: brute-force sort restricted to the cluster
      std::vector<std::pair<double, std::int64_t>> want;
      for (const auto& e : rkb.entries)
        if (e.cluster_id == cluster) want.push_back({cosine_similarity(q, e.feature), e.id});
      std::sort(want.begin(), want.end(), [](auto& a, auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      REQUIRE(hits.size() == want.size());
      for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].entry->id == want[i].second);
        CHECK(hits[i].score == doctest::Approx(want[i].first).epsilon(1e-12));
      }
      // scores within [-1, 1], ordered non-increasing
      for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].score <= 1.0 + 1e-12);
        CHECK(hits[i].score >= -1.0 - 1e-12);
        if (i) CHECK(hits[i].score <= hits[i - 1].score);
      }
    }
  }

  SUBCASE("gender filter and empty-pool error") {
    // all-women kb: asking for men must error with a remediation hint
    Rng rng(9);
    std::vector<KBSample> samples;
    for (int i = 0; i < 8; ++i) samples.push_back({figure_map(rng), "women"});
    KMeansParams p;
    p.k = 2;
    KnowledgeBase kbw = build_knowledge_base(samples, FeatureScheme::Pixel704, nullptr, p);
    CHECK_THROWS_WITH_AS(retrieve(kbw, kbw.entries[0].feature, std::string("men"), 3),
                         doctest::Contains("drop the gender filter"), std::runtime_error);
    auto hits = retrieve(kbw, kbw.entries[0].feature, std::string("women"), 3);
    CHECK(!hits.empty());
  }

  SUBCASE("stored entry assignments are index-consistent") {
    for (const auto& e : kb.entries) {
      Eigen::VectorXd f = e.feature.cast<double>();
      CHECK(assign_cluster(kb.clusters, f) == e.cluster_id);
    }
  }
}

TEST_CASE("ablation_stats") {
  KnowledgeBase kb = small_kb(80, FeatureScheme::Pixel704, 3);

  SUBCASE("self queries give all means 1") {
    std::vector<Eigen::VectorXf> queries;
    std::vector<std::string> genders;
    for (int i = 0; i < 10; ++i) {
      queries.push_back(kb.entries[i].feature);
      genders.push_back(kb.entries[i].gender);
    }
    AblationReport rep = ablation_stats(kb, queries, genders, {2, 3});
    for (const auto& r : rep.rows) {
      CHECK(r.top1_overall == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(r.top1_men == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(r.top1_women == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("grid shape is 4 K-rows x 6 statistics") {
    std::vector<Eigen::VectorXf> queries{kb.entries[0].feature, kb.entries[1].feature};
    std::vector<std::string> genders{kb.entries[0].gender, kb.entries[1].gender};
    AblationReport rep = ablation_stats(kb, queries, genders, {8, 16, 32, 64});
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.rows[0].k == 8);
    CHECK(rep.rows[3].k == 64);
    std::string text = format_ablation_report(rep);
    CHECK(text.find("K = 8") != std::string::npos);
    CHECK(text.find("K = 64") != std::string::npos);
  }

  SUBCASE("scheme mismatch rejected") {
    std::vector<Eigen::VectorXf> queries{Eigen::VectorXf::Zero(512)};
    std::vector<std::string> genders{"men"};
    CHECK_THROWS_AS(ablation_stats(kb, queries, genders, {2}), std::invalid_argument);
  }
}

TEST_CASE("kb save and load round trip") {
  namespace fs = std::filesystem;
  KnowledgeBase kb = small_kb(50, FeatureScheme::Pixel704, 4);
  fs::path dir = fs::temp_directory_path() / "pgen_kb_test";
  fs::remove_all(dir);
  save_kb(kb, dir.string());
  KnowledgeBase back = load_kb(dir.string());

  CHECK(back.scheme == kb.scheme);
  CHECK(back.clusters.params == kb.clusters.params);
  CHECK(back.clusters.inertia == kb.clusters.inertia);
  CHECK((back.clusters.centroids.array() == kb.clusters.centroids.array()).all());
  REQUIRE(back.entries.size() == kb.entries.size());
  for (std::size_t i = 0; i < kb.entries.size(); ++i) {
    CHECK(back.entries[i].id == kb.entries[i].id);
    CHECK(back.entries[i].gender == kb.entries[i].gender);
    CHECK(back.entries[i].cluster_id == kb.entries[i].cluster_id);
    CHECK((back.entries[i].feature.array() == kb.entries[i].feature.array()).all());
    CHECK(back.entries[i].map.labels == kb.entries[i].map.labels);
  }

  SUBCASE("manifest records the feature scheme tag") {
    std::ifstream man(dir / "manifest.txt");
    std::string text((std::istreambuf_iterator<char>(man)), std::istreambuf_iterator<char>());
    CHECK(text.find("scheme pixel-704") != std::string::npos);
  }

  SUBCASE("tampered feature file fails the checksum") {
    auto fpath = dir / "features.f32";
    std::fstream f(fpath, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(10);
    char byte;
    f.seekg(10);
    f.get(byte);
    byte ^= 0x40;
    f.seekp(10);
    f.put(byte);
    f.close();
    CHECK_THROWS_WITH_AS(load_kb(dir.string()), doctest::Contains("checksum"), std::runtime_error);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "pgen/rng.hpp"
#include "pgen/semantic_map.hpp"
#include "pgen/taxonomy.hpp"

using namespace pgen;

namespace {

SemanticMap random_map(int h, int w, const LabelTaxonomy& tax, Rng& rng) {
  SemanticMap m;
  m.taxonomy = tax;
  m.labels.resize(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.labels(y, x) = std::uint8_t(rng.uniform_int(tax.group_count()));
  return m;
}

std::set<int> label_set(const LabelGrid& g) {
  std::set<int> s;
  for (int y = 0; y < g.rows(); ++y)
    for (int x = 0; x < g.cols(); ++x) s.insert(g(y, x));
  return s;
}

}  // namespace

TEST_CASE("builtin taxonomies and tables validate") {
  taxonomies::mhp19().validate();
  taxonomies::stage1_8().validate();
  taxonomies::deepfashion16().validate();
  taxonomies::stage3_7().validate();
  taxonomies::mhp_to_stage1().validate();
  taxonomies::deepfashion_to_stage3().validate();
  CHECK(taxonomies::mhp19().group_count() == 19);
  CHECK(taxonomies::stage1_8().group_count() == 8);
  CHECK(taxonomies::deepfashion16().group_count() == 16);
  CHECK(taxonomies::stage3_7().group_count() == 7);
}

TEST_CASE("reduce_labels merge table") {
  const auto& table = taxonomies::mhp_to_stage1();
  SemanticMap m;
  m.taxonomy = taxonomies::mhp19();

  SUBCASE("bag merges into background, background stays") {
    m.labels.resize(1, 2);
    m.labels(0, 0) = 16;  // bag
    m.labels(0, 1) = 0;
    SemanticMap out = reduce_labels(m, table);
    CHECK(out.labels(0, 0) == 0);
    CHECK(out.labels(0, 1) == 0);
    CHECK(out.taxonomy == taxonomies::stage1_8());
  }

  SUBCASE("2x2 grid from the merge list") {
    m.labels.resize(2, 2);
    m.labels << 11, 2, 14, 9;  // face, hair, left arm, left shoe
    SemanticMap out = reduce_labels(m, table);
    CHECK(out.labels(0, 0) == 2);
    CHECK(out.labels(0, 1) == 1);
    CHECK(out.labels(1, 0) == 3);
    CHECK(out.labels(1, 1) == 7);
  }

  SUBCASE("taxonomy mismatch rejected") {
    m.taxonomy = taxonomies::deepfashion16();
    m.labels.resize(1, 1);
    m.labels(0, 0) = 0;
    CHECK_THROWS_AS(reduce_labels(m, table), std::invalid_argument);
  }

  SUBCASE("identity reduction is idempotent") {
    ReductionTable ident{taxonomies::stage1_8(), taxonomies::stage1_8(), {0, 1, 2, 3, 4, 5, 6, 7}};
    Rng rng(3);
    SemanticMap r = random_map(9, 7, taxonomies::stage1_8(), rng);
    SemanticMap once = reduce_labels(r, ident);
    SemanticMap twice = reduce_labels(once, ident);
    CHECK(once.labels == r.labels);
    CHECK(twice.labels == once.labels);
  }
}

// Independent integer-arithmetic oracle for resize_pad geometry.
static void resize_pad_oracle(int h, int w, int side, int& ch, int& cw, int& pl, int& pt) {
  if (h >= w) {
    ch = side;
    cw = int((long(w) * side) / h);
  } else {
    cw = side;
    ch = int((long(h) * side) / w);
  }
  pl = (side - cw) / 2;
  pt = (side - ch) / 2;
}

TEST_CASE("resize_pad geometry and record") {
  Rng rng(17);

  SUBCASE("600x400 to 368 canvas") {
    int ch, cw, pl, pt;
    resize_pad_oracle(600, 400, 368, ch, cw, pl, pt);
    CHECK(ch == 368);
    CHECK(cw == 245);
    CHECK(pl == 61);

    SemanticMap m = random_map(600, 400, taxonomies::stage1_8(), rng);
    auto [out, rec] = resize_pad(m, 368);
    CHECK(out.height() == 368);
    CHECK(out.width() == 368);
    CHECK(rec.content_h == 368);
    CHECK(rec.content_w == 245);
    CHECK(rec.pad_left == 61);
    CHECK(rec.pad_top == 0);
    // extra pad pixel goes to the right
    CHECK(368 - rec.pad_left - rec.content_w == 62);
    CHECK(rec.scale == doctest::Approx(368.0 / 600.0));
    CHECK(rec.crop_box == Box{0, 0, 400, 600});
  }

  SUBCASE("identity when already square at side") {
    SemanticMap m = random_map(368, 368, taxonomies::stage1_8(), rng);
    auto [out, rec] = resize_pad(m, 368);
    CHECK(out.labels == m.labels);
    CHECK(rec.scale == 1.0);
    CHECK(rec.pad_left == 0);
    CHECK(rec.pad_top == 0);
  }

  SUBCASE("nearest-neighbor introduces no new labels") {
    for (int trial = 0; trial < 30; ++trial) {
      int h = 3 + int(rng.uniform_int(120)), w = 3 + int(rng.uniform_int(120));
      SemanticMap m = random_map(h, w, taxonomies::stage1_8(), rng);
      // sparsify to labels {0,4} for some trials
      if (trial % 3 == 0)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) m.labels(y, x) = m.labels(y, x) < 4 ? 0 : 4;
      auto [out, rec] = resize_pad(m, 64);
      auto in_set = label_set(m.labels);
      in_set.insert(0);  // padding value
      for (int v : label_set(out.labels)) CHECK(in_set.count(v) == 1);
    }
  }

  SUBCASE("record inverts to original dimensions exactly") {
    for (int trial = 0; trial < 50; ++trial) {
      int h = 1 + int(rng.uniform_int(500)), w = 1 + int(rng.uniform_int(500));
      SemanticMap m = random_map(h, w, taxonomies::stage1_8(), rng);
      auto [out, rec] = resize_pad(m, 96);
      CHECK(rec.crop_box.h == h);
      CHECK(rec.crop_box.w == w);
      CHECK(rec.pad_left >= 0);
      CHECK(rec.pad_top >= 0);
      CHECK(rec.scale > 0.0);
      CHECK(rec.content_h + rec.pad_top <= 96);
      CHECK(rec.content_w + rec.pad_left <= 96);
      // integer content dims agree with the real-scale floor
      CHECK(rec.content_h == int(std::floor(double(h) * 96.0 / std::max(h, w))));
    }
  }

  SUBCASE("empty map rejected") {
    SemanticMap m;
    m.taxonomy = taxonomies::stage1_8();
    m.labels.resize(0, 0);
    CHECK_THROWS_AS(resize_pad(m, 64), std::invalid_argument);
  }
}

TEST_CASE("center_crop_resize") {
  SUBCASE("tight box expanded to longer side, derived geometry") {
    // foreground in x [10,50), y [10,90) of a 200x200 map: box 40x80
    SemanticMap m;
    m.taxonomy = taxonomies::stage3_7();
    m.labels = LabelGrid::Zero(200, 200);
    for (int y = 10; y < 90; ++y)
      for (int x = 10; x < 50; ++x) m.labels(y, x) = 4;
    SemanticMap out = center_crop_resize(m, 128);
    CHECK(out.height() == 128);
    CHECK(out.width() == 128);
    // oracle: crop side 80 scaled by 128/80 = 1.6, content 64 wide centered
    Box fg = foreground_box(out.labels);
    CHECK(fg.h == 128);
    CHECK(fg.w == 64);
    CHECK(fg.x == 32);
    CHECK(fg.y == 0);
  }

  SUBCASE("foreground filling the whole map equals resize_pad") {
    Rng rng(5);
    SemanticMap m = random_map(100, 60, taxonomies::stage3_7(), rng);
    m.labels = m.labels.array().max(std::uint8_t(1));  // no background anywhere
    SemanticMap a = center_crop_resize(m, 128);
    SemanticMap b = resize_pad(m, 128).first;
    CHECK(a.labels == b.labels);
  }

  SUBCASE("all-background map errors") {
    SemanticMap m;
    m.taxonomy = taxonomies::stage3_7();
    m.labels = LabelGrid::Zero(30, 30);
    CHECK_THROWS_AS(center_crop_resize(m, 128), std::invalid_argument);
  }
}

TEST_CASE("to_heatmap") {
  SUBCASE("label 4 lights channel 3 only") {
    SemanticMap m;
    m.taxonomy = taxonomies::stage3_7();
    m.labels = LabelGrid::Zero(4, 4);
    m.labels(1, 2) = 4;
    BodyHeatmap hm = to_heatmap(m);
    REQUIRE(hm.channel_count() == 6);
    for (int k = 0; k < 6; ++k) CHECK(hm.channels[k](1, 2) == (k == 3 ? 1 : 0));
  }

  SUBCASE("all-background map gives zero channels") {
    SemanticMap m;
    m.taxonomy = taxonomies::stage3_7();
    m.labels = LabelGrid::Zero(5, 5);
    BodyHeatmap hm = to_heatmap(m);
    for (const auto& ch : hm.channels) CHECK((ch.array() == 0).all());
  }

  SUBCASE("channel sums are 0 or 1 and roundtrip reconstructs") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      SemanticMap m = random_map(17, 13, taxonomies::stage3_7(), rng);
      BodyHeatmap hm = to_heatmap(m);
      for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 13; ++x) {
          int sum = 0;
          for (const auto& ch : hm.channels) sum += ch(y, x);
          CHECK((sum == 0 || sum == 1));
        }
      SemanticMap back = from_heatmap(hm);
      CHECK(back.labels == m.labels);
    }
  }

  SUBCASE("wrong taxonomy rejected") {
    SemanticMap m;
    m.taxonomy = taxonomies::stage1_8();
    m.labels = LabelGrid::Zero(4, 4);
    CHECK_THROWS_AS(to_heatmap(m), std::invalid_argument);
  }
}

TEST_CASE("build_context_pair") {
  auto person = [](int h, int w, int x0, int y0, int x1, int y1, std::uint8_t v) {
    SemanticMap m;
    m.taxonomy = taxonomies::stage1_8();
    m.labels = LabelGrid::Zero(h, w);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) m.labels(y, x) = v;
    return m;
  };

  SUBCASE("three-person scene, target held out") {
    std::vector<SemanticMap> scene{person(20, 20, 0, 0, 5, 5, 1), person(20, 20, 8, 8, 12, 12, 2),
                                   person(20, 20, 15, 15, 19, 19, 3)};
    auto [context, target] = build_context_pair(scene, 1);
    CHECK(context.labels(2, 2) == 1);
    CHECK(context.labels(17, 17) == 3);
    CHECK(context.labels(10, 10) == 0);  // held out
    CHECK(target.labels(10, 10) == 2);
    CHECK((target.labels.array() == 1).count() == 0);
  }

  SUBCASE("non-overlapping pair partitions the scene") {
    std::vector<SemanticMap> scene{person(16, 16, 0, 0, 4, 4, 5), person(16, 16, 8, 8, 12, 12, 6)};
    auto [context, target] = build_context_pair(scene, 0);
    SemanticMap full = merge_scene_maps(scene);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        bool in_union = context.labels(y, x) > 0 || target.labels(y, x) > 0;
        CHECK(in_union == (full.labels(y, x) > 0));
      }
  }

  SUBCASE("overlap takes the later person's label (z-order replay oracle)") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<SemanticMap> scene;
      int np = 3 + int(rng.uniform_int(3));
      for (int i = 0; i < np; ++i) {
        int x0 = int(rng.uniform_int(10)), y0 = int(rng.uniform_int(10));
        scene.push_back(person(24, 24, x0, y0, x0 + 8, y0 + 8, std::uint8_t(1 + rng.uniform_int(7))));
      }
      int target = int(rng.uniform_int(np));
      auto [context, tgt] = build_context_pair(scene, target);
      // oracle: replay compositing order pixelwise
      LabelGrid expect = LabelGrid::Zero(24, 24);
      for (int i = 0; i < np; ++i) {
        if (i == target) continue;
        for (int y = 0; y < 24; ++y)
          for (int x = 0; x < 24; ++x)
            if (scene[i].labels(y, x) > 0) expect(y, x) = scene[i].labels(y, x);
      }
      CHECK(context.labels == expect);
      CHECK(tgt.labels == scene[target].labels);
    }
  }

  SUBCASE("single-person scene rejected") {
    std::vector<SemanticMap> scene{person(8, 8, 0, 0, 4, 4, 1)};
    CHECK_THROWS_AS(build_context_pair(scene, 0), std::invalid_argument);
  }
}

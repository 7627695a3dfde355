/*
 * Copyright 2026 The typeforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "typeforge/clseval.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/manifest.hpp"
#include "typeforge/retrieval.hpp"
#include "typeforge/rng.hpp"

namespace tf = typeforge;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("tf_eval_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

TEST_CASE("manifest round-trips through csv") {
  tf::Manifest m;
  m.rows.push_back({"t1/d1/a", "t1/d1", "t1", "train", "/data/t1/d1/a.png"});
  m.rows.push_back({"t2/d2/b", "t2/d2", "t2", "test", "/data/t2/d2/b.jpg"});

  const fs::path dir = temp_dir();
  const fs::path p = dir / "manifest.csv";
  tf::save_manifest(m, p.string());
  const tf::Manifest loaded = tf::load_manifest(p.string());
  REQUIRE(loaded.rows.size() == 2);
  REQUIRE(loaded.rows[0].image_id == "t1/d1/a");
  REQUIRE(loaded.rows[1].split == "test");
  REQUIRE(loaded.rows[1].path == "/data/t2/d2/b.jpg");
  REQUIRE(loaded.split_rows("train").size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("manifest validation rejects bad rows") {
  tf::Manifest dup;
  dup.rows.push_back({"a", "d", "t", "train", "p"});
  dup.rows.push_back({"a", "d", "t", "test", "q"});
  REQUIRE_THROWS_AS(tf::validate_manifest(dup), tf::DuplicateImageIdError);

  tf::Manifest bad_split;
  bad_split.rows.push_back({"a", "d", "t", "validation", "p"});
  REQUIRE_THROWS_AS(tf::validate_manifest(bad_split), tf::ValidationError);

  tf::Manifest comma;
  comma.rows.push_back({"a,b", "d", "t", "train", "p"});
  REQUIRE_THROWS_AS(tf::validate_manifest(comma), tf::ValidationError);

  tf::Manifest empty_field;
  empty_field.rows.push_back({"a", "", "t", "train", "p"});
  REQUIRE_THROWS_AS(tf::validate_manifest(empty_field), tf::ValidationError);
}

TEST_CASE("load_manifest rejects foreign headers and missing files") {
  const fs::path dir = temp_dir();
  const fs::path p = dir / "bad.csv";
  {
    std::ofstream out(p);
    out << "id,doc,type\n";
  }
  REQUIRE_THROWS_AS(tf::load_manifest(p.string()), tf::ValidationError);
  REQUIRE_THROWS_AS(tf::load_manifest((dir / "absent.csv").string()),
                    tf::MissingFileError);
  fs::remove_all(dir);
}

TEST_CASE("manifest_from_tree builds sorted rows with the requested split") {
  const fs::path dir = temp_dir();
  for (const char* rel :
       {"typeB/doc1/img2.png", "typeB/doc1/img1.png", "typeA/doc1/x.jpg",
        "typeA/doc2/y.jpeg", "typeC/doc9/z.png", "typeA/doc1/notes.txt"}) {
    const fs::path p = dir / rel;
    fs::create_directories(p.parent_path());
    std::ofstream(p) << "stub";
  }
  const tf::Manifest m = tf::manifest_from_tree(dir.string(), {"typeB"});
  REQUIRE(m.rows.size() == 5);  // the .txt file is skipped
  REQUIRE(m.rows[0].image_id == "typeA/doc1/x");
  REQUIRE(m.rows[1].image_id == "typeA/doc2/y");
  REQUIRE(m.rows[2].image_id == "typeB/doc1/img1");
  REQUIRE(m.rows[3].image_id == "typeB/doc1/img2");
  REQUIRE(m.rows[4].image_id == "typeC/doc9/z");
  for (const auto& r : m.rows) {
    REQUIRE(r.split == (r.type_label == "typeB" ? "test" : "train"));
    REQUIRE(r.document_id == r.type_label + "/" +
                                 fs::path(r.image_id).parent_path()
                                     .filename()
                                     .string());
  }
  REQUIRE_THROWS_AS(tf::manifest_from_tree(dir.string(), {"typeZ"}),
                    tf::ValidationError);
  REQUIRE_THROWS_AS(
      tf::manifest_from_tree((dir / "nowhere").string(), {}),
      tf::MissingFileError);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Average precision and retrieval metrics
// ---------------------------------------------------------------------------

TEST_CASE("average_precision matches hand-computed rankings") {
  REQUIRE(tf::average_precision({0, 0, 1}, 1) ==
          Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  REQUIRE(tf::average_precision({1, 0, 1}, 2) ==
          Catch::Approx(5.0 / 6.0).epsilon(1e-12));
  REQUIRE(tf::average_precision({1, 1, 1}, 3) ==
          Catch::Approx(1.0).epsilon(1e-12));
  // Relevant items missing from the ranking still divide the sum.
  REQUIRE(tf::average_precision({1}, 2) ==
          Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE_THROWS_AS(tf::average_precision({0, 1}, 0), tf::ValidationError);
}

namespace {

std::vector<tf::EvalItem> tiny_gallery() {
  // Two types, two documents each; vectors chosen so same-type images
  // score higher except for one deliberate confusion.
  std::vector<tf::EvalItem> items;
  const auto add = [&](const char* id, const char* doc, const char* label,
                       std::vector<float> v) {
    items.push_back({id, doc, label, std::move(v)});
  };
  add("a1", "dA", "alpha", {1.0f, 0.0f});
  add("a2", "dA", "alpha", {0.9f, 0.1f});
  add("b1", "dB", "beta", {0.0f, 1.0f});
  add("b2", "dB", "beta", {0.1f, 0.9f});
  return items;
}

// Independent metric computation: selection-ranked, long-double AP.
tf::MetricsReport oracle_evaluate(const std::vector<tf::EvalItem>& items,
                                  tf::Protocol protocol) {
  std::size_t scored = 0;
  std::size_t excluded = 0;
  std::size_t top1 = 0;
  std::size_t top10 = 0;
  long double ap_sum = 0.0L;
  for (std::size_t q = 0; q < items.size(); ++q) {
    struct Cand {
      double score;
      const tf::EvalItem* item;
      bool taken = false;
    };
    std::vector<Cand> cands;
    std::size_t relevant = 0;
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (j == q) continue;
      if (protocol == tf::Protocol::kOneVsOtherDocs &&
          items[j].document_id == items[q].document_id) {
        continue;
      }
      cands.push_back(
          {tf::encoding_score(items[q].values, items[j].values), &items[j]});
      if (items[j].type_label == items[q].type_label) ++relevant;
    }
    if (relevant == 0) {
      ++excluded;
      continue;
    }
    ++scored;
    // Selection ranking with the same total order.
    std::size_t hits = 0;
    long double ap = 0.0L;
    for (std::size_t rank = 1; rank <= cands.size(); ++rank) {
      std::size_t best = cands.size();
      for (std::size_t c = 0; c < cands.size(); ++c) {
        if (cands[c].taken) continue;
        if (best == cands.size() ||
            cands[c].score > cands[best].score ||
            (cands[c].score == cands[best].score &&
             cands[c].item->image_id < cands[best].item->image_id)) {
          best = c;
        }
      }
      cands[best].taken = true;
      const bool rel =
          cands[best].item->type_label == items[q].type_label;
      if (rel) {
        ++hits;
        ap += static_cast<long double>(hits) / rank;
        if (rank == 1) ++top1;
        if (rank <= 10 && hits == 1) ++top10;
      }
    }
    ap_sum += ap / relevant;
  }
  tf::MetricsReport r;
  r.scored = scored;
  r.excluded = excluded;
  r.top1_percent = 100.0 * static_cast<double>(top1) / scored;
  r.top10_percent = 100.0 * static_cast<double>(top10) / scored;
  r.map_percent = static_cast<double>(100.0L * ap_sum / scored);
  return r;
}

}  // namespace

TEST_CASE("evaluate_retrieval on the tiny gallery") {
  const auto items = tiny_gallery();
  const tf::MetricsReport all =
      tf::evaluate_retrieval(items, tf::Protocol::kOneVsAll);
  REQUIRE(all.scored == 4);
  REQUIRE(all.excluded == 0);
  REQUIRE(all.top1_percent == Catch::Approx(100.0));
  REQUIRE(all.top10_percent == Catch::Approx(100.0));
  REQUIRE(all.map_percent == Catch::Approx(100.0));

  // Same-document exclusion removes the only same-type partner, so every
  // query loses its relevant set.
  REQUIRE_THROWS_AS(
      tf::evaluate_retrieval(items, tf::Protocol::kOneVsOtherDocs),
      tf::NoTestImagesError);
}

TEST_CASE("one-vs-other-docs drops same-document items only") {
  auto items = tiny_gallery();
  // A second alpha document makes the protocol satisfiable for alphas.
  items.push_back({"a3", "dC", "alpha", {0.95f, 0.05f}});
  const tf::MetricsReport r =
      tf::evaluate_retrieval(items, tf::Protocol::kOneVsOtherDocs);
  // a1, a2, a3 keep a relevant item; b1, b2 do not.
  REQUIRE(r.scored == 3);
  REQUIRE(r.excluded == 2);
  REQUIRE(r.top1_percent == Catch::Approx(100.0));
}

TEST_CASE("retrieval ties rank by image id") {
  std::vector<tf::EvalItem> items;
  items.push_back({"q", "d0", "t", {1.0f, 0.0f}});
  // Identical scores; the id decides the order deterministically.
  items.push_back({"z_same", "d1", "t", {0.5f, 0.5f}});
  items.push_back({"a_other", "d2", "u", {0.5f, 0.5f}});
  items.push_back({"m_other", "d3", "u", {0.5f, 0.5f}});
  const tf::MetricsReport r =
      tf::evaluate_retrieval(items, tf::Protocol::kOneVsAll);
  // For query q, a_other ranks first among the tied trio, so top1 misses;
  // only q itself is scored against relevant z_same at rank 3.
  // q: gallery {z_same (t), a_other (u), m_other (u)}; all score 0.5.
  // Order: a_other, m_other, z_same. top1 = 0, ap = 1/3.
  REQUIRE(r.scored >= 1);
  const tf::MetricsReport orc =
      oracle_evaluate(items, tf::Protocol::kOneVsAll);
  REQUIRE(r.top1_percent == Catch::Approx(orc.top1_percent).margin(1e-12));
  REQUIRE(r.map_percent == Catch::Approx(orc.map_percent).margin(1e-12));
}

TEST_CASE("evaluate_retrieval matches the oracle on random galleries") {
  tf::Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 4 + rng.below(20);
    const int n_types = 2 + static_cast<int>(rng.below(4));
    const int n_docs = 2 + static_cast<int>(rng.below(5));
    const std::size_t dim = 3 + rng.below(6);
    std::vector<tf::EvalItem> items;
    for (std::size_t i = 0; i < n; ++i) {
      tf::EvalItem it;
      it.image_id = "img" + std::to_string(i);
      it.type_label = "t" + std::to_string(rng.below(n_types));
      it.document_id =
          it.type_label + "/d" + std::to_string(rng.below(n_docs));
      it.values.resize(dim);
      double sq = 0.0;
      for (auto& v : it.values) {
        v = static_cast<float>(rng.gaussian());
        sq += static_cast<double>(v) * v;
      }
      const float inv = static_cast<float>(1.0 / std::sqrt(sq));
      for (auto& v : it.values) v *= inv;
      items.push_back(std::move(it));
    }
    for (const tf::Protocol protocol :
         {tf::Protocol::kOneVsAll, tf::Protocol::kOneVsOtherDocs}) {
      tf::MetricsReport got;
      bool threw_got = false;
      try {
        got = tf::evaluate_retrieval(items, protocol);
      } catch (const tf::NoTestImagesError&) {
        threw_got = true;
      }
      const tf::MetricsReport want = oracle_evaluate(items, protocol);
      if (threw_got) {
        REQUIRE(want.scored == 0);
        continue;
      }
      REQUIRE(got.scored == want.scored);
      REQUIRE(got.excluded == want.excluded);
      REQUIRE(got.top1_percent ==
              Catch::Approx(want.top1_percent).margin(1e-12));
      REQUIRE(got.top10_percent ==
              Catch::Approx(want.top10_percent).margin(1e-12));
      REQUIRE(got.map_percent ==
              Catch::Approx(want.map_percent).margin(1e-12));
    }
  }
}

TEST_CASE("evaluate_retrieval is independent of thread count") {
  tf::Rng rng(77);
  std::vector<tf::EvalItem> items;
  for (int i = 0; i < 40; ++i) {
    tf::EvalItem it;
    it.image_id = "i" + std::to_string(i);
    it.type_label = "t" + std::to_string(i % 4);
    it.document_id = it.type_label + "/d" + std::to_string(i % 3);
    it.values = {static_cast<float>(rng.gaussian()),
                 static_cast<float>(rng.gaussian()),
                 static_cast<float>(rng.gaussian())};
    items.push_back(it);
  }
  const tf::MetricsReport a =
      tf::evaluate_retrieval(items, tf::Protocol::kOneVsOtherDocs, 1);
  const tf::MetricsReport b =
      tf::evaluate_retrieval(items, tf::Protocol::kOneVsOtherDocs, 8);
  REQUIRE(a.top1_percent == b.top1_percent);
  REQUIRE(a.top10_percent == b.top10_percent);
  REQUIRE(a.map_percent == b.map_percent);
  REQUIRE(a.scored == b.scored);
}

TEST_CASE("evaluate_retrieval validates input") {
  REQUIRE_THROWS_AS(
      tf::evaluate_retrieval({}, tf::Protocol::kOneVsAll),
      tf::NoTestImagesError);
  std::vector<tf::EvalItem> ragged;
  ragged.push_back({"a", "d", "t", {1.0f}});
  ragged.push_back({"b", "e", "t", {1.0f, 2.0f}});
  REQUIRE_THROWS_AS(
      tf::evaluate_retrieval(ragged, tf::Protocol::kOneVsAll),
      tf::DimensionMismatchError);
}

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

TEST_CASE("score_confusion matches a hand-computed matrix") {
  std::vector<tf::Prediction> preds = {
      {"i1", "A", "A"},
      {"i2", "A", "B"},
      {"i3", "B", "B"},
      {"i4", "B", "B"},
  };
  const tf::ConfusionMatrix cm = tf::build_confusion(preds);
  REQUIRE(cm.k() == 2);
  REQUIRE(cm.at(0, 0) == 1);
  REQUIRE(cm.at(0, 1) == 1);
  REQUIRE(cm.at(1, 0) == 0);
  REQUIRE(cm.at(1, 1) == 2);
  const tf::ClassificationScore s = tf::score_confusion(cm);
  REQUIRE(s.total == 4);
  REQUIRE(s.overall_percent == Catch::Approx(75.0).epsilon(1e-12));
  REQUIRE(s.average_percent == Catch::Approx(75.0).epsilon(1e-12));
}

TEST_CASE("the committed fixture reproduces the published scores") {
  const std::string path = std::string(TF_FIXTURES_DIR) + "/table1.csv";
  const std::vector<tf::Prediction> preds = tf::load_predictions(path);
  REQUIRE(preds.size() == 2600);
  const tf::ClassificationScore s =
      tf::score_confusion(tf::build_confusion(preds));
  REQUIRE(s.total == 2600);
  REQUIRE(s.overall_percent == Catch::Approx(51.423077).margin(1e-4));
  REQUIRE(s.average_percent == Catch::Approx(73.871349).margin(1e-4));
  // The published rounded values.
  REQUIRE(std::fabs(s.overall_percent - 51.4) <= 0.05);
  REQUIRE(std::fabs(s.average_percent - 73.9) <= 0.05);
}

TEST_CASE("predictions csv round-trips and rejects bad input") {
  const fs::path dir = temp_dir();
  const fs::path p = dir / "preds.csv";
  std::vector<tf::Prediction> preds = {{"x", "A", "B"}, {"y", "B", "B"}};
  tf::save_predictions(preds, p.string());
  const auto loaded = tf::load_predictions(p.string());
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].image_id == "x");
  REQUIRE(loaded[1].predicted_label == "B");

  const fs::path bad = dir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "a,b\n1,2\n";
  }
  REQUIRE_THROWS_AS(tf::load_predictions(bad.string()), tf::ValidationError);
  REQUIRE_THROWS_AS(tf::load_predictions((dir / "absent").string()),
                    tf::MissingFileError);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Patch sampling and augmentation
// ---------------------------------------------------------------------------

namespace {

tf::RgbImage text_like_image(int w, int h, std::uint64_t seed) {
  tf::Rng rng(seed);
  tf::RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Light paper with occasional dark strokes.
      const bool stroke = (x / 7 + y / 11) % 5 == 0 && rng.uniform() < 0.7;
      const std::uint8_t v =
          stroke ? static_cast<std::uint8_t>(20 + rng.below(40))
                 : static_cast<std::uint8_t>(200 + rng.below(50));
      std::uint8_t* p = img.px(x, y);
      p[0] = v;
      p[1] = static_cast<std::uint8_t>(std::max(0, v - 5));
      p[2] = static_cast<std::uint8_t>(std::max(0, v - 10));
    }
  }
  return img;
}

}  // namespace

TEST_CASE("sample_patches stays in bounds and is deterministic") {
  const tf::RgbImage img = text_like_image(80, 60, 5);
  tf::Rng rng_a(9);
  const auto a = tf::sample_patches(img, 10, 32, 24, rng_a);
  REQUIRE(a.size() == 10);
  for (const auto& p : a) {
    REQUIRE(p.width == 32);
    REQUIRE(p.height == 24);
  }
  tf::Rng rng_b(9);
  const auto b = tf::sample_patches(img, 10, 32, 24, rng_b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].data == b[i].data);
  }

  // A full-size patch can only be the image itself.
  tf::Rng rng_c(1);
  const auto c = tf::sample_patches(img, 2, 80, 60, rng_c);
  REQUIRE(c[0].data == img.data);
  REQUIRE(c[1].data == img.data);

  tf::Rng rng_d(2);
  REQUIRE_THROWS_AS(tf::sample_patches(img, 1, 81, 60, rng_d),
                    tf::ImageTooSmallForPatchError);
}

TEST_CASE("sample_augment_params draws from the documented ranges") {
  tf::AugmentPolicy policy;
  tf::Rng rng(31337);
  int otsu = 0;
  int sauvola = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const tf::AugmentParams p = tf::sample_augment_params(policy, rng);
    REQUIRE(p.rotation_deg > -15.0);
    REQUIRE(p.rotation_deg < 15.0);
    REQUIRE(p.shear_deg > -3.0);
    REQUIRE(p.shear_deg < 3.0);
    REQUIRE(p.scale > 0.9);
    REQUIRE(p.scale < 1.1);
    REQUIRE(p.jpeg_quality >= 2);
    REQUIRE(p.jpeg_quality <= 99);
    if (p.binarize == tf::BinarizeChoice::kOtsu) ++otsu;
    if (p.binarize == tf::BinarizeChoice::kSauvola) ++sauvola;
  }
  // 5 sigma of a binomial at p=0.05 / p=0.025 over 20000 draws.
  REQUIRE(std::fabs(otsu / static_cast<double>(draws) - 0.05) < 0.008);
  REQUIRE(std::fabs(sauvola / static_cast<double>(draws) - 0.025) < 0.006);
}

TEST_CASE("augment policy validation") {
  tf::AugmentPolicy p;
  p.jpeg_quality_min = 0;
  REQUIRE_THROWS_AS(tf::validate_augment_policy(p), tf::ValidationError);
  p = {};
  p.otsu_probability = 0.9;
  p.sauvola_probability = 0.2;
  REQUIRE_THROWS_AS(tf::validate_augment_policy(p), tf::ValidationError);
  p = {};
  p.scale_low = 1.2;
  p.scale_high = 1.1;
  REQUIRE_THROWS_AS(tf::validate_augment_policy(p), tf::ValidationError);
}

TEST_CASE("apply_augment with identity parameters is a center crop") {
  const tf::RgbImage img = text_like_image(300, 300, 6);
  tf::AugmentPolicy policy;
  tf::AugmentParams params;  // rotation 0, shear 0, scale 1, quality 100
  tf::JitterFactors none{0.0, 0.0, 0.0, 0.0};
  tf::Rng rng(3);
  params.jitter = tf::sample_jitter_params(none, rng);
  const tf::RgbImage out = tf::apply_augment(img, params, policy);
  REQUIRE(out.width == 224);
  REQUIRE(out.height == 224);
  const tf::RgbImage crop = tf::center_crop(img, 224, 224);
  REQUIRE(out.data == crop.data);
}

TEST_CASE("apply_augment binarization yields pure black and white") {
  const tf::RgbImage img = text_like_image(300, 300, 7);
  tf::AugmentPolicy policy;
  tf::AugmentParams params;
  tf::JitterFactors none{0.0, 0.0, 0.0, 0.0};
  tf::Rng rng(4);
  params.jitter = tf::sample_jitter_params(none, rng);

  for (const auto choice :
       {tf::BinarizeChoice::kOtsu, tf::BinarizeChoice::kSauvola}) {
    params.binarize = choice;
    const tf::RgbImage out = tf::apply_augment(img, params, policy);
    std::size_t dark = 0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      REQUIRE((out.data[i] == 0 || out.data[i] == 255));
      if (out.data[i] == 0) ++dark;
    }
    REQUIRE(dark > 0);                    // strokes survive
    REQUIRE(dark < out.data.size());      // paper survives
  }
}

TEST_CASE("apply_augment applies the geometric part") {
  const tf::RgbImage img = text_like_image(300, 300, 8);
  tf::AugmentPolicy policy;
  tf::JitterFactors none{0.0, 0.0, 0.0, 0.0};
  tf::Rng rng(5);

  tf::AugmentParams identity;
  identity.jitter = tf::sample_jitter_params(none, rng);
  tf::AugmentParams rotated = identity;
  rotated.rotation_deg = 10.0;

  const tf::RgbImage a = tf::apply_augment(img, identity, policy);
  const tf::RgbImage b = tf::apply_augment(img, rotated, policy);
  REQUIRE(a.data != b.data);

  tf::AugmentParams jpegged = identity;
  jpegged.jpeg_quality = 2;
  const tf::RgbImage c = tf::apply_augment(img, jpegged, policy);
  REQUIRE(a.data != c.data);
}

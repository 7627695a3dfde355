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

#include <cstdio>
#include <filesystem>

#include "typeforge/binarize.hpp"
#include "typeforge/edges.hpp"
#include "typeforge/image.hpp"
#include "typeforge/image_io.hpp"
#include "typeforge/jitter.hpp"
#include "typeforge/rng.hpp"
#include "typeforge/transform.hpp"

namespace fs = std::filesystem;
using namespace typeforge;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "typeforge_imgproc_tests";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

RgbImage random_rgb(int w, int h, std::uint64_t seed) {
  RgbImage img(w, h);
  Rng rng(seed);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

GrayImage random_gray(int w, int h, std::uint64_t seed) {
  GrayImage img(w, h);
  Rng rng(seed);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST_CASE("to_grayscale applies the BT.601 weights with rounding",
          "[image]") {
  RgbImage img(2, 1);
  std::uint8_t* p0 = img.px(0, 0);
  p0[0] = 255;  // pure red -> round(0.299 * 255) = 76
  std::uint8_t* p1 = img.px(1, 0);
  p1[0] = 10;
  p1[1] = 200;
  p1[2] = 50;
  GrayImage g = to_grayscale(img);
  CHECK(g.at(0, 0) == 76);
  // round(0.299*10 + 0.587*200 + 0.114*50) = round(126.09) = 126
  CHECK(g.at(1, 0) == 126);
}

TEST_CASE("to_grayscale of a replicated gray image is the identity",
          "[image]") {
  GrayImage g = random_gray(37, 21, 5);
  GrayImage back = to_grayscale(to_rgb(g));
  CHECK(back.data == g.data);
}

TEST_CASE("png round-trip preserves pixels exactly", "[image_io]") {
  const fs::path rgb_path = temp_dir() / "roundtrip_rgb.png";
  RgbImage rgb = random_rgb(33, 17, 42);
  save_png(rgb_path, rgb);
  RgbImage rgb_back = load_rgb(rgb_path);
  REQUIRE(rgb_back.width == rgb.width);
  REQUIRE(rgb_back.height == rgb.height);
  CHECK(rgb_back.data == rgb.data);

  const fs::path gray_path = temp_dir() / "roundtrip_gray.png";
  GrayImage gray = random_gray(19, 23, 43);
  save_png(gray_path, gray);
  GrayImage gray_back = load_gray(gray_path);
  REQUIRE(gray_back.width == gray.width);
  REQUIRE(gray_back.height == gray.height);
  CHECK(gray_back.data == gray.data);
}

TEST_CASE("load_gray of a color png matches to_grayscale of load_rgb",
          "[image_io]") {
  const fs::path path = temp_dir() / "gray_of_color.png";
  RgbImage rgb = random_rgb(24, 11, 44);
  save_png(path, rgb);
  GrayImage direct = load_gray(path);
  GrayImage via_rgb = to_grayscale(load_rgb(path));
  CHECK(direct.data == via_rgb.data);
}

TEST_CASE("load rejects missing files with MissingFileError", "[image_io]") {
  CHECK_THROWS_AS(load_rgb(temp_dir() / "does_not_exist.png"),
                  MissingFileError);
  CHECK_THROWS_AS(load_gray(temp_dir() / "does_not_exist.png"),
                  MissingFileError);
}

TEST_CASE("jpeg_roundtrip at high quality stays close to the input",
          "[image_io]") {
  // Smooth gradient content compresses almost losslessly at q=95.
  GrayImage img(64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      img.at(x, y) = static_cast<std::uint8_t>((x + y) * 2);
    }
  }
  GrayImage out = jpeg_roundtrip(img, 95);
  REQUIRE(out.width == img.width);
  REQUIRE(out.height == img.height);
  double err = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    err += std::abs(static_cast<int>(img.data[i]) -
                    static_cast<int>(out.data[i]));
  }
  err /= static_cast<double>(img.data.size());
  CHECK(err < 2.0);
}

TEST_CASE("jpeg_roundtrip at low quality degrades but keeps shape",
          "[image_io]") {
  RgbImage img = random_rgb(48, 32, 77);
  RgbImage out = jpeg_roundtrip(img, 2);
  REQUIRE(out.width == img.width);
  REQUIRE(out.height == img.height);
  // Noise at quality 2 must actually change; a bit-identical result would
  // mean the codec was bypassed.
  CHECK(out.data != img.data);
}

TEST_CASE("jpeg_roundtrip validates the quality range", "[image_io]") {
  GrayImage img(8, 8, 128);
  CHECK_THROWS_AS(jpeg_roundtrip(img, 0), ValidationError);
  CHECK_THROWS_AS(jpeg_roundtrip(img, 101), ValidationError);
}

TEST_CASE("rng uniform draws live in [0,1) and open variants exclude 0",
          "[rng]") {
  Rng rng(123);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng rng2(456);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng2.uniform_open();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("rng streams with the same seed are identical", "[rng]") {
  Rng a(991), b(991);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("derive_seed separates tagged streams", "[rng]") {
  CHECK(derive_seed(7, "extract") != derive_seed(7, "train"));
  CHECK(derive_seed(7, "extract") != derive_seed(8, "extract"));
  CHECK(derive_seed(7, "extract") == derive_seed(7, "extract"));
}

// ---------------------------------------------------------------------------
// Otsu
// ---------------------------------------------------------------------------

namespace {

// Independent oracle: recompute class statistics from scratch for every
// candidate threshold instead of using running prefix sums.
int otsu_oracle(const std::array<std::uint64_t, 256>& hist) {
  int best_t = -1;
  long double best = -1.0L;
  for (int t = 0; t < 255; ++t) {
    std::uint64_t n0 = 0, s0 = 0, n1 = 0, s1 = 0;
    for (int i = 0; i <= t; ++i) {
      n0 += hist[i];
      s0 += hist[i] * static_cast<std::uint64_t>(i);
    }
    for (int i = t + 1; i < 256; ++i) {
      n1 += hist[i];
      s1 += hist[i] * static_cast<std::uint64_t>(i);
    }
    if (n0 == 0 || n1 == 0) continue;
    const long double mu0 = static_cast<long double>(s0) / n0;
    const long double mu1 = static_cast<long double>(s1) / n1;
    const long double score = static_cast<long double>(n0) *
                              static_cast<long double>(n1) * (mu0 - mu1) *
                              (mu0 - mu1);
    if (score > best) {
      best = score;
      best_t = t;
    }
  }
  return best_t;
}

std::array<std::uint64_t, 256> random_histogram(Rng& rng) {
  std::array<std::uint64_t, 256> hist{};
  // A mix of dense and sparse histograms, including empty-bin runs that
  // create exact score ties.
  const int populated = 2 + static_cast<int>(rng.below(40));
  for (int j = 0; j < populated; ++j) {
    hist[rng.below(256)] += 1 + rng.below(1000);
  }
  return hist;
}

}  // namespace

TEST_CASE("otsu picks the smallest maximizing threshold on ties",
          "[binarize]") {
  GrayImage img(2, 2);
  img.data = {0, 0, 255, 255};
  // Every t in 0..254 splits identically; smallest must win.
  OtsuResult r = otsu_threshold(img);
  CHECK(r.threshold == 0);
  // Equal class sizes: dark class is the foreground.
  CHECK(r.foreground_is_dark);
  CHECK(r.mask.data == std::vector<std::uint8_t>{1, 1, 0, 0});
}

TEST_CASE("otsu on a two-level image thresholds at the dark level",
          "[binarize]") {
  GrayImage img(4, 2);
  for (int i = 0; i < 4; ++i) img.data[i] = 10;
  for (int i = 4; i < 8; ++i) img.data[i] = 200;
  OtsuResult r = otsu_threshold(img);
  CHECK(r.threshold == 10);
}

TEST_CASE("otsu foreground is the smaller class", "[binarize]") {
  // Mostly bright page with a little dark ink.
  GrayImage page(10, 10, 220);
  page.at(3, 3) = 10;
  page.at(4, 3) = 12;
  OtsuResult r = otsu_threshold(page);
  CHECK(r.foreground_is_dark);
  CHECK(r.mask.count_foreground() == 2);

  // Inverted scan: bright glyphs on dark background.
  GrayImage inverted(10, 10, 25);
  inverted.at(5, 5) = 240;
  inverted.at(6, 5) = 235;
  OtsuResult ri = otsu_threshold(inverted);
  CHECK_FALSE(ri.foreground_is_dark);
  CHECK(ri.mask.count_foreground() == 2);
}

TEST_CASE("otsu matches the exhaustive oracle on random histograms",
          "[binarize][oracle]") {
  Rng rng(2026);
  for (int trial = 0; trial < 300; ++trial) {
    const auto hist = random_histogram(rng);
    CHECK(otsu_scan_histogram(hist) == otsu_oracle(hist));
  }
}

TEST_CASE("otsu rejects constant images", "[binarize]") {
  GrayImage img(5, 5, 77);
  CHECK_THROWS_AS(otsu_threshold(img), ConstantImageError);
}

// ---------------------------------------------------------------------------
// Sauvola
// ---------------------------------------------------------------------------

namespace {

// Independent oracle: direct window loops with replicated borders.
BinaryImage sauvola_oracle(const GrayImage& img, int window, double k,
                           double r) {
  const int pad = window / 2;
  BinaryImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double sum = 0.0, sq = 0.0;
      for (int dy = -pad; dy <= pad; ++dy) {
        for (int dx = -pad; dx <= pad; ++dx) {
          const int sx = std::clamp(x + dx, 0, img.width - 1);
          const int sy = std::clamp(y + dy, 0, img.height - 1);
          const double v = img.at(sx, sy);
          sum += v;
          sq += v * v;
        }
      }
      const double area = static_cast<double>(window) * window;
      const double m = sum / area;
      const double s = std::sqrt(std::max(0.0, sq / area - m * m));
      const double threshold = m * (1.0 + k * (s / r - 1.0));
      out.at(x, y) = static_cast<double>(img.at(x, y)) < threshold ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("sauvola matches the per-pixel oracle exactly",
          "[binarize][oracle]") {
  GrayImage img = random_gray(49, 37, 99);
  for (int window : {3, 9, 15}) {
    BinaryImage got = sauvola_binarize(img, window, 0.3, 128.0);
    BinaryImage want = sauvola_oracle(img, window, 0.3, 128.0);
    REQUIRE(got.data == want.data);
  }
}

TEST_CASE("sauvola with k = 0 equals local-mean thresholding",
          "[binarize]") {
  GrayImage img = random_gray(31, 29, 7);
  BinaryImage got = sauvola_binarize(img, 7, 0.0, 128.0);
  // Oracle reduces to pixel < window mean when k = 0.
  BinaryImage want = sauvola_oracle(img, 7, 0.0, 1.0);
  CHECK(got.data == want.data);
}

TEST_CASE("sauvola validates window and parameters", "[binarize]") {
  GrayImage img(20, 20, 100);
  CHECK_THROWS_AS(sauvola_binarize(img, 4, 0.3), ValidationError);
  CHECK_THROWS_AS(sauvola_binarize(img, 1, 0.3), ValidationError);
  CHECK_THROWS_AS(sauvola_binarize(img, 21, 0.3), WindowTooLargeError);
  CHECK_THROWS_AS(sauvola_binarize(img, 9, 1.0), ValidationError);
  CHECK_THROWS_AS(sauvola_binarize(img, 9, -0.1), ValidationError);
  CHECK_THROWS_AS(sauvola_binarize(img, 9, 0.3, 0.0), ValidationError);
}

// ---------------------------------------------------------------------------
// Canny and auto-hysteresis
// ---------------------------------------------------------------------------

namespace {

GrayImage step_image(int w, int h, int step_col, std::uint8_t lo,
                     std::uint8_t hi) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y) = x <= step_col ? lo : hi;
    }
  }
  return img;
}

}  // namespace

TEST_CASE("canny marks a vertical step with a one-pixel column", "[edges]") {
  const int h = 32;
  GrayImage img = step_image(32, h, 15, 50, 200);
  BinaryImage edges = canny(img, 30.0, 60.0);
  std::size_t count = 0;
  int col = -1;
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      if (edges.at(x, y)) {
        ++count;
        if (col < 0) col = x;
        CHECK(x == col);  // all edge pixels in one column
      }
    }
  }
  CHECK(count == static_cast<std::size_t>(h));
  CHECK((col == 15 || col == 16));
}

TEST_CASE("canny drops weak edges that touch no strong pixel", "[edges]") {
  GrayImage img = step_image(32, 32, 15, 50, 200);
  // Every magnitude is below this high threshold, so nothing seeds the
  // hysteresis flood.
  BinaryImage edges = canny(img, 5.0, 1e6);
  CHECK(edges.count_foreground() == 0);
}

TEST_CASE("canny validates thresholds", "[edges]") {
  GrayImage img = step_image(16, 16, 7, 0, 255);
  CHECK_THROWS_AS(canny(img, -1.0, 10.0), ValidationError);
  CHECK_THROWS_AS(canny(img, 20.0, 10.0), ValidationError);
}

TEST_CASE("auto_hysteresis separates weak texture from a strong edge",
          "[edges]") {
  const int w = 48, h = 32;
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Weak checker texture plus one strong step at x = 23/24.
      const std::uint8_t base = x <= 23 ? 90 : 210;
      img.at(x, y) = static_cast<std::uint8_t>(base + ((x + y) % 2) * 4);
    }
  }
  HysteresisThresholds thr = auto_hysteresis(img);
  CHECK(thr.low == 0.4 * thr.high);
  BinaryImage edges = canny(img, thr.low, thr.high);
  REQUIRE(edges.count_foreground() > 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (edges.at(x, y)) {
        CHECK(x >= 21);
        CHECK(x <= 26);
      }
    }
  }
}

TEST_CASE("auto_hysteresis rejects constant images", "[edges]") {
  GrayImage img(16, 16, 42);
  CHECK_THROWS_AS(auto_hysteresis(img), ConstantImageError);
}

// ---------------------------------------------------------------------------
// Affine transform and crops
// ---------------------------------------------------------------------------

TEST_CASE("affine identity is bit-exact", "[transform]") {
  GrayImage g = random_gray(21, 17, 11);
  CHECK(affine_transform(g, 0.0, 0.0, 1.0).data == g.data);
  RgbImage c = random_rgb(13, 19, 12);
  CHECK(affine_transform(c, 0.0, 0.0, 1.0).data == c.data);
}

TEST_CASE("affine rotation by 90 degrees permutes a 2x2 image",
          "[transform]") {
  GrayImage img(2, 2);
  const std::uint8_t a = 10, b = 20, c = 30, d = 40;
  img.data = {a, b, c, d};
  GrayImage out = affine_transform(img, 90.0, 0.0, 1.0);
  CHECK(out.data == std::vector<std::uint8_t>{c, a, d, b});
}

TEST_CASE("affine fills samples that land outside the input", "[transform]") {
  GrayImage img(21, 21, 100);
  GrayImage out = affine_transform(img, 45.0, 0.0, 1.0, 7);
  CHECK(out.at(10, 10) == 100);  // center unchanged
  CHECK(out.at(0, 0) == 7);      // corner rotated out of the source square
}

TEST_CASE("affine validates scale", "[transform]") {
  GrayImage img(8, 8, 1);
  CHECK_THROWS_AS(affine_transform(img, 0.0, 0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(affine_transform(img, 0.0, 0.0, -1.0), ValidationError);
}

TEST_CASE("center_crop takes the middle window", "[transform]") {
  GrayImage img(4, 4);
  for (int i = 0; i < 16; ++i) img.data[i] = static_cast<std::uint8_t>(i);
  GrayImage out = center_crop(img, 2, 2);
  CHECK(out.data == std::vector<std::uint8_t>{5, 6, 9, 10});
  CHECK_THROWS_AS(center_crop(img, 5, 2), ImageTooSmallError);
}

// ---------------------------------------------------------------------------
// Color jitter
// ---------------------------------------------------------------------------

TEST_CASE("color_jitter with zero factors is the identity", "[jitter]") {
  RgbImage img = random_rgb(16, 12, 31);
  JitterFactors zero{0.0, 0.0, 0.0, 0.0};
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Rng rng(seed);
    RgbImage out = color_jitter(img, zero, rng);
    CHECK(out.data == img.data);
  }
}

TEST_CASE("brightness scales channels with clamping", "[jitter]") {
  RgbImage img(1, 1);
  img.data = {100, 200, 40};
  JitterParams p;
  p.brightness = 0.5;
  RgbImage half = apply_color_jitter(img, p);
  CHECK(half.data == std::vector<std::uint8_t>{50, 100, 20});
  p.brightness = 2.0;
  RgbImage twice = apply_color_jitter(img, p);
  CHECK(twice.data == std::vector<std::uint8_t>{200, 255, 80});
}

TEST_CASE("saturation zero collapses pixels onto their luma", "[jitter]") {
  RgbImage img = random_rgb(9, 7, 5);
  JitterParams p;
  p.saturation = 0.0;
  RgbImage out = apply_color_jitter(img, p);
  for (std::size_t i = 0; i < img.data.size(); i += 3) {
    const double luma = 0.299 * img.data[i] + 0.587 * img.data[i + 1] +
                        0.114 * img.data[i + 2];
    const std::uint8_t expect = clamp_u8(luma);
    CHECK(out.data[i] == expect);
    CHECK(out.data[i + 1] == expect);
    CHECK(out.data[i + 2] == expect);
  }
}

TEST_CASE("hue shift by a third of a turn maps red to green", "[jitter]") {
  RgbImage img(1, 1);
  img.data = {255, 0, 0};
  JitterParams p;
  p.hue = 1.0 / 3.0;
  RgbImage out = apply_color_jitter(img, p);
  CHECK(out.data == std::vector<std::uint8_t>{0, 255, 0});
}

TEST_CASE("jitter parameter sampling stays inside the configured ranges",
          "[jitter]") {
  JitterFactors f{0.7, 0.7, 0.3, 0.03};
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    JitterParams p = sample_jitter_params(f, rng);
    CHECK(p.brightness >= 0.3);
    CHECK(p.brightness <= 1.7);
    CHECK(p.contrast >= 0.3);
    CHECK(p.contrast <= 1.7);
    CHECK(p.saturation >= 0.7);
    CHECK(p.saturation <= 1.3);
    CHECK(p.hue >= -0.03);
    CHECK(p.hue <= 0.03);
    std::array<bool, 4> seen{};
    for (int op : p.order) seen[op] = true;
    CHECK((seen[0] && seen[1] && seen[2] && seen[3]));
  }
}

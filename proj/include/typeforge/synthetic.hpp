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

#ifndef TYPEFORGE_SYNTHETIC_HPP_
#define TYPEFORGE_SYNTHETIC_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "typeforge/errors.hpp"
#include "typeforge/filters.hpp"
#include "typeforge/image.hpp"
#include "typeforge/image_io.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

// Synthetic page corpus laid out as <root>/<type>/<doc>/<image>.png.
// Every type owns a fixed alphabet of glyph shapes, so images of one type
// share local structure across documents; documents vary ink, layout
// jitter, and glyph frequencies; images vary placement and noise.
struct SyntheticConfig {
  int types = 4;
  int docs_per_type = 3;
  int images_per_doc = 5;
  int width = 384;
  int height = 320;
  std::uint64_t seed = 0;
};

namespace detail {

struct GlyphSet {
  int cell = 24;                                // glyph bitmap side
  int stroke = 1;                               // stroke thickness
  std::vector<std::vector<std::uint8_t>> bits;  // cell*cell masks
};

inline void stamp_brush(std::vector<std::uint8_t>& bits, int cell, int x,
                        int y, int t) {
  for (int dy = 0; dy < t; ++dy) {
    for (int dx = 0; dx < t; ++dx) {
      const int px = x + dx;
      const int py = y + dy;
      if (px >= 0 && px < cell && py >= 0 && py < cell) {
        bits[static_cast<std::size_t>(py) * cell + px] = 1;
      }
    }
  }
}

// A glyph is a handful of straight strokes; the orientation mix and the
// stroke thickness are what make one type's alphabet look unlike another's.
inline GlyphSet make_glyph_set(std::uint64_t seed) {
  Rng rng(seed);
  GlyphSet set;
  set.stroke = 1 + static_cast<int>(rng.below(3));

  // Orientation weights: 0 horizontal, 1 vertical, 2 falling, 3 rising.
  double weights[4];
  double weight_sum = 0.0;
  for (double& w : weights) {
    w = 0.2 + rng.uniform();
    weight_sum += w;
  }

  const int cell = set.cell;
  const int glyphs = 12;
  for (int g = 0; g < glyphs; ++g) {
    std::vector<std::uint8_t> bits(
        static_cast<std::size_t>(cell) * cell, 0);
    const int strokes = 3 + static_cast<int>(rng.below(3));
    for (int s = 0; s < strokes; ++s) {
      double pick = rng.uniform() * weight_sum;
      int orient = 0;
      for (; orient < 3; ++orient) {
        if (pick < weights[orient]) break;
        pick -= weights[orient];
      }
      const int len = 8 + static_cast<int>(rng.below(12));
      const int x0 = 2 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(cell - 4)));
      const int y0 = 2 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(cell - 4)));
      for (int i = 0; i < len; ++i) {
        int x = x0;
        int y = y0;
        switch (orient) {
          case 0: x += i; break;
          case 1: y += i; break;
          case 2: x += i; y += i; break;
          default: x += i; y -= i; break;
        }
        if (x < 1 || x >= cell - 1 || y < 1 || y >= cell - 1) break;
        stamp_brush(bits, cell, x, y, set.stroke);
      }
    }
    // A dot gives corners even to sparse glyphs.
    const int dx = 3 + static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(cell - 8)));
    const int dy = 3 + static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(cell - 8)));
    stamp_brush(bits, cell, dx, dy, 2);
    set.bits.push_back(std::move(bits));
  }
  return set;
}

inline GrayImage render_page(const GlyphSet& glyphs,
                             const std::vector<double>& glyph_weights,
                             int ink_base, int width, int height,
                             Rng& rng) {
  GrayImage page(width, height);
  for (auto& p : page.data) {
    p = static_cast<std::uint8_t>(255 - rng.below(8));  // paper texture
  }

  double weight_sum = 0.0;
  for (double w : glyph_weights) weight_sum += w;

  const int cell = glyphs.cell;
  const int margin = 16;
  const int step_x = cell + 2;
  const int step_y = cell + 6;
  for (int gy = margin; gy + cell < height - margin; gy += step_y) {
    for (int gx = margin; gx + cell < width - margin; gx += step_x) {
      if (rng.uniform() < 0.1) continue;  // occasional gap
      double pick = rng.uniform() * weight_sum;
      std::size_t idx = 0;
      for (; idx + 1 < glyph_weights.size(); ++idx) {
        if (pick < glyph_weights[idx]) break;
        pick -= glyph_weights[idx];
      }
      const auto& bits = glyphs.bits[idx];
      const int jx = static_cast<int>(rng.below(5)) - 2;
      const int jy = static_cast<int>(rng.below(5)) - 2;
      const int ink = ink_base + static_cast<int>(rng.below(25));
      for (int y = 0; y < cell; ++y) {
        for (int x = 0; x < cell; ++x) {
          if (!bits[static_cast<std::size_t>(y) * cell + x]) continue;
          const int px = gx + x + jx;
          const int py = gy + y + jy;
          if (px < 0 || px >= width || py < 0 || py >= height) continue;
          const int v = ink + static_cast<int>(rng.below(15));
          page.at(px, py) = static_cast<std::uint8_t>(
              std::min<int>(page.at(px, py), v));
        }
      }
    }
  }

  // Soft edges so the gradient structure looks scanned, not rasterized.
  const FloatImage blurred = gaussian_blur(to_float(page, 1.0), 0.6);
  GrayImage out(width, height);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = clamp_u8(blurred.data[i]);
  }
  return out;
}

}  // namespace detail

inline void generate_corpus(const SyntheticConfig& cfg,
                            const std::string& root) {
  if (cfg.types < 1 || cfg.docs_per_type < 1 || cfg.images_per_doc < 1) {
    throw ValidationError("generate_corpus: non-positive counts");
  }
  if (cfg.width < 64 || cfg.height < 64) {
    throw ValidationError("generate_corpus: page too small");
  }
  namespace fs = std::filesystem;
  fs::create_directories(root);

  for (int t = 0; t < cfg.types; ++t) {
    const std::string type = "type" + std::to_string(t);
    const detail::GlyphSet glyphs =
        detail::make_glyph_set(derive_seed(cfg.seed, "type:" + type));

    for (int d = 0; d < cfg.docs_per_type; ++d) {
      const std::string doc = "doc" + std::to_string(d);
      Rng doc_rng(derive_seed(cfg.seed, "doc:" + type + "/" + doc));
      const int ink_base = 30 + static_cast<int>(doc_rng.below(50));
      std::vector<double> glyph_weights(glyphs.bits.size());
      for (auto& w : glyph_weights) w = 0.3 + doc_rng.uniform();

      const fs::path dir = fs::path(root) / type / doc;
      fs::create_directories(dir);
      for (int i = 0; i < cfg.images_per_doc; ++i) {
        const std::string name = "img" + std::to_string(i);
        Rng img_rng(derive_seed(
            cfg.seed, "img:" + type + "/" + doc + "/" + name));
        const GrayImage page =
            detail::render_page(glyphs, glyph_weights, ink_base, cfg.width,
                                cfg.height, img_rng);
        save_png(dir / (name + ".png"), page);
      }
    }
  }
}

}  // namespace typeforge

#endif  // TYPEFORGE_SYNTHETIC_HPP_

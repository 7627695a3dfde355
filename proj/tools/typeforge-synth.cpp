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

#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "typeforge/synthetic.hpp"

// Renders a small synthetic corpus shaped like a real one
// (type/document/image) so the pipeline can be exercised without data.
int main(int argc, char** argv) {
  CLI::App app{"typeforge-synth: synthetic corpus generator"};
  typeforge::SyntheticConfig cfg;
  std::string output;
  app.add_option("--output", output, "Corpus root to create")->required();
  app.add_option("--seed", cfg.seed, "Master seed")->required();
  app.add_option("--types", cfg.types, "Type count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--docs", cfg.docs_per_type, "Documents per type")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--images", cfg.images_per_doc, "Images per document")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--width", cfg.width, "Page width in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--height", cfg.height, "Page height in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    typeforge::generate_corpus(cfg, output);
  } catch (const typeforge::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  std::printf("generated %d pages under %s\n",
              cfg.types * cfg.docs_per_type * cfg.images_per_doc,
              output.c_str());
  return 0;
}

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

// Drives the installed binaries through a small synthetic corpus: stage
// chain, staleness exit codes, idempotence, and determinism. Cases build on
// the workspace produced by the first one and run in declaration order.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "subprocess.hpp"

namespace fs = std::filesystem;
using tftest::metrics_line;
using tftest::run_command;
using tftest::slurp_file;

namespace {

const fs::path& root() {
  static const fs::path dir = fs::temp_directory_path() / "tf_cli_e2e";
  return dir;
}

std::string cli() { return std::string(TF_CLI_BIN); }
std::string synth() { return std::string(TF_SYNTH_BIN); }

// Small but non-trivial encoder so the whole chain stays under a minute.
std::string flags() {
  return " --seed 11 --extract-max-descriptors 300 --train-codebook-size 8"
         " --train-local-dim 24 --train-num-codebooks 2"
         " --train-max-descriptors 1200";
}

std::string ws() { return (root() / "base").string(); }
std::string corpus() { return (root() / "corpus").string(); }

}  // namespace

TEST_CASE("cli runs the full stage chain", "[cli]") {
  fs::remove_all(root());
  fs::create_directories(root());

  auto r = run_command(synth() + " --output " + corpus() +
                       " --seed 11 --types 2 --docs 2 --images 3");
  INFO(r.output);
  REQUIRE(r.exit_code == 0);

  r = run_command(cli() + " ingest --seed 11 --input " + corpus() +
                  " --workspace " + ws() + " --test-types type1");
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(fs::path(ws()) / "manifest.csv"));

  for (const char* stage : {"extract", "train", "encode", "esvm"}) {
    r = run_command(cli() + " " + stage + flags() + " --workspace " + ws());
    INFO(stage << ": " << r.output);
    REQUIRE(r.exit_code == 0);
  }
  REQUIRE(fs::exists(fs::path(ws()) / "encodings.tfge"));
  REQUIRE(fs::exists(fs::path(ws()) / "encodings_esvm.tfge"));

  const std::vector<std::string> variants = {
      "", " --protocol one-vs-other-docs", " --esvm on",
      " --esvm on --protocol one-vs-other-docs"};
  for (const std::string& extra : variants) {
    r = run_command(cli() + " evaluate" + flags() + " --workspace " + ws() +
                    extra);
    INFO(extra << ": " << r.output);
    REQUIRE(r.exit_code == 0);
    const std::string line = metrics_line(r.output);
    REQUIRE_FALSE(line.empty());
    double top1 = 0.0, top10 = 0.0, map = 0.0;
    std::size_t scored = 0, excluded = 0;
    REQUIRE(std::sscanf(line.c_str(),
                        "top1=%lf top10=%lf map=%lf scored=%zu excluded=%zu",
                        &top1, &top10, &map, &scored, &excluded) == 5);
    REQUIRE(scored == 6);
    REQUIRE(excluded == 0);
    REQUIRE(top1 >= 0.0);
    REQUIRE(top1 <= 100.0);
  }
  REQUIRE(fs::exists(fs::path(ws()) / "metrics.json"));
}

TEST_CASE("cli stage reruns are no-ops", "[cli]") {
  const std::string before_model = slurp_file(fs::path(ws()) / "model.tfem");
  const std::string before_enc =
      slurp_file(fs::path(ws()) / "encodings.tfge");
  REQUIRE_FALSE(before_model.empty());

  for (const char* stage : {"extract", "train", "encode", "esvm"}) {
    auto r = run_command(cli() + " " + stage + flags() + " --workspace " +
                         ws());
    INFO(stage << ": " << r.output);
    REQUIRE(r.exit_code == 0);
  }
  REQUIRE(slurp_file(fs::path(ws()) / "model.tfem") == before_model);
  REQUIRE(slurp_file(fs::path(ws()) / "encodings.tfge") == before_enc);
}

TEST_CASE("cli reproduces encodings byte for byte", "[cli]") {
  const std::string ws2 = (root() / "rerun").string();
  auto r = run_command(cli() + " ingest --seed 11 --input " + corpus() +
                       " --workspace " + ws2 + " --test-types type1");
  REQUIRE(r.exit_code == 0);
  // A different thread count must not change any artifact byte.
  for (const char* stage : {"extract", "train", "encode", "esvm"}) {
    r = run_command(cli() + " " + stage + flags() + " --threads 4" +
                    " --workspace " + ws2);
    INFO(stage << ": " << r.output);
    REQUIRE(r.exit_code == 0);
  }
  REQUIRE(slurp_file(fs::path(ws2) / "encodings.tfge") ==
          slurp_file(fs::path(ws()) / "encodings.tfge"));
  REQUIRE(slurp_file(fs::path(ws2) / "encodings_esvm.tfge") ==
          slurp_file(fs::path(ws()) / "encodings_esvm.tfge"));

  const auto eval1 = run_command(cli() + " evaluate" + flags() +
                                 " --threads 1 --workspace " + ws());
  const auto eval8 = run_command(cli() + " evaluate" + flags() +
                                 " --threads 8 --workspace " + ws());
  REQUIRE(eval1.exit_code == 0);
  REQUIRE(eval8.exit_code == 0);
  REQUIRE(metrics_line(eval1.output) == metrics_line(eval8.output));
  REQUIRE_FALSE(metrics_line(eval1.output).empty());
}

TEST_CASE("cli flags stale artifacts with exit code 3", "[cli]") {
  const std::string stale = (root() / "stale").string();
  fs::remove_all(stale);
  fs::copy(ws(), stale, fs::copy_options::recursive);

  // Changed sampling config against existing descriptors.
  auto r = run_command(cli() + " extract" + flags() + " --workspace " + stale +
                       " --extract-max-descriptors 400");
  INFO(r.output);
  REQUIRE(r.exit_code == 3);

  // Changed seed invalidates every downstream artifact.
  r = run_command(cli() + " encode" + flags() + " --workspace " + stale +
                  " --seed 12");
  REQUIRE(r.exit_code == 3);

  // Changed encoder knob: saved encodings no longer match.
  r = run_command(cli() + " evaluate" + flags() + " --workspace " + stale +
                  " --train-codebook-size 9");
  REQUIRE(r.exit_code == 3);

  // Changed exemplar-SVM cost against the transformed encodings.
  r = run_command(cli() + " evaluate" + flags() + " --workspace " + stale +
                  " --esvm on --esvm-c-pos 500");
  REQUIRE(r.exit_code == 3);
}

TEST_CASE("cli validation failures exit with code 2", "[cli]") {
  const std::string empty_ws = (root() / "empty").string();
  fs::create_directories(empty_ws);

  auto r = run_command(cli() + " evaluate" + flags() + " --workspace " +
                       empty_ws);
  REQUIRE(r.exit_code == 2);

  r = run_command(cli() + " ingest --seed 11 --input " +
                  (root() / "missing").string() + " --workspace " + empty_ws +
                  " --test-types type1");
  REQUIRE(r.exit_code == 2);

  r = run_command(cli() + " evaluate --workspace " + ws());  // no --seed
  REQUIRE(r.exit_code == 2);

  r = run_command(cli() + " evaluate" + flags() + " --workspace " + ws() +
                  " --protocol bogus");
  REQUIRE(r.exit_code == 2);

  // esvm before encode in a fresh workspace.
  const std::string ws_pre = (root() / "preesvm").string();
  r = run_command(cli() + " ingest --seed 11 --input " + corpus() +
                  " --workspace " + ws_pre + " --test-types type1");
  REQUIRE(r.exit_code == 0);
  r = run_command(cli() + " esvm" + flags() + " --workspace " + ws_pre);
  REQUIRE(r.exit_code == 2);

  r = run_command(cli() + " --help");
  REQUIRE(r.exit_code == 0);
}

TEST_CASE("cli score reports a hand-checked confusion", "[cli]") {
  const fs::path preds = root() / "preds.csv";
  std::ofstream(preds) << "image_id,true_label,predicted_label\n"
                          "a,x,x\nb,x,y\nc,y,y\nd,y,y\n";
  const fs::path report = root() / "score.json";
  auto r = run_command(cli() + " score --seed 0 --predictions " +
                       preds.string() + " --output " + report.string());
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("overall=75.000000 average=75.000000 total=4") !=
          std::string::npos);
  const std::string json = slurp_file(report);
  REQUIRE(json.find("\"overall_percent\": 75.0") != std::string::npos);
}

TEST_CASE("cli patches are deterministic and validated", "[cli]") {
  const std::string out_a = (root() / "patches_a").string();
  const std::string out_b = (root() / "patches_b").string();
  const std::string patch_flags =
      " --patches-count 5 --patches-size 120 --patches-crop 64";
  for (const std::string& out : {out_a, out_b}) {
    auto r = run_command(cli() + " patches --seed 7 --workspace " + ws() +
                         " --output " + out + patch_flags);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out_a)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  REQUIRE(files.size() == 5);  // one train type in this corpus
  for (const fs::path& f : files) {
    const fs::path twin = out_b / fs::relative(f, out_a);
    REQUIRE(fs::exists(twin));
    REQUIRE(slurp_file(f) == slurp_file(twin));
  }

  auto r = run_command(cli() + " patches --seed 7 --workspace " + ws() +
                       " --output " + (root() / "patches_c").string() +
                       " --patches-count 5 --patches-size 100");
  REQUIRE(r.exit_code == 2);  // patch smaller than the default 224 crop
}

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
#include <set>
#include <string>
#include <vector>

#include "typeforge/clseval.hpp"
#include "typeforge/config.hpp"
#include "typeforge/pipeline.hpp"

namespace {

// Exit codes: 0 success, 2 validation or usage, 3 stale artifacts,
// 4 numerical failure, 1 anything unexpected.
constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitValidation = 2;
constexpr int kExitStale = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typeforge: printing-type retrieval pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI file");
  app.get_config_ptr()->check(CLI::ExistingFile);

  typeforge::RunConfig cfg;
  std::string protocol_str = "one-vs-all";
  std::string sampling_str = "keypoint";
  std::string esvm_str = "off";
  std::string augment_str = "on";

  app.add_option("--seed", cfg.seed, "Master seed for every stochastic step")
      ->required();
  app.add_option("--threads", cfg.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--protocol", protocol_str, "Evaluation protocol")
      ->check(CLI::IsMember({"one-vs-all", "one-vs-other-docs"}))
      ->capture_default_str();
  app.add_option("--sampling", sampling_str, "Local feature sampling")
      ->check(CLI::IsMember({"keypoint", "contour"}))
      ->capture_default_str();
  app.add_option("--esvm", esvm_str,
                 "Evaluate exemplar-SVM transformed encodings")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();

  app.add_option("--extract-max-descriptors", cfg.sampling.max_descriptors,
                 "Per-image descriptor cap, 0 disables")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--contour-stride", cfg.sampling.contour.stride,
                 "Contour sampling stride in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  app.add_option("--train-codebook-size", cfg.encoder.codebook_size,
                 "Clusters per codebook")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--train-num-codebooks", cfg.encoder.num_codebooks,
                 "Independently seeded codebooks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--train-local-dim", cfg.encoder.local_dim,
                 "Whitened local descriptor dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--train-target-dim", cfg.encoder.target_dim,
                 "Joint whitening output dimension cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--train-dirichlet-eps", cfg.encoder.dirichlet_eps,
                 "Dirichlet prior for descriptor normalization")
      ->capture_default_str();
  app.add_option("--train-power", cfg.encoder.power,
                 "Power normalization exponent")
      ->capture_default_str();
  app.add_option("--train-gmp-lambda", cfg.encoder.gmp.lambda,
                 "Generalized max pooling ridge parameter")
      ->capture_default_str();
  app.add_option("--train-kmeans-iters", cfg.encoder.kmeans_iters,
                 "Lloyd iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--train-max-descriptors", cfg.encoder.max_train_descriptors,
                 "Training pool cap across images, 0 disables")
      ->capture_default_str();

  app.add_option("--esvm-c-pos", cfg.esvm.c_pos, "Positive class cost")
      ->capture_default_str();
  app.add_option("--esvm-c-neg", cfg.esvm.c_neg, "Negative class cost")
      ->capture_default_str();
  app.add_option("--esvm-tolerance", cfg.esvm.tolerance,
                 "Dual coordinate descent stopping tolerance")
      ->capture_default_str();
  app.add_option("--esvm-max-passes", cfg.esvm.max_passes,
                 "Dual coordinate descent pass cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  app.add_option("--patches-count", cfg.patches_per_type,
                 "Patches sampled per type")
      ->capture_default_str();
  app.add_option("--patches-size", cfg.patch_size,
                 "Square patch side before augmentation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  int patches_crop = 0;
  app.add_option("--patches-crop", patches_crop,
                 "Center crop side after augmentation, 0 keeps the default")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--augment", augment_str, "Augment sampled patches")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();

  std::string input_root;
  std::string workspace_dir;
  std::vector<std::string> test_types;
  std::string patches_out;
  std::string predictions_path;
  std::string score_out;

  CLI::App* ingest =
      app.add_subcommand("ingest", "Scan an image tree into a manifest");
  ingest->add_option("--input", input_root, "Corpus root: type/document/image")
      ->required();
  ingest->add_option("--workspace", workspace_dir, "Workspace directory")
      ->required();
  ingest
      ->add_option("--test-types", test_types,
                   "Comma separated type labels held out as the test split")
      ->delimiter(',')
      ->required();

  const auto add_workspace = [&](CLI::App* sub) {
    sub->add_option("--workspace", workspace_dir, "Workspace directory")
        ->required();
  };
  CLI::App* extract = app.add_subcommand(
      "extract", "Compute local descriptors for every manifest image");
  add_workspace(extract);
  CLI::App* train = app.add_subcommand(
      "train", "Fit whitening and codebooks on the train split");
  add_workspace(train);
  CLI::App* encode =
      app.add_subcommand("encode", "Encode every image with the saved model");
  add_workspace(encode);
  CLI::App* esvm = app.add_subcommand(
      "esvm", "Replace test encodings with exemplar-SVM directions");
  add_workspace(esvm);
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Rank test images against each other and report metrics");
  add_workspace(evaluate);

  CLI::App* patches = app.add_subcommand(
      "patches", "Sample augmented training patches for a classifier");
  add_workspace(patches);
  patches->add_option("--output", patches_out, "Patch output directory")
      ->required();

  CLI::App* score = app.add_subcommand(
      "score", "Score a predictions CSV with a confusion matrix");
  score->add_option("--predictions", predictions_path, "Predictions CSV")
      ->required();
  score->add_option("--output", score_out, "Optional JSON report path");

  // Global options may be written after the subcommand name, and a repeated
  // scalar flag keeps its last value so callers can append overrides.
  for (CLI::App* sub : app.get_subcommands(
           [](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }
  for (CLI::Option* opt : app.get_options()) {
    if (opt == app.get_help_ptr() || opt == app.get_config_ptr()) continue;
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  cfg.protocol = protocol_str == "one-vs-all"
                     ? typeforge::Protocol::kOneVsAll
                     : typeforge::Protocol::kOneVsOtherDocs;
  cfg.sampling.mode = sampling_str == "keypoint"
                          ? typeforge::SamplingMode::kKeypoint
                          : typeforge::SamplingMode::kContour;
  cfg.esvm_enabled = esvm_str == "on";
  cfg.augment_enabled = augment_str == "on";
  if (patches_crop > 0) {
    cfg.augment.crop_w = patches_crop;
    cfg.augment.crop_h = patches_crop;
  }
  cfg.sampling.seed = cfg.seed;
  cfg.encoder.seed = cfg.seed;

  try {
    const typeforge::Workspace ws(workspace_dir);
    if (ingest->parsed()) {
      typeforge::run_ingest(
          ws, input_root,
          std::set<std::string>(test_types.begin(), test_types.end()));
    } else if (extract->parsed()) {
      typeforge::run_extract(ws, cfg);
    } else if (train->parsed()) {
      typeforge::run_train(ws, cfg);
    } else if (encode->parsed()) {
      typeforge::run_encode(ws, cfg);
    } else if (esvm->parsed()) {
      typeforge::run_esvm(ws, cfg);
    } else if (evaluate->parsed()) {
      const typeforge::MetricsReport r = typeforge::run_evaluate(ws, cfg);
      std::printf("top1=%.6f top10=%.6f map=%.6f scored=%zu excluded=%zu\n",
                  r.top1_percent, r.top10_percent, r.map_percent, r.scored,
                  r.excluded);
    } else if (patches->parsed()) {
      typeforge::run_patches(ws, cfg, patches_out);
    } else if (score->parsed()) {
      const auto preds = typeforge::load_predictions(predictions_path);
      const typeforge::ConfusionMatrix cm = typeforge::build_confusion(preds);
      const typeforge::ClassificationScore s = typeforge::score_confusion(cm);
      if (!score_out.empty()) {
        nlohmann::json j;
        j["overall_percent"] = s.overall_percent;
        j["average_percent"] = s.average_percent;
        j["total"] = s.total;
        j["labels"] = cm.labels;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t t = 0; t < cm.k(); ++t) {
          nlohmann::json row = nlohmann::json::array();
          for (std::size_t p = 0; p < cm.k(); ++p) row.push_back(cm.at(t, p));
          rows.push_back(std::move(row));
        }
        j["matrix"] = std::move(rows);
        std::ofstream out(score_out, std::ios::trunc);
        if (!out) throw typeforge::IoError("cannot write " + score_out);
        out << j.dump(2) << "\n";
      }
      std::printf("overall=%.6f average=%.6f total=%llu\n", s.overall_percent,
                  s.average_percent,
                  static_cast<unsigned long long>(s.total));
    }
  } catch (const typeforge::StaleArtifactError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStale;
  } catch (const typeforge::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const typeforge::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return kExitUnexpected;
  }
  return kExitOk;
}

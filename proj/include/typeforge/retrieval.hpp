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

#ifndef TYPEFORGE_RETRIEVAL_HPP_
#define TYPEFORGE_RETRIEVAL_HPP_

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "typeforge/errors.hpp"
#include "typeforge/parallel.hpp"

namespace typeforge {

enum class Protocol {
  kOneVsAll,        // rank every other test image
  kOneVsOtherDocs,  // additionally drop images of the query's document
};

inline const char* protocol_name(Protocol p) {
  return p == Protocol::kOneVsAll ? "one-vs-all" : "one-vs-other-docs";
}

struct EvalItem {
  std::string image_id;
  std::string document_id;
  std::string type_label;
  std::vector<float> values;  // l2-normalized encoding
};

struct MetricsReport {
  double top1_percent = 0.0;
  double top10_percent = 0.0;
  double map_percent = 0.0;
  std::size_t scored = 0;    // queries with at least one relevant item
  std::size_t excluded = 0;  // queries dropped for lack of relevant items
};

// Average precision over a ranking: relevance flags in rank order and the
// number of relevant items in the gallery.
inline double average_precision(const std::vector<char>& relevant,
                                std::size_t total_relevant) {
  if (total_relevant == 0) {
    throw ValidationError("average_precision: no relevant items");
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < relevant.size(); ++k) {
    if (relevant[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

// Cosine of two l2-normalized encodings; accumulated in double so the
// score is independent of any vectorized evaluation order elsewhere.
inline double encoding_score(const std::vector<float>& a,
                             const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

// Leave-one-image-out retrieval over the items: each item queries the
// rest. Ties rank by ascending image_id so the ordering is total.
inline MetricsReport evaluate_retrieval(const std::vector<EvalItem>& items,
                                        Protocol protocol, int threads = 1) {
  if (items.empty()) {
    throw NoTestImagesError("evaluate_retrieval: no items");
  }
  const std::size_t dim = items[0].values.size();
  for (const auto& it : items) {
    if (it.values.size() != dim || dim == 0) {
      throw DimensionMismatchError(
          "evaluate_retrieval: ragged or empty encodings");
    }
  }

  const std::size_t n = items.size();
  // Per-query slots: -1 excluded, else 1/0 flags and the ap value.
  std::vector<int> top1(n, -1);
  std::vector<int> top10(n, -1);
  std::vector<double> ap(n, 0.0);

  parallel_for(n, threads, [&](std::size_t q) {
    const EvalItem& query = items[q];
    std::vector<std::size_t> gallery;
    gallery.reserve(n - 1);
    std::size_t relevant_total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      if (protocol == Protocol::kOneVsOtherDocs &&
          items[j].document_id == query.document_id) {
        continue;
      }
      gallery.push_back(j);
      if (items[j].type_label == query.type_label) ++relevant_total;
    }
    if (relevant_total == 0) return;  // slot stays excluded

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(gallery.size());
    for (std::size_t j : gallery) {
      scored.emplace_back(encoding_score(query.values, items[j].values), j);
    }
    std::sort(scored.begin(), scored.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return items[a.second].image_id < items[b.second].image_id;
              });

    std::vector<char> rel(scored.size(), 0);
    for (std::size_t k = 0; k < scored.size(); ++k) {
      rel[k] = items[scored[k].second].type_label == query.type_label;
    }
    top1[q] = rel[0] ? 1 : 0;
    int any10 = 0;
    for (std::size_t k = 0; k < std::min<std::size_t>(10, rel.size()); ++k) {
      if (rel[k]) any10 = 1;
    }
    top10[q] = any10;
    ap[q] = average_precision(rel, relevant_total);
  });

  MetricsReport report;
  double ap_sum = 0.0;
  std::size_t top1_hits = 0;
  std::size_t top10_hits = 0;
  for (std::size_t q = 0; q < n; ++q) {
    if (top1[q] < 0) {
      ++report.excluded;
      continue;
    }
    ++report.scored;
    top1_hits += static_cast<std::size_t>(top1[q]);
    top10_hits += static_cast<std::size_t>(top10[q]);
    ap_sum += ap[q];
  }
  if (report.scored == 0) {
    throw NoTestImagesError(
        "evaluate_retrieval: every query lacks relevant items");
  }
  const double scored_d = static_cast<double>(report.scored);
  report.top1_percent = 100.0 * static_cast<double>(top1_hits) / scored_d;
  report.top10_percent = 100.0 * static_cast<double>(top10_hits) / scored_d;
  report.map_percent = 100.0 * ap_sum / scored_d;
  return report;
}

}  // namespace typeforge

#endif  // TYPEFORGE_RETRIEVAL_HPP_

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

#ifndef TYPEFORGE_MANIFEST_HPP_
#define TYPEFORGE_MANIFEST_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "typeforge/errors.hpp"

namespace typeforge {

struct ManifestRow {
  std::string image_id;
  std::string document_id;
  std::string type_label;
  std::string split;  // "train" or "test"
  std::string path;
};

struct Manifest {
  std::vector<ManifestRow> rows;

  std::vector<const ManifestRow*> split_rows(const std::string& split) const {
    std::vector<const ManifestRow*> out;
    for (const auto& r : rows) {
      if (r.split == split) out.push_back(&r);
    }
    return out;
  }
};

inline constexpr const char* kManifestHeader =
    "image_id,document_id,type_label,split,path";

namespace detail {

// The manifest dialect is deliberately strict: no quoting, so no field may
// contain a comma, quote, or line break.
inline void check_manifest_field(const std::string& value,
                                 const char* what) {
  if (value.empty()) {
    throw ValidationError(std::string("manifest: empty ") + what);
  }
  if (value.find_first_of(",\"\r\n") != std::string::npos) {
    throw ValidationError(std::string("manifest: ") + what +
                          " contains a comma, quote, or line break: " +
                          value);
  }
}

inline void check_manifest_row(const ManifestRow& r) {
  check_manifest_field(r.image_id, "image_id");
  check_manifest_field(r.document_id, "document_id");
  check_manifest_field(r.type_label, "type_label");
  check_manifest_field(r.split, "split");
  check_manifest_field(r.path, "path");
  if (r.split != "train" && r.split != "test") {
    throw ValidationError("manifest: split must be train or test, got " +
                          r.split);
  }
}

}  // namespace detail

inline void validate_manifest(const Manifest& m) {
  std::unordered_set<std::string> seen;
  for (const auto& r : m.rows) {
    detail::check_manifest_row(r);
    if (!seen.insert(r.image_id).second) {
      throw DuplicateImageIdError("manifest: duplicate image_id " +
                                  r.image_id);
    }
  }
}

inline void save_manifest(const Manifest& m, const std::string& path) {
  validate_manifest(m);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kManifestHeader << "\n";
  for (const auto& r : m.rows) {
    out << r.image_id << ',' << r.document_id << ',' << r.type_label << ','
        << r.split << ',' << r.path << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("manifest: empty file: " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) {
    throw ValidationError("manifest: unexpected header: " + line);
  }
  Manifest m;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 5) {
      throw ValidationError("manifest: line " + std::to_string(line_no) +
                            " has " + std::to_string(fields.size()) +
                            " fields, expected 5");
    }
    m.rows.push_back(
        {fields[0], fields[1], fields[2], fields[3], fields[4]});
  }
  validate_manifest(m);
  return m;
}

// Builds a manifest from a <root>/<type>/<document>/<image> tree. Image ids
// are the slash-separated relative paths without extension; types listed in
// test_types go to the test split, everything else to train. Rows come out
// sorted by image_id so downstream stages see a stable order.
inline Manifest manifest_from_tree(const std::string& root,
                                   const std::set<std::string>& test_types) {
  namespace fs = std::filesystem;
  const fs::path base(root);
  if (!fs::is_directory(base)) {
    throw MissingFileError("ingest: not a directory: " + root);
  }
  Manifest m;
  std::set<std::string> types_seen;
  for (const auto& type_entry : fs::directory_iterator(base)) {
    if (!type_entry.is_directory()) continue;
    const std::string type = type_entry.path().filename().string();
    types_seen.insert(type);
    for (const auto& doc_entry : fs::directory_iterator(type_entry.path())) {
      if (!doc_entry.is_directory()) continue;
      const std::string doc = doc_entry.path().filename().string();
      for (const auto& img_entry : fs::directory_iterator(doc_entry.path())) {
        if (!img_entry.is_regular_file()) continue;
        std::string ext = img_entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) {
                         return static_cast<char>(std::tolower(c));
                       });
        if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
        const std::string stem = img_entry.path().stem().string();
        ManifestRow row;
        row.image_id = type + "/" + doc + "/" + stem;
        row.document_id = type + "/" + doc;
        row.type_label = type;
        row.split = test_types.count(type) ? "test" : "train";
        row.path = img_entry.path().string();
        m.rows.push_back(std::move(row));
      }
    }
  }
  for (const auto& t : test_types) {
    if (!types_seen.count(t)) {
      throw ValidationError("ingest: test type not present in tree: " + t);
    }
  }
  std::sort(m.rows.begin(), m.rows.end(),
            [](const ManifestRow& a, const ManifestRow& b) {
              return a.image_id < b.image_id;
            });
  validate_manifest(m);
  return m;
}

}  // namespace typeforge

#endif  // TYPEFORGE_MANIFEST_HPP_

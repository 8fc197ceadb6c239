#pragma once

#include <filesystem>
#include <string>

#include "probekit/pooling.hpp"
#include "probekit/store.hpp"

namespace testutil {

// Fresh directory under the build tree; wiped on construction, removed on
// destruction so reruns start clean.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::current_path() / ("tmp_" + tag);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::filesystem::path path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::string> make_ids(int n, const std::string& prefix = "u") {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

// Pooled store with a single layer holding the given matrix.
inline probekit::ActivationStore pooled_store(const probekit::MatrixF& values,
                                              const std::string& layer = "L1") {
  probekit::ActivationStore store;
  store.manifest.dataset_name = "test";
  store.manifest.stage = probekit::Stage::pooled;
  store.manifest.num_utterances = static_cast<int>(values.rows());
  store.manifest.layers.push_back({layer, static_cast<int>(values.cols()), 0});
  store.manifest.utterance_ids = make_ids(static_cast<int>(values.rows()));
  probekit::LayerData ld;
  ld.values = values;
  store.layers.push_back(std::move(ld));
  return store;
}

// PooledMatrix wrapper around a raw matrix with identity mean provenance.
inline probekit::PooledMatrix features_of(const probekit::MatrixF& values,
                                          const std::string& layer = "L1") {
  probekit::PooledMatrix m;
  m.values = values;
  m.utterance_ids = make_ids(static_cast<int>(values.rows()));
  for (int j = 0; j < values.cols(); ++j) m.provenance.push_back({layer, j, probekit::Stat::mean});
  return m;
}

inline probekit::LabelTable labels_of(const std::vector<int>& y,
                                      const std::vector<std::string>& ids, int num_classes) {
  probekit::LabelTable t;
  for (int c = 0; c < num_classes; ++c) t.class_vocab.push_back("c" + std::to_string(c));
  for (size_t i = 0; i < y.size(); ++i) t.by_utterance.emplace(ids[i], y[i]);
  return t;
}

}  // namespace testutil

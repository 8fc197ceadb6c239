#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "probekit/common.hpp"

namespace probekit {

// On-disk layout of an activation store rooted at <dir>:
//   manifest.json   {"dataset_name","stage","value_encoding":"f32le",
//                    "num_utterances","layers":[{"name","dim"}...],
//                    "utterance_ids":[...]}
//   <layer>.bin     raw binary32 little-endian, row-major
//   <layer>.idx     frames stage only: CSV utterance_id,byte_offset,frame_count
//   labels.csv      optional: utterance_id,label
//   pairs.csv       optional: utt_a,utt_b,target  (target 1=same 0=different)

enum class Stage { frames, pooled };

std::string stage_name(Stage s);
Stage parse_stage(const std::string& s);

struct LayerSpec {
  std::string name;
  int dim = 0;
  int64_t offset = 0;  // starting column in the concatenated ALL space
};

struct Manifest {
  std::string dataset_name;
  Stage stage = Stage::pooled;
  std::string value_encoding = "f32le";
  int num_utterances = 0;
  std::vector<LayerSpec> layers;
  std::vector<std::string> utterance_ids;

  int64_t total_width() const;
  const LayerSpec* find_layer(const std::string& name) const;
  // Owning layer of a global neuron index: offset <= g < offset + dim.
  const LayerSpec& layer_at(int64_t global_index) const;
  void recompute_offsets();
  void validate() const;
};

struct LayerData {
  // pooled: num_utterances x dim. frames: (sum of frame counts) x dim,
  // utterance blocks in manifest order.
  MatrixF values;
  std::vector<int64_t> row_offset;  // frames stage: first row per utterance
  std::vector<int> frame_count;     // frames stage: rows per utterance
};

struct ActivationStore {
  Manifest manifest;
  std::vector<LayerData> layers;  // parallel to manifest.layers

  const LayerData& layer_data(const std::string& name) const;
  int layer_index(const std::string& name) const;
  // Frame block of one utterance (frames stage).
  Eigen::Block<const MatrixF, Eigen::Dynamic, Eigen::Dynamic, true> frames(
      int layer, int utterance) const;
  void validate() const;
};

ActivationStore load_store(const std::string& root);
void save_store(const ActivationStore& store, const std::string& root);

struct LabelTable {
  std::vector<std::string> class_vocab;  // first-appearance order
  std::unordered_map<std::string, int> by_utterance;

  int num_classes() const { return static_cast<int>(class_vocab.size()); }
  // Class indices aligned to a row order; throws on any uncovered id.
  std::vector<int> aligned(const std::vector<std::string>& utterance_ids) const;
};

LabelTable load_labels(const std::string& path, const ActivationStore& store);
void save_labels(const LabelTable& labels, const std::vector<std::string>& utterance_ids,
                 const std::string& path);

struct Trial {
  std::string utt_a;
  std::string utt_b;
  bool same = false;
};

struct TrialSet {
  std::vector<Trial> trials;
};

TrialSet load_trials(const std::string& path, const ActivationStore& store);
void save_trials(const TrialSet& trials, const std::string& path);

}  // namespace probekit

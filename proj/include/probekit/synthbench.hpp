#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "probekit/common.hpp"
#include "probekit/store.hpp"

namespace probekit {

// Synthetic dataset with a planted informative neuron set S: every analysis
// algorithm in the toolkit can be checked against this ground truth.
struct PlantSpec {
  std::string dataset_name = "planted";
  int num_utterances = 600;
  std::vector<std::pair<std::string, int>> layers = {{"L1", 1000}};  // (name, dim)
  std::vector<int> planted_neurons;  // explicit global indices S
  int num_classes = 2;
  double signal_strength = 3.0;  // class-mean separation, units of noise sigma
  double noise_sigma = 1.0;
  int frames_min = 5;
  int frames_max = 15;
  uint64_t seed = 0;

  int total_width() const;
  void validate() const;
};

struct PlantedData {
  ActivationStore frames;
  ActivationStore pooled;  // mean pooling of the frames stage
  LabelTable labels;       // round-robin class assignment
  std::vector<int> planted;
};

// Labels are round-robin; neurons in S emit class-conditional Gaussian
// frames with mean +/- signal_strength on a deterministic class pattern,
// everything else is N(0, sigma^2).
PlantedData generate_planted(const PlantSpec& spec);

// Pick a deterministic planted set of the given size (uniform sample of the
// width, driven by the spec seed).
std::vector<int> default_planted_set(int total_width, int count, uint64_t seed);

struct SpeakerSpec {
  std::string dataset_name = "speakers";
  int num_speakers = 20;
  int utts_per_speaker = 10;
  int dim = 64;
  double intra_sigma = 0.1;  // spread of utterances around a speaker centroid
  double inter_sigma = 10.0;  // spread of centroids
  uint64_t seed = 0;

  void validate() const;
};

struct SpeakerData {
  ActivationStore store;  // pooled stage, single "embed" layer
  TrialSet trials;        // all same-speaker pairs + equal random cross sample
};

SpeakerData generate_speakers(const SpeakerSpec& spec);

}  // namespace probekit

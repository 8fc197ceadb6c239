#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probekit/common.hpp"
#include "probekit/pooling.hpp"
#include "probekit/store.hpp"

namespace probekit {

// Seeded shuffle split of [0, n): probes train on the train side and every
// reported accuracy comes from the test side.
struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

SplitIndices split_indices(int n, double train_fraction, uint64_t seed);

// Control labels: the train split gets a permutation of its own label
// multiset (per-class counts preserved); the test split is relabeled by
// independent uniform draws over the same vocabulary.
LabelTable control_labels(const LabelTable& labels, const std::vector<std::string>& utterance_ids,
                          const SplitIndices& split, uint64_t seed);

// R.INIT features: i.i.d. uniform [-1, 1]; a given (n, d, seed) always
// produces the same matrix, so an utterance keeps its vector across splits.
PooledMatrix random_features(int n, int d, uint64_t seed,
                             const std::vector<std::string>& utterance_ids);

struct SelectivityReport {
  double acc_all = 0.0;
  double acc_control = 0.0;
  double selectivity = 0.0;  // acc_all - acc_control, exactly
  uint64_t control_seed = 0;
};

SelectivityReport selectivity(double acc_all, double acc_control, uint64_t control_seed = 0);

struct RedundancyVerdict {
  std::string unit;
  double unit_accuracy = 0.0;
  double oracle_accuracy = 0.0;
  double threshold = 0.0;  // absolute accuracy points
  bool redundant = false;
  std::string rule;  // "absolute" or "relative97"
};

// Absolute rule: redundant iff unit >= oracle - threshold (layer/grid
// redundancy, delta = 1.0 points).
RedundancyVerdict redundancy_judge(const std::string& unit, double unit_accuracy,
                                   double oracle_accuracy, double threshold = 1.0);

// Relative rule: redundant iff unit >= fraction * oracle (minimal-set
// redundancy, fraction = 0.97).
RedundancyVerdict redundancy_judge_relative(const std::string& unit, double unit_accuracy,
                                            double oracle_accuracy,
                                            double oracle_fraction = 0.97);

}  // namespace probekit

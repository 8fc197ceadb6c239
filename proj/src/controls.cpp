#include "probekit/controls.hpp"

#include <numeric>

#include "probekit/rng.hpp"

namespace probekit {

SplitIndices split_indices(int n, double train_fraction, uint64_t seed) {
  require(n >= 2, "split: need at least 2 rows");
  require(train_fraction > 0.0 && train_fraction < 1.0, "split: train fraction out of (0, 1)");
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Xoshiro256ss rng(seed);
  shuffle(idx, rng);
  int k = fraction_count(train_fraction, n);
  if (k < 1) k = 1;
  if (k > n - 1) k = n - 1;  // both sides stay non-empty
  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + k);
  s.test.assign(idx.begin() + k, idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

LabelTable control_labels(const LabelTable& labels, const std::vector<std::string>& utterance_ids,
                          const SplitIndices& split, uint64_t seed) {
  require(!labels.by_utterance.empty(), "control_labels: empty labels");
  const int c = labels.num_classes();
  require(c >= 2, "control_labels: need at least 2 classes");

  LabelTable control;
  control.class_vocab = labels.class_vocab;
  Xoshiro256ss rng(seed);

  // Train side: permute the multiset so per-class counts are untouched.
  std::vector<int> pool;
  pool.reserve(split.train.size());
  for (int i : split.train) {
    const auto& id = utterance_ids.at(static_cast<size_t>(i));
    auto it = labels.by_utterance.find(id);
    require(it != labels.by_utterance.end(), "control_labels: utterance '" + id + "' unlabeled");
    pool.push_back(it->second);
  }
  shuffle(pool, rng);
  for (size_t k = 0; k < split.train.size(); ++k)
    control.by_utterance.emplace(utterance_ids.at(static_cast<size_t>(split.train[k])), pool[k]);

  // Test side: independent uniform draws over the vocabulary.
  for (int i : split.test) {
    const auto& id = utterance_ids.at(static_cast<size_t>(i));
    require(labels.by_utterance.count(id) > 0, "control_labels: utterance '" + id + "' unlabeled");
    control.by_utterance.emplace(id, static_cast<int>(rng.below(static_cast<uint64_t>(c))));
  }
  return control;
}

PooledMatrix random_features(int n, int d, uint64_t seed,
                             const std::vector<std::string>& utterance_ids) {
  require(n >= 1 && d >= 1, "random_features: shape must be at least 1x1");
  require(static_cast<int>(utterance_ids.size()) == n,
          "random_features: utterance id count does not match rows");
  PooledMatrix out;
  out.utterance_ids = utterance_ids;
  out.values.resize(n, d);
  Xoshiro256ss rng(seed);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < d; ++j) out.values(r, j) = static_cast<float>(rng.uniform(-1.0, 1.0));
  out.provenance.reserve(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) out.provenance.push_back({"random", j, Stat::mean});
  return out;
}

SelectivityReport selectivity(double acc_all, double acc_control, uint64_t control_seed) {
  require(acc_all >= 0.0 && acc_all <= 100.0, "selectivity: acc_all out of [0, 100]");
  require(acc_control >= 0.0 && acc_control <= 100.0, "selectivity: acc_control out of [0, 100]");
  SelectivityReport r;
  r.acc_all = acc_all;
  r.acc_control = acc_control;
  r.selectivity = acc_all - acc_control;
  r.control_seed = control_seed;
  return r;
}

RedundancyVerdict redundancy_judge(const std::string& unit, double unit_accuracy,
                                   double oracle_accuracy, double threshold) {
  require(threshold >= 0.0, "redundancy: threshold must be >= 0");
  RedundancyVerdict v;
  v.unit = unit;
  v.unit_accuracy = unit_accuracy;
  v.oracle_accuracy = oracle_accuracy;
  v.threshold = threshold;
  v.redundant = unit_accuracy >= oracle_accuracy - threshold;
  v.rule = "absolute";
  return v;
}

RedundancyVerdict redundancy_judge_relative(const std::string& unit, double unit_accuracy,
                                            double oracle_accuracy, double oracle_fraction) {
  require(oracle_fraction >= 0.0 && oracle_fraction <= 1.0,
          "redundancy: oracle fraction out of [0, 1]");
  RedundancyVerdict v = redundancy_judge(unit, unit_accuracy, oracle_accuracy,
                                         (1.0 - oracle_fraction) * oracle_accuracy);
  v.redundant = unit_accuracy >= oracle_fraction * oracle_accuracy;
  v.rule = "relative97";
  return v;
}

}  // namespace probekit

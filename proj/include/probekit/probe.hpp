#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probekit/common.hpp"
#include "probekit/pooling.hpp"
#include "probekit/store.hpp"

namespace probekit {

struct TrainConfig {
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 20;
  int batch_size = 128;
  double lambda1 = 1e-5;  // L1 weight
  double lambda2 = 1e-5;  // L2 weight
  uint64_t seed = 0;
  bool shuffle_each_epoch = true;
  // Optional z-score of features on the training matrix; off by default and
  // recorded in the serialized model when used.
  bool standardize = false;

  void validate() const;
};

// Linear softmax classifier: logits = x * weights + bias.
struct ProbeModel {
  MatrixD weights;  // D x C
  VectorD bias;     // C
  TrainConfig config;
  std::vector<std::string> class_vocab;
  std::vector<ColumnInfo> feature_provenance;
  VectorD feature_mean;  // size D when standardize, else empty
  VectorD feature_std;

  int dim() const { return static_cast<int>(weights.rows()); }
  int num_classes() const { return static_cast<int>(weights.cols()); }
};

// Mean cross-entropy over rows plus lambda1*||w||_1 + lambda2*||w||_2^2.
// The bias carries no penalty.
double probe_loss(const MatrixD& weights, const VectorD& bias, const MatrixD& x,
                  const std::vector<int>& y, double lambda1, double lambda2);

// Analytic gradient of probe_loss; sign(0) = 0 for the L1 subgradient.
void probe_gradient(const MatrixD& weights, const VectorD& bias, const MatrixD& x,
                    const std::vector<int>& y, double lambda1, double lambda2,
                    MatrixD* grad_w, VectorD* grad_b);

// Minibatch Adam from zero initialization, exactly epochs * ceil(N/batch)
// steps, deterministic for a given seed.
ProbeModel train_probe(const PooledMatrix& features, const LabelTable& labels,
                       const TrainConfig& config);

// Accuracy in percent, exact integer counting; argmax ties resolve to the
// lowest class index.
double evaluate(const ProbeModel& probe, const PooledMatrix& features,
                const LabelTable& labels);
double evaluate(const ProbeModel& probe, const PooledMatrix& features,
                const std::vector<int>& y);

// N x C softmax probabilities.
MatrixD predict_scores(const ProbeModel& probe, const PooledMatrix& features);

// Accuracy of always predicting the most frequent train class, in percent.
double majority_accuracy(const std::vector<int>& train_y, const std::vector<int>& test_y);

// probe.json (config, vocab, provenance) + probe.bin (f32le weights then bias).
void save_probe(const ProbeModel& probe, const std::string& dir);
ProbeModel load_probe(const std::string& dir);

}  // namespace probekit

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probekit/common.hpp"
#include "probekit/pooling.hpp"
#include "probekit/probe.hpp"
#include "probekit/store.hpp"

namespace probekit {

// Importance order of all D neurons derived from trained probe weights.
struct NeuronRanking {
  int dim = 0;
  // Per class: all neurons sorted by |weight| descending, ties to the lower
  // index.
  std::vector<std::vector<int>> per_class_order;
  std::vector<double> total_mass;  // per class, sum of |weights|
  // Merged importance order with the cumulative-mass percentile at which
  // each neuron first entered; percentiles are non-decreasing.
  std::vector<int> order;
  std::vector<double> entry_percentile;

  std::vector<int> top(int count) const;     // first `count`, sorted ascending
  std::vector<int> bottom(int count) const;  // last `count`, sorted ascending
};

// Per-class smallest weight-mass prefix reaching p of the total mass
// (inclusive rule, so non-empty for p > 0), unioned over classes.
// Returned sorted ascending.
std::vector<int> top_neurons(const ProbeModel& probe, double p);

struct RankingSchedule {
  double p_start = 0.001;
  double p_factor = 1.5;
};

// Iterates the percentile schedule up to 1.0, appending newly discovered
// neurons in per-class descending-weight order, then pads with any leftover
// neurons by descending max-class weight.
NeuronRanking build_ranking(const ProbeModel& probe, const RankingSchedule& schedule = {});

void save_ranking(const NeuronRanking& ranking, const std::vector<std::string>& class_vocab,
                  const RankingSchedule& schedule, const std::string& path);
NeuronRanking load_ranking(const std::string& path);

// Zero every column outside `keep`.
PooledMatrix mask_features(const PooledMatrix& features, const std::vector<int>& keep);

enum class MaskVariant { top, bottom, random };

std::string mask_variant_name(MaskVariant v);
MaskVariant parse_mask_variant(const std::string& s);

struct AblationReport {
  double fraction = 0.0;
  MaskVariant variant = MaskVariant::top;
  std::vector<double> run_accuracies;
  double mean = 0.0;
  double stddev = 0.0;
};

// Re-evaluates the already-trained probe on masked activations. top/bottom
// are deterministic and collapse to a single evaluation; random redraws a
// |keep|-sized uniform sample per run from seed + run_index.
AblationReport mask_evaluate(const ProbeModel& probe, const PooledMatrix& features,
                             const std::vector<int>& y, const std::vector<int>& keep,
                             MaskVariant variant, int runs, uint64_t seed);

std::vector<int> select_bottom(const NeuronRanking& ranking, double fraction);
std::vector<int> select_random(int dim, double fraction, uint64_t seed);

struct GridPointResult {
  double percent = 0.0;
  int count = 0;
  std::vector<double> run_accuracies;
  double mean = 0.0;
  double stddev = 0.0;
  bool qualified = false;  // within [oracle - delta, oracle + delta]
};

struct MinimalSetResult {
  bool converged = false;
  double chosen_percent = 0.0;
  std::vector<int> neurons;
  double retrained_mean = 0.0;
  double retrained_std = 0.0;
  std::vector<double> retrained_runs;
  double oracle_mean = 0.0;
  double oracle_std = 0.0;
  std::vector<double> oracle_runs;
  double random_mean = 0.0;
  double random_std = 0.0;
  std::vector<double> random_runs;
  int random_count = 0;
  std::vector<GridPointResult> grid;  // evaluated points, ascending percent
  double delta = 1.0;
};

struct MinimalSearchOptions {
  double delta = 1.0;
  std::vector<double> grid_percent = {1, 5, 10, 15, 20, 25, 50, 75};
  int runs = 5;
  uint64_t seed = 0;
};

// Walks the percent grid ascending, retraining a fresh probe per point and
// run on the top-ranked slice, until a point lands within delta of the
// oracle accuracy. An equal-size random slice is retrained as the baseline.
MinimalSetResult minimal_set_search(const PooledMatrix& train_features,
                                    const PooledMatrix& test_features,
                                    const LabelTable& labels, const NeuronRanking& ranking,
                                    const TrainConfig& base_config,
                                    const MinimalSearchOptions& options);

struct LayerCount {
  std::string layer;
  int count = 0;
  double percent = 0.0;  // against total network width
};

std::vector<LayerCount> distribution_report(const std::vector<int>& neurons,
                                            const Manifest& manifest);
std::vector<LayerCount> distribution_report(const std::vector<int>& neurons,
                                            const std::vector<ColumnInfo>& provenance);

}  // namespace probekit

#include "probekit/neuron_analysis.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "probekit/rng.hpp"
#include "probekit/threading.hpp"

namespace probekit {

using nlohmann::json;

std::vector<int> NeuronRanking::top(int count) const {
  require(count >= 0 && count <= dim, "ranking: top count out of range");
  std::vector<int> out(order.begin(), order.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> NeuronRanking::bottom(int count) const {
  require(count >= 0 && count <= dim, "ranking: bottom count out of range");
  std::vector<int> out(order.end() - count, order.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// |weights| of one class sorted descending, ties to the lower neuron index.
std::vector<int> sorted_by_abs_weight(const MatrixD& weights, int cls) {
  std::vector<int> idx(static_cast<size_t>(weights.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(weights(a, cls)) > std::abs(weights(b, cls));
  });
  return idx;
}

// Smallest prefix length whose cumulative |weight| mass reaches p * total.
// The running sum is accumulated in the same order used for the total, so
// the final prefix always qualifies at p = 1.
int prefix_for_mass(const MatrixD& weights, int cls, const std::vector<int>& sorted,
                    double p, double total_mass) {
  const double target = p * total_mass;
  double cum = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    cum += std::abs(weights(sorted[i], cls));
    if (cum >= target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(sorted.size());
}

void check_class_masses(const std::vector<double>& total_mass,
                        const std::vector<std::string>& vocab) {
  for (size_t c = 0; c < total_mass.size(); ++c)
    require(total_mass[c] > 0.0,
            "degenerate class '" + (c < vocab.size() ? vocab[c] : std::to_string(c)) +
                "': all probe weights are zero");
}

}  // namespace

std::vector<int> top_neurons(const ProbeModel& probe, double p) {
  require(p > 0.0 && p <= 1.0, "top_neurons: p must be in (0, 1]");
  const int c = probe.num_classes();
  std::vector<double> total_mass(static_cast<size_t>(c));
  for (int k = 0; k < c; ++k) total_mass[static_cast<size_t>(k)] = probe.weights.col(k).cwiseAbs().sum();
  check_class_masses(total_mass, probe.class_vocab);

  std::vector<char> in_set(static_cast<size_t>(probe.dim()), 0);
  for (int k = 0; k < c; ++k) {
    const auto sorted = sorted_by_abs_weight(probe.weights, k);
    const int len = prefix_for_mass(probe.weights, k, sorted, p, total_mass[static_cast<size_t>(k)]);
    for (int i = 0; i < len; ++i) in_set[static_cast<size_t>(sorted[static_cast<size_t>(i)])] = 1;
  }
  std::vector<int> out;
  for (int n = 0; n < probe.dim(); ++n)
    if (in_set[static_cast<size_t>(n)]) out.push_back(n);
  return out;
}

NeuronRanking build_ranking(const ProbeModel& probe, const RankingSchedule& schedule) {
  require(schedule.p_start > 0.0 && schedule.p_start <= 1.0, "ranking: p_start out of range");
  require(schedule.p_factor > 1.0, "ranking: p_factor must be > 1");
  const int d = probe.dim();
  const int c = probe.num_classes();

  NeuronRanking r;
  r.dim = d;
  r.total_mass.resize(static_cast<size_t>(c));
  r.per_class_order.resize(static_cast<size_t>(c));
  for (int k = 0; k < c; ++k) {
    r.total_mass[static_cast<size_t>(k)] = probe.weights.col(k).cwiseAbs().sum();
    r.per_class_order[static_cast<size_t>(k)] = sorted_by_abs_weight(probe.weights, k);
  }
  check_class_masses(r.total_mass, probe.class_vocab);

  std::vector<char> listed(static_cast<size_t>(d), 0);
  r.order.reserve(static_cast<size_t>(d));
  r.entry_percentile.reserve(static_cast<size_t>(d));

  double p = schedule.p_start;
  for (;;) {
    for (int k = 0; k < c; ++k) {
      const auto& sorted = r.per_class_order[static_cast<size_t>(k)];
      const int len =
          prefix_for_mass(probe.weights, k, sorted, p, r.total_mass[static_cast<size_t>(k)]);
      for (int i = 0; i < len; ++i) {
        const int n = sorted[static_cast<size_t>(i)];
        if (!listed[static_cast<size_t>(n)]) {
          listed[static_cast<size_t>(n)] = 1;
          r.order.push_back(n);
          r.entry_percentile.push_back(p);
        }
      }
    }
    if (p >= 1.0) break;
    p = std::min(1.0, p * schedule.p_factor);
  }

  // Neurons with zero weight in every class never cross a mass threshold;
  // pad them by descending max-class |weight| (which is 0, so index order).
  std::vector<int> rest;
  for (int n = 0; n < d; ++n)
    if (!listed[static_cast<size_t>(n)]) rest.push_back(n);
  std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
    return probe.weights.row(a).cwiseAbs().maxCoeff() >
           probe.weights.row(b).cwiseAbs().maxCoeff();
  });
  for (int n : rest) {
    r.order.push_back(n);
    r.entry_percentile.push_back(1.0);
  }
  return r;
}

void save_ranking(const NeuronRanking& ranking, const std::vector<std::string>& class_vocab,
                  const RankingSchedule& schedule, const std::string& path) {
  json j;
  j["dim"] = ranking.dim;
  j["class_vocab"] = class_vocab;
  j["selection_rule"] = "inclusive_prefix";
  j["p_schedule"] = {{"start", schedule.p_start}, {"factor", schedule.p_factor}};
  j["total_mass"] = ranking.total_mass;
  j["order"] = ranking.order;
  j["entry_percentile"] = ranking.entry_percentile;
  j["per_class_order"] = ranking.per_class_order;
  std::ofstream out(path);
  require(out.good(), "unwritable path: " + path);
  out << j.dump() << "\n";
}

NeuronRanking load_ranking(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "missing file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("ranking parse error: " + std::string(e.what()));
  }
  NeuronRanking r;
  try {
    r.dim = j.at("dim").get<int>();
    r.total_mass = j.at("total_mass").get<std::vector<double>>();
    r.order = j.at("order").get<std::vector<int>>();
    r.entry_percentile = j.at("entry_percentile").get<std::vector<double>>();
    r.per_class_order = j.at("per_class_order").get<std::vector<std::vector<int>>>();
  } catch (const json::exception& e) {
    throw Error("ranking file: " + std::string(e.what()));
  }
  require(static_cast<int>(r.order.size()) == r.dim, "ranking file: order does not cover dim");
  return r;
}

PooledMatrix mask_features(const PooledMatrix& features, const std::vector<int>& keep) {
  PooledMatrix out;
  out.utterance_ids = features.utterance_ids;
  out.provenance = features.provenance;
  out.values = MatrixF::Zero(features.rows(), features.cols());
  for (int j : keep) {
    require(j >= 0 && j < features.cols(), "mask: neuron index out of range");
    out.values.col(j) = features.values.col(j);
  }
  return out;
}

std::string mask_variant_name(MaskVariant v) {
  switch (v) {
    case MaskVariant::top: return "top";
    case MaskVariant::bottom: return "bottom";
    default: return "random";
  }
}

MaskVariant parse_mask_variant(const std::string& s) {
  if (s == "top") return MaskVariant::top;
  if (s == "bottom") return MaskVariant::bottom;
  if (s == "random") return MaskVariant::random;
  throw Error("unknown mask variant '" + s + "'");
}

AblationReport mask_evaluate(const ProbeModel& probe, const PooledMatrix& features,
                             const std::vector<int>& y, const std::vector<int>& keep,
                             MaskVariant variant, int runs, uint64_t seed) {
  require(runs >= 1, "mask_evaluate: runs must be >= 1");
  require(features.cols() == probe.dim(), "mask_evaluate: feature width mismatch");
  AblationReport report;
  report.variant = variant;
  report.fraction = features.cols() > 0
                        ? static_cast<double>(keep.size()) / static_cast<double>(features.cols())
                        : 0.0;
  if (variant == MaskVariant::random) {
    report.run_accuracies.resize(static_cast<size_t>(runs));
    parallel_for(runs, [&](int run) {
      Xoshiro256ss rng(seed + static_cast<uint64_t>(run));
      const auto sample =
          sample_without_replacement(features.cols(), static_cast<int>(keep.size()), rng);
      report.run_accuracies[static_cast<size_t>(run)] =
          evaluate(probe, mask_features(features, sample), y);
    });
  } else {
    report.run_accuracies.push_back(evaluate(probe, mask_features(features, keep), y));
  }
  report.mean = mean_of(report.run_accuracies);
  report.stddev = stddev_of(report.run_accuracies);
  return report;
}

std::vector<int> select_bottom(const NeuronRanking& ranking, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "select_bottom: fraction out of range");
  return ranking.bottom(fraction_count(fraction, ranking.dim));
}

std::vector<int> select_random(int dim, double fraction, uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "select_random: fraction out of range");
  Xoshiro256ss rng(seed);
  return sample_without_replacement(dim, fraction_count(fraction, dim), rng);
}

namespace {

struct RunStats {
  std::vector<double> runs;
  double mean = 0.0;
  double stddev = 0.0;
};

RunStats retrain_accuracy(const PooledMatrix& train, const PooledMatrix& test,
                          const LabelTable& labels, const TrainConfig& base, int runs) {
  RunStats s;
  s.runs.resize(static_cast<size_t>(runs));
  parallel_for(runs, [&](int run) {
    TrainConfig cfg = base;
    cfg.seed = base.seed + static_cast<uint64_t>(run);
    const ProbeModel probe = train_probe(train, labels, cfg);
    s.runs[static_cast<size_t>(run)] = evaluate(probe, test, labels);
  });
  s.mean = mean_of(s.runs);
  s.stddev = stddev_of(s.runs);
  return s;
}

}  // namespace

MinimalSetResult minimal_set_search(const PooledMatrix& train_features,
                                    const PooledMatrix& test_features,
                                    const LabelTable& labels, const NeuronRanking& ranking,
                                    const TrainConfig& base_config,
                                    const MinimalSearchOptions& options) {
  require(!options.grid_percent.empty(), "minimal_set_search: grid is empty");
  require(options.delta >= 0.0, "minimal_set_search: delta must be >= 0");
  require(options.runs >= 1, "minimal_set_search: runs must be >= 1");
  require(train_features.cols() == ranking.dim && test_features.cols() == ranking.dim,
          "minimal_set_search: feature width does not match ranking dim");

  std::vector<double> grid = options.grid_percent;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double g : grid)
    require(g > 0.0 && g <= 100.0, "minimal_set_search: grid percent out of (0, 100]");

  MinimalSetResult result;
  result.delta = options.delta;

  const RunStats oracle =
      retrain_accuracy(train_features, test_features, labels, base_config, options.runs);
  result.oracle_runs = oracle.runs;
  result.oracle_mean = oracle.mean;
  result.oracle_std = oracle.stddev;

  const double lower = oracle.mean - options.delta;
  const double upper = oracle.mean + options.delta;

  for (double percent : grid) {
    GridPointResult point;
    point.percent = percent;
    point.count = std::max(1, fraction_count(percent / 100.0, ranking.dim));
    const auto subset = ranking.top(point.count);
    const RunStats stats =
        retrain_accuracy(slice_columns(train_features, subset),
                         slice_columns(test_features, subset), labels, base_config, options.runs);
    point.run_accuracies = stats.runs;
    point.mean = stats.mean;
    point.stddev = stats.stddev;
    point.qualified = stats.mean >= lower && stats.mean <= upper;
    result.grid.push_back(point);
    // The scan stops at the first point matching the oracle up to delta.
    if (stats.mean >= lower) break;
  }

  const GridPointResult* chosen = nullptr;
  for (const auto& point : result.grid) {
    if (!point.qualified) continue;
    if (chosen == nullptr || point.mean > chosen->mean) chosen = &point;
  }

  const GridPointResult& size_ref = chosen ? *chosen : result.grid.back();
  if (chosen) {
    result.converged = true;
    result.chosen_percent = chosen->percent;
    result.neurons = ranking.top(chosen->count);
    result.retrained_runs = chosen->run_accuracies;
    result.retrained_mean = chosen->mean;
    result.retrained_std = chosen->stddev;
  }

  // Random baseline at the same size, fresh subset per run.
  result.random_count = size_ref.count;
  result.random_runs.resize(static_cast<size_t>(options.runs));
  parallel_for(options.runs, [&](int run) {
    Xoshiro256ss rng(options.seed + static_cast<uint64_t>(run));
    const auto subset = sample_without_replacement(ranking.dim, size_ref.count, rng);
    TrainConfig cfg = base_config;
    cfg.seed = base_config.seed + static_cast<uint64_t>(run);
    const ProbeModel probe =
        train_probe(slice_columns(train_features, subset), labels, cfg);
    result.random_runs[static_cast<size_t>(run)] =
        evaluate(probe, slice_columns(test_features, subset), labels);
  });
  result.random_mean = mean_of(result.random_runs);
  result.random_std = stddev_of(result.random_runs);
  return result;
}

std::vector<LayerCount> distribution_report(const std::vector<int>& neurons,
                                            const Manifest& manifest) {
  std::vector<LayerCount> out;
  out.reserve(manifest.layers.size());
  for (const auto& l : manifest.layers) out.push_back({l.name, 0, 0.0});
  for (int n : neurons) {
    const LayerSpec& owner = manifest.layer_at(n);  // throws when out of range
    for (auto& row : out)
      if (row.layer == owner.name) {
        ++row.count;
        break;
      }
  }
  const double total = static_cast<double>(manifest.total_width());
  for (auto& row : out) row.percent = 100.0 * static_cast<double>(row.count) / total;
  return out;
}

std::vector<LayerCount> distribution_report(const std::vector<int>& neurons,
                                            const std::vector<ColumnInfo>& provenance) {
  std::vector<LayerCount> out;
  auto row_for = [&](const std::string& name) -> LayerCount& {
    for (auto& row : out)
      if (row.layer == name) return row;
    out.push_back({name, 0, 0.0});
    return out.back();
  };
  // Seed rows in first-appearance order so empty layers still show up.
  for (const auto& c : provenance) row_for(c.layer);
  for (int n : neurons) {
    require(n >= 0 && n < static_cast<int>(provenance.size()),
            "distribution: neuron index " + std::to_string(n) + " outside feature width");
    ++row_for(provenance[static_cast<size_t>(n)].layer).count;
  }
  const double total = static_cast<double>(provenance.size());
  for (auto& row : out) row.percent = 100.0 * static_cast<double>(row.count) / total;
  return out;
}

}  // namespace probekit

// probekit: train diagnostic probes on exported activations, rank neurons,
// run masking ablations and minimal-set searches, score verification
// trials, and generate synthetic planted-signal benchmarks.
//
// Subcommands: synth pool train evaluate rank ablate minimal control
//              redundancy verify distribution
//
// Every report is JSON (primary) plus a CSV mirror next to it; all
// randomness flows from --seed; PROBEKIT_THREADS caps worker threads.
// Exit codes: 0 success, 1 validation/usage error, 2 internal error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "probekit/controls.hpp"
#include "probekit/neuron_analysis.hpp"
#include "probekit/pooling.hpp"
#include "probekit/probe.hpp"
#include "probekit/report.hpp"
#include "probekit/rng.hpp"
#include "probekit/store.hpp"
#include "probekit/synthbench.hpp"
#include "probekit/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace probekit;

namespace {

struct SplitFlags {
  double train_fraction = 0.8;
  uint64_t split_seed = 0;
};

struct TrainFlags {
  TrainConfig config;
  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", config.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--batch-size", config.batch_size, "minibatch size")->capture_default_str();
    cmd->add_option("--lr", config.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--lambda1", config.lambda1, "L1 weight")->capture_default_str();
    cmd->add_option("--lambda2", config.lambda2, "L2 weight")->capture_default_str();
    cmd->add_flag("--standardize", config.standardize, "z-score features on the train split");
    cmd->add_flag("!--no-shuffle", config.shuffle_each_epoch, "disable epoch shuffling");
  }
};

void attach_split(CLI::App* cmd, SplitFlags& split) {
  cmd->add_option("--train-frac", split.train_fraction, "train split fraction")
      ->capture_default_str();
  cmd->add_option("--split-seed", split.split_seed, "split shuffle seed")->capture_default_str();
}

json split_json(const SplitFlags& s) {
  return {{"train_fraction", s.train_fraction}, {"split_seed", s.split_seed}};
}

json train_config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},       {"adam_epsilon", c.adam_epsilon},
          {"epochs", c.epochs},               {"batch_size", c.batch_size},
          {"lambda1", c.lambda1},             {"lambda2", c.lambda2},
          {"seed", c.seed},                   {"shuffle_each_epoch", c.shuffle_each_epoch},
          {"standardize", c.standardize}};
}

std::string csv_path_for(const std::string& out) {
  fs::path p(out);
  p.replace_extension(".csv");
  return p.string();
}

void emit_report(json report, const std::string& out, const std::string& csv_header,
                 const std::vector<std::string>& csv_rows) {
  report["timestamp"] = iso_timestamp();
  write_json_report(report, out);
  write_csv(csv_path_for(out), csv_header, csv_rows);
}

std::string default_labels(const std::string& store_dir, const std::string& flag) {
  if (!flag.empty()) return flag;
  return (fs::path(store_dir) / "labels.csv").string();
}

struct Features {
  ActivationStore store;
  std::vector<ColumnInfo> provenance;
  PooledMatrix matrix;
};

Features load_features(const std::string& store_dir, const std::string& layer) {
  Features f;
  f.store = load_store(store_dir);
  require(f.store.manifest.stage == Stage::pooled,
          "store at " + store_dir + " is frames-stage; run `probekit pool` first");
  f.provenance = load_provenance(store_dir, f.store.manifest);
  f.matrix = matrix_from_store(f.store, f.provenance, layer);
  return f;
}

std::string fmt2(double v) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(4);
  ss << v;
  return ss.str();
}

// ---------------------------------------------------------------- synth --

struct SynthPlantedOpts {
  std::string out;
  std::string name = "planted";
  int n = 600;
  std::string layers = "L1:1000";
  int planted_count = 20;
  std::string planted_indices;
  int classes = 2;
  double mu = 3.0;
  double sigma = 1.0;
  int frames_min = 5;
  int frames_max = 15;
  uint64_t seed = 0;
};

std::vector<std::pair<std::string, int>> parse_layer_list(const std::string& text) {
  std::vector<std::pair<std::string, int>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    require(colon != std::string::npos, "bad --layers entry '" + item + "' (want name:dim)");
    int dim = 0;
    try {
      dim = std::stoi(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error("bad --layers dim in '" + item + "'");
    }
    out.push_back({item.substr(0, colon), dim});
  }
  require(!out.empty(), "--layers is empty");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw Error("bad integer '" + item + "' in list");
    }
  }
  return out;
}

void run_synth_planted(const SynthPlantedOpts& o) {
  PlantSpec spec;
  spec.dataset_name = o.name;
  spec.num_utterances = o.n;
  spec.layers = parse_layer_list(o.layers);
  spec.num_classes = o.classes;
  spec.signal_strength = o.mu;
  spec.noise_sigma = o.sigma;
  spec.frames_min = o.frames_min;
  spec.frames_max = o.frames_max;
  spec.seed = o.seed;
  if (!o.planted_indices.empty())
    spec.planted_neurons = parse_int_list(o.planted_indices);
  else
    spec.planted_neurons = default_planted_set(spec.total_width(), o.planted_count, o.seed);

  PlantedData data = generate_planted(spec);
  const fs::path root(o.out);
  save_store(data.frames, (root / "frames").string());
  save_store(data.pooled, (root / "pooled").string());
  save_labels(data.labels, data.frames.manifest.utterance_ids,
              (root / "frames" / "labels.csv").string());
  save_labels(data.labels, data.frames.manifest.utterance_ids,
              (root / "pooled" / "labels.csv").string());

  json report;
  report["report"] = "synth_planted";
  report["config"] = {{"out", o.out},
                      {"name", o.name},
                      {"num_utterances", o.n},
                      {"layers", o.layers},
                      {"num_classes", o.classes},
                      {"signal_strength", o.mu},
                      {"noise_sigma", o.sigma},
                      {"frames_min", o.frames_min},
                      {"frames_max", o.frames_max},
                      {"seed", o.seed}};
  report["planted_neurons"] = data.planted;
  report["total_width"] = spec.total_width();
  std::vector<std::string> rows;
  for (int g : data.planted) rows.push_back(std::to_string(g));
  emit_report(report, (root / "ground_truth.json").string(), "planted_neuron", rows);
  std::cout << "planted store written to " << o.out << " (width " << spec.total_width()
            << ", |S|=" << data.planted.size() << ")\n";
}

struct SynthSpeakerOpts {
  std::string out;
  std::string name = "speakers";
  int speakers = 20;
  int utts = 10;
  int dim = 64;
  double intra = 0.1;
  double inter = 10.0;
  uint64_t seed = 0;
};

void run_synth_speakers(const SynthSpeakerOpts& o) {
  SpeakerSpec spec;
  spec.dataset_name = o.name;
  spec.num_speakers = o.speakers;
  spec.utts_per_speaker = o.utts;
  spec.dim = o.dim;
  spec.intra_sigma = o.intra;
  spec.inter_sigma = o.inter;
  spec.seed = o.seed;
  SpeakerData data = generate_speakers(spec);
  save_store(data.store, o.out);
  save_trials(data.trials, (fs::path(o.out) / "pairs.csv").string());
  int same = 0;
  for (const auto& t : data.trials.trials) same += t.same ? 1 : 0;
  std::cout << "speaker store written to " << o.out << " (" << data.trials.trials.size()
            << " trials, " << same << " target)\n";
}

// ----------------------------------------------------------------- pool --

struct PoolOpts {
  std::string store;
  std::string out;
  std::string method = "mean";
  std::string name;
};

void run_pool(const PoolOpts& o) {
  ActivationStore store = load_store(o.store);
  const PoolMethod method = parse_pool_method(o.method);
  std::vector<PooledMatrix> pooled;
  std::vector<std::string> names;
  for (const auto& l : store.manifest.layers) {
    pooled.push_back(pool_layer(store, l.name, method));
    names.push_back(l.name);
  }
  save_pooled_store(pooled, names, o.name.empty() ? store.manifest.dataset_name : o.name, o.out);
  for (const char* sidecar : {"labels.csv", "pairs.csv"}) {
    const fs::path src = fs::path(o.store) / sidecar;
    if (fs::exists(src))
      fs::copy_file(src, fs::path(o.out) / sidecar, fs::copy_options::overwrite_existing);
  }
  std::cout << "pooled store written to " << o.out << " (method " << o.method << ")\n";
}

// ---------------------------------------------------------------- train --

struct TrainOpts {
  std::string store;
  std::string labels;
  std::string layer = "ALL";
  std::string probe_out;
  std::string out;
  TrainFlags train;
  SplitFlags split;
  uint64_t seed = 0;
};

std::string pooling_of(const std::vector<ColumnInfo>& provenance) {
  for (const auto& c : provenance)
    if (c.stat == Stat::std_dev) return "mean_std";
  return "mean";
}

void run_train(const TrainOpts& o) {
  Features f = load_features(o.store, o.layer);
  LabelTable labels = load_labels(default_labels(o.store, o.labels), f.store);
  SplitIndices split = split_indices(f.matrix.rows(), o.split.train_fraction, o.split.split_seed);
  PooledMatrix train_x = slice_rows(f.matrix, split.train);
  PooledMatrix test_x = slice_rows(f.matrix, split.test);

  TrainConfig cfg = o.train.config;
  cfg.seed = o.seed;
  ProbeModel probe = train_probe(train_x, labels, cfg);
  save_probe(probe, o.probe_out);

  const double acc_train = evaluate(probe, train_x, labels);
  const double acc_test = evaluate(probe, test_x, labels);
  const double maj = majority_accuracy(labels.aligned(train_x.utterance_ids),
                                       labels.aligned(test_x.utterance_ids));

  json report;
  report["report"] = "train";
  report["config"] = {{"store", o.store},
                      {"labels", default_labels(o.store, o.labels)},
                      {"layer", o.layer},
                      {"pooling", pooling_of(f.provenance)},
                      {"probe_out", o.probe_out},
                      {"train", train_config_json(cfg)},
                      {"split", split_json(o.split)}};
  report["dataset"] = {{"num_utterances", f.matrix.rows()},
                       {"num_train", static_cast<int>(split.train.size())},
                       {"num_test", static_cast<int>(split.test.size())},
                       {"feature_width", f.matrix.cols()},
                       {"num_classes", labels.num_classes()},
                       {"class_vocab", labels.class_vocab}};
  report["results"] = {{"acc_train", acc_train}, {"acc_test", acc_test}, {"acc_majority", maj}};
  const std::string out =
      o.out.empty() ? (fs::path(o.probe_out) / "train_report.json").string() : o.out;
  emit_report(report, out, "acc_train,acc_test,Acc_MajC",
              {fmt2(acc_train) + "," + fmt2(acc_test) + "," + fmt2(maj)});
  std::cout << "probe written to " << o.probe_out << "; acc_train=" << fmt2(acc_train)
            << " acc_test=" << fmt2(acc_test) << "\n";
}

// ------------------------------------------------------------- evaluate --

struct EvaluateOpts {
  std::string probe;
  std::string store;
  std::string labels;
  std::string layer = "ALL";
  std::string split = "test";
  SplitFlags split_flags;
  std::string out;
};

void run_evaluate(const EvaluateOpts& o) {
  Features f = load_features(o.store, o.layer);
  LabelTable labels = load_labels(default_labels(o.store, o.labels), f.store);
  ProbeModel probe = load_probe(o.probe);

  PooledMatrix x = f.matrix;
  if (o.split != "all") {
    require(o.split == "train" || o.split == "test", "--split must be train, test or all");
    SplitIndices split =
        split_indices(f.matrix.rows(), o.split_flags.train_fraction, o.split_flags.split_seed);
    x = slice_rows(f.matrix, o.split == "train" ? split.train : split.test);
  }
  const double acc = evaluate(probe, x, labels);

  json report;
  report["report"] = "evaluate";
  report["config"] = {{"probe", o.probe},
                      {"store", o.store},
                      {"labels", default_labels(o.store, o.labels)},
                      {"layer", o.layer},
                      {"split", o.split},
                      {"split_flags", split_json(o.split_flags)}};
  report["results"] = {{"accuracy", acc}, {"num_rows", x.rows()}};
  emit_report(report, o.out, "split,accuracy", {o.split + "," + fmt2(acc)});
  std::cout << "accuracy " << fmt2(acc) << " on " << x.rows() << " rows\n";
}

// ----------------------------------------------------------------- rank --

struct RankOpts {
  std::string probe;
  std::string out;
  RankingSchedule schedule;
};

void run_rank(const RankOpts& o) {
  ProbeModel probe = load_probe(o.probe);
  NeuronRanking ranking = build_ranking(probe, o.schedule);

  json report;
  report["report"] = "rank";
  report["config"] = {{"probe", o.probe},
                      {"p_start", o.schedule.p_start},
                      {"p_factor", o.schedule.p_factor},
                      {"selection_rule", "inclusive_prefix"}};
  report["dim"] = ranking.dim;
  report["class_vocab"] = probe.class_vocab;
  report["selection_rule"] = "inclusive_prefix";
  report["p_schedule"] = {{"start", o.schedule.p_start}, {"factor", o.schedule.p_factor}};
  report["total_mass"] = ranking.total_mass;
  report["order"] = ranking.order;
  report["entry_percentile"] = ranking.entry_percentile;
  report["per_class_order"] = ranking.per_class_order;

  std::vector<std::string> rows;
  rows.reserve(ranking.order.size());
  for (size_t i = 0; i < ranking.order.size(); ++i) {
    const int n = ranking.order[i];
    const auto& col = probe.feature_provenance[static_cast<size_t>(n)];
    rows.push_back(std::to_string(i) + "," + std::to_string(n) + "," + col.layer + "," +
                   std::to_string(col.index) + "," + stat_name(col.stat) + "," +
                   fmt2(ranking.entry_percentile[i]));
  }
  emit_report(report, o.out, "rank,neuron,layer,within_layer,stat,entry_percentile", rows);
  std::cout << "ranking over " << ranking.dim << " neurons written to " << o.out << "\n";
}

// --------------------------------------------------------------- ablate --

struct AblateOpts {
  std::string store;
  std::string labels;
  std::string probe;
  std::string ranking;
  std::string layer = "ALL";
  double fraction = 0.2;
  std::string variants = "top,bottom,random";
  int runs = 5;
  uint64_t seed = 0;
  std::string split = "test";
  SplitFlags split_flags;
  std::string out;
};

void run_ablate(const AblateOpts& o) {
  require(o.fraction > 0.0 && o.fraction <= 1.0, "--fraction must be in (0, 1]");
  Features f = load_features(o.store, o.layer);
  LabelTable labels = load_labels(default_labels(o.store, o.labels), f.store);
  ProbeModel probe = load_probe(o.probe);
  NeuronRanking ranking = load_ranking(o.ranking);
  require(ranking.dim == f.matrix.cols(), "ranking dim does not match feature width");

  PooledMatrix x = f.matrix;
  if (o.split != "all") {
    require(o.split == "train" || o.split == "test", "--split must be train, test or all");
    SplitIndices split =
        split_indices(f.matrix.rows(), o.split_flags.train_fraction, o.split_flags.split_seed);
    x = slice_rows(f.matrix, o.split == "train" ? split.train : split.test);
  }
  const std::vector<int> y = labels.aligned(x.utterance_ids);
  const int count = std::max(1, fraction_count(o.fraction, ranking.dim));

  json results = json::array();
  json table = {{"Neu_pct", 100.0 * o.fraction}};
  std::vector<std::string> rows;
  std::stringstream variants(o.variants);
  std::string name;
  while (std::getline(variants, name, ',')) {
    const MaskVariant variant = parse_mask_variant(name);
    std::vector<int> keep;
    switch (variant) {
      case MaskVariant::top: keep = ranking.top(count); break;
      case MaskVariant::bottom: keep = ranking.bottom(count); break;
      case MaskVariant::random: keep = ranking.top(count); break;  // size carrier only
    }
    AblationReport rep = mask_evaluate(probe, x, y, keep, variant, o.runs, o.seed);
    results.push_back({{"variant", name},
                       {"fraction", o.fraction},
                       {"keep_count", count},
                       {"runs", rep.run_accuracies},
                       {"mean", rep.mean},
                       {"std", rep.stddev}});
    if (variant == MaskVariant::top) table["Acc_t"] = rep.mean;
    if (variant == MaskVariant::bottom) table["Acc_b"] = rep.mean;
    if (variant == MaskVariant::random) {
      table["Acc_r"] = rep.mean;
      table["Acc_r_std"] = rep.stddev;
    }
    for (size_t run = 0; run < rep.run_accuracies.size(); ++run)
      rows.push_back(fmt2(100.0 * o.fraction) + "," + name + "," + std::to_string(run) + "," +
                     fmt2(rep.run_accuracies[run]));
  }

  json report;
  report["report"] = "ablate";
  report["config"] = {{"store", o.store},
                      {"labels", default_labels(o.store, o.labels)},
                      {"probe", o.probe},
                      {"ranking", o.ranking},
                      {"layer", o.layer},
                      {"fraction", o.fraction},
                      {"variants", o.variants},
                      {"runs", o.runs},
                      {"seed", o.seed},
                      {"split", o.split},
                      {"split_flags", split_json(o.split_flags)}};
  report["results"] = results;
  report["table"] = table;
  emit_report(report, o.out, "percent,variant,run,accuracy", rows);
  std::cout << "masked " << fmt2(100.0 * o.fraction) << "% ablation report written to " << o.out
            << "\n";
}

// -------------------------------------------------------------- minimal --

struct MinimalOpts {
  std::string store;
  std::string labels;
  std::string ranking;
  std::string layer = "ALL";
  double delta = 1.0;
  std::string grid = "1,5,10,15,20,25,50,75";
  int runs = 5;
  uint64_t seed = 0;
  TrainFlags train;
  SplitFlags split;
  std::string out;
};

void run_minimal(const MinimalOpts& o) {
  Features f = load_features(o.store, o.layer);
  LabelTable labels = load_labels(default_labels(o.store, o.labels), f.store);
  NeuronRanking ranking = load_ranking(o.ranking);
  require(ranking.dim == f.matrix.cols(), "ranking dim does not match feature width");

  SplitIndices split = split_indices(f.matrix.rows(), o.split.train_fraction, o.split.split_seed);
  PooledMatrix train_x = slice_rows(f.matrix, split.train);
  PooledMatrix test_x = slice_rows(f.matrix, split.test);

  MinimalSearchOptions options;
  options.delta = o.delta;
  options.runs = o.runs;
  options.seed = o.seed;
  {
    std::stringstream ss(o.grid);
    std::string item;
    options.grid_percent.clear();
    while (std::getline(ss, item, ',')) {
      try {
        options.grid_percent.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error("bad --grid entry '" + item + "'");
      }
    }
  }
  TrainConfig cfg = o.train.config;
  cfg.seed = o.seed;
  MinimalSetResult result = minimal_set_search(train_x, test_x, labels, ranking, cfg, options);

  json grid = json::array();
  std::vector<std::string> rows;
  for (size_t run = 0; run < result.oracle_runs.size(); ++run)
    rows.push_back("ALL," + std::to_string(run) + "," + fmt2(result.oracle_runs[run]) +
                   ",oracle");
  for (const auto& point : result.grid) {
    grid.push_back({{"percent", point.percent},
                    {"count", point.count},
                    {"runs", point.run_accuracies},
                    {"mean", point.mean},
                    {"std", point.stddev},
                    {"qualified", point.qualified}});
    for (size_t run = 0; run < point.run_accuracies.size(); ++run)
      rows.push_back(fmt2(point.percent) + "," + std::to_string(run) + "," +
                     fmt2(point.run_accuracies[run]) + ",top");
  }
  for (size_t run = 0; run < result.random_runs.size(); ++run)
    rows.push_back(fmt2(result.chosen_percent) + "," + std::to_string(run) + "," +
                   fmt2(result.random_runs[run]) + ",random");

  json report;
  report["report"] = "minimal";
  report["config"] = {{"store", o.store},
                      {"labels", default_labels(o.store, o.labels)},
                      {"ranking", o.ranking},
                      {"layer", o.layer},
                      {"delta", o.delta},
                      {"grid", o.grid},
                      {"runs", o.runs},
                      {"seed", o.seed},
                      {"train", train_config_json(cfg)},
                      {"split", split_json(o.split)},
                      {"selection_rule", "inclusive_prefix"}};
  report["results"] = {{"converged", result.converged},
                       {"chosen_percent", result.chosen_percent},
                       {"neurons", result.neurons},
                       {"oracle",
                        {{"runs", result.oracle_runs},
                         {"mean", result.oracle_mean},
                         {"std", result.oracle_std}}},
                       {"retrained",
                        {{"runs", result.retrained_runs},
                         {"mean", result.retrained_mean},
                         {"std", result.retrained_std}}},
                       {"random",
                        {{"runs", result.random_runs},
                         {"mean", result.random_mean},
                         {"std", result.random_std},
                         {"count", result.random_count}}},
                       {"grid", grid}};
  report["table"] = {{"Acc_ALL", result.oracle_mean},
                     {"Neu_t", result.chosen_percent},
                     {"Acc_t", result.retrained_mean},
                     {"Acc_r", result.random_mean},
                     {"converged", result.converged}};
  emit_report(report, o.out, "percent,run,accuracy,kind", rows);
  std::cout << (result.converged
                    ? "minimal set at " + fmt2(result.chosen_percent) + "% (Acc_t " +
                          fmt2(result.retrained_mean) + " vs oracle " +
                          fmt2(result.oracle_mean) + ")"
                    : "no grid point within delta of the oracle")
            << "; report written to " << o.out << "\n";
}

// -------------------------------------------------------------- control --

struct ControlOpts {
  std::string store;
  std::string labels;
  std::string layer = "ALL";
  uint64_t control_seed = 0;
  uint64_t seed = 0;
  int runs = 5;
  TrainFlags train;
  SplitFlags split;
  std::string out;
};

void run_control(const ControlOpts& o) {
  Features f = load_features(o.store, o.layer);
  LabelTable labels = load_labels(default_labels(o.store, o.labels), f.store);
  SplitIndices split = split_indices(f.matrix.rows(), o.split.train_fraction, o.split.split_seed);
  PooledMatrix train_x = slice_rows(f.matrix, split.train);
  PooledMatrix test_x = slice_rows(f.matrix, split.test);

  LabelTable control = control_labels(labels, f.matrix.utterance_ids, split, o.control_seed);
  PooledMatrix rinit = random_features(f.matrix.rows(), f.matrix.cols(), o.control_seed + 1,
                                       f.matrix.utterance_ids);
  PooledMatrix rinit_train = slice_rows(rinit, split.train);
  PooledMatrix rinit_test = slice_rows(rinit, split.test);

  std::vector<double> acc_all(static_cast<size_t>(o.runs)),
      acc_control(static_cast<size_t>(o.runs)), acc_rinit(static_cast<size_t>(o.runs));
  for (int run = 0; run < o.runs; ++run) {
    TrainConfig cfg = o.train.config;
    cfg.seed = o.seed + static_cast<uint64_t>(run);
    acc_all[static_cast<size_t>(run)] =
        evaluate(train_probe(train_x, labels, cfg), test_x, labels);
    acc_control[static_cast<size_t>(run)] =
        evaluate(train_probe(train_x, control, cfg), test_x, control);
    acc_rinit[static_cast<size_t>(run)] =
        evaluate(train_probe(rinit_train, labels, cfg), rinit_test, labels);
  }
  const double maj = majority_accuracy(labels.aligned(train_x.utterance_ids),
                                       labels.aligned(test_x.utterance_ids));
  const double maj_control = majority_accuracy(control.aligned(train_x.utterance_ids),
                                               control.aligned(test_x.utterance_ids));
  SelectivityReport sel = selectivity(mean_of(acc_all), mean_of(acc_control), o.control_seed);

  const fs::path out_dir = fs::path(o.out).parent_path();
  save_labels(control, f.matrix.utterance_ids,
              (out_dir.empty() ? fs::path(".") : out_dir) / "control_labels.csv");

  json report;
  report["report"] = "control";
  report["config"] = {{"store", o.store},
                      {"labels", default_labels(o.store, o.labels)},
                      {"layer", o.layer},
                      {"control_seed", o.control_seed},
                      {"rinit_distribution", "uniform[-1,1]"},
                      {"runs", o.runs},
                      {"seed", o.seed},
                      {"train", train_config_json(o.train.config)},
                      {"split", split_json(o.split)}};
  report["results"] = {
      {"acc_all", {{"runs", acc_all}, {"mean", mean_of(acc_all)}, {"std", stddev_of(acc_all)}}},
      {"acc_control",
       {{"runs", acc_control}, {"mean", mean_of(acc_control)}, {"std", stddev_of(acc_control)}}},
      {"acc_rinit",
       {{"runs", acc_rinit}, {"mean", mean_of(acc_rinit)}, {"std", stddev_of(acc_rinit)}}},
      {"acc_majority", maj},
      {"acc_majority_control", maj_control},
      {"selectivity", sel.selectivity}};
  report["table"] = {{"Acc_MajC", maj},
                     {"Acc_ALL", mean_of(acc_all)},
                     {"Acc_RINIT", mean_of(acc_rinit)},
                     {"Acc_R", mean_of(acc_control)},
                     {"Sel_a", sel.selectivity}};
  emit_report(report, o.out, "Acc_MajC,Acc_ALL,Acc_RINIT,Acc_R,Sel_a",
              {fmt2(maj) + "," + fmt2(mean_of(acc_all)) + "," + fmt2(mean_of(acc_rinit)) + "," +
               fmt2(mean_of(acc_control)) + "," + fmt2(sel.selectivity)});
  std::cout << "Sel_a " << fmt2(sel.selectivity) << " (Acc_ALL " << fmt2(mean_of(acc_all))
            << ", Acc_R " << fmt2(mean_of(acc_control)) << "); report written to " << o.out
            << "\n";
}

// ----------------------------------------------------------- redundancy --

struct RedundancyOpts {
  std::string store;
  std::string labels;
  double threshold = 1.0;
  std::string rule = "absolute";
  int runs = 5;
  uint64_t seed = 0;
  TrainFlags train;
  SplitFlags split;
  bool plot = false;
  std::string out;
};

void run_redundancy(const RedundancyOpts& o) {
  require(o.rule == "absolute" || o.rule == "relative97",
          "--rule must be absolute or relative97");
  ActivationStore store = load_store(o.store);
  require(store.manifest.stage == Stage::pooled, "redundancy needs a pooled store");
  auto provenance = load_provenance(o.store, store.manifest);
  LabelTable labels = load_labels(default_labels(o.store, o.labels), store);
  SplitIndices split =
      split_indices(store.manifest.num_utterances, o.split.train_fraction, o.split.split_seed);

  auto accuracy_runs = [&](const PooledMatrix& m) {
    PooledMatrix train_x = slice_rows(m, split.train);
    PooledMatrix test_x = slice_rows(m, split.test);
    std::vector<double> accs(static_cast<size_t>(o.runs));
    for (int run = 0; run < o.runs; ++run) {
      TrainConfig cfg = o.train.config;
      cfg.seed = o.seed + static_cast<uint64_t>(run);
      accs[static_cast<size_t>(run)] = evaluate(train_probe(train_x, labels, cfg), test_x, labels);
    }
    return accs;
  };

  const auto oracle_runs = accuracy_runs(matrix_from_store(store, provenance, "ALL"));
  const double oracle = mean_of(oracle_runs);

  json verdicts = json::array();
  std::vector<std::string> rows;
  std::vector<double> layer_accs;
  std::vector<std::string> layer_names;
  for (const auto& l : store.manifest.layers) {
    const auto runs = accuracy_runs(matrix_from_store(store, provenance, l.name));
    const double acc = mean_of(runs);
    RedundancyVerdict v = o.rule == "absolute"
                              ? redundancy_judge(l.name, acc, oracle, o.threshold)
                              : redundancy_judge_relative(l.name, acc, oracle);
    verdicts.push_back({{"unit", v.unit},
                        {"unit_accuracy", v.unit_accuracy},
                        {"unit_accuracy_std", stddev_of(runs)},
                        {"oracle_accuracy", v.oracle_accuracy},
                        {"threshold", v.threshold},
                        {"rule", v.rule},
                        {"redundant", v.redundant}});
    rows.push_back(l.name + "," + fmt2(acc) + "," + fmt2(oracle) + "," +
                   (v.redundant ? "1" : "0"));
    layer_accs.push_back(acc);
    layer_names.push_back(l.name);
  }

  json report;
  report["report"] = "redundancy";
  report["config"] = {{"store", o.store},
                      {"labels", default_labels(o.store, o.labels)},
                      {"threshold", o.threshold},
                      {"rule", o.rule},
                      {"runs", o.runs},
                      {"seed", o.seed},
                      {"train", train_config_json(o.train.config)},
                      {"split", split_json(o.split)}};
  report["results"] = {{"oracle", {{"runs", oracle_runs}, {"mean", oracle}}},
                       {"verdicts", verdicts}};
  emit_report(report, o.out, "layer,accuracy,Acc_ALL,redundant", rows);
  if (o.plot) {
    fs::path svg(o.out);
    svg.replace_extension(".svg");
    write_svg_line_chart(svg.string(), "Layer-wise probe accuracy", layer_names,
                         {{"layer", layer_accs},
                          {"oracle (ALL)", std::vector<double>(layer_names.size(), oracle)}},
                         "accuracy (%)");
  }
  std::cout << "redundancy verdicts for " << layer_names.size() << " layers written to " << o.out
            << "\n";
}

// --------------------------------------------------------------- verify --

struct VerifyOpts {
  std::string store;
  std::string pairs;
  std::string layer = "each";
  std::string ranking;
  double percent = 5.0;
  int runs = 5;
  uint64_t seed = 0;
  bool plot = false;
  std::string out;
};

void run_verify(const VerifyOpts& o) {
  ActivationStore store = load_store(o.store);
  require(store.manifest.stage == Stage::pooled, "verify needs a pooled store");
  auto provenance = load_provenance(o.store, store.manifest);
  const std::string pairs = o.pairs.empty() ? (fs::path(o.store) / "pairs.csv").string() : o.pairs;
  TrialSet trials = load_trials(pairs, store);

  std::vector<std::string> selections;
  if (o.layer == "each") {
    for (const auto& l : store.manifest.layers) selections.push_back(l.name);
    if (store.manifest.layers.size() > 1) selections.push_back("ALL");
  } else {
    selections.push_back(o.layer);
  }

  json results = json::array();
  std::vector<std::string> rows;
  std::vector<double> curve;
  for (const auto& sel : selections) {
    PooledMatrix emb = matrix_from_store(store, provenance, sel);
    EERResult r = compute_eer(score_trials(emb, trials));
    results.push_back({{"layer", sel},
                       {"subset_label", "full"},
                       {"eer", r.eer},
                       {"threshold", r.threshold},
                       {"num_target", r.num_target},
                       {"num_nontarget", r.num_nontarget}});
    rows.push_back(sel + ",full,," + fmt2(r.eer) + "," + fmt2(r.threshold));
    curve.push_back(r.eer);
  }

  json report;
  report["report"] = "verify";
  report["config"] = {{"store", o.store},
                      {"pairs", pairs},
                      {"layer", o.layer},
                      {"seed", o.seed},
                      {"score", "cosine on length-normalized embeddings, ties accept"}};

  // Fine-grained variant: score trials on top/random/bottom ranked subsets.
  if (!o.ranking.empty()) {
    NeuronRanking ranking = load_ranking(o.ranking);
    const std::string sel = o.layer == "each" ? "ALL" : o.layer;
    PooledMatrix emb = matrix_from_store(store, provenance, sel);
    require(ranking.dim == emb.cols(), "ranking dim does not match embedding width");
    const int count = std::max(1, fraction_count(o.percent / 100.0, ranking.dim));

    const auto top = ranking.top(count);
    EERResult top_r = compute_eer(score_trials(emb, trials, &top));
    const auto bottom = ranking.bottom(count);
    EERResult bottom_r = compute_eer(score_trials(emb, trials, &bottom));
    std::vector<double> random_eers(static_cast<size_t>(o.runs));
    for (int run = 0; run < o.runs; ++run) {
      Xoshiro256ss rng(o.seed + static_cast<uint64_t>(run));
      const auto subset = sample_without_replacement(ranking.dim, count, rng);
      random_eers[static_cast<size_t>(run)] = compute_eer(score_trials(emb, trials, &subset)).eer;
    }
    results.push_back({{"layer", sel},
                       {"subset_label", "top"},
                       {"percent", o.percent},
                       {"count", count},
                       {"eer", top_r.eer},
                       {"threshold", top_r.threshold}});
    results.push_back({{"layer", sel},
                       {"subset_label", "bottom"},
                       {"percent", o.percent},
                       {"count", count},
                       {"eer", bottom_r.eer},
                       {"threshold", bottom_r.threshold}});
    results.push_back({{"layer", sel},
                       {"subset_label", "random"},
                       {"percent", o.percent},
                       {"count", count},
                       {"eer", mean_of(random_eers)},
                       {"eer_std", stddev_of(random_eers)},
                       {"runs", random_eers}});
    rows.push_back(sel + ",top,," + fmt2(top_r.eer) + "," + fmt2(top_r.threshold));
    rows.push_back(sel + ",bottom,," + fmt2(bottom_r.eer) + "," + fmt2(bottom_r.threshold));
    for (size_t run = 0; run < random_eers.size(); ++run)
      rows.push_back(sel + ",random," + std::to_string(run) + "," + fmt2(random_eers[run]) + ",");
    report["config"]["ranking"] = o.ranking;
    report["config"]["percent"] = o.percent;
    report["config"]["runs"] = o.runs;
    report["table"] = {{"Neu_t", o.percent},
                       {"EER_t", top_r.eer},
                       {"EER_b", bottom_r.eer},
                       {"EER_r", mean_of(random_eers)}};
  }

  report["results"] = results;
  emit_report(report, o.out, "layer,subset,run,EER,threshold", rows);

  if (o.plot) {
    fs::path svg(o.out);
    svg.replace_extension(".svg");
    write_svg_line_chart(svg.string(), "Layer-wise EER", selections, {{"EER", curve}}, "EER (%)");
  }
  std::cout << "verification report (" << trials.trials.size() << " trials) written to " << o.out
            << "\n";
}

// --------------------------------------------------------- distribution --

struct DistributionOpts {
  std::string ranking;
  std::string store;
  double percent = 20.0;
  int count = 0;
  std::string out;
};

void run_distribution(const DistributionOpts& o) {
  NeuronRanking ranking = load_ranking(o.ranking);
  ActivationStore store = load_store(o.store);
  auto provenance = load_provenance(o.store, store.manifest);
  require(ranking.dim == static_cast<int>(provenance.size()),
          "ranking dim does not match store width");
  const int count =
      o.count > 0 ? o.count : std::max(1, fraction_count(o.percent / 100.0, ranking.dim));
  const auto subset = ranking.top(count);
  const auto counts = distribution_report(subset, provenance);

  json layers = json::array();
  std::vector<std::string> rows;
  for (const auto& row : counts) {
    layers.push_back({{"layer", row.layer}, {"count", row.count}, {"percent", row.percent}});
    rows.push_back(row.layer + "," + std::to_string(row.count) + "," + fmt2(row.percent));
  }
  json report;
  report["report"] = "distribution";
  report["config"] = {
      {"ranking", o.ranking}, {"store", o.store}, {"percent", o.percent}, {"count", count}};
  report["results"] = {{"total_width", ranking.dim}, {"selected", count}, {"layers", layers}};
  emit_report(report, o.out, "layer,count,percent", rows);
  std::cout << "distribution of top " << count << " neurons written to " << o.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probekit: diagnostic probing and neuron analysis over exported activations"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic benchmark stores");
  synth->require_subcommand(1);
  SynthPlantedOpts sp;
  auto* planted = synth->add_subcommand("planted", "planted-signal classification dataset");
  planted->add_option("--out", sp.out, "output root directory")->required();
  planted->add_option("--name", sp.name, "dataset name")->capture_default_str();
  planted->add_option("--n", sp.n, "number of utterances")->capture_default_str();
  planted->add_option("--layers", sp.layers, "layer list name:dim,...")->capture_default_str();
  planted->add_option("--planted-count", sp.planted_count, "size of the planted set")
      ->capture_default_str();
  planted->add_option("--planted-indices", sp.planted_indices,
                      "explicit planted indices (overrides --planted-count)");
  planted->add_option("--classes", sp.classes, "number of classes")->capture_default_str();
  planted->add_option("--mu", sp.mu, "signal strength")->capture_default_str();
  planted->add_option("--sigma", sp.sigma, "noise sigma")->capture_default_str();
  planted->add_option("--frames-min", sp.frames_min, "min frames per utterance")
      ->capture_default_str();
  planted->add_option("--frames-max", sp.frames_max, "max frames per utterance")
      ->capture_default_str();
  planted->add_option("--seed", sp.seed, "generator seed")->capture_default_str();
  planted->callback([&] { run_synth_planted(sp); });

  SynthSpeakerOpts ss;
  auto* speakers = synth->add_subcommand("speakers", "speaker-verification embedding dataset");
  speakers->add_option("--out", ss.out, "output store directory")->required();
  speakers->add_option("--name", ss.name, "dataset name")->capture_default_str();
  speakers->add_option("--speakers", ss.speakers, "number of speakers")->capture_default_str();
  speakers->add_option("--utts", ss.utts, "utterances per speaker")->capture_default_str();
  speakers->add_option("--dim", ss.dim, "embedding dimension")->capture_default_str();
  speakers->add_option("--intra", ss.intra, "within-speaker sigma")->capture_default_str();
  speakers->add_option("--inter", ss.inter, "between-speaker sigma")->capture_default_str();
  speakers->add_option("--seed", ss.seed, "generator seed")->capture_default_str();
  speakers->callback([&] { run_synth_speakers(ss); });

  // pool
  PoolOpts po;
  auto* pool = app.add_subcommand("pool", "frames -> utterance-level pooled store");
  pool->add_option("--store", po.store, "frames-stage store directory")->required();
  pool->add_option("--out", po.out, "pooled store output directory")->required();
  pool->add_option("--method", po.method, "mean or mean_std")->capture_default_str();
  pool->add_option("--name", po.name, "dataset name override");
  pool->callback([&] { run_pool(po); });

  // train
  TrainOpts to;
  auto* train = app.add_subcommand("train", "train the proxy classifier");
  train->add_option("--store", to.store, "pooled store directory")->required();
  train->add_option("--labels", to.labels, "labels csv (default <store>/labels.csv)");
  train->add_option("--layer", to.layer, "layer name or ALL")->capture_default_str();
  train->add_option("--probe-out", to.probe_out, "probe output directory")->required();
  train->add_option("--out", to.out, "report path (default <probe-out>/train_report.json)");
  train->add_option("--seed", to.seed, "training seed")->capture_default_str();
  to.train.attach(train);
  attach_split(train, to.split);
  train->callback([&] { run_train(to); });

  // evaluate
  EvaluateOpts eo;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained probe");
  evaluate->add_option("--probe", eo.probe, "probe directory")->required();
  evaluate->add_option("--store", eo.store, "pooled store directory")->required();
  evaluate->add_option("--labels", eo.labels, "labels csv (default <store>/labels.csv)");
  evaluate->add_option("--layer", eo.layer, "layer name or ALL")->capture_default_str();
  evaluate->add_option("--split", eo.split, "train, test or all")->capture_default_str();
  evaluate->add_option("--out", eo.out, "report path")->required();
  attach_split(evaluate, eo.split_flags);
  evaluate->callback([&] { run_evaluate(eo); });

  // rank
  RankOpts ro;
  auto* rank = app.add_subcommand("rank", "build the neuron importance ranking");
  rank->add_option("--probe", ro.probe, "probe directory")->required();
  rank->add_option("--out", ro.out, "ranking output path")->required();
  rank->add_option("--p-start", ro.schedule.p_start, "starting mass percentile")
      ->capture_default_str();
  rank->add_option("--p-factor", ro.schedule.p_factor, "schedule growth factor")
      ->capture_default_str();
  rank->callback([&] { run_rank(ro); });

  // ablate
  AblateOpts ao;
  auto* ablate = app.add_subcommand("ablate", "masking ablations over the ranking");
  ablate->add_option("--store", ao.store, "pooled store directory")->required();
  ablate->add_option("--labels", ao.labels, "labels csv (default <store>/labels.csv)");
  ablate->add_option("--probe", ao.probe, "probe directory")->required();
  ablate->add_option("--ranking", ao.ranking, "ranking file from `rank`")->required();
  ablate->add_option("--layer", ao.layer, "layer name or ALL")->capture_default_str();
  ablate->add_option("--fraction", ao.fraction, "kept fraction of neurons")
      ->capture_default_str();
  ablate->add_option("--variant", ao.variants, "comma list of top,bottom,random")
      ->capture_default_str();
  ablate->add_option("--runs", ao.runs, "random-variant runs")->capture_default_str();
  ablate->add_option("--seed", ao.seed, "random-variant seed")->capture_default_str();
  ablate->add_option("--split", ao.split, "train, test or all")->capture_default_str();
  ablate->add_option("--out", ao.out, "report path")->required();
  attach_split(ablate, ao.split_flags);
  ablate->callback([&] { run_ablate(ao); });

  // minimal
  MinimalOpts mo;
  auto* minimal = app.add_subcommand("minimal", "minimal salient neuron set search");
  minimal->add_option("--store", mo.store, "pooled store directory")->required();
  minimal->add_option("--labels", mo.labels, "labels csv (default <store>/labels.csv)");
  minimal->add_option("--ranking", mo.ranking, "ranking file from `rank`")->required();
  minimal->add_option("--layer", mo.layer, "layer name or ALL")->capture_default_str();
  minimal->add_option("--delta", mo.delta, "convergence threshold in accuracy points")
      ->capture_default_str();
  minimal->add_option("--grid", mo.grid, "percent grid")->capture_default_str();
  minimal->add_option("--runs", mo.runs, "retraining runs per grid point")->capture_default_str();
  minimal->add_option("--seed", mo.seed, "base seed")->capture_default_str();
  minimal->add_option("--out", mo.out, "report path")->required();
  mo.train.attach(minimal);
  attach_split(minimal, mo.split);
  minimal->callback([&] { run_minimal(mo); });

  // control
  ControlOpts co;
  auto* control = app.add_subcommand("control", "control tasks and selectivity");
  control->add_option("--store", co.store, "pooled store directory")->required();
  control->add_option("--labels", co.labels, "labels csv (default <store>/labels.csv)");
  control->add_option("--layer", co.layer, "layer name or ALL")->capture_default_str();
  control->add_option("--control-seed", co.control_seed, "control relabeling seed")
      ->capture_default_str();
  control->add_option("--runs", co.runs, "training runs")->capture_default_str();
  control->add_option("--seed", co.seed, "base training seed")->capture_default_str();
  control->add_option("--out", co.out, "report path")->required();
  co.train.attach(control);
  attach_split(control, co.split);
  control->callback([&] { run_control(co); });

  // redundancy
  RedundancyOpts rd;
  auto* redundancy = app.add_subcommand("redundancy", "per-layer redundancy verdicts");
  redundancy->add_option("--store", rd.store, "pooled store directory")->required();
  redundancy->add_option("--labels", rd.labels, "labels csv (default <store>/labels.csv)");
  redundancy->add_option("--threshold", rd.threshold, "absolute threshold in points")
      ->capture_default_str();
  redundancy->add_option("--rule", rd.rule, "absolute or relative97")->capture_default_str();
  redundancy->add_option("--runs", rd.runs, "training runs")->capture_default_str();
  redundancy->add_option("--seed", rd.seed, "base training seed")->capture_default_str();
  redundancy->add_flag("--plot", rd.plot, "emit layer accuracy curve as SVG");
  redundancy->add_option("--out", rd.out, "report path")->required();
  rd.train.attach(redundancy);
  attach_split(redundancy, rd.split);
  redundancy->callback([&] { run_redundancy(rd); });

  // verify
  VerifyOpts vo;
  auto* verify = app.add_subcommand("verify", "speaker-verification scoring and EER");
  verify->add_option("--store", vo.store, "pooled embedding store")->required();
  verify->add_option("--pairs", vo.pairs, "pairs csv (default <store>/pairs.csv)");
  verify->add_option("--layer", vo.layer, "layer name, ALL, or each")->capture_default_str();
  verify->add_option("--ranking", vo.ranking, "optional ranking for subset EER");
  verify->add_option("--percent", vo.percent, "subset percent when --ranking is given")
      ->capture_default_str();
  verify->add_option("--runs", vo.runs, "random-subset runs")->capture_default_str();
  verify->add_option("--seed", vo.seed, "random-subset seed")->capture_default_str();
  verify->add_flag("--plot", vo.plot, "emit layer EER curve as SVG");
  verify->add_option("--out", vo.out, "report path")->required();
  verify->callback([&] { run_verify(vo); });

  // distribution
  DistributionOpts dopt;
  auto* distribution = app.add_subcommand("distribution", "layer distribution of top neurons");
  distribution->add_option("--ranking", dopt.ranking, "ranking file from `rank`")->required();
  distribution->add_option("--store", dopt.store, "store supplying the layer layout")->required();
  distribution->add_option("--percent", dopt.percent, "top percent of the ranking")
      ->capture_default_str();
  distribution->add_option("--count", dopt.count, "explicit top count (overrides --percent)");
  distribution->add_option("--out", dopt.out, "report path")->required();
  distribution->callback([&] { run_distribution(dopt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

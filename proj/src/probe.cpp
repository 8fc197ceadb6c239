#include "probekit/probe.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "probekit/rng.hpp"

namespace probekit {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  require(epochs >= 1, "train config: epochs must be >= 1");
  require(batch_size >= 1, "train config: batch_size must be >= 1");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "train config: lambdas must be >= 0");
  require(learning_rate > 0.0, "train config: learning rate must be > 0");
}

namespace {

// Row-wise softmax with max subtraction. Returns probabilities in place of logits.
void softmax_rows(MatrixD& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - mx).exp();
    logits.row(r) /= logits.row(r).sum();
  }
}

MatrixD standardized(const PooledMatrix& features, const VectorD& mean, const VectorD& sd) {
  MatrixD x = features.values.cast<double>();
  if (mean.size() > 0) {
    require(mean.size() == x.cols(), "standardization vectors do not match feature width");
    x.rowwise() -= mean.transpose();
    x.array().rowwise() /= sd.transpose().array();
  }
  return x;
}

MatrixD model_inputs(const ProbeModel& probe, const PooledMatrix& features) {
  require(features.cols() == probe.dim(),
          "feature width " + std::to_string(features.cols()) + " does not match probe dim " +
              std::to_string(probe.dim()));
  return standardized(features, probe.feature_mean, probe.feature_std);
}

int argmax_lowest(const Eigen::RowVectorXd& row) {
  int best = 0;
  for (int c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

}  // namespace

double probe_loss(const MatrixD& weights, const VectorD& bias, const MatrixD& x,
                  const std::vector<int>& y, double lambda1, double lambda2) {
  const Eigen::Index n = x.rows();
  MatrixD p = x * weights;
  p.rowwise() += bias.transpose();
  double ce = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mx = p.row(r).maxCoeff();
    const double lse = mx + std::log((p.row(r).array() - mx).exp().sum());
    ce += lse - p(r, y[static_cast<size_t>(r)]);
  }
  ce /= static_cast<double>(n);
  return ce + lambda1 * weights.cwiseAbs().sum() + lambda2 * weights.squaredNorm();
}

void probe_gradient(const MatrixD& weights, const VectorD& bias, const MatrixD& x,
                    const std::vector<int>& y, double lambda1, double lambda2,
                    MatrixD* grad_w, VectorD* grad_b) {
  const Eigen::Index n = x.rows();
  MatrixD p = x * weights;
  p.rowwise() += bias.transpose();
  softmax_rows(p);
  for (Eigen::Index r = 0; r < n; ++r) p(r, y[static_cast<size_t>(r)]) -= 1.0;
  p /= static_cast<double>(n);
  *grad_w = x.transpose() * p;
  // L1 subgradient with sign(0) = 0, L2 as 2*lambda2*w; bias unpenalized.
  grad_w->noalias() += lambda1 * weights.unaryExpr([](double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  });
  grad_w->noalias() += 2.0 * lambda2 * weights;
  *grad_b = p.colwise().sum();
}

ProbeModel train_probe(const PooledMatrix& features, const LabelTable& labels,
                       const TrainConfig& config) {
  config.validate();
  features.validate();
  const int n = features.rows();
  const int d = features.cols();
  const int c = labels.num_classes();
  require(n >= 1, "train_probe: no rows");
  require(d >= 1, "train_probe: no features");
  require(c >= 2, "train_probe: labels cover fewer than 2 classes");
  require(n >= c, "train_probe: need at least one row per class (N >= C)");
  const std::vector<int> y = labels.aligned(features.utterance_ids);
  {
    std::vector<bool> seen(static_cast<size_t>(c), false);
    for (int cls : y) seen[static_cast<size_t>(cls)] = true;
    int distinct = static_cast<int>(std::count(seen.begin(), seen.end(), true));
    require(distinct >= 2, "train_probe: training labels contain a single class");
  }

  ProbeModel model;
  model.config = config;
  model.class_vocab = labels.class_vocab;
  model.feature_provenance = features.provenance;
  if (config.standardize) {
    MatrixD raw = features.values.cast<double>();
    model.feature_mean = raw.colwise().mean();
    VectorD var = (raw.rowwise() - model.feature_mean.transpose())
                      .array()
                      .square()
                      .colwise()
                      .mean();
    model.feature_std = var.cwiseMax(0.0).cwiseSqrt().unaryExpr(
        [](double s) { return s > 1e-12 ? s : 1.0; });
  }
  const MatrixD x = standardized(features, model.feature_mean, model.feature_std);

  model.weights = MatrixD::Zero(d, c);
  model.bias = VectorD::Zero(c);
  MatrixD m_w = MatrixD::Zero(d, c), v_w = MatrixD::Zero(d, c);
  VectorD m_b = VectorD::Zero(c), v_b = VectorD::Zero(c);

  Xoshiro256ss rng(config.seed);
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  const int steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  int64_t t = 0;
  MatrixD xb, gw;
  VectorD gb;
  std::vector<int> yb;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle_each_epoch) shuffle(order, rng);
    for (int step = 0; step < steps_per_epoch; ++step) {
      const int lo = step * config.batch_size;
      const int b = std::min(config.batch_size, n - lo);
      xb.resize(b, d);
      yb.resize(static_cast<size_t>(b));
      for (int i = 0; i < b; ++i) {
        xb.row(i) = x.row(order[static_cast<size_t>(lo + i)]);
        yb[static_cast<size_t>(i)] = y[static_cast<size_t>(order[static_cast<size_t>(lo + i)])];
      }

      MatrixD p = xb * model.weights;
      p.rowwise() += model.bias.transpose();
      double batch_ce = 0.0;
      for (int r = 0; r < b; ++r) {
        const double mx = p.row(r).maxCoeff();
        const double lse = mx + std::log((p.row(r).array() - mx).exp().sum());
        batch_ce += lse - p(r, yb[static_cast<size_t>(r)]);
      }
      require(std::isfinite(batch_ce), "train_probe: loss diverged (non-finite)");
      softmax_rows(p);
      for (int r = 0; r < b; ++r) p(r, yb[static_cast<size_t>(r)]) -= 1.0;
      p /= static_cast<double>(b);
      gw.noalias() = xb.transpose() * p;
      gw.noalias() += config.lambda1 * model.weights.unaryExpr([](double v) {
        return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      });
      gw.noalias() += 2.0 * config.lambda2 * model.weights;
      gb = p.colwise().sum();

      ++t;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(t));
      m_w = config.adam_beta1 * m_w + (1.0 - config.adam_beta1) * gw;
      v_w = config.adam_beta2 * v_w + (1.0 - config.adam_beta2) * gw.cwiseProduct(gw);
      m_b = config.adam_beta1 * m_b + (1.0 - config.adam_beta1) * gb;
      v_b = config.adam_beta2 * v_b + (1.0 - config.adam_beta2) * gb.cwiseProduct(gb);
      model.weights.array() -=
          config.learning_rate * (m_w / bc1).array() /
          ((v_w / bc2).cwiseSqrt().array() + config.adam_epsilon);
      model.bias.array() -=
          config.learning_rate * (m_b / bc1).array() /
          ((v_b / bc2).cwiseSqrt().array() + config.adam_epsilon);
    }
  }

  require(model.weights.allFinite() && model.bias.allFinite(),
          "train_probe: parameters diverged (non-finite)");
  return model;
}

double evaluate(const ProbeModel& probe, const PooledMatrix& features,
                const std::vector<int>& y) {
  require(static_cast<int>(y.size()) == features.rows(), "evaluate: label count mismatch");
  const MatrixD x = model_inputs(probe, features);
  MatrixD logits = x * probe.weights;
  logits.rowwise() += probe.bias.transpose();
  int64_t correct = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
    if (argmax_lowest(logits.row(r)) == y[static_cast<size_t>(r)]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(features.rows());
}

double evaluate(const ProbeModel& probe, const PooledMatrix& features,
                const LabelTable& labels) {
  return evaluate(probe, features, labels.aligned(features.utterance_ids));
}

MatrixD predict_scores(const ProbeModel& probe, const PooledMatrix& features) {
  const MatrixD x = model_inputs(probe, features);
  MatrixD p = x * probe.weights;
  p.rowwise() += probe.bias.transpose();
  softmax_rows(p);
  return p;
}

double majority_accuracy(const std::vector<int>& train_y, const std::vector<int>& test_y) {
  require(!train_y.empty() && !test_y.empty(), "majority_accuracy: empty labels");
  const int c = 1 + *std::max_element(train_y.begin(), train_y.end());
  std::vector<int64_t> counts(static_cast<size_t>(c), 0);
  for (int v : train_y) ++counts[static_cast<size_t>(v)];
  const int maj = static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  int64_t hit = 0;
  for (int v : test_y)
    if (v == maj) ++hit;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(test_y.size());
}

void save_probe(const ProbeModel& probe, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["dim"] = probe.dim();
  j["num_classes"] = probe.num_classes();
  j["class_vocab"] = probe.class_vocab;
  j["config"] = {{"learning_rate", probe.config.learning_rate},
                 {"adam_beta1", probe.config.adam_beta1},
                 {"adam_beta2", probe.config.adam_beta2},
                 {"adam_epsilon", probe.config.adam_epsilon},
                 {"epochs", probe.config.epochs},
                 {"batch_size", probe.config.batch_size},
                 {"lambda1", probe.config.lambda1},
                 {"lambda2", probe.config.lambda2},
                 {"seed", probe.config.seed},
                 {"shuffle_each_epoch", probe.config.shuffle_each_epoch},
                 {"standardize", probe.config.standardize}};
  json prov = json::array();
  for (const auto& c : probe.feature_provenance)
    prov.push_back({{"layer", c.layer}, {"index", c.index}, {"stat", stat_name(c.stat)}});
  j["feature_provenance"] = prov;
  if (probe.feature_mean.size() > 0) {
    j["feature_mean"] = std::vector<double>(probe.feature_mean.data(),
                                            probe.feature_mean.data() + probe.feature_mean.size());
    j["feature_std"] = std::vector<double>(probe.feature_std.data(),
                                           probe.feature_std.data() + probe.feature_std.size());
  }
  std::ofstream out(fs::path(dir) / "probe.json");
  require(out.good(), "unwritable path: " + dir);
  out << j.dump(2) << "\n";

  // binary32 little-endian: weights row-major (D x C), then bias (C)
  MatrixF wf = probe.weights.cast<float>();
  Eigen::VectorXf bf = probe.bias.cast<float>();
  std::ofstream bin(fs::path(dir) / "probe.bin", std::ios::binary | std::ios::trunc);
  require(bin.good(), "unwritable path: " + dir);
  bin.write(reinterpret_cast<const char*>(wf.data()), static_cast<std::streamsize>(wf.size()) * 4);
  bin.write(reinterpret_cast<const char*>(bf.data()), static_cast<std::streamsize>(bf.size()) * 4);
}

ProbeModel load_probe(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "probe.json");
  require(in.good(), "missing file: " + (fs::path(dir) / "probe.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("probe.json parse error: " + std::string(e.what()));
  }
  ProbeModel probe;
  int d = 0, c = 0;
  try {
    d = j.at("dim").get<int>();
    c = j.at("num_classes").get<int>();
    probe.class_vocab = j.at("class_vocab").get<std::vector<std::string>>();
    const auto& cfg = j.at("config");
    probe.config.learning_rate = cfg.at("learning_rate").get<double>();
    probe.config.adam_beta1 = cfg.at("adam_beta1").get<double>();
    probe.config.adam_beta2 = cfg.at("adam_beta2").get<double>();
    probe.config.adam_epsilon = cfg.at("adam_epsilon").get<double>();
    probe.config.epochs = cfg.at("epochs").get<int>();
    probe.config.batch_size = cfg.at("batch_size").get<int>();
    probe.config.lambda1 = cfg.at("lambda1").get<double>();
    probe.config.lambda2 = cfg.at("lambda2").get<double>();
    probe.config.seed = cfg.at("seed").get<uint64_t>();
    probe.config.shuffle_each_epoch = cfg.at("shuffle_each_epoch").get<bool>();
    probe.config.standardize = cfg.at("standardize").get<bool>();
    for (const auto& pj : j.at("feature_provenance"))
      probe.feature_provenance.push_back({pj.at("layer").get<std::string>(),
                                          pj.at("index").get<int>(),
                                          parse_stat(pj.at("stat").get<std::string>())});
    if (j.contains("feature_mean")) {
      auto fm = j.at("feature_mean").get<std::vector<double>>();
      auto fsd = j.at("feature_std").get<std::vector<double>>();
      probe.feature_mean = Eigen::Map<VectorD>(fm.data(), static_cast<Eigen::Index>(fm.size()));
      probe.feature_std = Eigen::Map<VectorD>(fsd.data(), static_cast<Eigen::Index>(fsd.size()));
    }
  } catch (const json::exception& e) {
    throw Error("probe.json: " + std::string(e.what()));
  }
  require(d >= 1 && c >= 2, "probe.json: invalid dimensions");
  require(static_cast<int>(probe.feature_provenance.size()) == d,
          "probe.json: provenance does not cover every feature");

  std::ifstream bin(fs::path(dir) / "probe.bin", std::ios::binary | std::ios::ate);
  require(bin.good(), "missing file: " + (fs::path(dir) / "probe.bin").string());
  const int64_t bytes = static_cast<int64_t>(bin.tellg());
  const int64_t expected = (static_cast<int64_t>(d) * c + c) * 4;
  require(bytes == expected, "probe.bin byte length mismatch");
  bin.seekg(0);
  MatrixF wf(d, c);
  Eigen::VectorXf bf(c);
  bin.read(reinterpret_cast<char*>(wf.data()), static_cast<std::streamsize>(wf.size()) * 4);
  bin.read(reinterpret_cast<char*>(bf.data()), static_cast<std::streamsize>(bf.size()) * 4);
  require(bin.good(), "short read on probe.bin");
  probe.weights = wf.cast<double>();
  probe.bias = bf.cast<double>();
  require(probe.weights.allFinite() && probe.bias.allFinite(),
          "probe.bin contains non-finite parameters");
  return probe;
}

}  // namespace probekit

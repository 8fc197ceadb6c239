#include "probekit/pooling.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace probekit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string stat_name(Stat s) { return s == Stat::mean ? "mean" : "std"; }

Stat parse_stat(const std::string& s) {
  if (s == "mean") return Stat::mean;
  if (s == "std") return Stat::std_dev;
  throw Error("unknown statistic tag '" + s + "'");
}

std::string pool_method_name(PoolMethod m) {
  return m == PoolMethod::mean ? "mean" : "mean_std";
}

PoolMethod parse_pool_method(const std::string& s) {
  if (s == "mean") return PoolMethod::mean;
  if (s == "mean_std") return PoolMethod::mean_std;
  throw Error("unknown pooling method '" + s + "' (expected mean or mean_std)");
}

void PooledMatrix::validate() const {
  require(static_cast<int>(provenance.size()) == cols(),
          "pooled matrix: provenance does not cover every column exactly once");
  require(static_cast<int>(utterance_ids.size()) == rows(),
          "pooled matrix: utterance ids do not match row count");
  require(values.allFinite(), "pooled matrix contains non-finite values");
}

PooledMatrix pool_layer(const ActivationStore& store, const std::string& layer_name,
                        PoolMethod method) {
  require(store.manifest.stage == Stage::frames,
          "pool_layer requires a frames-stage store (got pooled)");
  const int li = store.layer_index(layer_name);
  const auto& ld = store.layers[static_cast<size_t>(li)];
  const int dim = store.manifest.layers[static_cast<size_t>(li)].dim;
  const int n = store.manifest.num_utterances;
  const bool with_std = method == PoolMethod::mean_std;

  PooledMatrix out;
  out.utterance_ids = store.manifest.utterance_ids;
  out.values.resize(n, with_std ? 2 * dim : dim);

  for (int u = 0; u < n; ++u) {
    const int f = ld.frame_count[static_cast<size_t>(u)];
    require(f >= 1, "utterance '" + store.manifest.utterance_ids[static_cast<size_t>(u)] +
                        "' has zero frames in layer '" + layer_name + "'");
    auto block = store.frames(li, u);
    // Two-pass: mean first, then squared deviations, for stable stds on
    // long utterances. Accumulate in double, emit binary32.
    Eigen::RowVectorXd mean = block.cast<double>().colwise().sum() / static_cast<double>(f);
    out.values.row(u).head(dim) = mean.cast<float>();
    if (with_std) {
      Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(dim);
      for (int r = 0; r < f; ++r) {
        Eigen::RowVectorXd d = block.row(r).cast<double>() - mean;
        sq += d.cwiseProduct(d);
      }
      // Population convention (divide by F); floor at 0 for rounding residue.
      out.values.row(u).tail(dim) =
          (sq / static_cast<double>(f)).cwiseMax(0.0).cwiseSqrt().cast<float>();
    }
  }

  out.provenance.reserve(static_cast<size_t>(out.values.cols()));
  for (int j = 0; j < dim; ++j) out.provenance.push_back({layer_name, j, Stat::mean});
  if (with_std)
    for (int j = 0; j < dim; ++j) out.provenance.push_back({layer_name, j, Stat::std_dev});
  return out;
}

PooledMatrix assemble(const std::vector<PooledMatrix>& parts) {
  require(!parts.empty(), "assemble: empty layer selection");
  const auto& ids = parts.front().utterance_ids;
  int64_t width = 0;
  for (const auto& p : parts) {
    require(p.utterance_ids == ids, "assemble: utterance order mismatch across layers");
    width += p.cols();
  }
  PooledMatrix out;
  out.utterance_ids = ids;
  out.values.resize(parts.front().rows(), width);
  out.provenance.reserve(static_cast<size_t>(width));
  int64_t off = 0;
  for (const auto& p : parts) {
    out.values.middleCols(off, p.cols()) = p.values;
    out.provenance.insert(out.provenance.end(), p.provenance.begin(), p.provenance.end());
    off += p.cols();
  }
  return out;
}

PooledMatrix pool_all(const ActivationStore& store, PoolMethod method) {
  std::vector<PooledMatrix> parts;
  parts.reserve(store.manifest.layers.size());
  for (const auto& l : store.manifest.layers) parts.push_back(pool_layer(store, l.name, method));
  return assemble(parts);
}

MatrixF length_normalize(const MatrixF& m) {
  MatrixF out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).cast<double>().norm();
    require(norm > 0.0, "length_normalize: row " + std::to_string(r) + " is all zeros");
    out.row(r) = (m.row(r).cast<double>() / norm).cast<float>();
  }
  return out;
}

PooledMatrix slice_rows(const PooledMatrix& m, const std::vector<int>& rows) {
  PooledMatrix out;
  out.provenance = m.provenance;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), m.cols());
  out.utterance_ids.reserve(rows.size());
  Eigen::Index r = 0;
  for (int i : rows) {
    require(i >= 0 && i < m.rows(), "slice_rows: row index out of range");
    out.values.row(r++) = m.values.row(i);
    out.utterance_ids.push_back(m.utterance_ids[static_cast<size_t>(i)]);
  }
  return out;
}

PooledMatrix slice_columns(const PooledMatrix& m, const std::vector<int>& cols) {
  PooledMatrix out;
  out.utterance_ids = m.utterance_ids;
  out.values.resize(m.rows(), static_cast<Eigen::Index>(cols.size()));
  out.provenance.reserve(cols.size());
  Eigen::Index c = 0;
  for (int j : cols) {
    require(j >= 0 && j < m.cols(), "slice_columns: column index out of range");
    out.values.col(c++) = m.values.col(j);
    out.provenance.push_back(m.provenance[static_cast<size_t>(j)]);
  }
  return out;
}

void save_pooled_store(const std::vector<PooledMatrix>& per_layer,
                       const std::vector<std::string>& layer_names,
                       const std::string& dataset_name, const std::string& root) {
  require(!per_layer.empty() && per_layer.size() == layer_names.size(),
          "save_pooled_store: layer list mismatch");
  ActivationStore store;
  store.manifest.dataset_name = dataset_name;
  store.manifest.stage = Stage::pooled;
  store.manifest.num_utterances = per_layer.front().rows();
  store.manifest.utterance_ids = per_layer.front().utterance_ids;
  json prov = json::array();
  for (size_t i = 0; i < per_layer.size(); ++i) {
    const auto& p = per_layer[i];
    require(p.utterance_ids == store.manifest.utterance_ids,
            "save_pooled_store: utterance order mismatch across layers");
    store.manifest.layers.push_back({layer_names[i], p.cols(), 0});
    LayerData ld;
    ld.values = p.values;
    store.layers.push_back(std::move(ld));
    for (const auto& c : p.provenance)
      prov.push_back({{"layer", c.layer}, {"index", c.index}, {"stat", stat_name(c.stat)}});
  }
  store.manifest.recompute_offsets();
  save_store(store, root);
  std::ofstream out(fs::path(root) / "columns.json");
  require(out.good(), "unwritable path: " + (fs::path(root) / "columns.json").string());
  out << prov.dump(2) << "\n";
}

std::vector<ColumnInfo> load_provenance(const std::string& root, const Manifest& manifest) {
  std::vector<ColumnInfo> prov;
  const fs::path path = fs::path(root) / "columns.json";
  std::ifstream in(path);
  if (in.good()) {
    json j;
    try {
      in >> j;
      for (const auto& c : j)
        prov.push_back({c.at("layer").get<std::string>(), c.at("index").get<int>(),
                        parse_stat(c.at("stat").get<std::string>())});
    } catch (const json::exception& e) {
      throw Error("columns.json: " + std::string(e.what()));
    }
    require(static_cast<int64_t>(prov.size()) == manifest.total_width(),
            "columns.json does not cover the manifest width");
    return prov;
  }
  // No sidecar: identity mean provenance straight from the manifest.
  for (const auto& l : manifest.layers)
    for (int j = 0; j < l.dim; ++j) prov.push_back({l.name, j, Stat::mean});
  return prov;
}

PooledMatrix matrix_from_store(const ActivationStore& store,
                               const std::vector<ColumnInfo>& provenance,
                               const std::string& selection) {
  require(store.manifest.stage == Stage::pooled,
          "feature selection requires a pooled-stage store");
  require(static_cast<int64_t>(provenance.size()) == store.manifest.total_width(),
          "provenance does not cover the store width");
  std::vector<PooledMatrix> parts;
  int64_t off = 0;
  for (size_t i = 0; i < store.manifest.layers.size(); ++i) {
    const auto& spec = store.manifest.layers[i];
    if (selection == "ALL" || selection == spec.name) {
      PooledMatrix p;
      p.values = store.layers[i].values;
      p.utterance_ids = store.manifest.utterance_ids;
      p.provenance.assign(provenance.begin() + off, provenance.begin() + off + spec.dim);
      parts.push_back(std::move(p));
    }
    off += spec.dim;
  }
  require(!parts.empty(), "unknown layer selection '" + selection + "'");
  return assemble(parts);
}

}  // namespace probekit

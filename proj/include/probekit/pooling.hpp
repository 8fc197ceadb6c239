#pragma once

#include <string>
#include <vector>

#include "probekit/common.hpp"
#include "probekit/store.hpp"

namespace probekit {

enum class Stat { mean, std_dev };

std::string stat_name(Stat s);
Stat parse_stat(const std::string& s);

// Maps one feature column back to (source layer, neuron within layer,
// pooled statistic). mean_std pooling doubles a layer's width, so the
// within-layer index alone is not enough to address a column.
struct ColumnInfo {
  std::string layer;
  int index = 0;
  Stat stat = Stat::mean;

  bool operator==(const ColumnInfo&) const = default;
};

struct PooledMatrix {
  MatrixF values;                      // N x D
  std::vector<ColumnInfo> provenance;  // size D
  std::vector<std::string> utterance_ids;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  void validate() const;
};

enum class PoolMethod { mean, mean_std };

std::string pool_method_name(PoolMethod m);
PoolMethod parse_pool_method(const std::string& s);

// Frame-level -> utterance-level for one layer. mean_std appends per-neuron
// population standard deviations after the means.
PooledMatrix pool_layer(const ActivationStore& store, const std::string& layer_name,
                        PoolMethod method);

// Column-wise concatenation; inputs must share utterance order.
PooledMatrix assemble(const std::vector<PooledMatrix>& parts);

// Pool every manifest layer in order and concatenate (the ALL matrix).
PooledMatrix pool_all(const ActivationStore& store, PoolMethod method);

// Every row scaled to unit Euclidean norm; a zero row is an error.
MatrixF length_normalize(const MatrixF& m);

PooledMatrix slice_rows(const PooledMatrix& m, const std::vector<int>& rows);
PooledMatrix slice_columns(const PooledMatrix& m, const std::vector<int>& cols);

// Pooled stores round-trip through the repr-store format with a
// columns.json provenance sidecar.
void save_pooled_store(const std::vector<PooledMatrix>& per_layer,
                       const std::vector<std::string>& layer_names,
                       const std::string& dataset_name, const std::string& root);

std::vector<ColumnInfo> load_provenance(const std::string& root, const Manifest& manifest);

// View of a pooled store as one feature matrix: a single layer by name, or
// the concatenation of all layers ("ALL").
PooledMatrix matrix_from_store(const ActivationStore& store,
                               const std::vector<ColumnInfo>& provenance,
                               const std::string& selection);

}  // namespace probekit

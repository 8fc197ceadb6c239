#include "probekit/store.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "f32le store format assumes a little-endian host");

namespace probekit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string stage_name(Stage s) { return s == Stage::frames ? "frames" : "pooled"; }

Stage parse_stage(const std::string& s) {
  if (s == "frames") return Stage::frames;
  if (s == "pooled") return Stage::pooled;
  throw Error("manifest: unknown stage '" + s + "'");
}

int64_t Manifest::total_width() const {
  int64_t w = 0;
  for (const auto& l : layers) w += l.dim;
  return w;
}

const LayerSpec* Manifest::find_layer(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

const LayerSpec& Manifest::layer_at(int64_t g) const {
  for (const auto& l : layers)
    if (g >= l.offset && g < l.offset + l.dim) return l;
  throw Error("neuron index " + std::to_string(g) + " outside concatenated width " +
              std::to_string(total_width()));
}

void Manifest::recompute_offsets() {
  int64_t off = 0;
  for (auto& l : layers) {
    l.offset = off;
    off += l.dim;
  }
}

void Manifest::validate() const {
  require(!layers.empty(), "manifest: no layers");
  require(num_utterances >= 1, "manifest: num_utterances must be >= 1");
  require(value_encoding == "f32le", "manifest: unsupported value_encoding '" + value_encoding + "'");
  require(static_cast<int>(utterance_ids.size()) == num_utterances,
          "manifest: utterance_ids count does not match num_utterances");
  std::unordered_set<std::string> names;
  int64_t off = 0;
  for (const auto& l : layers) {
    require(l.dim >= 1, "manifest: layer '" + l.name + "' has dim < 1");
    require(names.insert(l.name).second, "manifest: duplicate layer name '" + l.name + "'");
    require(l.offset == off, "manifest: layer '" + l.name + "' offset is not cumulative");
    off += l.dim;
  }
  std::unordered_set<std::string> ids;
  for (const auto& id : utterance_ids)
    require(ids.insert(id).second, "manifest: duplicate utterance id '" + id + "'");
}

const LayerData& ActivationStore::layer_data(const std::string& name) const {
  return layers[static_cast<size_t>(layer_index(name))];
}

int ActivationStore::layer_index(const std::string& name) const {
  for (size_t i = 0; i < manifest.layers.size(); ++i)
    if (manifest.layers[i].name == name) return static_cast<int>(i);
  throw Error("unknown layer '" + name + "'");
}

Eigen::Block<const MatrixF, Eigen::Dynamic, Eigen::Dynamic, true> ActivationStore::frames(
    int layer, int utterance) const {
  const auto& ld = layers[static_cast<size_t>(layer)];
  return ld.values.middleRows(ld.row_offset[static_cast<size_t>(utterance)],
                              ld.frame_count[static_cast<size_t>(utterance)]);
}

void ActivationStore::validate() const {
  manifest.validate();
  require(layers.size() == manifest.layers.size(), "store: layer data count mismatch");
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = manifest.layers[i];
    const auto& ld = layers[i];
    require(ld.values.cols() == spec.dim,
            "store: layer '" + spec.name + "' width " + std::to_string(ld.values.cols()) +
                " does not match manifest dim " + std::to_string(spec.dim));
    if (manifest.stage == Stage::pooled) {
      require(ld.values.rows() == manifest.num_utterances,
              "store: pooled layer '" + spec.name + "' must have exactly num_utterances rows");
    } else {
      require(static_cast<int>(ld.frame_count.size()) == manifest.num_utterances &&
                  static_cast<int>(ld.row_offset.size()) == manifest.num_utterances,
              "store: frames layer '" + spec.name + "' index does not cover every utterance");
      int64_t rows = 0;
      for (int u = 0; u < manifest.num_utterances; ++u) {
        require(ld.frame_count[static_cast<size_t>(u)] >= 0, "store: negative frame count");
        require(ld.row_offset[static_cast<size_t>(u)] == rows,
                "store: frames layer '" + spec.name + "' blocks are not contiguous");
        rows += ld.frame_count[static_cast<size_t>(u)];
      }
      require(rows == ld.values.rows(),
              "store: frames layer '" + spec.name + "' row count does not match index");
    }
    require(ld.values.allFinite(),
            "store: layer '" + spec.name + "' contains non-finite values");
  }
}

namespace {

MatrixF read_f32_matrix(const fs::path& path, int64_t rows, int64_t cols) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), "missing file: " + path.string());
  const int64_t bytes = static_cast<int64_t>(in.tellg());
  const int64_t expected = rows * cols * 4;
  require(bytes == expected, "byte length mismatch in " + path.string() + ": file has " +
                                 std::to_string(bytes) + " bytes, manifest declares " +
                                 std::to_string(expected));
  MatrixF m(rows, cols);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(m.data()), expected);
  require(in.good(), "short read on " + path.string());
  return m;
}

void write_f32_matrix(const MatrixF& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "unwritable path: " + path.string());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size()) * 4);
  require(out.good(), "write failed: " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

void check_id_writable(const std::string& id) {
  require(id.find(',') == std::string::npos && id.find('\n') == std::string::npos,
          "utterance id '" + id + "' contains a CSV delimiter");
}

}  // namespace

ActivationStore load_store(const std::string& root) {
  const fs::path dir(root);
  const fs::path mpath = dir / "manifest.json";
  std::ifstream min(mpath);
  require(min.good(), "missing file: " + mpath.string());
  json j;
  try {
    min >> j;
  } catch (const json::exception& e) {
    throw Error("manifest.json parse error: " + std::string(e.what()));
  }

  ActivationStore store;
  Manifest& m = store.manifest;
  try {
    m.dataset_name = j.at("dataset_name").get<std::string>();
    m.stage = parse_stage(j.at("stage").get<std::string>());
    m.value_encoding = j.at("value_encoding").get<std::string>();
    m.num_utterances = j.at("num_utterances").get<int>();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.name = lj.at("name").get<std::string>();
      l.dim = lj.at("dim").get<int>();
      m.layers.push_back(l);
    }
    m.utterance_ids = j.at("utterance_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error("manifest.json: " + std::string(e.what()));
  }
  m.recompute_offsets();
  m.validate();

  for (const auto& spec : m.layers) {
    LayerData ld;
    if (m.stage == Stage::pooled) {
      ld.values = read_f32_matrix(dir / (spec.name + ".bin"), m.num_utterances, spec.dim);
    } else {
      const fs::path ipath = dir / (spec.name + ".idx");
      std::ifstream idx(ipath);
      require(idx.good(), "missing file: " + ipath.string());
      std::string line;
      require(static_cast<bool>(std::getline(idx, line)) &&
                  strip_cr(line) == "utterance_id,byte_offset,frame_count",
              "bad header in " + ipath.string());
      int64_t row = 0;
      size_t u = 0;
      while (std::getline(idx, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        require(f.size() == 3, "malformed row in " + ipath.string() + ": " + line);
        require(u < m.utterance_ids.size(), ipath.string() + " has more rows than utterances");
        require(f[0] == m.utterance_ids[u],
                ipath.string() + " row " + std::to_string(u) + " id '" + f[0] +
                    "' does not match manifest order ('" + m.utterance_ids[u] + "')");
        int64_t byte_offset = 0;
        int count = 0;
        try {
          byte_offset = std::stoll(f[1]);
          count = std::stoi(f[2]);
        } catch (const std::exception&) {
          throw Error("malformed number in " + ipath.string() + ": " + line);
        }
        require(count >= 0, "negative frame count in " + ipath.string());
        require(byte_offset == row * spec.dim * 4,
                ipath.string() + ": utterance '" + f[0] + "' byte offset is not contiguous");
        ld.row_offset.push_back(row);
        ld.frame_count.push_back(count);
        row += count;
        ++u;
      }
      require(u == m.utterance_ids.size(),
              ipath.string() + " covers " + std::to_string(u) + " utterances, manifest has " +
                  std::to_string(m.utterance_ids.size()));
      ld.values = read_f32_matrix(dir / (spec.name + ".bin"), row, spec.dim);
    }
    store.layers.push_back(std::move(ld));
  }

  store.validate();
  return store;
}

void save_store(const ActivationStore& store, const std::string& root) {
  store.validate();
  const Manifest& m = store.manifest;
  for (const auto& id : m.utterance_ids) check_id_writable(id);

  const fs::path dir(root);
  std::error_code ec;
  fs::create_directories(dir, ec);

  json j;
  j["dataset_name"] = m.dataset_name;
  j["stage"] = stage_name(m.stage);
  j["value_encoding"] = m.value_encoding;
  j["num_utterances"] = m.num_utterances;
  j["layers"] = json::array();
  for (const auto& l : m.layers) j["layers"].push_back({{"name", l.name}, {"dim", l.dim}});
  j["utterance_ids"] = m.utterance_ids;

  std::ofstream mout(dir / "manifest.json");
  require(mout.good(), "unwritable path: " + (dir / "manifest.json").string());
  mout << j.dump(2) << "\n";

  for (size_t i = 0; i < m.layers.size(); ++i) {
    const auto& spec = m.layers[i];
    const auto& ld = store.layers[i];
    write_f32_matrix(ld.values, dir / (spec.name + ".bin"));
    if (m.stage == Stage::frames) {
      std::ofstream idx(dir / (spec.name + ".idx"));
      require(idx.good(), "unwritable path: " + (dir / (spec.name + ".idx")).string());
      idx << "utterance_id,byte_offset,frame_count\n";
      for (int u = 0; u < m.num_utterances; ++u) {
        idx << m.utterance_ids[static_cast<size_t>(u)] << ","
            << ld.row_offset[static_cast<size_t>(u)] * spec.dim * 4 << ","
            << ld.frame_count[static_cast<size_t>(u)] << "\n";
      }
    }
  }
}

std::vector<int> LabelTable::aligned(const std::vector<std::string>& utterance_ids) const {
  std::vector<int> out;
  out.reserve(utterance_ids.size());
  for (const auto& id : utterance_ids) {
    auto it = by_utterance.find(id);
    require(it != by_utterance.end(), "utterance '" + id + "' is missing a label");
    out.push_back(it->second);
  }
  return out;
}

LabelTable load_labels(const std::string& path, const ActivationStore& store) {
  std::ifstream in(path);
  require(in.good(), "missing file: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && strip_cr(line) == "utterance_id,label",
          "labels file must start with header 'utterance_id,label': " + path);

  std::unordered_set<std::string> known(store.manifest.utterance_ids.begin(),
                                        store.manifest.utterance_ids.end());
  LabelTable table;
  std::unordered_map<std::string, int> vocab_index;
  size_t rows = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    require(f.size() == 2, "malformed row in " + path + ": " + line);
    const std::string& id = f[0];
    const std::string& label = f[1];
    require(known.count(id) > 0, "labels reference unknown utterance id '" + id + "'");
    require(table.by_utterance.find(id) == table.by_utterance.end(),
            "duplicate label for utterance '" + id + "'");
    auto it = vocab_index.find(label);
    int cls;
    if (it == vocab_index.end()) {
      cls = static_cast<int>(table.class_vocab.size());
      vocab_index.emplace(label, cls);
      table.class_vocab.push_back(label);
    } else {
      cls = it->second;
    }
    table.by_utterance.emplace(id, cls);
    ++rows;
  }
  require(rows > 0, "labels file is empty: " + path);
  for (const auto& id : store.manifest.utterance_ids)
    require(table.by_utterance.count(id) > 0, "utterance '" + id + "' is missing a label");
  return table;
}

void save_labels(const LabelTable& labels, const std::vector<std::string>& utterance_ids,
                 const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "unwritable path: " + path);
  out << "utterance_id,label\n";
  for (const auto& id : utterance_ids) {
    check_id_writable(id);
    auto it = labels.by_utterance.find(id);
    require(it != labels.by_utterance.end(), "utterance '" + id + "' is missing a label");
    out << id << "," << labels.class_vocab[static_cast<size_t>(it->second)] << "\n";
  }
}

TrialSet load_trials(const std::string& path, const ActivationStore& store) {
  std::ifstream in(path);
  require(in.good(), "missing file: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && strip_cr(line) == "utt_a,utt_b,target",
          "pairs file must start with header 'utt_a,utt_b,target': " + path);
  std::unordered_set<std::string> known(store.manifest.utterance_ids.begin(),
                                        store.manifest.utterance_ids.end());
  TrialSet set;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    require(f.size() == 3, "malformed row in " + path + ": " + line);
    require(known.count(f[0]) > 0, "pairs reference unknown utterance id '" + f[0] + "'");
    require(known.count(f[1]) > 0, "pairs reference unknown utterance id '" + f[1] + "'");
    require(f[2] == "0" || f[2] == "1", "pair target must be 0 or 1, got '" + f[2] + "'");
    set.trials.push_back({f[0], f[1], f[2] == "1"});
  }
  require(!set.trials.empty(), "pairs file has no trials: " + path);
  return set;
}

void save_trials(const TrialSet& trials, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "unwritable path: " + path);
  out << "utt_a,utt_b,target\n";
  for (const auto& t : trials.trials) {
    check_id_writable(t.utt_a);
    check_id_writable(t.utt_b);
    out << t.utt_a << "," << t.utt_b << "," << (t.same ? 1 : 0) << "\n";
  }
}

}  // namespace probekit

#include "probekit/synthbench.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "probekit/pooling.hpp"
#include "probekit/rng.hpp"

namespace probekit {

namespace {

std::string padded_id(const std::string& prefix, int i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width)
    digits.insert(0, static_cast<size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

int PlantSpec::total_width() const {
  int w = 0;
  for (const auto& [name, dim] : layers) w += dim;
  return w;
}

void PlantSpec::validate() const {
  require(num_utterances >= 1, "plant spec: num_utterances must be >= 1");
  require(!layers.empty(), "plant spec: no layers");
  for (const auto& [name, dim] : layers)
    require(dim >= 1, "plant spec: layer '" + name + "' dim < 1");
  require(num_classes >= 2, "plant spec: need at least 2 classes");
  require(signal_strength > 0.0, "plant spec: signal strength must be > 0");
  require(noise_sigma >= 0.0, "plant spec: noise sigma must be >= 0");
  require(frames_min >= 1 && frames_max >= frames_min, "plant spec: bad frame range");
  const int width = total_width();
  std::unordered_set<int> seen;
  for (int g : planted_neurons) {
    require(g >= 0 && g < width, "plant spec: planted index " + std::to_string(g) +
                                     " outside total width " + std::to_string(width));
    require(seen.insert(g).second, "plant spec: duplicate planted index");
  }
}

std::vector<int> default_planted_set(int total_width, int count, uint64_t seed) {
  Xoshiro256ss rng(seed ^ 0x5eedf00dULL);
  return sample_without_replacement(total_width, count, rng);
}

PlantedData generate_planted(const PlantSpec& spec) {
  spec.validate();
  PlantedData data;
  data.planted = spec.planted_neurons;
  std::sort(data.planted.begin(), data.planted.end());

  // Rank of a global index within S selects its column of the class
  // pattern. Pattern: +1 when (rank mod C) == class, else -1, so for C = 2
  // the two class means differ by 2*mu on every planted column and any two
  // classes disagree on at least two columns per C-block.
  std::unordered_map<int, int> rank_in_s;
  for (size_t i = 0; i < data.planted.size(); ++i)
    rank_in_s.emplace(data.planted[i], static_cast<int>(i));
  auto pattern = [&](int cls, int rank) {
    return (rank % spec.num_classes) == cls ? 1.0 : -1.0;
  };

  Manifest& m = data.frames.manifest;
  m.dataset_name = spec.dataset_name;
  m.stage = Stage::frames;
  m.num_utterances = spec.num_utterances;
  for (const auto& [name, dim] : spec.layers) m.layers.push_back({name, dim, 0});
  m.recompute_offsets();
  const int id_width = static_cast<int>(std::to_string(spec.num_utterances - 1).size());
  for (int u = 0; u < spec.num_utterances; ++u)
    m.utterance_ids.push_back(padded_id("utt", u, id_width));

  Xoshiro256ss rng(spec.seed);
  std::vector<int> frame_counts(static_cast<size_t>(spec.num_utterances));
  for (auto& f : frame_counts)
    f = spec.frames_min +
        static_cast<int>(rng.below(static_cast<uint64_t>(spec.frames_max - spec.frames_min + 1)));
  int64_t total_frames = 0;
  for (int f : frame_counts) total_frames += f;

  data.labels.class_vocab.reserve(static_cast<size_t>(spec.num_classes));
  for (int c = 0; c < spec.num_classes; ++c)
    data.labels.class_vocab.push_back(padded_id("c", c, 1));
  for (int u = 0; u < spec.num_utterances; ++u)
    data.labels.by_utterance.emplace(m.utterance_ids[static_cast<size_t>(u)],
                                     u % spec.num_classes);

  for (const auto& spec_layer : m.layers) {
    LayerData ld;
    ld.values.resize(total_frames, spec_layer.dim);
    int64_t row = 0;
    for (int u = 0; u < spec.num_utterances; ++u) {
      ld.row_offset.push_back(row);
      ld.frame_count.push_back(frame_counts[static_cast<size_t>(u)]);
      const int cls = u % spec.num_classes;
      for (int f = 0; f < frame_counts[static_cast<size_t>(u)]; ++f, ++row) {
        for (int j = 0; j < spec_layer.dim; ++j) {
          double v = spec.noise_sigma * rng.normal();
          auto it = rank_in_s.find(static_cast<int>(spec_layer.offset) + j);
          if (it != rank_in_s.end()) v += spec.signal_strength * pattern(cls, it->second);
          ld.values(row, j) = static_cast<float>(v);
        }
      }
    }
    data.frames.layers.push_back(std::move(ld));
  }
  data.frames.validate();

  // Pooled stage via mean pooling, packaged as its own store.
  std::vector<PooledMatrix> pooled_layers;
  std::vector<std::string> names;
  for (const auto& l : m.layers) {
    pooled_layers.push_back(pool_layer(data.frames, l.name, PoolMethod::mean));
    names.push_back(l.name);
  }
  data.pooled.manifest = m;
  data.pooled.manifest.stage = Stage::pooled;
  for (auto& p : pooled_layers) {
    LayerData ld;
    ld.values = p.values;
    data.pooled.layers.push_back(std::move(ld));
  }
  data.pooled.validate();
  return data;
}

void SpeakerSpec::validate() const {
  require(num_speakers >= 2, "speaker spec: need at least 2 speakers");
  require(utts_per_speaker >= 2, "speaker spec: need at least 2 utterances per speaker");
  require(dim >= 1, "speaker spec: dim must be >= 1");
  require(intra_sigma >= 0.0 && inter_sigma >= 0.0, "speaker spec: sigmas must be >= 0");
}

SpeakerData generate_speakers(const SpeakerSpec& spec) {
  spec.validate();
  SpeakerData data;
  const int n = spec.num_speakers * spec.utts_per_speaker;

  Manifest& m = data.store.manifest;
  m.dataset_name = spec.dataset_name;
  m.stage = Stage::pooled;
  m.num_utterances = n;
  m.layers.push_back({"embed", spec.dim, 0});
  const int spk_width = static_cast<int>(std::to_string(spec.num_speakers - 1).size());
  const int utt_width = static_cast<int>(std::to_string(spec.utts_per_speaker - 1).size());
  for (int s = 0; s < spec.num_speakers; ++s)
    for (int u = 0; u < spec.utts_per_speaker; ++u)
      m.utterance_ids.push_back(padded_id("spk", s, spk_width) + "_" +
                                padded_id("u", u, utt_width));

  Xoshiro256ss rng(spec.seed);
  MatrixD centroids(spec.num_speakers, spec.dim);
  for (int s = 0; s < spec.num_speakers; ++s)
    for (int j = 0; j < spec.dim; ++j) centroids(s, j) = spec.inter_sigma * rng.normal();

  LayerData ld;
  ld.values.resize(n, spec.dim);
  int row = 0;
  for (int s = 0; s < spec.num_speakers; ++s)
    for (int u = 0; u < spec.utts_per_speaker; ++u, ++row)
      for (int j = 0; j < spec.dim; ++j)
        ld.values(row, j) =
            static_cast<float>(centroids(s, j) + spec.intra_sigma * rng.normal());
  data.store.layers.push_back(std::move(ld));
  data.store.validate();

  // All same-speaker pairs, then an equal-count random sample of
  // cross-speaker pairs.
  auto speaker_of = [&](int r) { return r / spec.utts_per_speaker; };
  std::vector<std::pair<int, int>> cross;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (speaker_of(a) == speaker_of(b))
        data.trials.trials.push_back(
            {m.utterance_ids[static_cast<size_t>(a)], m.utterance_ids[static_cast<size_t>(b)], true});
      else
        cross.emplace_back(a, b);
    }
  }
  const size_t want = std::min(data.trials.trials.size(), cross.size());
  shuffle(cross, rng);
  for (size_t k = 0; k < want; ++k)
    data.trials.trials.push_back({m.utterance_ids[static_cast<size_t>(cross[k].first)],
                                  m.utterance_ids[static_cast<size_t>(cross[k].second)], false});
  return data;
}

}  // namespace probekit

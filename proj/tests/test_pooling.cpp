#include <doctest.h>

#include <cstring>

#include "probekit/pooling.hpp"
#include "probekit/rng.hpp"
#include "probekit/store.hpp"
#include "test_util.hpp"

using namespace probekit;
using testutil::TempDir;

namespace {

ActivationStore two_frame_store() {
  // one utterance, frames [[1,3],[3,5]]
  ActivationStore store;
  store.manifest.dataset_name = "p";
  store.manifest.stage = Stage::frames;
  store.manifest.num_utterances = 1;
  store.manifest.layers.push_back({"L1", 2, 0});
  store.manifest.utterance_ids = {"u0"};
  LayerData ld;
  ld.values.resize(2, 2);
  ld.values << 1.0f, 3.0f, 3.0f, 5.0f;
  ld.row_offset = {0};
  ld.frame_count = {2};
  store.layers.push_back(std::move(ld));
  return store;
}

}  // namespace

TEST_SUITE("pooling") {

TEST_CASE("mean pooling averages frames") {
  PooledMatrix p = pool_layer(two_frame_store(), "L1", PoolMethod::mean);
  REQUIRE(p.cols() == 2);
  CHECK(p.values(0, 0) == doctest::Approx(2.0));
  CHECK(p.values(0, 1) == doctest::Approx(4.0));
  CHECK(p.provenance[0].stat == Stat::mean);
}

TEST_CASE("mean_std doubles width and appends population stds") {
  // population std oracle: sqrt(mean of squared deviations)
  PooledMatrix p = pool_layer(two_frame_store(), "L1", PoolMethod::mean_std);
  REQUIRE(p.cols() == 4);
  CHECK(p.values(0, 0) == doctest::Approx(2.0));
  CHECK(p.values(0, 1) == doctest::Approx(4.0));
  CHECK(p.values(0, 2) == doctest::Approx(1.0));  // frames 1,3 -> std 1
  CHECK(p.values(0, 3) == doctest::Approx(1.0));  // frames 3,5 -> std 1
  CHECK(p.provenance[2].stat == Stat::std_dev);
  CHECK(p.provenance[2].index == 0);
}

TEST_CASE("single-frame utterance has zero std") {
  ActivationStore store = two_frame_store();
  store.layers[0].values.resize(1, 2);
  store.layers[0].values << 7.0f, 7.0f;
  store.layers[0].frame_count = {1};
  PooledMatrix p = pool_layer(store, "L1", PoolMethod::mean_std);
  CHECK(p.values(0, 0) == doctest::Approx(7.0));
  CHECK(p.values(0, 1) == doctest::Approx(7.0));
  CHECK(p.values(0, 2) == doctest::Approx(0.0));
  CHECK(p.values(0, 3) == doctest::Approx(0.0));
}

TEST_CASE("zero-frame utterance and unknown layer are errors") {
  ActivationStore store = two_frame_store();
  store.layers[0].frame_count = {0};
  store.layers[0].values.resize(0, 2);
  CHECK_THROWS_WITH_AS(pool_layer(store, "L1", PoolMethod::mean),
                       doctest::Contains("zero frames"), Error);
  CHECK_THROWS_AS(pool_layer(two_frame_store(), "nope", PoolMethod::mean), Error);
}

TEST_CASE("pooling is permutation-invariant over frames") {
  Xoshiro256ss rng(21);
  ActivationStore store;
  store.manifest.dataset_name = "perm";
  store.manifest.stage = Stage::frames;
  store.manifest.num_utterances = 1;
  store.manifest.layers.push_back({"L1", 5, 0});
  store.manifest.utterance_ids = {"u0"};
  LayerData ld;
  const int frames = 40;
  ld.values.resize(frames, 5);
  for (int r = 0; r < frames; ++r)
    for (int j = 0; j < 5; ++j) ld.values(r, j) = static_cast<float>(rng.uniform(-3.0, 3.0));
  ld.row_offset = {0};
  ld.frame_count = {frames};
  store.layers.push_back(std::move(ld));

  PooledMatrix before = pool_layer(store, "L1", PoolMethod::mean_std);

  std::vector<int> perm(frames);
  for (int i = 0; i < frames; ++i) perm[i] = i;
  shuffle(perm, rng);
  MatrixF shuffled(frames, 5);
  for (int r = 0; r < frames; ++r) shuffled.row(r) = store.layers[0].values.row(perm[r]);
  store.layers[0].values = shuffled;
  PooledMatrix after = pool_layer(store, "L1", PoolMethod::mean_std);

  for (int j = 0; j < after.cols(); ++j)
    CHECK(after.values(0, j) == doctest::Approx(before.values(0, j)).epsilon(1e-6));
}

TEST_CASE("assemble reaches the paper widths and slices back exactly") {
  const int n = 3;
  std::vector<PooledMatrix> parts;
  std::vector<MatrixF> raw;
  Xoshiro256ss rng(5);
  for (int l = 0; l < 3; ++l) {
    MatrixF m(n, 768);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < 768; ++j) m(r, j) = static_cast<float>(rng.uniform(-1.0, 1.0));
    raw.push_back(m);
    PooledMatrix p = testutil::features_of(m, "L" + std::to_string(l + 1));
    parts.push_back(p);
  }
  PooledMatrix all = assemble(parts);
  CHECK(all.cols() == 2304);

  // 12 x 768 = 9216
  std::vector<PooledMatrix> twelve(12, parts[0]);
  CHECK(assemble(twelve).cols() == 9216);

  // provenance slicing recovers each layer bit-for-bit
  for (int l = 0; l < 3; ++l) {
    std::vector<int> cols;
    for (int j = 0; j < all.cols(); ++j)
      if (all.provenance[static_cast<size_t>(j)].layer == "L" + std::to_string(l + 1))
        cols.push_back(j);
    PooledMatrix back = slice_columns(all, cols);
    REQUIRE(back.cols() == 768);
    CHECK(std::memcmp(back.values.data(), raw[static_cast<size_t>(l)].data(),
                      sizeof(float) * static_cast<size_t>(back.values.size())) == 0);
  }
}

TEST_CASE("assemble of a single layer is identity") {
  MatrixF m(2, 4);
  m << 1, 2, 3, 4, 5, 6, 7, 8;
  PooledMatrix p = testutil::features_of(m);
  PooledMatrix out = assemble({p});
  CHECK(out.values == p.values);
  CHECK(out.provenance == p.provenance);
}

TEST_CASE("assemble rejects utterance order mismatch and empty input") {
  MatrixF m = MatrixF::Constant(2, 2, 1.0f);
  PooledMatrix a = testutil::features_of(m, "A");
  PooledMatrix b = testutil::features_of(m, "B");
  b.utterance_ids = {"u1", "u0"};
  CHECK_THROWS_WITH_AS(assemble({a, b}), doctest::Contains("order mismatch"), Error);
  CHECK_THROWS_AS(assemble({}), Error);
}

TEST_CASE("length_normalize: 3-4-5 row, idempotence, scale invariance") {
  MatrixF m(1, 2);
  m << 3.0f, 4.0f;
  MatrixF unit = length_normalize(m);
  CHECK(unit(0, 0) == doctest::Approx(0.6));
  CHECK(unit(0, 1) == doctest::Approx(0.8));

  MatrixF again = length_normalize(unit);
  CHECK(std::abs(again(0, 0) - unit(0, 0)) < 1e-7);
  CHECK(std::abs(again(0, 1) - unit(0, 1)) < 1e-7);

  MatrixF scaled = m * 41.5f;
  MatrixF unit2 = length_normalize(scaled);
  CHECK(std::abs(unit2(0, 0) - unit(0, 0)) < 1e-6);
  CHECK(std::abs(unit2(0, 1) - unit(0, 1)) < 1e-6);

  MatrixF zero = MatrixF::Zero(1, 2);
  CHECK_THROWS_WITH_AS(length_normalize(zero), doctest::Contains("zero"), Error);
}

TEST_CASE("pooled store with provenance sidecar round-trips") {
  ActivationStore store = two_frame_store();
  PooledMatrix p = pool_layer(store, "L1", PoolMethod::mean_std);
  TempDir dir("pool_sidecar");
  save_pooled_store({p}, {"L1"}, "pooled_test", dir.str());

  ActivationStore loaded = load_store(dir.str());
  CHECK(loaded.manifest.stage == Stage::pooled);
  CHECK(loaded.manifest.layers[0].dim == 4);
  auto prov = load_provenance(dir.str(), loaded.manifest);
  REQUIRE(prov.size() == 4);
  CHECK(prov[2].stat == Stat::std_dev);
  PooledMatrix all = matrix_from_store(loaded, prov, "ALL");
  CHECK(std::memcmp(all.values.data(), p.values.data(),
                    sizeof(float) * static_cast<size_t>(p.values.size())) == 0);
  PooledMatrix one = matrix_from_store(loaded, prov, "L1");
  CHECK(one.cols() == 4);
  CHECK_THROWS_AS(matrix_from_store(loaded, prov, "missing"), Error);
}

}  // TEST_SUITE

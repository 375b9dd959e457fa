#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "dqrise/codebook.hpp"
#include "dqrise/corpus.hpp"
#include "dqrise/io.hpp"
#include "dqrise/rng.hpp"
#include "dqrise/vqvae.hpp"
#include "json.hpp"

using namespace dqrise;

namespace {

// Dataset whose first principal axis is exactly joint 0.
std::vector<Hand> axis0_dataset() {
  std::vector<Hand> out;
  for (double t : {0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
    Hand h = Hand::Constant(0.5);
    h[0] = t;
    out.push_back(h);
  }
  return out;
}

std::vector<Hand> random_codes(int n, std::uint64_t seed) {
  Rng r(seed);
  std::vector<Hand> out;
  for (int i = 0; i < n; ++i) {
    Hand h;
    for (int j = 0; j < 6; ++j) h[j] = r.uniform();
    out.push_back(h);
  }
  return out;
}

}  // namespace

TEST_CASE("rank to scalar spacing and endpoints") {
  CHECK(rank_to_scalar(0, 16) == doctest::Approx(-1.0));
  CHECK(rank_to_scalar(15, 16) == doctest::Approx(1.0));
  CHECK(rank_to_scalar(0, 2) == doctest::Approx(-1.0));
  CHECK(rank_to_scalar(1, 2) == doctest::Approx(1.0));
  for (int k = 0; k + 1 < 16; ++k)
    CHECK(rank_to_scalar(k + 1, 16) - rank_to_scalar(k, 16) == doctest::Approx(2.0 / 15.0));
  CHECK_THROWS_AS(rank_to_scalar(16, 16), std::invalid_argument);
  CHECK_THROWS_AS(rank_to_scalar(-1, 16), std::invalid_argument);
}

TEST_CASE("scalar to rank rounds half away from zero and clamps") {
  CHECK(scalar_to_rank(-1.0, 16) == 0);
  CHECK(scalar_to_rank(1.0, 16) == 15);
  CHECK(scalar_to_rank(1.3, 16) == 15);   // (2.3)*7.5 = 17.25 -> 17 -> clamp
  CHECK(scalar_to_rank(-1.4, 16) == 0);
  CHECK(scalar_to_rank(0.0, 16) == 8);    // 7.5 rounds away from zero
  CHECK_THROWS_AS(scalar_to_rank(std::nan(""), 16), std::invalid_argument);

  for (int k = 0; k < 16; ++k) CHECK(scalar_to_rank(rank_to_scalar(k, 16), 16) == k);
}

TEST_CASE("decoding is stable inside a rounding cell and flips past its edge") {
  const int K = 16;
  const double half_cell = 1.0 / (K - 1);
  for (int k = 0; k < K; ++k) {
    double z = rank_to_scalar(k, K);
    CHECK(scalar_to_rank(z + (half_cell - 1e-9), K) == k);
    CHECK(scalar_to_rank(z - (half_cell - 1e-9), K) == k);
  }
  for (int k = 1; k + 1 < K; ++k) {
    double z = rank_to_scalar(k, K);
    CHECK(scalar_to_rank(z + (half_cell + 1e-9), K) == k + 1);
    CHECK(scalar_to_rank(z - (half_cell + 1e-9), K) == k - 1);
  }
}

TEST_CASE("reindex sorts codes by joint 0 when the data vary along joint 0 only") {
  std::vector<double> j0 = {0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4,
                            0.6, 0.0, 1.0, 0.15, 0.85, 0.35, 0.65, 0.45};
  std::vector<Hand> merged;
  for (double v : j0) {
    Hand h = Hand::Constant(0.5);
    h[0] = v;
    merged.push_back(h);
  }
  ReindexedCodebook cb = reindex_codes(merged, axis0_dataset());
  REQUIRE(cb.K == 16);
  CHECK(std::abs(cb.pca_axis[0]) == doctest::Approx(1.0).epsilon(1e-10));
  for (int k = 0; k + 1 < 16; ++k)
    CHECK(cb.codes[static_cast<std::size_t>(k)][0] <
          cb.codes[static_cast<std::size_t>(k + 1)][0]);
  for (int c = 0; c < 16; ++c) {
    int rank = cb.permutation[static_cast<std::size_t>(c)];
    CHECK((cb.codes[static_cast<std::size_t>(rank)] - merged[static_cast<std::size_t>(c)])
              .norm() == 0.0);
  }
}

TEST_CASE("codes already sorted along the axis get the identity permutation") {
  std::vector<Hand> merged;
  for (int c = 0; c < 16; ++c) {
    Hand h = Hand::Constant(0.5);
    h[0] = 0.05 * c;
    merged.push_back(h);
  }
  ReindexedCodebook cb = reindex_codes(merged, axis0_dataset());
  for (int c = 0; c < 16; ++c) CHECK(cb.permutation[static_cast<std::size_t>(c)] == c);
}

TEST_CASE("equal projections keep composite order") {
  std::vector<Hand> merged;
  for (int c = 0; c < 16; ++c) {
    Hand h = Hand::Constant(0.5);
    h[0] = (c < 8) ? 0.2 : 0.1;  // two projection groups, each internally tied
    h[1] = 0.01 * c;             // distinct codes, invisible to the axis
    merged.push_back(h);
  }
  ReindexedCodebook cb = reindex_codes(merged, axis0_dataset());
  // Ranks 0..7 are composites 8..15 (projection 0.1), in composite order.
  for (int i = 0; i < 8; ++i) {
    CHECK(cb.permutation[static_cast<std::size_t>(8 + i)] == i);
    CHECK(cb.permutation[static_cast<std::size_t>(i)] == 8 + i);
  }
}

TEST_CASE("stored projections are nondecreasing and match an independent argsort") {
  std::vector<Hand> dataset = random_codes(200, 40);
  std::vector<Hand> merged = random_codes(16, 41);
  ReindexedCodebook cb = reindex_codes(merged, dataset);

  auto proj = [&](const Hand& h) { return cb.pca_axis.dot(h - cb.pca_mean); };
  for (int k = 0; k + 1 < 16; ++k)
    CHECK(proj(cb.codes[static_cast<std::size_t>(k)]) <=
          proj(cb.codes[static_cast<std::size_t>(k + 1)]) + 1e-12);

  std::vector<int> order(16);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return proj(merged[static_cast<std::size_t>(a)]) < proj(merged[static_cast<std::size_t>(b)]);
  });
  for (int rank = 0; rank < 16; ++rank) {
    int composite = order[static_cast<std::size_t>(rank)];
    CHECK(cb.permutation[static_cast<std::size_t>(composite)] == rank);
  }
}

TEST_CASE("identity reindex keeps composite order but still fits the axis") {
  std::vector<Hand> merged = random_codes(16, 42);
  ReindexedCodebook cb = reindex_identity(merged, random_codes(50, 43));
  for (int c = 0; c < 16; ++c) {
    CHECK(cb.permutation[static_cast<std::size_t>(c)] == c);
    CHECK((cb.codes[static_cast<std::size_t>(c)] - merged[static_cast<std::size_t>(c)]).norm() ==
          0.0);
  }
  CHECK(cb.pca_axis.norm() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("nearest code matches exhaustive search and ties pick the lower rank") {
  std::vector<Hand> dataset = random_codes(100, 50);
  ReindexedCodebook cb = reindex_codes(random_codes(16, 51), dataset);

  CHECK(nearest_code(cb, cb.codes[7]) == 7);

  Rng r(52);
  for (int trial = 0; trial < 1000; ++trial) {
    Hand s;
    for (int j = 0; j < 6; ++j) s[j] = r.uniform(-0.2, 1.2);
    int got = nearest_code(cb, s);
    int best = 0;
    double bd = (s - cb.codes[0]).squaredNorm();
    for (int k = 1; k < 16; ++k) {
      double d = (s - cb.codes[static_cast<std::size_t>(k)]).squaredNorm();
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    CHECK(got == best);
  }

  ReindexedCodebook dup = cb;
  dup.codes[9] = dup.codes[2];
  Hand mid = dup.codes[2];
  CHECK(nearest_code(dup, mid) == 2);
}

TEST_CASE("project_index retrieves the decoded state for the rounded rank") {
  ReindexedCodebook cb = reindex_codes(random_codes(16, 60), random_codes(80, 61));
  for (int k = 0; k < 16; ++k) {
    ProjectedCode p = project_index(cb, rank_to_scalar(k, 16));
    CHECK(p.rank == k);
    CHECK((p.state - cb.codes[static_cast<std::size_t>(k)]).norm() == 0.0);
  }
  CHECK(project_index(cb, 1.3).rank == 15);
  CHECK(project_index(cb, 0.0).rank == 8);
  CHECK_THROWS_AS(project_index(cb, std::nan("")), std::invalid_argument);
}

TEST_CASE("relabel swaps hands for scalars and preserves everything else") {
  std::vector<Hand> merged = random_codes(16, 70);
  ReindexedCodebook cb = reindex_codes(merged, random_codes(60, 71));

  Demonstration demo;
  demo.id = 4;
  Rng r(72);
  for (int t = 0; t < 6; ++t) {
    DemoRecord rec;
    rec.t = t;
    for (int j = 0; j < 13; ++j) rec.obs[j] = r.uniform(-1.0, 1.0);
    for (int j = 0; j < 4; ++j) rec.arm[j] = r.uniform(-1.0, 1.0);
    rec.hand = (t % 2 == 0) ? cb.codes[0] : cb.codes[15];
    demo.records.push_back(rec);
  }
  RelabeledDemo out = relabel_demo(demo, cb);
  REQUIRE(out.records.size() == 6);
  CHECK(out.id == 4);
  for (int t = 0; t < 6; ++t) {
    const RelabeledRecord& rec = out.records[static_cast<std::size_t>(t)];
    CHECK(rec.t == t);
    CHECK((rec.obs - demo.records[static_cast<std::size_t>(t)].obs).norm() == 0.0);
    CHECK((rec.arm - demo.records[static_cast<std::size_t>(t)].arm).norm() == 0.0);
    CHECK((rec.original_hand - demo.records[static_cast<std::size_t>(t)].hand).norm() == 0.0);
    CHECK(rec.z == doctest::Approx(t % 2 == 0 ? -1.0 : 1.0));
    CHECK(rec.rank == (t % 2 == 0 ? 0 : 15));
  }
}

TEST_CASE("relabel error never exceeds the worst nearest-code distance") {
  Corpus c = generate_corpus(Task::Hooklid, 4, 11);
  std::vector<Hand> hands = corpus_hands(c);
  VqVaeConfig cfg;
  cfg.epochs = 120;
  VqVaeTrainResult tr = train_vqvae(hands, cfg, 1);
  ReindexedCodebook cb = reindex_codes(merge_codebooks(tr.model), hands);
  RelabeledCorpus rc = relabel_corpus(c, cb);

  double worst = 0.0, total = 0.0;
  int count = 0;
  for (const RelabeledDemo& d : rc.demos)
    for (const RelabeledRecord& rec : d.records) {
      double best = 1e18;
      for (const Hand& code : cb.codes)
        best = std::min(best, (rec.original_hand - code).norm());
      worst = std::max(worst, best);
      total += (rec.original_hand - cb.codes[static_cast<std::size_t>(rec.rank)]).norm();
      count += 1;
    }
  CHECK(total / count <= worst + 1e-12);
}

TEST_CASE("consecutive ranks are closer in hand space than average code pairs") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Corpus c = generate_corpus(Task::Hooklid, 8, seed);
    std::vector<Hand> hands = corpus_hands(c);
    VqVaeConfig cfg;
    cfg.epochs = 300;
    VqVaeTrainResult tr = train_vqvae(hands, cfg, seed + 10);
    ReindexedCodebook cb = reindex_codes(merge_codebooks(tr.model), hands);

    double consecutive = 0.0;
    for (int k = 0; k + 1 < 16; ++k)
      consecutive += (cb.codes[static_cast<std::size_t>(k)] -
                      cb.codes[static_cast<std::size_t>(k + 1)]).norm();
    consecutive /= 15.0;

    double all = 0.0;
    int pairs = 0;
    for (int a = 0; a < 16; ++a)
      for (int b = a + 1; b < 16; ++b) {
        all += (cb.codes[static_cast<std::size_t>(a)] - cb.codes[static_cast<std::size_t>(b)])
                   .norm();
        pairs += 1;
      }
    all /= pairs;
    CHECK(consecutive <= all);
  }
}

TEST_CASE("codebook files round trip byte for byte and validate on load") {
  ReindexedCodebook cb = reindex_codes(random_codes(16, 80), random_codes(40, 81));
  cb.source_model_hash = "0123456789abcdef";
  std::string a = "/tmp/dqrise_test_cb_a.json";
  std::string b = "/tmp/dqrise_test_cb_b.json";
  save_codebook(cb, a);
  ReindexedCodebook loaded = load_codebook(a);
  save_codebook(loaded, b);
  CHECK(read_text_file(a) == read_text_file(b));
  CHECK(loaded.source_model_hash == cb.source_model_hash);
  for (int k = 0; k < 16; ++k)
    CHECK((loaded.codes[static_cast<std::size_t>(k)] - cb.codes[static_cast<std::size_t>(k)])
              .norm() == 0.0);

  nlohmann::ordered_json j = nlohmann::ordered_json::parse(read_text_file(a));
  j["permutation"][0] = 5;  // collides with another rank: not a bijection
  write_text_file(a, j.dump(2) + "\n");
  CHECK_THROWS_AS(load_codebook(a), std::runtime_error);

  j = nlohmann::ordered_json::parse(read_text_file(b));
  j["codes"][3].erase(5);  // five joints only
  write_text_file(b, j.dump(2) + "\n");
  CHECK_THROWS_AS(load_codebook(b), std::runtime_error);
  std::remove(a.c_str());
  std::remove(b.c_str());
}

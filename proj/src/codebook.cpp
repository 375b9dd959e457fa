#include "dqrise/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "dqrise/io.hpp"
#include "dqrise/pca.hpp"

namespace dqrise {
namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

ReindexedCodebook build(const std::vector<Hand>& merged, const std::vector<Hand>& dataset_hands,
                        bool identity) {
  if (merged.empty()) throw std::invalid_argument("reindex: empty code table");
  for (const Hand& h : merged)
    if (!h.allFinite()) throw std::invalid_argument("reindex: non-finite code");

  std::vector<Vec> pts;
  pts.reserve(dataset_hands.size());
  for (const Hand& h : dataset_hands) pts.push_back(Vec(h));
  PcaResult pca = pca_first_component(pts);

  const int K = static_cast<int>(merged.size());
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  if (!identity) {
    std::vector<double> proj(K);
    for (int c = 0; c < K; ++c) proj[c] = (Vec(merged[c]) - pca.mean).dot(pca.axis);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return proj[a] < proj[b]; });
  }

  ReindexedCodebook cb;
  cb.K = K;
  cb.codes.resize(K);
  cb.permutation.resize(K);
  for (int rank = 0; rank < K; ++rank) {
    cb.codes[rank] = merged[order[rank]];
    cb.permutation[order[rank]] = rank;
  }
  cb.pca_mean = pca.mean;
  cb.pca_axis = pca.axis;
  return cb;
}

}  // namespace

ReindexedCodebook reindex_codes(const std::vector<Hand>& merged,
                                const std::vector<Hand>& dataset_hands) {
  return build(merged, dataset_hands, false);
}

ReindexedCodebook reindex_identity(const std::vector<Hand>& merged,
                                   const std::vector<Hand>& dataset_hands) {
  return build(merged, dataset_hands, true);
}

int nearest_code(const ReindexedCodebook& cb, const Hand& s) {
  if (cb.codes.empty()) throw std::invalid_argument("codebook: empty");
  int best = 0;
  double best_d = (cb.codes[0] - s).squaredNorm();
  for (int r = 1; r < cb.K; ++r) {
    double d = (cb.codes[r] - s).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

double rank_to_scalar(int rank, int K) {
  if (K < 2) throw std::invalid_argument("rank_to_scalar: K must be at least 2");
  if (rank < 0 || rank >= K) throw std::invalid_argument("rank_to_scalar: rank out of range");
  return 2.0 * static_cast<double>(rank) / static_cast<double>(K - 1) - 1.0;
}

int scalar_to_rank(double z, int K) {
  if (K < 2) throw std::invalid_argument("scalar_to_rank: K must be at least 2");
  if (!std::isfinite(z)) throw std::invalid_argument("scalar_to_rank: non-finite input");
  double k = std::round((z + 1.0) * static_cast<double>(K - 1) / 2.0);
  if (k < 0.0) k = 0.0;
  if (k > static_cast<double>(K - 1)) k = static_cast<double>(K - 1);
  return static_cast<int>(k);
}

ProjectedCode project_index(const ReindexedCodebook& cb, double z) {
  if (cb.codes.empty()) throw std::invalid_argument("codebook: empty");
  int rank = scalar_to_rank(z, cb.K);
  return {rank, cb.codes[rank]};
}

RelabeledDemo relabel_demo(const Demonstration& demo, const ReindexedCodebook& cb) {
  RelabeledDemo out;
  out.id = demo.id;
  out.records.reserve(demo.records.size());
  for (const DemoRecord& r : demo.records) {
    int rank = nearest_code(cb, r.hand);
    out.records.push_back({r.t, r.obs, r.arm, rank_to_scalar(rank, cb.K), rank, r.hand});
  }
  return out;
}

RelabeledCorpus relabel_corpus(const Corpus& c, const ReindexedCodebook& cb) {
  RelabeledCorpus out;
  out.task = c.task;
  out.n_demos = c.n_demos;
  out.seed = c.seed;
  out.replaced_seeds = c.replaced_seeds;
  out.demos.reserve(c.demos.size());
  for (const Demonstration& d : c.demos) out.demos.push_back(relabel_demo(d, cb));
  return out;
}

void save_codebook(const ReindexedCodebook& cb, const std::string& path) {
  ordered_json j;
  j["K"] = cb.K;
  ordered_json codes = ordered_json::array();
  for (const Hand& h : cb.codes) codes.push_back(std::vector<double>(h.data(), h.data() + 6));
  j["codes"] = codes;
  j["permutation"] = cb.permutation;
  j["pca_mean"] = to_std(cb.pca_mean);
  j["pca_axis"] = to_std(cb.pca_axis);
  j["source_model_hash"] = cb.source_model_hash;
  write_text_file(path, j.dump(2) + "\n");
}

ReindexedCodebook load_codebook(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("codebook file is not valid JSON: " + std::string(e.what()));
  }
  try {
    ReindexedCodebook cb;
    cb.K = j.at("K").get<int>();
    auto codes = j.at("codes");
    if (static_cast<int>(codes.size()) != cb.K)
      throw std::runtime_error("codebook file: wrong number of codes");
    cb.codes.resize(cb.K);
    for (int r = 0; r < cb.K; ++r) {
      auto arr = codes.at(r).get<std::vector<double>>();
      if (arr.size() != 6) throw std::runtime_error("codebook file: code length must be 6");
      for (int i = 0; i < 6; ++i) cb.codes[r][i] = arr[i];
      if (!cb.codes[r].allFinite()) throw std::runtime_error("codebook file: non-finite code");
    }
    cb.permutation = j.at("permutation").get<std::vector<int>>();
    if (static_cast<int>(cb.permutation.size()) != cb.K)
      throw std::runtime_error("codebook file: permutation length mismatch");
    std::vector<bool> seen(cb.K, false);
    for (int p : cb.permutation) {
      if (p < 0 || p >= cb.K || seen[p])
        throw std::runtime_error("codebook file: permutation is not a bijection");
      seen[p] = true;
    }
    auto mean = j.at("pca_mean").get<std::vector<double>>();
    auto axis = j.at("pca_axis").get<std::vector<double>>();
    if (mean.size() != 6 || axis.size() != 6)
      throw std::runtime_error("codebook file: pca fields must have length 6");
    cb.pca_mean = Eigen::Map<const Vec>(mean.data(), 6);
    cb.pca_axis = Eigen::Map<const Vec>(axis.data(), 6);
    cb.source_model_hash = j.value("source_model_hash", std::string{});
    return cb;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("codebook file is missing required fields: " + std::string(e.what()));
  }
}

}  // namespace dqrise

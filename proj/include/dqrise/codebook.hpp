#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqrise/corpus.hpp"
#include "dqrise/types.hpp"

namespace dqrise {

// Merged composite codebook with codes ordered along the first principal
// axis of the raw demonstration hand states. permutation maps a composite
// index (layer-1 index * layer-2 size + layer-2 index) to its rank; codes
// is stored in rank order.
struct ReindexedCodebook {
  int K = 0;
  std::vector<Hand> codes;       // by rank
  std::vector<int> permutation;  // composite -> rank
  Vec pca_mean;
  Vec pca_axis;
  std::string source_model_hash;
};

// Ranks follow the projection (code - mean) . axis in nondecreasing order;
// equal projections keep composite order.
ReindexedCodebook reindex_codes(const std::vector<Hand>& merged,
                                const std::vector<Hand>& dataset_hands);

// Ablation: ranks equal composite indices; the PCA fields are still fitted
// so downstream consumers (plots) behave identically.
ReindexedCodebook reindex_identity(const std::vector<Hand>& merged,
                                   const std::vector<Hand>& dataset_hands);

int nearest_code(const ReindexedCodebook& cb, const Hand& s);  // lowest rank on ties

double rank_to_scalar(int rank, int K);  // 2k/(K-1) - 1, in [-1,1]
int scalar_to_rank(double z, int K);     // round half away from zero, clamped

struct ProjectedCode {
  int rank = 0;
  Hand state;
};
ProjectedCode project_index(const ReindexedCodebook& cb, double z);

RelabeledDemo relabel_demo(const Demonstration& demo, const ReindexedCodebook& cb);
RelabeledCorpus relabel_corpus(const Corpus& c, const ReindexedCodebook& cb);

void save_codebook(const ReindexedCodebook& cb, const std::string& path);
ReindexedCodebook load_codebook(const std::string& path);

}  // namespace dqrise

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttmc/calibrate.hpp"
#include "ttmc/corpus.hpp"
#include "ttmc/matrix.hpp"
#include "ttmc/segment.hpp"

namespace ttmc {

// Truncated SVD of the V x T raw term-frequency matrix. doc_vectors are
// the documents projected onto the top-k left singular vectors; the
// retained spectrum (at least k values, more for scree inspection) is
// kept alongside. Each left singular vector is oriented so that its
// largest-magnitude entry is positive.
struct LsaEmbedding {
    MatrixD doc_vectors;   // T x k
    MatrixD left_vectors;  // V x k
    std::vector<double> singular_values;  // non-increasing, >= k entries
    int k = 0;
};

// spectrum: how many singular values to retain for the scree output
// (0: max(k, 50), capped at min(V, T)). The decomposition runs block
// subspace iteration on the smaller Gram matrix with a Rayleigh-Ritz
// step; a full-size block reduces to an exact Jacobi eigensolve.
LsaEmbedding lsa_embed(const Corpus& corpus, int k, int spectrum = 0, int threads = 0);

struct LsaDetectConfig {
    int delta = 20;
    double eta = 0.5;
    long num_intervals = 0;  // 0: 5 * T
    bool threshold_envelope = true;  // same policy as DetectConfig
    int calib_num_intervals = 6000;
    int calib_len_max = 0;
    double calib_grid_ratio = 1.25;
    std::uint64_t seed = 1;
    int threads = 0;
};

// Document-shuffle null for the multivariate CUSUM: per grid length,
// random intervals have their rows shuffled before scoring.
ThresholdTable calibrate_cusum_shuffle(const MatrixD& xs, int delta,
                                       const CalibrateOptions& options);

// Multivariate CUSUM + wild binary segmentation on the embeddings; each
// retained interval emits its CUSUM argmax.
ChangepointResult lsa_detect(const LsaEmbedding& embedding, const LsaDetectConfig& config);

// Binary matrix file with a JSON header line.
void save_embedding(const LsaEmbedding& embedding, const std::string& path);
LsaEmbedding load_embedding(const std::string& path);

// CSV rows (rank, singular_value), 1-based rank.
void save_scree_csv(const LsaEmbedding& embedding, const std::string& path);

}  // namespace ttmc

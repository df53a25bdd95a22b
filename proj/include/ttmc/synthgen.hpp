#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ttmc/corpus.hpp"
#include "ttmc/matrix.hpp"

namespace ttmc {

// Generator specification: fixed topics, piecewise-constant Dirichlet
// prior over document positions. Changepoint tau is the 0-based position
// of the first document of the new segment; document d belongs to
// segment i iff tau_{i-1} <= d < tau_i (tau_0 = 0, tau_{M+1} = T).
struct TtmcSpec {
    int T = 0;
    int V = 0;
    int K = 0;
    int doc_len_min = 50;
    int doc_len_max = 200;
    std::vector<int> changepoints;            // strictly increasing, in (0, T)
    std::vector<std::vector<double>> alphas;  // changepoints.size() + 1 vectors of length K
    MatrixD phi;                              // V x K, columns sum to 1
    std::uint64_t seed = 1;
    double norm = 0.0;     // common l2 norm of the alphas (0: unconstrained)
    double epsilon = 0.0;  // guaranteed relative separation of consecutive alphas

    void validate() const;
    int segment_of(int d) const;
};

struct GroundTruth {
    std::vector<int> changepoints;
    std::vector<std::vector<double>> segment_alphas;
    MatrixD topics;
};

struct RandomSpecOptions {
    int doc_len_min = 50;
    int doc_len_max = 200;
    double phi_concentration = 0.1;  // symmetric Dirichlet for topic columns
    int retry_budget = 1000;
};

// Changepoint gaps uniform in [min_gap, max_gap], resampled until they
// fit in T with a final segment of at least min_gap; alpha directions
// uniform on the positive orthant of the unit sphere, scaled to norm_l,
// resampled until consecutive pairs are epsilon-separated.
TtmcSpec random_spec(int t, int v, int k, int m, double norm_l, double epsilon,
                     int min_gap, int max_gap, std::uint64_t seed,
                     const RandomSpecOptions& options = {});

// Samples the corpus. Per-document RNG streams are derived from the
// spec seed, so output is independent of the thread count. A vocabulary
// may be supplied to reuse token identities across corpora; otherwise
// zero-padded synthetic token names are created.
std::pair<Corpus, GroundTruth> generate(const TtmcSpec& spec, int threads = 0,
                                        std::shared_ptr<const Vocabulary> vocab = nullptr);
std::pair<Corpus, GroundTruth> generate_serial(const TtmcSpec& spec,
                                               std::shared_ptr<const Vocabulary> vocab = nullptr);

void save_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

}  // namespace ttmc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttmc/corpus.hpp"
#include "ttmc/matrix.hpp"

namespace ttmc {

// Fitted topic model: column-stochastic topic-word matrix plus the
// Dirichlet prior estimated from the sampled document-topic counts.
// phi is stored row-major V x K, so phi.row(v) holds p(v | topic k)
// across topics, the access pattern of the per-word argmax.
struct TopicModel {
    MatrixD phi;                    // V x K, each column sums to 1
    std::vector<double> alpha_fit;  // K, strictly positive
    int K = 0;
    std::uint64_t vocab_hash = 0;

    struct TrainMeta {
        int iters = 0;
        int burn_in = 0;
        std::uint64_t seed = 0;
        double heldout_perplexity = 0.0;  // per-word negative log-likelihood; NaN until evaluated
    } train_meta;
};

// T x K matrix of per-document topic counts; row d sums to the length of
// document d.
struct TopicCounts {
    int rows = 0;
    int cols = 0;
    std::vector<std::int32_t> z;  // row-major
    std::vector<int> doc_lengths;

    std::span<const std::int32_t> row(int r) const {
        return {z.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
};

struct LdaOptions {
    int iters = 200;
    int burn_in = 100;
    std::uint64_t seed = 1;
    double doc_topic_prior = 0.1;  // symmetric Gibbs prior on theta
    double topic_word_beta = 0.01; // symmetric smoothing on topic-word counts
    int alpha_fixed_point_iters = 200;
    double alpha_fixed_point_tol = 1e-10;
};

// Collapsed Gibbs sampling; phi is the average of smoothed topic-word
// estimates over post-burn-in sweeps, alpha_fit comes from a fixed-point
// refinement on the final document-topic counts.
TopicModel fit_lda(const Corpus& train, int k, const LdaOptions& options);

// Per-word held-out negative log-likelihood by document completion:
// theta is inferred on the first half of every held-out document, the
// second half is scored. Lower is better. Documents with fewer than two
// tokens are skipped with a warning.
double log_perplexity(const TopicModel& model, const Corpus& heldout, std::uint64_t seed);

// Fits one model per grid entry on w1 (grid fits run in parallel),
// scores each on w2, returns the best; ties break toward smaller K.
TopicModel select_model(const Corpus& w1, const Corpus& w2, const std::vector<int>& k_grid,
                        const LdaOptions& options, int threads = 0);

// Selection rule behind select_model: index of the lowest perplexity,
// ties toward the smaller K.
std::size_t select_best_index(const std::vector<double>& perplexities,
                              const std::vector<int>& k_grid);

// Assigns every word to the topic maximizing p(word | phi_k), ties
// toward the lowest topic index, and accumulates counts per document.
TopicCounts estimate_topic_counts(const TopicModel& model, const Corpus& w, int threads = 0);
TopicCounts estimate_topic_counts_serial(const TopicModel& model, const Corpus& w);

// JSON persistence; loading verifies dimensions and vocabulary hash when
// a vocabulary is supplied.
void save_model(const TopicModel& model, const std::string& path);
TopicModel load_model(const std::string& path, const Vocabulary* expected_vocab = nullptr);

}  // namespace ttmc

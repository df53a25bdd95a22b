#pragma once

#include <span>
#include <vector>

#include "ttmc/lda.hpp"
#include "ttmc/matrix.hpp"
#include "ttmc/polya.hpp"

namespace ttmc {

// Discrete interval [s, e], both ends inclusive.
struct Interval {
    int s = 0;
    int e = 0;

    int length() const { return e - s + 1; }
    // Left half is [s, midpoint()], right half (midpoint(), e].
    int midpoint() const { return (s + e) / 2; }
};

// Midpoint likelihood-ratio score with the fitted segment parameters.
struct Score {
    Interval interval;
    double value = 0.0;
    std::vector<double> alpha_left;
    std::vector<double> alpha_right;
    std::vector<double> alpha_pooled;
};

struct CusumResult {
    double value = 0.0;
    int argmax_t = 0;
};

// Per-document-normalized log likelihood ratio at the interval midpoint:
// Polya MLEs are fitted to the two halves and to the pooled interval and
//   value = (ll_left + ll_right - ll_pooled) / (e - s + 1).
// The half fits start from the pooled MLE, so value >= 0 up to rounding.
// Requires e - s + 1 >= 4.
Score lr_statistic(const TopicCounts& z, Interval interval, const MleOptions& mle = {});

// Same statistic computed on an explicit row ordering; rows[i] is the
// i-th document of the virtual interval [0, rows.size() - 1]. Backs the
// interleaving permutation of the threshold calibration.
Score lr_statistic_rows(const TopicCounts& z, std::span<const int> rows,
                        const MleOptions& mle = {});

// Weighted maximal pre/post mean difference over t in [s, e):
//   sqrt(p (1 - p)) * || mean(xs[s..t]) - mean(xs[t+1..e]) ||_2,
// p = (t - s + 1) / (e - s + 1). Rows of xs are D-vectors; D = 1 gives
// the scalar statistic. Ties break toward the smallest t.
CusumResult cusum_statistic(const MatrixD& xs, int s, int e);

// Scores a batch of intervals; the OpenMP variant partitions intervals
// across threads and is bit-identical to the serial reference.
std::vector<Score> score_intervals(const TopicCounts& z, std::span<const Interval> intervals,
                                   const MleOptions& mle, int threads = 0);
std::vector<Score> score_intervals_serial(const TopicCounts& z, std::span<const Interval> intervals,
                                          const MleOptions& mle = {});

}  // namespace ttmc

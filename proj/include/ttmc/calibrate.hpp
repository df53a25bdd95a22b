#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttmc/cpstat.hpp"
#include "ttmc/lda.hpp"
#include "ttmc/polya.hpp"

namespace ttmc {

// Null thresholds per interval length, computed on a geometric grid and
// interpolated log-linearly in between (the null level decays smoothly
// with length, so a dense table would be wasted work).
struct ThresholdTable {
    std::vector<int> lengths;    // ascending; covers [delta, len_max]
    std::vector<double> values;  // same size, each >= 0
    double eta = 0.5;
    int num_intervals = 0;
    std::uint64_t seed = 0;
    int delta = 0;

    double at(int length) const;  // clamped at the grid ends
};

// How the null is generated inside each sampled interval.
//  Interleave: the fixed even/odd split permutation; one deterministic
//    null score per window, so quantiles saturate at the per-length sup
//    over windows.
//  Shuffle: a fresh uniform permutation per draw (Monte-Carlo
//    permutation null, same exchangeability argument); quantile depth
//    grows with num_intervals.
enum class PermutationScheme { Interleave, Shuffle };

struct CalibrateOptions {
    int num_intervals = 100;  // sampled intervals per grid length
    double eta = 0.5;         // 0.5: median rule; 1.0: conservative maximum
    std::uint64_t seed = 1;
    double grid_ratio = 1.25;
    int len_max = 0;  // 0: up to T
    PermutationScheme scheme = PermutationScheme::Interleave;
    MleOptions mle;
    int threads = 0;
};

// Geometric grid of interval lengths in [delta, len_max].
std::vector<int> threshold_grid(int delta, int len_max, double grid_ratio);

// Approach 1: for each grid length, random intervals are re-ordered by
// the interleaving permutation (even offsets to the left half, odd
// offsets to the right; the trailing element of odd-length intervals is
// dropped) and the eta-quantile of the permuted scores is stored.
ThresholdTable calibrate_permutation(const TopicCounts& z, int delta,
                                     const CalibrateOptions& options);
ThresholdTable calibrate_permutation_serial(const TopicCounts& z, int delta,
                                            const CalibrateOptions& options);

// Approach 2: simulates a no-change corpus from the fitted model, runs
// the topic-count pipeline on it, and stores raw-score quantiles.
ThresholdTable calibrate_simulation(const TopicModel& model, int t, int doc_len_min,
                                    int doc_len_max, int delta,
                                    const CalibrateOptions& options);

// Conservative power-law consolidation of a calibrated table: fits the
// null-level constant c* = max over grid of value * length^exponent and
// returns a table with values c* / length^exponent, extended on the same
// geometric grid up to extend_to_len. At the binding grid length the
// value equals the calibrated quantile; everywhere else it dominates the
// input table, so the result is anchored at the short lengths where
// within-corpus permutation calibration is sharpest.
//
// The exponent is the decay rate of the statistic's null level: 1.0 for
// the per-document-normalized likelihood ratio (the ratio itself is
// O_p(1) by Wilks, so S = O_p(1/length)), 0.5 for mean-difference
// statistics like the CUSUM.
ThresholdTable power_law_envelope(const ThresholdTable& table, int extend_to_len,
                                  double exponent);

// CSV with a JSON parameter header line ("# {...}").
void save_thresholds_csv(const ThresholdTable& table, const std::string& path);
ThresholdTable load_thresholds_csv(const std::string& path);

}  // namespace ttmc

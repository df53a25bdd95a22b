#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttmc/calibrate.hpp"
#include "ttmc/corpus.hpp"
#include "ttmc/cpstat.hpp"
#include "ttmc/lda.hpp"

namespace ttmc {

// Above-threshold intervals with their scores and the point each one
// emits when selected (the midpoint for the likelihood-ratio pipeline,
// the CUSUM argmax for the LSA baseline).
struct ScoredIntervalSet {
    std::vector<Interval> intervals;
    std::vector<double> scores;
    std::vector<int> emit_points;
    std::uint64_t seed = 0;
    long num_sampled = 0;
};

struct SampledScoreRow {
    Interval interval;
    int t = 0;
    double value = 0.0;
    double threshold = 0.0;
    bool retained = false;
};

struct SampleFilterResult {
    ScoredIntervalSet retained;
    std::vector<SampledScoreRow> trace;  // every sampled interval, for plotting
};

// Samples num_intervals intervals with endpoints uniform (with
// replacement), rejecting lengths below delta; scores them in parallel
// and keeps those at or above their length's threshold.
SampleFilterResult sample_and_filter_traced(const TopicCounts& z, const ThresholdTable& thresholds,
                                            long num_intervals, int delta, std::uint64_t seed,
                                            const MleOptions& mle = {}, int threads = 0);
ScoredIntervalSet sample_and_filter(const TopicCounts& z, const ThresholdTable& thresholds,
                                    long num_intervals, int delta, std::uint64_t seed,
                                    const MleOptions& mle = {}, int threads = 0);

struct ChangepointProvenance {
    Interval interval;
    double score = 0.0;
};

struct ChangepointResult {
    std::vector<int> changepoints;       // positions in the analysed series, strictly increasing
    std::vector<int> changepoints_full;  // mapped back to the source corpus (empty if identical)
    std::vector<ChangepointProvenance> provenance;  // parallel to changepoints
    std::string config_snapshot;                    // JSON
};

// Modified wild binary segmentation: repeatedly emit the emit-point of
// the best retained interval, discard intervals straddling it, recurse
// on both sides. Score ties break toward the shorter interval, then the
// smaller start.
ChangepointResult mwbs(int s, int e, const ScoredIntervalSet& set);

enum class ThresholdApproach { Permutation, Simulation };

struct DetectConfig {
    int delta_min_interval = 20;
    double eta = 0.5;
    long num_intervals = 0;  // 0: 5 * |W|
    std::vector<int> k_grid = {5, 10, 15, 20};
    LdaOptions lda;
    ThresholdApproach approach = ThresholdApproach::Permutation;
    SplitScheme split = SplitScheme::ThirdsInterleaved;
    // Threshold policy. With threshold_envelope (the default), quantiles
    // are calibrated deeply on the anchor lengths only (up to
    // calib_len_max, default max(3 * delta, 60)) where within-corpus
    // permutation calibration is sharp, and the conservative
    // 1/sqrt(length) power law fitted to that grid covers all longer
    // intervals; see power_law_envelope. With the flag off, the
    // per-length table is used directly via interpolation.
    bool threshold_envelope = true;
    // Detect's default null draws use fresh random permutations rather
    // than Algorithm style fixed interleaves so the calibrated quantile
    // can go deep enough to clear every sampled interval on changeless
    // data; the fixed interleave remains available.
    PermutationScheme calib_scheme = PermutationScheme::Shuffle;
    int calib_num_intervals = 6000;
    int calib_len_max = 0;
    double calib_grid_ratio = 1.25;
    MleOptions mle{1e-5, 200, 0.5, {}, false};  // statistic fits; recorded in the snapshot
    std::uint64_t seed = 1;
    int threads = 0;

    void validate() const;
};

struct DetectArtifacts {
    ChangepointResult result;
    ThresholdTable thresholds;
    std::vector<SampledScoreRow> trace;
    TopicModel model;
    TopicCounts topic_counts;
    std::vector<int> w_positions;
};

// Full pipeline: split, model selection, topic counts, threshold
// calibration, interval filtering, segmentation. Changepoints are
// reported both in W positions and in source-corpus positions.
DetectArtifacts detect_full(const Corpus& corpus, const DetectConfig& config);
ChangepointResult detect(const Corpus& corpus, const DetectConfig& config);

}  // namespace ttmc

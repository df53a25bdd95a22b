#include "ttmc/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "ttmc/rng.hpp"

using nlohmann::json;

namespace ttmc {

void DetectConfig::validate() const {
    if (delta_min_interval < 4) throw std::invalid_argument("delta must be at least 4");
    if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("eta must lie in (0, 1]");
    if (num_intervals < 0) throw std::invalid_argument("num_intervals must be non-negative");
    if (k_grid.empty()) throw std::invalid_argument("k_grid must be non-empty");
    if (calib_num_intervals < 1) throw std::invalid_argument("calib_num_intervals must be positive");
}

SampleFilterResult sample_and_filter_traced(const TopicCounts& z, const ThresholdTable& thresholds,
                                            long num_intervals, int delta, std::uint64_t seed,
                                            const MleOptions& mle, int threads) {
    if (delta > z.rows) throw std::invalid_argument("delta exceeds the series length");
    if (num_intervals < 0) throw std::invalid_argument("num_intervals must be non-negative");

    // Endpoint sampling is cheap and sequential; scoring is the parallel part.
    Rng rng(derive_seed(seed, 0x5a3));
    std::vector<Interval> intervals;
    intervals.reserve(num_intervals);
    for (long i = 0; i < num_intervals; ++i) {
        for (;;) {
            int s = static_cast<int>(rng.uniform_int(z.rows));
            int e = static_cast<int>(rng.uniform_int(z.rows));
            if (s > e) std::swap(s, e);
            if (e - s + 1 >= delta) {
                intervals.push_back({s, e});
                break;
            }
        }
    }

    const std::vector<Score> scores = score_intervals(z, intervals, mle, threads);

    SampleFilterResult out;
    out.retained.seed = seed;
    out.retained.num_sampled = num_intervals;
    out.trace.reserve(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const double threshold = thresholds.at(intervals[i].length());
        // A score of exactly zero is a likelihood ratio of 1: no evidence,
        // never retained (matters only for degenerate constant data, where
        // the null thresholds are zero as well).
        const bool keep = scores[i].value >= threshold && scores[i].value > 0.0;
        out.trace.push_back({intervals[i], intervals[i].midpoint(), scores[i].value, threshold, keep});
        if (keep) {
            out.retained.intervals.push_back(intervals[i]);
            out.retained.scores.push_back(scores[i].value);
            out.retained.emit_points.push_back(intervals[i].midpoint());
        }
    }
    return out;
}

ScoredIntervalSet sample_and_filter(const TopicCounts& z, const ThresholdTable& thresholds,
                                    long num_intervals, int delta, std::uint64_t seed,
                                    const MleOptions& mle, int threads) {
    return sample_and_filter_traced(z, thresholds, num_intervals, delta, seed, mle, threads)
        .retained;
}

namespace {

struct MwbsEmit {
    int point;
    Interval interval;
    double score;
};

// Recursion over index lists into the set; straddling intervals are
// dropped when partitioning.
void mwbs_recurse(int s, int e, const ScoredIntervalSet& set, std::vector<int> active,
                  std::vector<MwbsEmit>& emitted) {
    if (s == e || active.empty()) return;

    int best = active[0];
    for (int idx : active) {
        const bool better =
            set.scores[idx] > set.scores[best] ||
            (set.scores[idx] == set.scores[best] &&
             (set.intervals[idx].length() < set.intervals[best].length() ||
              (set.intervals[idx].length() == set.intervals[best].length() &&
               set.intervals[idx].s < set.intervals[best].s)));
        if (better) best = idx;
    }
    const int t_c = set.emit_points[best];
    emitted.push_back({t_c, set.intervals[best], set.scores[best]});

    // The chosen interval is consumed; the rest partition by side, with
    // straddlers dropped.
    std::vector<int> left, right;
    for (int idx : active) {
        if (idx == best) continue;
        if (set.intervals[idx].e <= t_c)
            left.push_back(idx);
        else if (set.intervals[idx].s >= t_c)
            right.push_back(idx);
    }
    mwbs_recurse(s, t_c, set, std::move(left), emitted);
    mwbs_recurse(t_c, e, set, std::move(right), emitted);
}

}  // namespace

ChangepointResult mwbs(int s, int e, const ScoredIntervalSet& set) {
    if (set.intervals.size() != set.scores.size() ||
        set.intervals.size() != set.emit_points.size())
        throw std::invalid_argument("inconsistent scored interval set");

    std::vector<int> active(set.intervals.size());
    std::iota(active.begin(), active.end(), 0);
    std::vector<MwbsEmit> emitted;
    mwbs_recurse(s, e, set, std::move(active), emitted);

    std::sort(emitted.begin(), emitted.end(),
              [](const MwbsEmit& a, const MwbsEmit& b) { return a.point < b.point; });

    ChangepointResult result;
    for (const auto& em : emitted) {
        result.changepoints.push_back(em.point);
        result.provenance.push_back({em.interval, em.score});
    }
    return result;
}

namespace {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("detect[") + stage + "]: " + e.what());
    }
}

json snapshot_config(const DetectConfig& config, int t_full, int t_w, int k_hat,
                     long num_intervals) {
    json j;
    j["delta_min_interval"] = config.delta_min_interval;
    j["eta"] = config.eta;
    j["num_intervals"] = num_intervals;
    j["k_grid"] = config.k_grid;
    j["lda"] = {{"iters", config.lda.iters},
                {"burn_in", config.lda.burn_in},
                {"doc_topic_prior", config.lda.doc_topic_prior},
                {"topic_word_beta", config.lda.topic_word_beta}};
    j["approach"] =
        config.approach == ThresholdApproach::Permutation ? "permutation" : "simulation";
    j["split"] =
        config.split == SplitScheme::ThirdsInterleaved ? "thirds" : "quarters";
    j["threshold_envelope"] = config.threshold_envelope;
    j["calib_scheme"] =
        config.calib_scheme == PermutationScheme::Interleave ? "interleave" : "shuffle";
    j["calib_num_intervals"] = config.calib_num_intervals;
    j["calib_len_max"] = config.calib_len_max;
    j["calib_grid_ratio"] = config.calib_grid_ratio;
    j["mle"] = {{"tol", config.mle.tol}, {"max_iters", config.mle.max_iters}};
    j["seed"] = config.seed;
    j["T_full"] = t_full;
    j["T_w"] = t_w;
    j["K_hat"] = k_hat;
    return j;
}

}  // namespace

DetectArtifacts detect_full(const Corpus& corpus, const DetectConfig& config) {
    config.validate();

    DetectArtifacts art;
    const SplitCorpus split =
        run_stage("split", [&] { return split_three_way(corpus, config.split); });
    art.w_positions = split.w_positions;

    LdaOptions lda_opt = config.lda;
    lda_opt.seed = derive_seed(config.seed, 0x1da);
    art.model = run_stage("select_model", [&] {
        return select_model(split.w_tilde_1, split.w_tilde_2, config.k_grid, lda_opt,
                            config.threads);
    });

    art.topic_counts = run_stage("estimate_topic_counts", [&] {
        return estimate_topic_counts(art.model, split.w, config.threads);
    });

    const int t_w = split.w.num_docs();

    CalibrateOptions calib;
    calib.num_intervals = config.calib_num_intervals;
    calib.eta = config.eta;
    calib.seed = derive_seed(config.seed, 0xca1);
    calib.grid_ratio = config.calib_grid_ratio;
    calib.len_max = config.calib_len_max;
    if (calib.len_max == 0 && config.threshold_envelope)
        calib.len_max = std::min(t_w, std::max(3 * config.delta_min_interval, 60));
    calib.scheme = config.calib_scheme;
    calib.mle = config.mle;
    calib.threads = config.threads;

    art.thresholds = run_stage("calibrate", [&] {
        ThresholdTable table;
        if (config.approach == ThresholdApproach::Permutation) {
            table = calibrate_permutation(art.topic_counts, config.delta_min_interval, calib);
        } else {
            long len_sum = 0;
            for (const auto& d : split.w.docs) len_sum += d.length();
            const int mean_len =
                std::max(1, static_cast<int>(len_sum / std::max(1, split.w.num_docs())));
            table = calibrate_simulation(art.model, split.w.num_docs(), mean_len, mean_len,
                                         config.delta_min_interval, calib);
        }
        if (config.threshold_envelope) table = power_law_envelope(table, t_w, 1.0);
        return table;
    });
    const long num_intervals =
        config.num_intervals > 0 ? config.num_intervals : 5L * t_w;

    SampleFilterResult sf = run_stage("sample_and_filter", [&] {
        return sample_and_filter_traced(art.topic_counts, art.thresholds, num_intervals,
                                        config.delta_min_interval,
                                        derive_seed(config.seed, 0x5e6), config.mle,
                                        config.threads);
    });
    art.trace = std::move(sf.trace);

    art.result = run_stage("mwbs", [&] { return mwbs(0, t_w - 1, sf.retained); });

    art.result.changepoints_full.reserve(art.result.changepoints.size());
    for (int cp : art.result.changepoints)
        art.result.changepoints_full.push_back(split.w_positions[cp]);

    art.result.config_snapshot =
        snapshot_config(config, corpus.num_docs(), t_w, art.model.K, num_intervals).dump();
    return art;
}

ChangepointResult detect(const Corpus& corpus, const DetectConfig& config) {
    return detect_full(corpus, config).result;
}

}  // namespace ttmc

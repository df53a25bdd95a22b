#include "ttmc/cpstat.hpp"

#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "ttmc/parallel.hpp"

namespace ttmc {

namespace {

Score lr_from_suffstats(Interval interval, const PolyaSuffStats& left,
                        const PolyaSuffStats& right, const MleOptions& mle) {
    PolyaSuffStats pooled = left;
    pooled.merge(right);

    MleOptions opt = mle;
    MleResult fit_pooled = polya_mle(pooled, opt);

    // The half fits start at the pooled optimum, so the split model is at
    // least as good as the pooled one.
    opt.init = fit_pooled.alpha;
    MleResult fit_left = polya_mle(left, opt);
    MleResult fit_right = polya_mle(right, opt);

    // Each term is evaluated at all three fitted candidates and takes the
    // best; every maximum only tightens, the ratio stays non-negative by
    // construction, and under-converged boundary fits (constant data
    // pushes alpha to infinity) cancel exactly.
    const std::vector<double>* candidates[3] = {&fit_pooled.alpha, &fit_left.alpha,
                                                &fit_right.alpha};
    double ll_l[3], ll_r[3];
    for (int c = 0; c < 3; ++c) {
        ll_l[c] = left.log_likelihood(*candidates[c]);
        ll_r[c] = right.log_likelihood(*candidates[c]);
    }
    int best_l = 0, best_r = 0, best_p = 0;
    for (int c = 1; c < 3; ++c) {
        if (ll_l[c] > ll_l[best_l]) best_l = c;
        if (ll_r[c] > ll_r[best_r]) best_r = c;
        if (ll_l[c] + ll_r[c] > ll_l[best_p] + ll_r[best_p]) best_p = c;
    }

    Score score;
    score.interval = interval;
    score.value = (ll_l[best_l] + ll_r[best_r] - (ll_l[best_p] + ll_r[best_p])) /
                  static_cast<double>(interval.length());
    score.alpha_left = *candidates[best_l];
    score.alpha_right = *candidates[best_r];
    score.alpha_pooled = *candidates[best_p];
    return score;
}

}  // namespace

Score lr_statistic(const TopicCounts& z, Interval interval, const MleOptions& mle) {
    if (interval.s > interval.e || interval.s < 0 || interval.e >= z.rows)
        throw std::invalid_argument("interval out of range");
    if (interval.length() < 4)
        throw std::invalid_argument("lr_statistic requires e - s + 1 >= 4");

    const int t = interval.midpoint();
    auto left = PolyaSuffStats::from_range(z.z, z.cols, interval.s, t + 1);
    auto right = PolyaSuffStats::from_range(z.z, z.cols, t + 1, interval.e + 1);
    return lr_from_suffstats(interval, left, right, mle);
}

Score lr_statistic_rows(const TopicCounts& z, std::span<const int> rows, const MleOptions& mle) {
    const int n = static_cast<int>(rows.size());
    if (n < 4) throw std::invalid_argument("lr_statistic requires at least 4 rows");
    Interval virt{0, n - 1};
    const int t = virt.midpoint();
    auto left = PolyaSuffStats::from_rows(z.z, z.cols, rows.subspan(0, t + 1));
    auto right = PolyaSuffStats::from_rows(z.z, z.cols, rows.subspan(t + 1));
    return lr_from_suffstats(virt, left, right, mle);
}

CusumResult cusum_statistic(const MatrixD& xs, int s, int e) {
    if (s > e || s < 0 || e >= xs.rows) throw std::invalid_argument("interval out of range");
    if (e - s + 1 < 2) throw std::invalid_argument("cusum_statistic requires e - s + 1 >= 2");

    const int d = xs.cols;
    const int len = e - s + 1;
    std::vector<double> total(d, 0.0), prefix(d, 0.0);
    for (int r = s; r <= e; ++r)
        for (int j = 0; j < d; ++j) total[j] += xs(r, j);

    CusumResult best{-1.0, s};
    for (int t = s; t < e; ++t) {
        for (int j = 0; j < d; ++j) prefix[j] += xs(t, j);
        const int nl = t - s + 1;
        const int nr = len - nl;
        const double p = static_cast<double>(nl) / len;
        double diff2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double delta = prefix[j] / nl - (total[j] - prefix[j]) / nr;
            diff2 += delta * delta;
        }
        const double value = std::sqrt(p * (1.0 - p) * diff2);
        if (value > best.value) best = {value, t};
    }
    return best;
}

std::vector<Score> score_intervals_serial(const TopicCounts& z,
                                          std::span<const Interval> intervals,
                                          const MleOptions& mle) {
    std::vector<Score> out(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i)
        out[i] = lr_statistic(z, intervals[i], mle);
    return out;
}

std::vector<Score> score_intervals(const TopicCounts& z, std::span<const Interval> intervals,
                                   const MleOptions& mle, int threads) {
    std::vector<Score> out(intervals.size());
    const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(dynamic, 4) num_threads(nt)
    for (std::size_t i = 0; i < intervals.size(); ++i)
        out[i] = lr_statistic(z, intervals[i], mle);
    return out;
}

}  // namespace ttmc

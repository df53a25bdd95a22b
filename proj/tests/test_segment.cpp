#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "ttmc/rng.hpp"
#include "ttmc/segment.hpp"

using namespace ttmc;

namespace {

// Deliberately plain re-implementation of the segmentation recursion,
// used as the oracle: scan for the max, copy-partition, recurse.
void oracle_recurse(int s, int e, std::vector<Interval> intervals, std::vector<double> scores,
                    std::vector<int> emits, std::vector<int>& out) {
    if (s == e || intervals.empty()) return;
    std::size_t best = 0;
    for (std::size_t i = 1; i < intervals.size(); ++i) {
        if (scores[i] > scores[best])
            best = i;
        else if (scores[i] == scores[best]) {
            const int li = intervals[i].e - intervals[i].s;
            const int lb = intervals[best].e - intervals[best].s;
            if (li < lb || (li == lb && intervals[i].s < intervals[best].s)) best = i;
        }
    }
    const int t_c = emits[best];
    out.push_back(t_c);
    std::vector<Interval> li, ri;
    std::vector<double> ls, rs;
    std::vector<int> le, re;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (i == best) continue;
        if (intervals[i].e <= t_c) {
            li.push_back(intervals[i]);
            ls.push_back(scores[i]);
            le.push_back(emits[i]);
        } else if (intervals[i].s >= t_c) {
            ri.push_back(intervals[i]);
            rs.push_back(scores[i]);
            re.push_back(emits[i]);
        }
    }
    oracle_recurse(s, t_c, li, ls, le, out);
    oracle_recurse(t_c, e, ri, rs, re, out);
}

std::vector<int> oracle_mwbs(int s, int e, const ScoredIntervalSet& set) {
    std::vector<int> out;
    oracle_recurse(s, e, set.intervals, set.scores, set.emit_points, out);
    std::sort(out.begin(), out.end());
    return out;
}

ScoredIntervalSet random_set(Rng& rng, int t, int n, bool distinct_scores) {
    ScoredIntervalSet set;
    for (int i = 0; i < n; ++i) {
        int s = static_cast<int>(rng.uniform_int(t - 3));
        int e = static_cast<int>(rng.uniform_int(t));
        if (s > e) std::swap(s, e);
        if (e - s + 1 < 4) e = s + 3;
        Interval iv{s, e};
        set.intervals.push_back(iv);
        set.emit_points.push_back(iv.midpoint());
        double score = distinct_scores ? rng.uniform01() : (1.0 + rng.uniform_int(4)) / 4.0;
        set.scores.push_back(score);
    }
    return set;
}

}  // namespace

TEST_SUITE("segment") {

TEST_CASE("empty set yields no changepoints") {
    ScoredIntervalSet set;
    const auto result = mwbs(0, 100, set);
    CHECK(result.changepoints.empty());
}

TEST_CASE("single interval emits its midpoint") {
    ScoredIntervalSet set;
    set.intervals = {{10, 20}};
    set.scores = {1.0};
    set.emit_points = {Interval{10, 20}.midpoint()};
    const auto result = mwbs(0, 50, set);
    CHECK(result.changepoints == std::vector<int>{15});
    CHECK(result.provenance.size() == 1);
    CHECK(result.provenance[0].interval.s == 10);
}

TEST_CASE("matches the brute-force oracle on random sets") {
    Rng rng(404);
    for (int rep = 0; rep < 120; ++rep) {
        const int t = 10 + static_cast<int>(rng.uniform_int(41));  // T <= 50
        const int n = static_cast<int>(rng.uniform_int(12));
        const auto set = random_set(rng, t, n, rep % 2 == 0);
        const auto got = mwbs(0, t - 1, set);
        const auto expected = oracle_mwbs(0, t - 1, set);
        CHECK(got.changepoints == expected);
    }
}

TEST_CASE("straddling intervals are discarded, side intervals still recover changes") {
    // Max-scoring interval straddles the midpoint; flanking intervals
    // carry the two real changes.
    ScoredIntervalSet set;
    set.intervals = {{20, 30}, {0, 12}, {34, 46}};
    set.scores = {5.0, 3.0, 2.0};
    set.emit_points = {25, 6, 40};
    const auto result = mwbs(0, 49, set);
    CHECK(result.changepoints == std::vector<int>{6, 25, 40});
}

TEST_CASE("result ordering is input-order invariant when scores are distinct") {
    Rng rng(505);
    for (int rep = 0; rep < 30; ++rep) {
        const int t = 20 + static_cast<int>(rng.uniform_int(30));
        auto set = random_set(rng, t, 8, true);
        const auto base = mwbs(0, t - 1, set);

        // rotate the lists
        ScoredIntervalSet rotated;
        for (std::size_t i = 0; i < set.intervals.size(); ++i) {
            const std::size_t j = (i + 3) % set.intervals.size();
            rotated.intervals.push_back(set.intervals[j]);
            rotated.scores.push_back(set.scores[j]);
            rotated.emit_points.push_back(set.emit_points[j]);
        }
        const auto rot = mwbs(0, t - 1, rotated);
        CHECK(base.changepoints == rot.changepoints);
    }
}

TEST_CASE("segmentation consistency: no interval produces two changepoints") {
    // Once an interval emits, it is consumed, and a duplicate copy of it
    // straddles the emitted point and is dropped; so each changepoint has
    // a distinct producing interval even when the input repeats intervals.
    Rng rng(606);
    for (int rep = 0; rep < 30; ++rep) {
        const int t = 30 + static_cast<int>(rng.uniform_int(20));
        auto set = random_set(rng, t, 10, true);
        // duplicate every interval to exercise the straddle rule
        const std::size_t n = set.intervals.size();
        for (std::size_t i = 0; i < n; ++i) {
            set.intervals.push_back(set.intervals[i]);
            set.scores.push_back(set.scores[i]);
            set.emit_points.push_back(set.emit_points[i]);
        }
        const auto result = mwbs(0, t - 1, set);
        for (std::size_t i = 0; i < result.provenance.size(); ++i)
            for (std::size_t j = i + 1; j < result.provenance.size(); ++j) {
                const auto& a = result.provenance[i].interval;
                const auto& b = result.provenance[j].interval;
                CHECK((a.s != b.s || a.e != b.e));
            }
        // strictly increasing changepoints
        for (std::size_t i = 1; i < result.changepoints.size(); ++i)
            CHECK(result.changepoints[i] > result.changepoints[i - 1]);
    }
}

TEST_CASE("every changepoint is the emit point of a retained interval") {
    Rng rng(707);
    const auto set = random_set(rng, 60, 15, true);
    const auto result = mwbs(0, 59, set);
    for (int cp : result.changepoints)
        CHECK(std::count(set.emit_points.begin(), set.emit_points.end(), cp) > 0);
}

TEST_CASE("sample_and_filter: zero intervals yields an empty set") {
    TopicCounts tc;
    tc.rows = 50;
    tc.cols = 2;
    tc.z.assign(100, 1);
    tc.doc_lengths.assign(50, 2);
    ThresholdTable table;
    table.lengths = {4, 50};
    table.values = {0.0, 0.0};
    const auto set = sample_and_filter(tc, table, 0, 4, 1);
    CHECK(set.intervals.empty());
    CHECK(set.num_sampled == 0);
}

TEST_CASE("sample_and_filter respects delta and threshold filtering") {
    Rng rng(808);
    TopicCounts tc;
    tc.rows = 80;
    tc.cols = 3;
    std::vector<double> theta(3);
    for (int d = 0; d < 80; ++d) {
        std::vector<int> row(3, 0);
        rng.dirichlet(std::vector<double>{0.5, 0.5, 0.5}, theta);
        for (int n = 0; n < 30; ++n) ++row[rng.categorical(theta)];
        for (int x : row) tc.z.push_back(x);
        tc.doc_lengths.push_back(30);
    }
    ThresholdTable table;
    table.lengths = {8, 80};
    table.values = {0.0, 0.0};  // everything passes
    const auto traced = sample_and_filter_traced(tc, table, 200, 8, 7);
    CHECK(traced.retained.intervals.size() == 200);
    CHECK(traced.trace.size() == 200);
    for (const auto& iv : traced.retained.intervals) CHECK(iv.length() >= 8);

    ThresholdTable blocking;
    blocking.lengths = {8, 80};
    blocking.values = {1e9, 1e9};  // nothing passes
    const auto none = sample_and_filter(tc, blocking, 200, 8, 7);
    CHECK(none.intervals.empty());
}

TEST_CASE("sample_and_filter is deterministic across thread counts") {
    Rng rng(909);
    TopicCounts tc;
    tc.rows = 60;
    tc.cols = 2;
    std::vector<double> theta(2);
    for (int d = 0; d < 60; ++d) {
        std::vector<int> row(2, 0);
        rng.dirichlet(std::vector<double>{0.5, 1.5}, theta);
        for (int n = 0; n < 25; ++n) ++row[rng.categorical(theta)];
        for (int x : row) tc.z.push_back(x);
        tc.doc_lengths.push_back(25);
    }
    ThresholdTable table;
    table.lengths = {8, 60};
    table.values = {0.01, 0.001};
    const auto a = sample_and_filter(tc, table, 100, 8, 3, MleOptions{}, 1);
    const auto b = sample_and_filter(tc, table, 100, 8, 3, MleOptions{}, 2);
    CHECK(a.intervals.size() == b.intervals.size());
    CHECK(a.scores == b.scores);
}

}  // TEST_SUITE

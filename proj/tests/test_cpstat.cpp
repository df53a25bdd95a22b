#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ttmc/cpstat.hpp"
#include "ttmc/rng.hpp"

using namespace ttmc;

namespace {

TopicCounts counts_from(const std::vector<std::vector<int>>& rows) {
    TopicCounts tc;
    tc.rows = static_cast<int>(rows.size());
    tc.cols = static_cast<int>(rows[0].size());
    for (const auto& r : rows) {
        int len = 0;
        for (int x : r) {
            tc.z.push_back(x);
            len += x;
        }
        tc.doc_lengths.push_back(len);
    }
    return tc;
}

TopicCounts random_null_counts(Rng& rng, int t, int k, const std::vector<double>& alpha,
                               int doc_len) {
    std::vector<std::vector<int>> rows(t, std::vector<int>(k, 0));
    std::vector<double> theta(k);
    for (int d = 0; d < t; ++d) {
        rng.dirichlet(alpha, theta);
        for (int n = 0; n < doc_len; ++n) ++rows[d][rng.categorical(theta)];
    }
    return counts_from(rows);
}

MatrixD matrix_from(const std::vector<std::vector<double>>& rows) {
    MatrixD m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
    return m;
}

}  // namespace

TEST_SUITE("cpstat") {

TEST_CASE("interval midpoint uses the floor rule") {
    CHECK(Interval{0, 3}.midpoint() == 1);
    CHECK(Interval{0, 4}.midpoint() == 2);
    CHECK(Interval{10, 20}.midpoint() == 15);
    CHECK(Interval{5, 6}.midpoint() == 5);
}

TEST_CASE("cusum: constant sequence scores zero") {
    const auto xs = matrix_from({{3.0}, {3.0}, {3.0}, {3.0}});
    const auto r = cusum_statistic(xs, 0, 3);
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("cusum: hand-computed step sequence") {
    const auto xs = matrix_from({{0.0}, {0.0}, {2.0}, {2.0}});
    const auto r = cusum_statistic(xs, 0, 3);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.argmax_t == 1);
}

TEST_CASE("cusum: negation symmetry") {
    Rng rng(3);
    std::vector<std::vector<double>> rows(12, std::vector<double>(3));
    for (auto& r : rows)
        for (auto& x : r) x = rng.normal();
    auto neg = rows;
    for (auto& r : neg)
        for (auto& x : r) x = -x;
    const auto a = cusum_statistic(matrix_from(rows), 0, 11);
    const auto b = cusum_statistic(matrix_from(neg), 0, 11);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-13));
    CHECK(a.argmax_t == b.argmax_t);
}

TEST_CASE("cusum argmax finds a noiseless step exactly, any position, any T <= 20") {
    for (int t = 4; t <= 20; ++t) {
        for (int step = 0; step + 1 < t; ++step) {
            std::vector<std::vector<double>> rows(t, std::vector<double>(1, 0.0));
            for (int i = step + 1; i < t; ++i) rows[i][0] = 1.0;
            const auto r = cusum_statistic(matrix_from(rows), 0, t - 1);
            CHECK(r.argmax_t == step);
        }
    }
}

TEST_CASE("cusum rejects degenerate intervals") {
    const auto xs = matrix_from({{0.0}, {1.0}});
    CHECK_THROWS_AS(cusum_statistic(xs, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(cusum_statistic(xs, 0, 5), std::invalid_argument);
}

TEST_CASE("lr statistic requires at least 4 rows") {
    const auto tc = counts_from({{1, 2}, {2, 1}, {1, 1}});
    CHECK_THROWS_AS(lr_statistic(tc, {0, 2}), std::invalid_argument);
}

TEST_CASE("lr statistic is non-negative on arbitrary data") {
    Rng rng(41);
    for (int rep = 0; rep < 25; ++rep) {
        const int t = 4 + static_cast<int>(rng.uniform_int(30));
        const int k = 2 + static_cast<int>(rng.uniform_int(4));
        std::vector<std::vector<int>> rows(t, std::vector<int>(k));
        for (auto& r : rows)
            for (auto& x : r) x = static_cast<int>(rng.uniform_int(20));
        const auto score = lr_statistic(counts_from(rows), {0, t - 1});
        CHECK(score.value >= -1e-9);
    }
}

TEST_CASE("lr statistic is invariant to permutations within each half") {
    Rng rng(55);
    const auto alpha = std::vector<double>{0.5, 1.0, 0.8};
    const auto tc = random_null_counts(rng, 12, 3, alpha, 40);

    const auto base = lr_statistic(tc, {0, 11});
    // midpoint of [0,11] is 5: left rows {0..5}, right rows {6..11}
    const std::vector<int> shuffled = {3, 0, 5, 2, 1, 4, 9, 11, 6, 8, 10, 7};
    const auto perm = lr_statistic_rows(tc, shuffled);
    CHECK(base.value == doctest::Approx(perm.value).epsilon(1e-12));
}

TEST_CASE("separated alphas score far above matched alphas") {
    Rng rng(77);
    const std::vector<double> a1 = {2.0, 0.2, 0.2};
    const std::vector<double> a2 = {0.2, 2.0, 0.2};
    auto null_counts = random_null_counts(rng, 40, 3, a1, 80);
    auto change = random_null_counts(rng, 20, 3, a1, 80);
    const auto tail = random_null_counts(rng, 20, 3, a2, 80);
    change.rows += tail.rows;
    change.z.insert(change.z.end(), tail.z.begin(), tail.z.end());
    change.doc_lengths.insert(change.doc_lengths.end(), tail.doc_lengths.begin(),
                              tail.doc_lengths.end());

    const double s_null = lr_statistic(null_counts, {0, 39}).value;
    const double s_change = lr_statistic(change, {0, 39}).value;
    CHECK(s_change > 10.0 * std::max(s_null, 1e-6));
}

TEST_CASE("batch scoring: parallel equals serial") {
    Rng rng(88);
    const auto tc = random_null_counts(rng, 60, 3, {0.5, 0.7, 0.9}, 30);
    std::vector<Interval> intervals;
    for (int rep = 0; rep < 40; ++rep) {
        const int s = static_cast<int>(rng.uniform_int(40));
        const int len = 4 + static_cast<int>(rng.uniform_int(20));
        intervals.push_back({s, std::min(s + len, 59)});
    }
    const auto serial = score_intervals_serial(tc, intervals);
    const auto parallel = score_intervals(tc, intervals, MleOptions{}, 2);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].value == parallel[i].value);
        CHECK(serial[i].alpha_pooled == parallel[i].alpha_pooled);
    }
}

}  // TEST_SUITE

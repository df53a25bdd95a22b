#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ttmc/synthgen.hpp"

using namespace ttmc;

TEST_SUITE("synthgen") {

TEST_CASE("random_spec satisfies its own constraints") {
    const auto spec = random_spec(3000, 200, 5, 5, 1.0, 0.5, 200, 600, 42);
    CHECK(spec.changepoints.size() == 5);
    for (std::size_t i = 0; i < spec.changepoints.size(); ++i) {
        const int prev = i == 0 ? 0 : spec.changepoints[i - 1];
        const int gap = spec.changepoints[i] - prev;
        CHECK(gap >= 200);
        CHECK(gap <= 600);
    }
    CHECK(spec.changepoints.back() <= 3000 - 200);
    for (const auto& a : spec.alphas) {
        double n2 = 0.0;
        for (double x : a) n2 += x * x;
        CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (std::size_t i = 1; i < spec.alphas.size(); ++i) {
        double d2 = 0.0;
        for (int j = 0; j < 5; ++j) {
            const double d = spec.alphas[i][j] - spec.alphas[i - 1][j];
            d2 += d * d;
        }
        CHECK(std::sqrt(d2) >= 0.5);
    }
    spec.validate();  // must not throw
}

TEST_CASE("random_spec with M = 0 yields a single alpha") {
    const auto spec = random_spec(100, 50, 3, 0, 1.0, 0.5, 1, 1, 7);
    CHECK(spec.changepoints.empty());
    CHECK(spec.alphas.size() == 1);
}

TEST_CASE("infeasible constraints are reported") {
    // gaps cannot fit
    CHECK_THROWS_WITH_AS(random_spec(100, 50, 3, 5, 1.0, 0.5, 40, 50, 1),
                         doctest::Contains("infeasible"), std::exception);
    // epsilon too large: || a - b || <= 2L always, demand 3L
    CHECK_THROWS_WITH_AS(random_spec(1000, 50, 3, 2, 1.0, 3.0, 100, 200, 1),
                         doctest::Contains("separation"), std::runtime_error);
}

TEST_CASE("generation is deterministic given the seed") {
    const auto spec = random_spec(60, 30, 3, 1, 1.0, 0.5, 20, 30, 9);
    const auto [c1, t1] = generate(spec, 2);
    const auto [c2, t2] = generate(spec, 1);
    REQUIRE(c1.num_docs() == c2.num_docs());
    for (int d = 0; d < c1.num_docs(); ++d) CHECK(c1.docs[d].token_ids == c2.docs[d].token_ids);
    CHECK(t1.changepoints == t2.changepoints);
}

TEST_CASE("parallel generation equals the serial reference") {
    const auto spec = random_spec(80, 40, 4, 2, 1.0, 0.5, 20, 30, 31);
    const auto [par, tp] = generate(spec, 0);
    const auto [ser, ts] = generate_serial(spec);
    REQUIRE(par.num_docs() == ser.num_docs());
    for (int d = 0; d < par.num_docs(); ++d) CHECK(par.docs[d].token_ids == ser.docs[d].token_ids);
}

TEST_CASE("K = 1 draws every word from the single topic") {
    TtmcSpec spec;
    spec.T = 50;
    spec.V = 4;
    spec.K = 1;
    spec.doc_len_min = spec.doc_len_max = 20;
    spec.alphas = {{2.0}};
    spec.phi = MatrixD(4, 1);
    spec.phi(0, 0) = 0.0;
    spec.phi(1, 0) = 1.0;  // degenerate topic: always word 1
    spec.phi(2, 0) = 0.0;
    spec.phi(3, 0) = 0.0;
    spec.seed = 5;
    const auto [corpus, truth] = generate(spec);
    for (const auto& doc : corpus.docs)
        for (auto id : doc.token_ids) CHECK(id == 1);
}

TEST_CASE("identity topics: segment word frequencies match the Dirichlet mean") {
    // With K = V and one-hot topics, the token is the topic draw, so
    // per-segment empirical frequencies estimate alpha / sum(alpha).
    const int k = 4;
    TtmcSpec spec;
    spec.T = 12000;
    spec.V = k;
    spec.K = k;
    spec.doc_len_min = 5;
    spec.doc_len_max = 10;
    spec.changepoints = {6000};
    spec.alphas = {{0.4, 0.1, 0.3, 0.2}, {0.04, 0.24, 0.08, 0.04}};
    spec.phi = MatrixD(k, k);
    for (int j = 0; j < k; ++j) spec.phi(j, j) = 1.0;
    spec.seed = 17;
    const auto [corpus, truth] = generate(spec);

    for (int seg = 0; seg < 2; ++seg) {
        const int lo = seg == 0 ? 0 : 6000;
        const int hi = seg == 0 ? 6000 : 12000;
        double alpha_sum = 0.0;
        for (double a : spec.alphas[seg]) alpha_sum += a;
        std::vector<double> freq(k, 0.0);
        long total = 0;
        for (int d = lo; d < hi; ++d) {
            for (auto id : corpus.docs[d].token_ids) ++freq[id];
            total += corpus.docs[d].length();
        }
        for (int j = 0; j < k; ++j) {
            const double expected = spec.alphas[seg][j] / alpha_sum;
            // Dirichlet-multinomial clustering inflates the variance of the
            // pooled frequency; bound it by the per-document theta variance.
            const double var_theta = expected * (1 - expected) / (alpha_sum + 1);
            const double se = std::sqrt(var_theta / (hi - lo));
            CHECK(std::fabs(freq[j] / total - expected) < 3.5 * se);
        }
    }
}

TEST_CASE("segment_of maps positions to segments") {
    TtmcSpec spec;
    spec.changepoints = {10, 20};
    CHECK(spec.segment_of(0) == 0);
    CHECK(spec.segment_of(9) == 0);
    CHECK(spec.segment_of(10) == 1);
    CHECK(spec.segment_of(19) == 1);
    CHECK(spec.segment_of(20) == 2);
}

TEST_CASE("ground truth round-trips through JSON") {
    const auto spec = random_spec(40, 10, 2, 1, 1.0, 0.5, 10, 20, 3);
    const auto [corpus, truth] = generate(spec);
    const auto path = "/tmp/ttmc_truth.json";
    save_ground_truth(truth, path);
    const auto loaded = load_ground_truth(path);
    CHECK(loaded.changepoints == truth.changepoints);
    REQUIRE(loaded.segment_alphas.size() == truth.segment_alphas.size());
    for (std::size_t i = 0; i < truth.segment_alphas.size(); ++i)
        for (std::size_t j = 0; j < truth.segment_alphas[i].size(); ++j)
            CHECK(loaded.segment_alphas[i][j] == truth.segment_alphas[i][j]);
    CHECK(loaded.topics.data == truth.topics.data);
}

}  // TEST_SUITE

// Timing comparison of the OpenMP kernels against their serial
// references, on pipeline-sized synthetic data. Also checks that both
// paths produce identical results, since every parallel kernel is
// designed to be bit-equal to its serial counterpart.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "ttmc/calibrate.hpp"
#include "ttmc/cpstat.hpp"
#include "ttmc/lda.hpp"
#include "ttmc/rng.hpp"
#include "ttmc/segment.hpp"
#include "ttmc/synthgen.hpp"

using namespace ttmc;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(const char* kernel, double serial_s, double parallel_s, bool equal) {
    std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", kernel, serial_s, parallel_s,
                serial_s / parallel_s, equal ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int t = argc > 1 ? std::atoi(argv[1]) : 1000;
    const int threads = omp_get_max_threads();
    std::printf("T = %d documents, %d threads\n", t, threads);
    std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "openmp", "speedup");

    const auto spec = random_spec(t, 400, 5, 4, 1.0, 0.5, std::max(t / 12, 2),
                                  std::max(t / 5, 4), 7);

    // corpus generation
    auto t0 = Clock::now();
    const auto [corpus_s, truth_s] = generate_serial(spec);
    const double gen_serial = seconds_since(t0);
    t0 = Clock::now();
    const auto [corpus_p, truth_p] = generate(spec, threads);
    const double gen_parallel = seconds_since(t0);
    bool gen_equal = corpus_s.num_docs() == corpus_p.num_docs();
    for (int d = 0; gen_equal && d < corpus_s.num_docs(); ++d)
        gen_equal = corpus_s.docs[d].token_ids == corpus_p.docs[d].token_ids;
    report("generate", gen_serial, gen_parallel, gen_equal);

    // topic counts
    LdaOptions lda;
    lda.iters = 80;
    lda.burn_in = 40;
    lda.seed = 3;
    const auto model = fit_lda(corpus_p, 5, lda);
    t0 = Clock::now();
    const auto counts_s = estimate_topic_counts_serial(model, corpus_p);
    const double counts_serial = seconds_since(t0);
    t0 = Clock::now();
    const auto counts_p = estimate_topic_counts(model, corpus_p, threads);
    const double counts_parallel = seconds_since(t0);
    report("estimate_topic_counts", counts_serial, counts_parallel, counts_s.z == counts_p.z);

    // interval scoring
    Rng rng(11);
    std::vector<Interval> intervals;
    for (int i = 0; i < 2000; ++i) {
        int s = static_cast<int>(rng.uniform_int(t));
        int e = static_cast<int>(rng.uniform_int(t));
        if (s > e) std::swap(s, e);
        if (e - s + 1 < 20) e = std::min(t - 1, s + 19);
        intervals.push_back({s, e});
    }
    MleOptions mle;
    mle.tol = 1e-5;
    mle.max_iters = 200;
    t0 = Clock::now();
    const auto scores_s = score_intervals_serial(counts_p, intervals, mle);
    const double score_serial = seconds_since(t0);
    t0 = Clock::now();
    const auto scores_p = score_intervals(counts_p, intervals, mle, threads);
    const double score_parallel = seconds_since(t0);
    bool scores_equal = scores_s.size() == scores_p.size();
    for (std::size_t i = 0; scores_equal && i < scores_s.size(); ++i)
        scores_equal = scores_s[i].value == scores_p[i].value;
    report("score_intervals", score_serial, score_parallel, scores_equal);

    // threshold calibration
    CalibrateOptions calib;
    calib.num_intervals = 400;
    calib.eta = 1.0;
    calib.seed = 13;
    calib.len_max = std::min(t, 120);
    calib.mle = mle;
    t0 = Clock::now();
    const auto table_s = calibrate_permutation_serial(counts_p, 20, calib);
    const double calib_serial = seconds_since(t0);
    calib.threads = threads;
    t0 = Clock::now();
    const auto table_p = calibrate_permutation(counts_p, 20, calib);
    const double calib_parallel = seconds_since(t0);
    report("calibrate_permutation", calib_serial, calib_parallel,
           table_s.values == table_p.values);

    return 0;
}

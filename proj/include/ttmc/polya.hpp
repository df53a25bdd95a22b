#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ttmc {

// Per-observation topic counts with cached total.
struct CountVector {
    std::vector<int> n;
    int total = 0;

    CountVector() = default;
    explicit CountVector(std::vector<int> counts);
};

// Sufficient statistics for a set of count vectors under the
// Dirichlet-multinomial. Likelihood and gradient depend on the data only
// through, per component, the multiset of nonzero counts and the multiset
// of nonzero totals; grouping identical values collapses the per-document
// loop into a short histogram loop.
class PolyaSuffStats {
public:
    PolyaSuffStats() = default;
    explicit PolyaSuffStats(int k) : k_(k) {}

    static PolyaSuffStats from(std::span<const CountVector> zs, int k);
    // Rows of a flat row-major T x K count matrix.
    static PolyaSuffStats from_rows(std::span<const std::int32_t> flat, int k,
                                    std::span<const int> row_indices);
    static PolyaSuffStats from_range(std::span<const std::int32_t> flat, int k,
                                     int row_begin, int row_end);  // [begin, end)

    void merge(const PolyaSuffStats& other);

    double log_likelihood(std::span<const double> alpha) const;
    void gradient(std::span<const double> alpha, std::span<double> out) const;

    // Digamma sums used by fixed-point prior updates:
    //   numerators[k] = sum_i [psi(n_ik + alpha_k) - psi(alpha_k)]
    //   denominator   = sum_i [psi(n_i + alpha_sum) - psi(alpha_sum)]
    // (observations with zero total contribute nothing).
    void fixed_point_sums(std::span<const double> alpha, std::span<double> numerators,
                          double& denominator) const;

    int k() const { return k_; }
    std::size_t num_obs() const { return num_obs_; }
    bool all_zero() const;

    // Mean of per-observation proportions, floored at `floor`; the
    // optimizer's default starting point.
    std::vector<double> moment_init(double floor = 1e-3) const;

private:
    void add_counts(std::span<const std::int32_t> row);
    void compress();

    int k_ = 0;
    std::size_t num_obs_ = 0;
    std::vector<std::vector<std::pair<int, std::int64_t>>> count_hist_;  // per k: (value>0, multiplicity)
    std::vector<std::pair<int, std::int64_t>> total_hist_;               // (total>0, multiplicity)
    std::vector<double> prop_sum_;  // sum of n_ik / n_i over observations with n_i > 0
    // dense scratch used during construction, compressed afterwards
    std::vector<std::vector<std::int64_t>> dense_;
    std::vector<std::int64_t> dense_totals_;
};

struct MleOptions {
    double tol = 1e-6;        // infinity norm of the alpha-gradient
    int max_iters = 500;
    double backtrack = 0.5;
    std::vector<double> init;  // empty: moment-matched start
    bool record_trace = false;
    // Secondary stop for boundary cases (e.g. identical observations,
    // where the optimum is at alpha -> inf): quit after `ftol_patience`
    // consecutive accepted steps improving by less than
    // ftol_abs + ftol_rel * |ll|.
    double ftol_abs = 1e-10;
    double ftol_rel = 1e-12;
    int ftol_patience = 2;
};

struct MleResult {
    std::vector<double> alpha;
    int iterations = 0;
    bool converged = false;
    double log_likelihood = 0.0;
    double grad_inf_norm = 0.0;
    std::vector<double> trace;  // accepted log-likelihood per iteration
};

// log p(z | alpha) of the Dirichlet-multinomial, without the multinomial
// coefficient (which is alpha-free and cancels in every ratio used here).
double polya_log_density(const CountVector& z, std::span<const double> alpha);

double polya_log_likelihood(std::span<const CountVector> zs, std::span<const double> alpha);

std::vector<double> polya_gradient(std::span<const CountVector> zs, std::span<const double> alpha);

// Maximum likelihood via gradient ascent on log(alpha) with backtracking
// line search; the accepted-likelihood sequence is non-decreasing.
MleResult polya_mle(std::span<const CountVector> zs, const MleOptions& options = {});
MleResult polya_mle(const PolyaSuffStats& stats, const MleOptions& options = {});

}  // namespace ttmc

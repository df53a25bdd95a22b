#include "ttmc/polya.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "ttmc/specialfn.hpp"

namespace ttmc {

namespace {

void check_alpha(std::span<const double> alpha, int k) {
    if (static_cast<int>(alpha.size()) != k)
        throw std::invalid_argument("alpha dimension mismatch: expected " + std::to_string(k) +
                                    ", got " + std::to_string(alpha.size()));
    for (double a : alpha)
        if (!(a > 0.0) || !std::isfinite(a))
            throw std::invalid_argument("alpha components must be strictly positive and finite");
}

}  // namespace

CountVector::CountVector(std::vector<int> counts) : n(std::move(counts)) {
    for (int v : n) {
        if (v < 0) throw std::invalid_argument("counts must be non-negative");
        total += v;
    }
}

PolyaSuffStats PolyaSuffStats::from(std::span<const CountVector> zs, int k) {
    PolyaSuffStats s(k);
    std::vector<std::int32_t> scratch(k);
    for (const auto& z : zs) {
        if (static_cast<int>(z.n.size()) != k)
            throw std::invalid_argument("count vector dimension mismatch");
        for (int j = 0; j < k; ++j) scratch[j] = static_cast<std::int32_t>(z.n[j]);
        s.add_counts(scratch);
    }
    s.compress();
    return s;
}

PolyaSuffStats PolyaSuffStats::from_rows(std::span<const std::int32_t> flat, int k,
                                         std::span<const int> row_indices) {
    PolyaSuffStats s(k);
    for (int r : row_indices)
        s.add_counts(flat.subspan(static_cast<std::size_t>(r) * k, k));
    s.compress();
    return s;
}

PolyaSuffStats PolyaSuffStats::from_range(std::span<const std::int32_t> flat, int k,
                                          int row_begin, int row_end) {
    PolyaSuffStats s(k);
    for (int r = row_begin; r < row_end; ++r)
        s.add_counts(flat.subspan(static_cast<std::size_t>(r) * k, k));
    s.compress();
    return s;
}

void PolyaSuffStats::add_counts(std::span<const std::int32_t> row) {
    if (dense_.empty()) {
        dense_.resize(k_);
        prop_sum_.assign(k_, 0.0);
    }
    long total = 0;
    for (int j = 0; j < k_; ++j) {
        if (row[j] < 0) throw std::invalid_argument("counts must be non-negative");
        total += row[j];
    }
    ++num_obs_;
    if (total <= 0) return;
    for (int j = 0; j < k_; ++j) {
        const int v = row[j];
        if (v > 0) {
            if (static_cast<std::size_t>(v) >= dense_[j].size()) dense_[j].resize(v + 1, 0);
            ++dense_[j][v];
            prop_sum_[j] += static_cast<double>(v) / static_cast<double>(total);
        }
    }
    if (static_cast<std::size_t>(total) >= dense_totals_.size()) dense_totals_.resize(total + 1, 0);
    ++dense_totals_[total];
}

void PolyaSuffStats::compress() {
    count_hist_.assign(k_, {});
    for (int j = 0; j < k_ && j < static_cast<int>(dense_.size()); ++j)
        for (int v = 1; v < static_cast<int>(dense_[j].size()); ++v)
            if (dense_[j][v] > 0) count_hist_[j].emplace_back(v, dense_[j][v]);
    total_hist_.clear();
    for (int v = 1; v < static_cast<int>(dense_totals_.size()); ++v)
        if (dense_totals_[v] > 0) total_hist_.emplace_back(v, dense_totals_[v]);
    dense_.clear();
    dense_totals_.clear();
    if (prop_sum_.empty()) prop_sum_.assign(k_, 0.0);
}

void PolyaSuffStats::merge(const PolyaSuffStats& other) {
    if (other.k_ != k_) throw std::invalid_argument("cannot merge suffstats of different dimension");
    num_obs_ += other.num_obs_;
    if (count_hist_.empty()) count_hist_.assign(k_, {});
    if (prop_sum_.empty()) prop_sum_.assign(k_, 0.0);
    for (int j = 0; j < k_; ++j) {
        auto& mine = count_hist_[j];
        std::vector<std::pair<int, std::int64_t>> merged;
        merged.reserve(mine.size() + other.count_hist_[j].size());
        std::size_t a = 0, b = 0;
        const auto& theirs = other.count_hist_[j];
        while (a < mine.size() || b < theirs.size()) {
            if (b == theirs.size() || (a < mine.size() && mine[a].first < theirs[b].first))
                merged.push_back(mine[a++]);
            else if (a == mine.size() || theirs[b].first < mine[a].first)
                merged.push_back(theirs[b++]);
            else {
                merged.emplace_back(mine[a].first, mine[a].second + theirs[b].second);
                ++a;
                ++b;
            }
        }
        mine = std::move(merged);
        prop_sum_[j] += other.prop_sum_[j];
    }
    std::vector<std::pair<int, std::int64_t>> merged;
    std::size_t a = 0, b = 0;
    while (a < total_hist_.size() || b < other.total_hist_.size()) {
        if (b == other.total_hist_.size() ||
            (a < total_hist_.size() && total_hist_[a].first < other.total_hist_[b].first))
            merged.push_back(total_hist_[a++]);
        else if (a == total_hist_.size() || other.total_hist_[b].first < total_hist_[a].first)
            merged.push_back(other.total_hist_[b++]);
        else {
            merged.emplace_back(total_hist_[a].first,
                                total_hist_[a].second + other.total_hist_[b].second);
            ++a;
            ++b;
        }
    }
    total_hist_ = std::move(merged);
}

bool PolyaSuffStats::all_zero() const { return total_hist_.empty(); }

double PolyaSuffStats::log_likelihood(std::span<const double> alpha) const {
    check_alpha(alpha, k_);
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    const double lg_alpha_sum = log_gamma(alpha_sum);

    double ll = 0.0;
    std::int64_t pos_obs = 0;
    for (const auto& [total, mult] : total_hist_) {
        ll -= static_cast<double>(mult) * log_gamma(total + alpha_sum);
        pos_obs += mult;
    }
    ll += static_cast<double>(pos_obs) * lg_alpha_sum;
    for (int j = 0; j < k_; ++j) {
        const double lg_aj = log_gamma(alpha[j]);
        for (const auto& [v, mult] : count_hist_[j])
            ll += static_cast<double>(mult) * (log_gamma(v + alpha[j]) - lg_aj);
    }
    return ll;
}

void PolyaSuffStats::gradient(std::span<const double> alpha, std::span<double> out) const {
    check_alpha(alpha, k_);
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    const double psi_alpha_sum = digamma(alpha_sum);

    double common = 0.0;  // sum_i [psi(alpha_sum) - psi(n_i + alpha_sum)]
    std::int64_t pos_obs = 0;
    for (const auto& [total, mult] : total_hist_) {
        common -= static_cast<double>(mult) * digamma(total + alpha_sum);
        pos_obs += mult;
    }
    common += static_cast<double>(pos_obs) * psi_alpha_sum;

    for (int j = 0; j < k_; ++j) {
        const double psi_aj = digamma(alpha[j]);
        double g = common;
        for (const auto& [v, mult] : count_hist_[j])
            g += static_cast<double>(mult) * (digamma(v + alpha[j]) - psi_aj);
        out[j] = g;
    }
}

void PolyaSuffStats::fixed_point_sums(std::span<const double> alpha,
                                      std::span<double> numerators,
                                      double& denominator) const {
    check_alpha(alpha, k_);
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    const double psi_alpha_sum = digamma(alpha_sum);

    denominator = 0.0;
    std::int64_t pos_obs = 0;
    for (const auto& [total, mult] : total_hist_) {
        denominator += static_cast<double>(mult) * digamma(total + alpha_sum);
        pos_obs += mult;
    }
    denominator -= static_cast<double>(pos_obs) * psi_alpha_sum;

    for (int j = 0; j < k_; ++j) {
        const double psi_aj = digamma(alpha[j]);
        double num = 0.0;
        for (const auto& [v, mult] : count_hist_[j])
            num += static_cast<double>(mult) * (digamma(v + alpha[j]) - psi_aj);
        numerators[j] = num;
    }
}

std::vector<double> PolyaSuffStats::moment_init(double floor) const {
    std::vector<double> init(k_, floor);
    std::int64_t pos_obs = 0;
    for (const auto& [total, mult] : total_hist_) pos_obs += mult;
    if (pos_obs == 0) return init;
    for (int j = 0; j < k_; ++j)
        init[j] = std::max(prop_sum_[j] / static_cast<double>(pos_obs), floor);
    return init;
}

double polya_log_density(const CountVector& z, std::span<const double> alpha) {
    check_alpha(alpha, static_cast<int>(z.n.size()));
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    double ll = log_gamma(alpha_sum) - log_gamma(z.total + alpha_sum);
    for (std::size_t j = 0; j < z.n.size(); ++j)
        if (z.n[j] > 0) ll += log_gamma(z.n[j] + alpha[j]) - log_gamma(alpha[j]);
    return ll;
}

double polya_log_likelihood(std::span<const CountVector> zs, std::span<const double> alpha) {
    if (zs.empty()) {
        std::fprintf(stderr, "[ttmc] warning: polya_log_likelihood over an empty list is 0 by convention\n");
        return 0.0;
    }
    return PolyaSuffStats::from(zs, static_cast<int>(alpha.size())).log_likelihood(alpha);
}

std::vector<double> polya_gradient(std::span<const CountVector> zs, std::span<const double> alpha) {
    std::vector<double> out(alpha.size(), 0.0);
    if (zs.empty()) return out;
    PolyaSuffStats::from(zs, static_cast<int>(alpha.size())).gradient(alpha, out);
    return out;
}

MleResult polya_mle(std::span<const CountVector> zs, const MleOptions& options) {
    if (zs.empty()) throw std::invalid_argument("polya_mle requires at least one observation");
    return polya_mle(PolyaSuffStats::from(zs, static_cast<int>(zs[0].n.size())), options);
}

MleResult polya_mle(const PolyaSuffStats& stats, const MleOptions& options) {
    if (stats.all_zero()) throw std::invalid_argument("degenerate data: all observations are zero");
    const int k = stats.k();

    std::vector<double> alpha = options.init.empty() ? stats.moment_init() : options.init;
    check_alpha(alpha, k);

    constexpr double kLambdaMin = -23.02585092994046;  // log 1e-10
    constexpr double kLambdaMax = 23.02585092994046;   // log 1e10

    std::vector<double> lambda(k), grad(k), grad_lambda(k), lambda_next(k), alpha_next(k);
    for (int j = 0; j < k; ++j) lambda[j] = std::log(alpha[j]);

    MleResult result;
    result.alpha = alpha;
    result.log_likelihood = stats.log_likelihood(alpha);
    if (options.record_trace) result.trace.push_back(result.log_likelihood);

    double ll = result.log_likelihood;
    std::vector<double> lambda_prev(k), grad_lambda_prev(k);
    bool have_prev = false;
    double step = 0.0;
    int stalled = 0;
    for (int iter = 0; iter < options.max_iters; ++iter) {
        stats.gradient(alpha, grad);
        double gnorm = 0.0;
        for (int j = 0; j < k; ++j) gnorm = std::max(gnorm, std::fabs(grad[j]));
        result.grad_inf_norm = gnorm;
        if (gnorm <= options.tol) {
            result.converged = true;
            break;
        }

        for (int j = 0; j < k; ++j) grad_lambda[j] = alpha[j] * grad[j];
        double gl_norm = 0.0;
        for (int j = 0; j < k; ++j) gl_norm = std::max(gl_norm, std::fabs(grad_lambda[j]));

        // Barzilai-Borwein trial step, safeguarded by the backtracking
        // line search below (which keeps the trace monotone).
        if (have_prev) {
            double ss = 0.0, sy = 0.0;
            for (int j = 0; j < k; ++j) {
                const double s = lambda[j] - lambda_prev[j];
                const double y = grad_lambda[j] - grad_lambda_prev[j];
                ss += s * s;
                sy += s * y;
            }
            step = sy < 0.0 ? ss / (-sy) : step * 2.0;
        } else {
            step = 1.0;
        }
        if (gl_norm > 0.0) step = std::min(step, 4.0 / gl_norm);  // cap log-space displacement
        step = std::max(step, 1e-17);

        lambda_prev = lambda;
        grad_lambda_prev = grad_lambda;

        bool improved = false;
        double gain = 0.0;
        while (step >= 1e-18) {
            for (int j = 0; j < k; ++j)
                lambda_next[j] = std::clamp(lambda[j] + step * grad_lambda[j], kLambdaMin, kLambdaMax);
            for (int j = 0; j < k; ++j) alpha_next[j] = std::exp(lambda_next[j]);
            const double ll_next = stats.log_likelihood(alpha_next);
            if (ll_next >= ll) {
                gain = ll_next - ll;
                lambda = lambda_next;
                alpha = alpha_next;
                ll = ll_next;
                improved = true;
                break;
            }
            step *= options.backtrack;
        }
        have_prev = improved;
        ++result.iterations;
        if (ll > result.log_likelihood) {
            result.log_likelihood = ll;
            result.alpha = alpha;
        }
        if (options.record_trace) result.trace.push_back(ll);
        if (!improved) break;  // line search exhausted; no ascent direction at this scale
        if (gain < options.ftol_abs + options.ftol_rel * std::fabs(ll)) {
            if (++stalled >= options.ftol_patience) break;
        } else {
            stalled = 0;
        }
    }

    if (!result.converged) {
        stats.gradient(result.alpha, grad);
        double gnorm = 0.0;
        for (int j = 0; j < k; ++j) gnorm = std::max(gnorm, std::fabs(grad[j]));
        result.grad_inf_norm = gnorm;
        if (gnorm <= options.tol) result.converged = true;
    }
    return result;
}

}  // namespace ttmc

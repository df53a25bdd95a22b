#include "ttmc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace ttmc {

DetectionMetrics score_detection(std::span<const int> estimated, std::span<const int> truth,
                                 int window) {
    if (window < 0) throw std::invalid_argument("window must be non-negative");

    DetectionMetrics metrics;
    metrics.window = window;

    // Candidate pairs within the window, ordered by distance with a
    // position-symmetric tie key so swapping the roles of the two lists
    // produces the same matching.
    struct Candidate {
        int dist;
        int lo;
        int hi;
        int ei;
        int ti;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < estimated.size(); ++i)
        for (std::size_t j = 0; j < truth.size(); ++j) {
            const int d = std::abs(estimated[i] - truth[j]);
            if (d <= window)
                candidates.push_back({d, std::min(estimated[i], truth[j]),
                                      std::max(estimated[i], truth[j]), static_cast<int>(i),
                                      static_cast<int>(j)});
        }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist, a.lo, a.hi) < std::tie(b.dist, b.lo, b.hi);
    });

    std::vector<char> est_used(estimated.size(), 0), tru_used(truth.size(), 0);
    for (const auto& c : candidates) {
        if (est_used[c.ei] || tru_used[c.ti]) continue;
        est_used[c.ei] = tru_used[c.ti] = 1;
        metrics.matched_pairs.emplace_back(estimated[c.ei], truth[c.ti]);
    }

    const double matches = static_cast<double>(metrics.matched_pairs.size());
    metrics.precision = estimated.empty() ? 1.0 : matches / static_cast<double>(estimated.size());
    metrics.recall = truth.empty() ? 1.0 : matches / static_cast<double>(truth.size());
    const double pr = metrics.precision + metrics.recall;
    metrics.f_score = pr > 0.0 ? 2.0 * metrics.precision * metrics.recall / pr : 0.0;
    return metrics;
}

namespace {

void check_polytopes(const MatrixD& a, const MatrixD& b) {
    if (a.cols < 1 || b.cols < 1) throw std::invalid_argument("empty topic matrix");
    if (a.rows != b.rows)
        throw std::invalid_argument("topic matrices must share the vocabulary dimension");
}

}  // namespace

double one_sided_error(const MatrixD& phi_sub, const MatrixD& phi_full) {
    check_polytopes(phi_sub, phi_full);
    const int v = phi_sub.rows;
    double worst = 0.0;
    for (int i = 0; i < phi_sub.cols; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int j = 0; j < phi_full.cols; ++j) {
            double d2 = 0.0;
            for (int r = 0; r < v; ++r) {
                const double d = phi_sub(r, i) - phi_full(r, j);
                d2 += d * d;
            }
            nearest = std::min(nearest, d2);
        }
        worst = std::max(worst, nearest);
    }
    return std::sqrt(worst);
}

double min_matching_distance(const MatrixD& phi_a, const MatrixD& phi_b) {
    return std::max(one_sided_error(phi_a, phi_b), one_sided_error(phi_b, phi_a));
}

}  // namespace ttmc

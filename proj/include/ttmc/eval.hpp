#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ttmc/matrix.hpp"

namespace ttmc {

struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
    int window = 0;
    std::vector<std::pair<int, int>> matched_pairs;  // (estimated, true)
};

// Greedy one-to-one matching by increasing distance within the tolerance
// window. Conventions: no estimates and no truths scores 1/1/1; no
// estimates against a non-empty truth scores precision 1 (no false
// alarms) and recall 0.
DetectionMetrics score_detection(std::span<const int> estimated, std::span<const int> truth,
                                 int window);

// Directed max-min L2 distance between topic columns:
//   d(A, B) = max over columns a of min over columns b ||a - b||_2.
double one_sided_error(const MatrixD& phi_sub, const MatrixD& phi_full);

// Minimum-matching distance: max(d(A, B), d(B, A)).
double min_matching_distance(const MatrixD& phi_a, const MatrixD& phi_b);

}  // namespace ttmc

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ttmc {

// Dense row-major double matrix. Kept deliberately minimal; the heavy
// numerical paths index rows directly.
struct MatrixD {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    MatrixD() = default;
    MatrixD(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
    std::span<const double> row(int r) const { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
};

}  // namespace ttmc

#pragma once
// Maximum-weight perfect assignment on a dense square matrix.
//
// Shortest augmenting path with row/column potentials (Kuhn-Munkres in the
// Jonker-Volgenant formulation), O(n^3).

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dbalign/error.hpp"
#include "dbalign/models.hpp"

namespace dbalign {

struct AssignmentResult {
    // Row i is assigned to column perm[i].
    std::vector<std::size_t> perm;
    // sum_i weight(i, perm[i]), correctly rounded.
    double value = 0.0;
};

namespace detail {

// Correctly rounded sum of finite doubles (Shewchuk partials, fsum-style
// final rounding). The result does not depend on the order of the terms.
inline double exact_sum(const std::vector<double>& terms) {
    std::vector<double> partials;
    for (double x : terms) {
        std::size_t k = 0;
        for (double y : partials) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[k++] = lo;
            x = hi;
        }
        partials.resize(k);
        partials.push_back(x);
    }
    if (partials.empty()) return 0.0;
    std::size_t i = partials.size() - 1;
    double hi = partials[i];
    double lo = 0.0;
    while (i > 0) {
        const double x = hi;
        const double y = partials[--i];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) break;
    }
    if (i > 0 && ((lo < 0.0 && partials[i - 1] < 0.0) || (lo > 0.0 && partials[i - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

}  // namespace detail

inline AssignmentResult max_weight_assignment(const Matrix& weight) {
    const auto n = static_cast<std::size_t>(weight.rows());
    if (weight.rows() != weight.cols()) throw ShapeError("assignment needs a square matrix");
    if (n == 0) return {};
    if (!weight.allFinite()) throw DataError("assignment weights must be finite");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-based internally; index 0 is the virtual source column.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    auto cost = [&](std::size_t i, std::size_t j) {
        return -weight(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1));
    };

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    AssignmentResult out;
    out.perm.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) out.perm[match[j] - 1] = j - 1;
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i)
        terms[i] = weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out.perm[i]));
    out.value = detail::exact_sum(terms);
    return out;
}

}  // namespace dbalign

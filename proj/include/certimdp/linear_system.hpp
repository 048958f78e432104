#ifndef CERTIMDP_LINEAR_SYSTEM_HPP
#define CERTIMDP_LINEAR_SYSTEM_HPP

#include <vector>

#include "certimdp/rational.hpp"

namespace certimdp {

using Vec = std::vector<Rational>;
using Matrix = std::vector<Vec>;  // row major

enum class SystemKind { Unique, None, Affine };

struct LinearSystemSolution {
    SystemKind kind = SystemKind::None;
    Vec x;                    // particular solution (Unique/Affine)
    std::vector<Vec> kernel;  // basis of the null space (Affine; empty if Unique)
};

namespace detail {

// Pivot choice: among nonzero candidates prefer the entry with the smallest
// combined numerator/denominator bit length to keep intermediate values flat.
inline std::size_t rational_bits(const Rational& r) {
    return mpz_sizeinbase(numerator(r).backend().data(), 2) +
           mpz_sizeinbase(denominator(r).backend().data(), 2);
}

}  // namespace detail

/// Exact Gaussian elimination. Returns the unique solution, reports an
/// inconsistent system, or produces a particular solution plus a kernel basis.
inline LinearSystemSolution solve_linear_system(Matrix a, Vec b) {
    const std::size_t rows = a.size();
    const std::size_t cols = rows ? a[0].size() : 0;
    for (const auto& row : a)
        if (row.size() != cols) throw rational_error("ragged matrix");
    if (b.size() != rows) throw rational_error("dimension mismatch");

    std::vector<int> pivot_col_of_row;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t best = rows;
        std::size_t best_bits = 0;
        for (std::size_t i = r; i < rows; ++i) {
            if (a[i][c] == 0) continue;
            std::size_t bits = detail::rational_bits(a[i][c]);
            if (best == rows || bits < best_bits) {
                best = i;
                best_bits = bits;
            }
        }
        if (best == rows) continue;
        std::swap(a[r], a[best]);
        std::swap(b[r], b[best]);
        Rational inv = a[r][c];
        for (std::size_t j = c; j < cols; ++j) a[r][j] /= inv;
        b[r] /= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || a[i][c] == 0) continue;
            Rational f = a[i][c];
            for (std::size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
            b[i] -= f * b[r];
        }
        pivot_col_of_row.push_back(static_cast<int>(c));
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (b[i] != 0) return {SystemKind::None, {}, {}};

    LinearSystemSolution sol;
    sol.x.assign(cols, Rational(0));
    std::vector<bool> is_pivot(cols, false);
    for (std::size_t i = 0; i < pivot_col_of_row.size(); ++i) {
        sol.x[pivot_col_of_row[i]] = b[i];
        is_pivot[pivot_col_of_row[i]] = true;
    }
    std::vector<Vec> kernel;
    for (std::size_t c = 0; c < cols; ++c) {
        if (is_pivot[c]) continue;
        Vec k(cols, Rational(0));
        k[c] = 1;
        for (std::size_t i = 0; i < pivot_col_of_row.size(); ++i)
            k[pivot_col_of_row[i]] = -a[i][c];
        kernel.push_back(std::move(k));
    }
    sol.kind = kernel.empty() ? SystemKind::Unique : SystemKind::Affine;
    sol.kernel = std::move(kernel);
    return sol;
}

}  // namespace certimdp

#endif

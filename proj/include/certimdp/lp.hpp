#ifndef CERTIMDP_LP_HPP
#define CERTIMDP_LP_HPP

#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "certimdp/rational.hpp"

namespace certimdp {

enum class Cmp { Le, Eq, Ge };
enum class Sense { Min, Max, Feasibility };

struct LinearConstraint {
    std::map<int, Rational> coeffs;
    Cmp cmp = Cmp::Le;
    Rational rhs;
};

/// Exact-rational linear program. Variables are dense indices with optional
/// bounds; unbounded variables are free.
struct LinearProgram {
    struct Var {
        std::string name;
        std::optional<Rational> lower, upper;
    };
    std::vector<Var> vars;
    std::vector<LinearConstraint> constraints;
    std::map<int, Rational> objective;
    Sense sense = Sense::Feasibility;

    int add_var(const std::string& name, std::optional<Rational> lower = std::nullopt,
                std::optional<Rational> upper = std::nullopt) {
        vars.push_back({name, std::move(lower), std::move(upper)});
        return static_cast<int>(vars.size()) - 1;
    }
    void add_constraint(std::map<int, Rational> coeffs, Cmp cmp, Rational rhs) {
        constraints.push_back({std::move(coeffs), cmp, std::move(rhs)});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<Rational> assignment;
    Rational value;
    long iterations = 0;
};

/// Primal simplex with Bland's rule over exact rationals; termination is
/// guaranteed, no epsilon anywhere. A basis-revisit guard backs the
/// anti-cycling argument at runtime.
class SimplexSolver {
public:
    explicit SimplexSolver(const LinearProgram& lp) : lp_(lp) {}

    LpResult solve() {
        build_standard_form();
        LpResult res;
        if (!phase1()) {
            res.status = LpStatus::Infeasible;
            res.iterations = iterations_;
            return res;
        }
        int ph2 = phase2();
        if (ph2 < 0) {
            res.status = LpStatus::Unbounded;
            res.iterations = iterations_;
            return res;
        }
        res.status = LpStatus::Optimal;
        res.assignment = recover_assignment();
        res.value = 0;
        for (const auto& [v, coef] : lp_.objective) res.value += coef * res.assignment[v];
        res.iterations = iterations_;
        return res;
    }

private:
    // Original variable v maps to columns: shifted (x = lower + x') or split
    // (x = x+ - x-) when free.
    struct VarMap {
        int col_pos = -1;
        int col_neg = -1;  // used only for free variables
        Rational shift;    // lower bound when present
    };

    void build_standard_form() {
        int n = static_cast<int>(lp_.vars.size());
        vmap_.assign(n, VarMap{});
        ncols_ = 0;
        std::vector<LinearConstraint> rows = lp_.constraints;
        for (int v = 0; v < n; ++v) {
            const auto& var = lp_.vars[v];
            if (var.lower) {
                vmap_[v].col_pos = ncols_++;
                vmap_[v].shift = *var.lower;
                if (var.upper) {
                    LinearConstraint ub;
                    ub.coeffs[v] = 1;
                    ub.cmp = Cmp::Le;
                    ub.rhs = *var.upper;
                    rows.push_back(ub);
                }
            } else if (var.upper) {
                // x <= u, no lower: substitute x = u - x'' with x'' >= 0.
                vmap_[v].col_neg = ncols_++;
                vmap_[v].shift = *var.upper;
            } else {
                vmap_[v].col_pos = ncols_++;
                vmap_[v].col_neg = ncols_++;
            }
        }
        struct Row {
            std::vector<Rational> a;
            Rational b;
        };
        // Rewrite every constraint over the standard-form columns.
        std::vector<Row> eq_rows;

        std::vector<int> slack_sign;
        for (const auto& con : rows) {
            Row row;
            row.a.assign(ncols_, Rational(0));
            row.b = con.rhs;
            for (const auto& [v, coef] : con.coeffs) {
                const VarMap& m = vmap_[v];
                if (m.col_pos >= 0 && m.col_neg >= 0) {  // free split
                    row.a[m.col_pos] += coef;
                    row.a[m.col_neg] -= coef;
                } else if (m.col_pos >= 0) {  // shifted by lower
                    row.a[m.col_pos] += coef;
                    row.b -= coef * m.shift;
                } else {  // upper-only: x = shift - x''
                    row.a[m.col_neg] -= coef;
                    row.b -= coef * m.shift;
                }
            }
            if (con.cmp == Cmp::Le)
                slack_sign.push_back(1);
            else if (con.cmp == Cmp::Ge)
                slack_sign.push_back(-1);
            else
                slack_sign.push_back(0);
            eq_rows.push_back(std::move(row));
        }
        int m = static_cast<int>(eq_rows.size());
        int total = ncols_;
        for (int s : slack_sign)
            if (s != 0) ++total;
        first_artificial_ = total;
        total += m;  // one artificial per row keeps phase 1 uniform

        a_.assign(m, std::vector<Rational>(total, Rational(0)));
        b_.assign(m, Rational(0));
        int slack_at = ncols_;
        basis_.assign(m, -1);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < ncols_; ++j) a_[i][j] = eq_rows[i].a[j];
            b_[i] = eq_rows[i].b;
            if (slack_sign[i] != 0) a_[i][slack_at++] = slack_sign[i];
            if (b_[i] < 0) {
                for (auto& e : a_[i]) e = -e;
                b_[i] = -b_[i];
            }
            a_[i][first_artificial_ + i] = 1;
            basis_[i] = first_artificial_ + i;
        }
        ncols_total_ = total;

        cost_.assign(ncols_total_, Rational(0));
        Rational sign = lp_.sense == Sense::Max ? Rational(-1) : Rational(1);
        if (lp_.sense != Sense::Feasibility) {
            for (const auto& [v, coef] : lp_.objective) {
                const VarMap& mmap = vmap_[v];
                if (mmap.col_pos >= 0 && mmap.col_neg >= 0) {
                    cost_[mmap.col_pos] += sign * coef;
                    cost_[mmap.col_neg] -= sign * coef;
                } else if (mmap.col_pos >= 0) {
                    cost_[mmap.col_pos] += sign * coef;
                } else {
                    cost_[mmap.col_neg] -= sign * coef;
                }
            }
        }
    }

    // Reduced cost of column j for cost vector c restricted to the basis.
    // We keep an explicit dense tableau: a_ holds the current (updated) rows.
    void pivot(int row, int col) {
        Rational inv = a_[row][col];
        for (auto& e : a_[row]) e /= inv;
        b_[row] /= inv;
        for (std::size_t i = 0; i < a_.size(); ++i) {
            if (static_cast<int>(i) == row || a_[i][col] == 0) continue;
            Rational f = a_[i][col];
            for (int j = 0; j < ncols_total_; ++j) a_[i][j] -= f * a_[row][j];
            b_[i] -= f * b_[row];
        }
        basis_[row] = col;
        ++iterations_;
        guard_basis();
    }

    void guard_basis() {
        if (iterations_ < 4096) return;
        auto [it, fresh] = seen_bases_.insert(basis_);
        (void)it;
        assert(fresh && "simplex revisited a basis despite Bland's rule");
        if (!fresh) throw std::logic_error("simplex cycle detected");
    }

    // Runs Bland-rule simplex for the cost vector c over allowed columns.
    // Returns false if unbounded.
    bool run(const std::vector<Rational>& c, int allowed_cols) {
        std::vector<Rational> y(a_.size());
        while (true) {
            // reduced costs: r_j = c_j - c_B . B^{-1} A_j ; with the explicit
            // tableau, B^{-1}A_j is just column j and c_B applies to basis_.
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j) {
                Rational rj = c[j];
                for (std::size_t i = 0; i < a_.size(); ++i)
                    if (c[basis_[i]] != 0) rj -= c[basis_[i]] * a_[i][j];
                if (rj < 0) {
                    enter = j;
                    break;  // Bland: smallest index
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            Rational best_ratio;
            for (std::size_t i = 0; i < a_.size(); ++i) {
                if (a_[i][enter] <= 0) continue;
                Rational ratio = b_[i] / a_[i][enter];
                if (leave < 0 || ratio < best_ratio ||
                    (ratio == best_ratio && basis_[i] < basis_[leave])) {
                    leave = static_cast<int>(i);
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return false;  // unbounded
            pivot(leave, enter);
        }
    }

    bool phase1() {
        std::vector<Rational> c(ncols_total_, Rational(0));
        for (int j = first_artificial_; j < ncols_total_; ++j) c[j] = 1;
        bool ok = run(c, ncols_total_);
        assert(ok);
        (void)ok;
        Rational obj = 0;
        for (std::size_t i = 0; i < a_.size(); ++i)
            if (basis_[i] >= first_artificial_) obj += b_[i];
        if (obj != 0) return false;
        // Drive remaining degenerate artificials out of the basis.
        for (std::size_t i = 0; i < a_.size(); ++i) {
            if (basis_[i] < first_artificial_) continue;
            int col = -1;
            for (int j = 0; j < first_artificial_; ++j)
                if (a_[i][j] != 0) {
                    col = j;
                    break;
                }
            if (col >= 0) pivot(static_cast<int>(i), col);
            // else: redundant all-zero row; harmless to keep.
        }
        return true;
    }

    int phase2() {
        seen_bases_.clear();
        // Forbid artificial columns from re-entering.
        if (!run(cost_, first_artificial_)) return -1;
        return 0;
    }

    std::vector<Rational> recover_assignment() const {
        std::vector<Rational> cols(ncols_total_, Rational(0));
        for (std::size_t i = 0; i < a_.size(); ++i) cols[basis_[i]] = b_[i];
        std::vector<Rational> x(lp_.vars.size(), Rational(0));
        for (std::size_t v = 0; v < lp_.vars.size(); ++v) {
            const VarMap& m = vmap_[v];
            if (m.col_pos >= 0 && m.col_neg >= 0)
                x[v] = cols[m.col_pos] - cols[m.col_neg];
            else if (m.col_pos >= 0)
                x[v] = m.shift + cols[m.col_pos];
            else
                x[v] = m.shift - cols[m.col_neg];
        }
        return x;
    }

    const LinearProgram& lp_;
    std::vector<VarMap> vmap_;
    int ncols_ = 0, ncols_total_ = 0, first_artificial_ = 0;
    std::vector<std::vector<Rational>> a_;
    std::vector<Rational> b_;
    std::vector<Rational> cost_;
    std::vector<int> basis_;
    long iterations_ = 0;
    std::set<std::vector<int>> seen_bases_;
};

inline LpResult lp_solve(const LinearProgram& lp) { return SimplexSolver(lp).solve(); }

/// Substitution check: does the assignment satisfy every constraint and bound
/// exactly?
inline bool lp_assignment_feasible(const LinearProgram& lp, const std::vector<Rational>& x) {
    for (std::size_t v = 0; v < lp.vars.size(); ++v) {
        if (lp.vars[v].lower && x[v] < *lp.vars[v].lower) return false;
        if (lp.vars[v].upper && x[v] > *lp.vars[v].upper) return false;
    }
    for (const auto& con : lp.constraints) {
        Rational lhs = 0;
        for (const auto& [v, coef] : con.coeffs) lhs += coef * x[v];
        if (con.cmp == Cmp::Le && lhs > con.rhs) return false;
        if (con.cmp == Cmp::Ge && lhs < con.rhs) return false;
        if (con.cmp == Cmp::Eq && lhs != con.rhs) return false;
    }
    return true;
}

}  // namespace certimdp

#endif

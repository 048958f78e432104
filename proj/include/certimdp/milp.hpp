#ifndef CERTIMDP_MILP_HPP
#define CERTIMDP_MILP_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "certimdp/lp.hpp"

namespace certimdp {

using json = nlohmann::json;

/// Indicator link: binary = 0 forces the continuous variable to 0. Realizes
/// the usual big-M rows exactly, without materializing any M.
struct IndicatorLink {
    int binary_var;
    int cont_var;
};

struct MilpModel {
    LinearProgram lp;
    std::set<int> binaries;
    std::vector<IndicatorLink> links;

    int add_binary(const std::string& name) {
        int v = lp.add_var(name, Rational(0), Rational(1));
        binaries.insert(v);
        return v;
    }
    void link(int binary, int cont) {
        if (!lp.vars[cont].lower || *lp.vars[cont].lower < 0)
            throw rational_error("indicator-linked variable must be nonnegative: " +
                                 lp.vars[cont].name);
        links.push_back({binary, cont});
    }
};

enum class MilpStatus { Optimal, Infeasible };

struct MilpResult {
    MilpStatus status = MilpStatus::Infeasible;
    std::vector<Rational> assignment;
    Rational value;
    long nodes = 0;
    long lp_iterations = 0;
};

/// Exact branch-and-bound over the binaries. Best-first on the relaxation
/// bound, then lexicographic on the partial assignment; on the zero branch
/// linked continuous variables are fixed to zero instead of using big-M.
/// Equal-objective solutions tie-break to the lexicographically smallest
/// binary assignment.
inline MilpResult milp_solve(const MilpModel& model) {
    const bool maximize = model.lp.sense == Sense::Max;
    std::vector<int> binaries(model.binaries.begin(), model.binaries.end());

    struct Node {
        std::map<int, int> fixed;  // binary var -> 0/1
        Rational bound;
        std::vector<int> lex;  // fixed values in binary order, free slots sort last
        LpResult relaxation;
    };
    auto lex_key = [&](const std::map<int, int>& fixed) {
        std::vector<int> key;
        key.reserve(binaries.size());
        for (int b : binaries) {
            auto it = fixed.find(b);
            key.push_back(it == fixed.end() ? 2 : it->second);  // free sorts last
        }
        return key;
    };

    auto relax = [&](const std::map<int, int>& fixed) {
        LinearProgram lp = model.lp;
        for (const auto& [b, v] : fixed) {
            lp.vars[b].lower = Rational(v);
            lp.vars[b].upper = Rational(v);
        }
        for (const auto& link : model.links) {
            auto it = fixed.find(link.binary_var);
            if (it != fixed.end() && it->second == 0) lp.vars[link.cont_var].upper = Rational(0);
        }
        return lp_solve(lp);
    };

    MilpResult result;
    bool have_incumbent = false;
    std::vector<int> incumbent_lex;

    auto better_bound = [&](const Rational& a, const Rational& b) {
        return maximize ? a > b : a < b;
    };

    // Best-first queue ordered by bound then lexicographic assignment.
    struct QueueCmp {
        bool maximize;
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return maximize ? a.bound > b.bound : a.bound < b.bound;
            return a.lex < b.lex;
        }
    };
    std::vector<Node> open;
    auto push_node = [&](std::map<int, int> fixed) {
        LpResult r = relax(fixed);
        ++result.nodes;
        result.lp_iterations += r.iterations;
        if (r.status == LpStatus::Infeasible) return;
        if (r.status == LpStatus::Unbounded)
            throw rational_error("MILP relaxation unbounded; bound the model");
        Node n{std::move(fixed), r.value, {}, std::move(r)};
        n.lex = lex_key(n.fixed);
        open.push_back(std::move(n));
        std::push_heap(open.begin(), open.end(),
                       [&](const Node& a, const Node& b) { return QueueCmp{maximize}(b, a); });
    };

    push_node({});
    while (!open.empty()) {
        std::pop_heap(open.begin(), open.end(),
                      [&](const Node& a, const Node& b) { return QueueCmp{maximize}(b, a); });
        Node node = std::move(open.back());
        open.pop_back();

        // Prune on a strictly worse bound; equal bounds are still explored so
        // the lexicographic tie-break sees every optimal assignment.
        if (have_incumbent && better_bound(result.value, node.bound)) continue;

        const LpResult& r = node.relaxation;

        // Select a branching binary: first fractional or link-violated.
        int branch = -1;
        for (int b : binaries) {
            if (node.fixed.count(b)) continue;
            const Rational& v = r.assignment[b];
            bool fractional = v != 0 && v != 1;
            bool violated = false;
            if (!fractional && v == 0) {
                for (const auto& link : model.links)
                    if (link.binary_var == b && r.assignment[link.cont_var] > 0) {
                        violated = true;
                        break;
                    }
            }
            if (fractional || violated) {
                branch = b;
                break;
            }
        }
        if (branch < 0) {
            // Integral and link-consistent: candidate incumbent.
            std::vector<int> lex;
            for (int b : binaries) lex.push_back(static_cast<int>(r.assignment[b]));
            bool take = !have_incumbent || better_bound(r.value, result.value) ||
                        (r.value == result.value && lex < incumbent_lex);
            if (take) {
                result.status = MilpStatus::Optimal;
                result.assignment = r.assignment;
                result.value = r.value;
                incumbent_lex = lex;
                have_incumbent = true;
            }
            continue;
        }
        for (int v : {0, 1}) {
            auto fixed = node.fixed;
            fixed[branch] = v;
            push_node(std::move(fixed));
        }
    }
    if (!have_incumbent) result.status = MilpStatus::Infeasible;
    return result;
}

// ---------------------------------------------------------------------------
// JSON import/export. Rationals are "num/den" strings; big-M indicator rows
// (x - M*b <= 0) are recognized and converted into links.
// ---------------------------------------------------------------------------

inline json milp_to_json(const MilpModel& m) {
    json j;
    json vars = json::array();
    for (std::size_t v = 0; v < m.lp.vars.size(); ++v) {
        json vj;
        vj["name"] = m.lp.vars[v].name;
        if (m.lp.vars[v].lower) vj["lower"] = rational_to_string(*m.lp.vars[v].lower);
        if (m.lp.vars[v].upper) vj["upper"] = rational_to_string(*m.lp.vars[v].upper);
        if (m.binaries.count(static_cast<int>(v))) vj["binary"] = true;
        vars.push_back(vj);
    }
    j["vars"] = vars;
    json cons = json::array();
    for (const auto& c : m.lp.constraints) {
        json cj;
        json coeffs;
        for (const auto& [v, coef] : c.coeffs) coeffs[m.lp.vars[v].name] = rational_to_string(coef);
        cj["coeffs"] = coeffs;
        cj["cmp"] = c.cmp == Cmp::Le ? "<=" : (c.cmp == Cmp::Ge ? ">=" : "=");
        cj["rhs"] = rational_to_string(c.rhs);
        cons.push_back(cj);
    }
    j["constraints"] = cons;
    json obj;
    obj["sense"] = m.lp.sense == Sense::Min ? "min" : (m.lp.sense == Sense::Max ? "max" : "feasibility");
    json ocoeffs;
    for (const auto& [v, coef] : m.lp.objective) ocoeffs[m.lp.vars[v].name] = rational_to_string(coef);
    obj["coeffs"] = ocoeffs;
    j["objective"] = obj;
    json links = json::array();
    for (const auto& l : m.links) {
        json lj;
        lj["binary"] = m.lp.vars[l.binary_var].name;
        lj["cont"] = m.lp.vars[l.cont_var].name;
        links.push_back(lj);
    }
    j["links"] = links;
    return j;
}

inline MilpModel milp_from_json(const json& j) {
    MilpModel m;
    std::map<std::string, int> index;
    for (const auto& vj : j.at("vars")) {
        std::optional<Rational> lo, hi;
        if (vj.contains("lower")) lo = parse_rational(vj.at("lower").get<std::string>());
        if (vj.contains("upper")) hi = parse_rational(vj.at("upper").get<std::string>());
        std::string name = vj.at("name").get<std::string>();
        int v = m.lp.add_var(name, lo, hi);
        index[name] = v;
        if (vj.value("binary", false)) {
            m.lp.vars[v].lower = Rational(0);
            m.lp.vars[v].upper = Rational(1);
            m.binaries.insert(v);
        }
    }
    for (const auto& cj : j.at("constraints")) {
        LinearConstraint c;
        for (const auto& [name, coef] : cj.at("coeffs").items())
            c.coeffs[index.at(name)] = parse_rational(coef.get<std::string>());
        std::string cmp = cj.at("cmp").get<std::string>();
        c.cmp = cmp == "<=" ? Cmp::Le : (cmp == ">=" ? Cmp::Ge : Cmp::Eq);
        c.rhs = parse_rational(cj.at("rhs").get<std::string>());
        // Big-M pattern: {x: 1, b: -M} <= 0 with binary b, M > 0.
        if (c.cmp == Cmp::Le && c.rhs == 0 && c.coeffs.size() == 2) {
            int xvar = -1, bvar = -1;
            for (const auto& [v, coef] : c.coeffs) {
                if (m.binaries.count(v) && coef < 0) bvar = v;
                if (!m.binaries.count(v) && coef == 1) xvar = v;
            }
            if (xvar >= 0 && bvar >= 0 && m.lp.vars[xvar].lower &&
                *m.lp.vars[xvar].lower >= 0) {
                m.links.push_back({bvar, xvar});
                continue;
            }
        }
        m.lp.constraints.push_back(std::move(c));
    }
    const json& obj = j.at("objective");
    std::string sense = obj.at("sense").get<std::string>();
    m.lp.sense = sense == "min" ? Sense::Min : (sense == "max" ? Sense::Max : Sense::Feasibility);
    for (const auto& [name, coef] : obj.at("coeffs").items())
        m.lp.objective[index.at(name)] = parse_rational(coef.get<std::string>());
    if (j.contains("links"))
        for (const auto& lj : j.at("links")) {
            IndicatorLink link;
            link.binary_var = index.at(lj.at("binary").get<std::string>());
            link.cont_var = index.at(lj.at("cont").get<std::string>());
            m.links.push_back(link);
        }
    return m;
}

/// LP-format text rendering for eyeballing against external solvers.
inline std::string milp_to_lp_text(const MilpModel& m) {
    std::ostringstream out;
    out << (m.lp.sense == Sense::Max ? "Maximize" : "Minimize") << "\n obj:";
    for (const auto& [v, coef] : m.lp.objective)
        out << " + " << rational_to_string(coef) << " " << m.lp.vars[v].name;
    out << "\nSubject To\n";
    int i = 0;
    for (const auto& c : m.lp.constraints) {
        out << " c" << i++ << ":";
        for (const auto& [v, coef] : c.coeffs)
            out << " + " << rational_to_string(coef) << " " << m.lp.vars[v].name;
        out << (c.cmp == Cmp::Le ? " <= " : (c.cmp == Cmp::Ge ? " >= " : " = "))
            << rational_to_string(c.rhs) << "\n";
    }
    for (const auto& l : m.links)
        out << " ind" << i++ << ": " << m.lp.vars[l.binary_var].name << " = 0 -> "
            << m.lp.vars[l.cont_var].name << " = 0\n";
    out << "Bounds\n";
    for (const auto& v : m.lp.vars) {
        if (!v.lower && !v.upper) {
            out << " " << v.name << " free\n";
        } else {
            out << " ";
            if (v.lower) out << rational_to_string(*v.lower) << " <= ";
            out << v.name;
            if (v.upper) out << " <= " << rational_to_string(*v.upper);
            out << "\n";
        }
    }
    if (!m.binaries.empty()) {
        out << "Binaries\n";
        for (int b : m.binaries) out << " " << m.lp.vars[b].name << "\n";
    }
    out << "End\n";
    return out.str();
}

}  // namespace certimdp

#endif

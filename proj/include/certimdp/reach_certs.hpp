#ifndef CERTIMDP_REACH_CERTS_HPP
#define CERTIMDP_REACH_CERTS_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "certimdp/component_certs.hpp"
#include "certimdp/graph.hpp"
#include "certimdp/linear_system.hpp"
#include "certimdp/lp.hpp"
#include "certimdp/model.hpp"

namespace certimdp {

class reachability_error : public std::runtime_error {
public:
    explicit reachability_error(const std::string& what) : std::runtime_error(what) {}
};

/// MDP split into transient states and an absorbing frontier; state-action
/// pairs of the frontier are excluded from En.
struct ReachabilityForm {
    Mdp mdp;
    StateSet frontier;
    std::vector<StateActionPair> en;  // non-frontier pairs, sorted
    std::vector<StateId> transient;   // S = states outside the frontier, sorted

    bool is_transient(StateId s) const { return !frontier.count(s); }
};

/// Verifies the frontier conditions; with require_ec_free additionally checks
/// that no end component survives outside the frontier (needed on the
/// universal/minimum side).
inline ReachabilityForm to_reachability_form(const Mdp& m, const std::vector<StateSet>& targets,
                                             bool require_ec_free = true) {
    ReachabilityForm rf;
    rf.mdp = m;
    for (StateId s = 0; s < m.state_count(); ++s)
        if (m.absorbing(s)) rf.frontier.insert(s);
    for (const auto& g : targets)
        for (StateId s : g)
            if (!rf.frontier.count(s))
                throw reachability_error("non-absorbing target: " + m.state_name(s));
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (rf.frontier.count(s))
            continue;
        rf.transient.push_back(s);
        for (ActionId a : m.actions_of(s)) rf.en.push_back({s, a});
    }
    // Reachability of the frontier from everywhere.
    std::vector<std::vector<int>> radj(m.state_count());
    for (const auto& [sa, dist] : m.transitions())
        for (const auto& [t, p] : dist) {
            (void)p;
            radj[t].push_back(sa.first);
        }
    std::vector<int> sources(rf.frontier.begin(), rf.frontier.end());
    auto d = bfs_distances(radj, sources);
    for (StateId s = 0; s < m.state_count(); ++s)
        if (d[s] < 0) throw reachability_error("state cannot reach the frontier: " + m.state_name(s));
    if (require_ec_free) {
        StateSet outside;
        for (StateId s : rf.transient) outside.insert(s);
        Partition part = mec_decomposition_restricted(m, outside, sub_mdp_pairs(m, outside));
        for (const auto& block : part.blocks)
            if (!sub_mdp_pairs(m, block).empty())
                throw reachability_error("ec-outside-frontier");
    }
    return rf;
}

// ---------------------------------------------------------------------------
// Exact policy machinery. Policies are total maps over transient states.
// ---------------------------------------------------------------------------

using Policy = std::map<StateId, ActionId>;

namespace reach_detail {

/// Solves the policy's linear system x = P x + r exactly; requires the
/// frontier to be reached almost surely under the policy (EC-free forms).
inline std::map<StateId, Rational> policy_values(const ReachabilityForm& rf, const Policy& policy,
                                                 const std::map<StateId, Rational>& frontier_reward) {
    const auto& states = rf.transient;
    std::map<StateId, int> idx;
    for (std::size_t i = 0; i < states.size(); ++i) idx[states[i]] = static_cast<int>(i);
    Matrix a(states.size(), Vec(states.size(), Rational(0)));
    Vec b(states.size(), Rational(0));
    for (std::size_t i = 0; i < states.size(); ++i) {
        a[i][i] = 1;
        StateId s = states[i];
        for (const auto& [t, p] : rf.mdp.dist(s, policy.at(s))) {
            if (rf.is_transient(t))
                a[i][idx.at(t)] -= p;
            else if (auto it = frontier_reward.find(t); it != frontier_reward.end())
                b[i] += p * it->second;
        }
    }
    auto sol = solve_linear_system(std::move(a), std::move(b));
    if (sol.kind != SystemKind::Unique)
        throw reachability_error("singular policy system; form not EC-free");
    std::map<StateId, Rational> out;
    for (std::size_t i = 0; i < states.size(); ++i) out[states[i]] = sol.x[i];
    return out;
}

/// Expected visits of each transient state starting from the initial state.
inline std::map<StateId, Rational> policy_visits(const ReachabilityForm& rf, const Policy& policy) {
    const auto& states = rf.transient;
    std::map<StateId, int> idx;
    for (std::size_t i = 0; i < states.size(); ++i) idx[states[i]] = static_cast<int>(i);
    Matrix a(states.size(), Vec(states.size(), Rational(0)));
    Vec b(states.size(), Rational(0));
    for (std::size_t i = 0; i < states.size(); ++i) a[i][i] = 1;
    for (StateId s : states)
        for (const auto& [t, p] : rf.mdp.dist(s, policy.at(s)))
            if (rf.is_transient(t)) a[idx.at(t)][idx.at(s)] -= p;
    if (rf.is_transient(rf.mdp.initial())) b[idx.at(rf.mdp.initial())] = 1;
    auto sol = solve_linear_system(std::move(a), std::move(b));
    if (sol.kind != SystemKind::Unique)
        throw reachability_error("singular visit system; form not EC-free");
    std::map<StateId, Rational> out;
    for (std::size_t i = 0; i < states.size(); ++i) out[states[i]] = sol.x[i];
    return out;
}

inline std::map<StateId, Rational> dirac_rewards(const StateSet& g) {
    std::map<StateId, Rational> r;
    for (StateId s : g) r[s] = 1;
    return r;
}

/// Exact policy iteration for max weighted reachability, lexicographic
/// tie-breaking on action ids (switch only on strict improvement).
inline std::pair<Policy, std::map<StateId, Rational>> optimal_policy(
    const ReachabilityForm& rf, const std::map<StateId, Rational>& frontier_reward) {
    Policy policy;
    for (StateId s : rf.transient) {
        auto acts = rf.mdp.actions_of(s);
        if (acts.empty()) throw reachability_error("transient state without actions");
        policy[s] = acts.front();
    }
    while (true) {
        auto value = policy_values(rf, policy, frontier_reward);
        auto action_value = [&](StateId s, ActionId a) {
            Rational q = 0;
            for (const auto& [t, p] : rf.mdp.dist(s, a)) {
                if (rf.is_transient(t))
                    q += p * value.at(t);
                else if (auto it = frontier_reward.find(t); it != frontier_reward.end())
                    q += p * it->second;
            }
            return q;
        };
        bool improved = false;
        for (StateId s : rf.transient) {
            Rational best = value.at(s);
            ActionId pick = policy.at(s);
            for (ActionId a : rf.mdp.actions_of(s)) {
                Rational q = action_value(s, a);
                if (q > best) {
                    best = q;
                    pick = a;
                    improved = true;
                }
            }
            policy[s] = pick;
        }
        if (!improved) return {policy, value};
    }
}

}  // namespace reach_detail

// ---------------------------------------------------------------------------
// Farkas certificates.
// ---------------------------------------------------------------------------

struct FarkasY {
    std::map<StateActionPair, Rational> y;
};

/// (x, z) certificate. For universal queries membership is in H: A x <= T z
/// with x(init) over the threshold; the no-side of existential queries uses
/// the reversed system A x >= T z with x(init) under the threshold.
struct FarkasXZ {
    std::map<StateId, Rational> x;
    std::vector<Rational> z;
};

inline Verdict validate_farkas_y(const ReachabilityForm& rf, const std::vector<StateSet>& targets,
                                 const FarkasY& cert, const std::vector<Rational>& lambda,
                                 Relation rel) {
    std::set<StateActionPair> en(rf.en.begin(), rf.en.end());
    for (const auto& [sa, v] : cert.y) {
        if (!en.count(sa)) return Verdict::reject("unknown-pair");
        if (v < 0)
            return Verdict::reject("nonnegativity(" + rf.mdp.state_name(sa.first) + "," +
                                   rf.mdp.action_name(sa.second) + ")");
    }
    auto yval = [&](StateId s, ActionId a) {
        auto it = cert.y.find({s, a});
        return it == cert.y.end() ? Rational(0) : it->second;
    };
    for (StateId s : rf.transient) {
        Rational in = s == rf.mdp.initial() ? Rational(1) : Rational(0);
        for (const auto& sa : rf.en) in += yval(sa.first, sa.second) * rf.mdp.prob(sa.first, sa.second, s);
        Rational out = 0;
        for (ActionId a : rf.mdp.actions_of(s)) out += yval(s, a);
        if (in < out) return Verdict::reject("flow(" + rf.mdp.state_name(s) + ")");
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        Rational mass = 0;
        for (const auto& sa : rf.en)
            mass += yval(sa.first, sa.second) * rf.mdp.prob_into(sa.first, sa.second, targets[i]);
        if (!rel_holds(mass, rel, lambda[i]))
            return Verdict::reject("threshold(" + std::to_string(i + 1) + ")");
    }
    return Verdict::accept();
}

inline Verdict validate_farkas_xz(const ReachabilityForm& rf, const std::vector<StateSet>& targets,
                                  const FarkasXZ& cert, const std::vector<Rational>& lambda,
                                  Relation rel) {
    if (cert.z.size() != targets.size()) return Verdict::reject("z-size");
    bool nonzero = false;
    for (const auto& zi : cert.z) {
        if (zi < 0) return Verdict::reject("z-negative");
        if (zi > 0) nonzero = true;
    }
    if (!nonzero) return Verdict::reject("z-zero");
    auto xval = [&](StateId s) {
        auto it = cert.x.find(s);
        return it == cert.x.end() ? Rational(0) : it->second;
    };
    for (const auto& sa : rf.en) {
        Rational rhs = 0;
        for (const auto& [t, p] : rf.mdp.dist(sa.first, sa.second))
            if (rf.is_transient(t)) rhs += p * xval(t);
        for (std::size_t i = 0; i < targets.size(); ++i)
            rhs += cert.z[i] * rf.mdp.prob_into(sa.first, sa.second, targets[i]);
        if (xval(sa.first) > rhs)
            return Verdict::reject("bellman(" + rf.mdp.state_name(sa.first) + "," +
                                   rf.mdp.action_name(sa.second) + ")");
    }
    Rational bound = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) bound += lambda[i] * cert.z[i];
    if (!rel_holds(xval(rf.mdp.initial()), rel, bound)) return Verdict::reject("threshold");
    return Verdict::accept();
}

// ---------------------------------------------------------------------------
// Certifying decision procedure for existential conjunctive reachability:
// achievable-set refinement with exact policy iteration, producing expected
// visiting times on yes and a separating weighted value vector on no.
// ---------------------------------------------------------------------------

struct ExistsReachResult {
    bool holds = false;
    FarkasY y;        // on holds
    FarkasXZ no_cert;  // on failure: A x >= T z, x(init) below the weighted threshold
    std::vector<Policy> policies;   // recorded schedulers (mixture support on yes)
    std::vector<Rational> gammas;   // mixture coefficients, aligned with policies
    long rounds = 0;
};

namespace reach_detail {

struct Separation {
    bool found = false;           // a separating z exists
    std::vector<Rational> z;      // normalized: sum = 1
};

/// Separates lambda from the downward closure of the achieved points. For Geq
/// the separation must be strict; for Gt weak separation suffices to keep
/// refining.
inline Separation separate(const std::vector<std::vector<Rational>>& points,
                           const std::vector<Rational>& lambda, Relation rel) {
    int k = static_cast<int>(lambda.size());
    Separation out;
    if (points.empty()) {
        out.found = true;
        out.z.assign(k, Rational(1) / k);
        return out;
    }
    LinearProgram lp;
    std::vector<int> zvar(k);
    for (int i = 0; i < k; ++i) zvar[i] = lp.add_var("z" + std::to_string(i), Rational(0));
    int tvar = lp.add_var("t");
    {
        std::map<int, Rational> norm;
        for (int i = 0; i < k; ++i) norm[zvar[i]] = 1;
        lp.add_constraint(norm, Cmp::Eq, Rational(1));
    }
    for (const auto& q : points) {
        std::map<int, Rational> row;
        for (int i = 0; i < k; ++i) row[zvar[i]] = q[i];
        row[tvar] = -1;
        lp.add_constraint(row, Cmp::Le, Rational(0));
    }
    lp.sense = Sense::Max;
    for (int i = 0; i < k; ++i) lp.objective[zvar[i]] = lambda[i];
    lp.objective[tvar] = -1;
    LpResult res = lp_solve(lp);
    if (res.status != LpStatus::Optimal) throw reachability_error("separation LP failed");
    bool keep = rel == Relation::Geq ? res.value > 0 : res.value >= 0;
    if (!keep) return out;
    out.found = true;
    out.z.resize(k);
    for (int i = 0; i < k; ++i) out.z[i] = res.assignment[zvar[i]];
    return out;
}

/// Mixture coefficients over recorded points: dominate lambda (strictly for
/// Gt). Secondary objective prefers earlier schedulers, which keeps supports
/// small and deterministic.
inline std::vector<Rational> mix(const std::vector<std::vector<Rational>>& points,
                                 const std::vector<Rational>& lambda, Relation rel) {
    int k = static_cast<int>(lambda.size());
    int n = static_cast<int>(points.size());
    LinearProgram lp;
    std::vector<int> gvar(n);
    for (int j = 0; j < n; ++j) gvar[j] = lp.add_var("g" + std::to_string(j), Rational(0));
    std::map<int, Rational> norm;
    for (int j = 0; j < n; ++j) norm[gvar[j]] = 1;
    lp.add_constraint(norm, Cmp::Eq, Rational(1));
    int tvar = -1;
    if (rel == Relation::Gt) tvar = lp.add_var("t");
    for (int i = 0; i < k; ++i) {
        std::map<int, Rational> row;
        for (int j = 0; j < n; ++j) row[gvar[j]] = points[j][i];
        if (rel == Relation::Gt) {
            row[tvar] = -1;
            lp.add_constraint(row, Cmp::Ge, lambda[i]);
        } else {
            lp.add_constraint(row, Cmp::Ge, lambda[i]);
        }
    }
    if (rel == Relation::Gt) {
        lp.sense = Sense::Max;
        lp.objective[tvar] = 1;
    } else {
        lp.sense = Sense::Min;
        for (int j = 0; j < n; ++j) lp.objective[gvar[j]] = Rational(j);
    }
    LpResult res = lp_solve(lp);
    if (res.status != LpStatus::Optimal || (rel == Relation::Gt && res.value <= 0))
        throw reachability_error("mixture LP failed");
    std::vector<Rational> g(n);
    for (int j = 0; j < n; ++j) g[j] = res.assignment[gvar[j]];
    return g;
}

}  // namespace reach_detail

inline ExistsReachResult certify_exists_reach(const ReachabilityForm& rf,
                                              const std::vector<StateSet>& targets,
                                              const std::vector<Rational>& lambda, Relation rel) {
    int k = static_cast<int>(targets.size());
    ExistsReachResult result;

    if (rel == Relation::Geq) {
        bool all_zero = true;
        for (const auto& l : lambda)
            if (l > 0) all_zero = false;
        if (all_zero) {
            result.holds = true;  // y = 0 certifies thresholds of zero
            return result;
        }
    }

    std::vector<std::vector<Rational>> points;
    std::vector<Policy> schedulers;
    while (true) {
        ++result.rounds;
        if (result.rounds > 100000) throw reachability_error("achievable-set refinement diverged");
        auto sep = reach_detail::separate(points, lambda, rel);
        if (!sep.found) break;  // lambda is dominated by the achieved points

        std::map<StateId, Rational> weights;
        for (int i = 0; i < k; ++i)
            for (StateId f : targets[i]) weights[f] += sep.z[i];
        auto [policy, value] = reach_detail::optimal_policy(rf, weights);

        std::vector<Rational> q(k);
        for (int i = 0; i < k; ++i) {
            auto v = reach_detail::policy_values(rf, policy, reach_detail::dirac_rewards(targets[i]));
            q[i] = rf.is_transient(rf.mdp.initial())
                       ? v.at(rf.mdp.initial())
                       : (targets[i].count(rf.mdp.initial()) ? Rational(1) : Rational(0));
        }
        Rational zq = 0, zl = 0;
        for (int i = 0; i < k; ++i) {
            zq += sep.z[i] * q[i];
            zl += sep.z[i] * lambda[i];
        }
        bool failed = rel == Relation::Geq ? zq < zl : zq <= zl;
        if (failed) {
            result.holds = false;
            FarkasXZ no;
            no.z = sep.z;
            for (StateId s : rf.transient) no.x[s] = value.at(s);
            result.no_cert = std::move(no);
            return result;
        }
        points.push_back(q);
        schedulers.push_back(policy);
    }

    result.holds = true;
    auto gammas = reach_detail::mix(points, lambda, rel);
    FarkasY y;
    for (std::size_t j = 0; j < schedulers.size(); ++j) {
        if (gammas[j] == 0) continue;
        auto visits = reach_detail::policy_visits(rf, schedulers[j]);
        for (const auto& [s, xi] : visits) {
            if (xi == 0) continue;
            y.y[{s, schedulers[j].at(s)}] += gammas[j] * xi;
        }
        result.policies.push_back(schedulers[j]);
        result.gammas.push_back(gammas[j]);
    }
    for (auto it = y.y.begin(); it != y.y.end();)
        it = it->second == 0 ? y.y.erase(it) : std::next(it);
    result.y = std::move(y);
    return result;
}

struct ForallReachResult {
    bool holds = false;
    FarkasXZ xz;      // on holds: H membership over the given targets
    FarkasY dual_y;   // on failure: existential certificate for the complement query
    std::vector<StateSet> dual_targets;
    std::vector<Rational> dual_lambda;
    Relation dual_rel = Relation::Gt;
};

/// Decides the universal disjunctive query by testing its dual existential
/// query over complemented targets; converts the refutation certificate into
/// H membership. The form must be proper and EC-free.
inline ForallReachResult certify_forall_reach(const ReachabilityForm& rf,
                                              const std::vector<StateSet>& targets,
                                              const std::vector<Rational>& lambda, Relation rel) {
    if (!rf.mdp.proper())
        throw reachability_error("universal certification requires a proper reachability form");
    int k = static_cast<int>(targets.size());
    ForallReachResult result;
    std::vector<StateSet> complements(k);
    for (int i = 0; i < k; ++i)
        for (StateId f : rf.frontier)
            if (!targets[i].count(f)) complements[i].insert(f);
    std::vector<Rational> dual_lambda(k);
    for (int i = 0; i < k; ++i) dual_lambda[i] = Rational(1) - lambda[i];
    Relation dual_rel = rel == Relation::Geq ? Relation::Gt : Relation::Geq;

    ExistsReachResult dual = certify_exists_reach(rf, complements, dual_lambda, dual_rel);
    if (dual.holds) {
        result.holds = false;
        result.dual_y = dual.y;
        result.dual_targets = complements;
        result.dual_lambda = dual_lambda;
        result.dual_rel = dual_rel;
        return result;
    }
    result.holds = true;
    Rational c = 0;
    for (const auto& zi : dual.no_cert.z) c += zi;
    FarkasXZ xz;
    xz.z = dual.no_cert.z;
    for (StateId s : rf.transient) xz.x[s] = c - dual.no_cert.x.at(s);
    result.xz = std::move(xz);
    return result;
}

// ---------------------------------------------------------------------------
// Modified all-state Farkas bounds via primal/dual LP pairs; the duality gap
// bounds the pointwise error.
// ---------------------------------------------------------------------------

enum class ReachObjective { Max, Min };

struct AllStateBounds {
    std::map<StateId, Rational> lower, upper;
    Rational delta;
    std::map<StateId, Rational> primal_x;
    std::map<StateActionPair, Rational> dual_y;
};

inline AllStateBounds all_state_bounds(const ReachabilityForm& rf, ReachObjective objective,
                                       const StateSet& target) {
    if (objective == ReachObjective::Min) {
        // The zero set is certified through the MEC partition; in an EC-free
        // form every transient state forms a trivial singleton.
        auto mec = generate_mec_certificate(rf.mdp, mec_decomposition(rf.mdp));
        if (!mec || !validate_mec_certificate(rf.mdp, *mec))
            throw reachability_error("min-side bounds need a valid MEC certificate");
        for (const auto& block : mec->partition.blocks)
            if (!is_trivial_block(rf.mdp, block) && !rf.frontier.count(*block.begin()))
                throw reachability_error("min-side bounds need an EC-free form");
    }
    std::map<StateId, int> idx;
    LinearProgram primal;
    for (StateId s : rf.transient)
        idx[s] = primal.add_var("x_" + rf.mdp.state_name(s), Rational(0));
    for (const auto& sa : rf.en) {
        std::map<int, Rational> row;
        row[idx.at(sa.first)] += 1;
        for (const auto& [t, p] : rf.mdp.dist(sa.first, sa.second))
            if (rf.is_transient(t)) row[idx.at(t)] -= p;
        Rational hit = rf.mdp.prob_into(sa.first, sa.second, target);
        primal.add_constraint(row, objective == ReachObjective::Max ? Cmp::Ge : Cmp::Le, hit);
    }
    primal.sense = objective == ReachObjective::Max ? Sense::Min : Sense::Max;
    for (StateId s : rf.transient) primal.objective[idx.at(s)] = 1;
    LpResult pres = lp_solve(primal);
    if (pres.status != LpStatus::Optimal) throw reachability_error("primal bound LP failed");

    LinearProgram dual;
    std::map<StateActionPair, int> yidx;
    for (const auto& sa : rf.en)
        yidx[sa] = dual.add_var(
            "y_" + rf.mdp.state_name(sa.first) + "." + rf.mdp.action_name(sa.second), Rational(0));
    for (StateId s : rf.transient) {
        std::map<int, Rational> row;
        for (ActionId a : rf.mdp.actions_of(s)) row[yidx.at({s, a})] += 1;
        for (const auto& sa : rf.en) {
            Rational p = rf.mdp.prob(sa.first, sa.second, s);
            if (p != 0) row[yidx.at(sa)] -= p;
        }
        dual.add_constraint(row, objective == ReachObjective::Max ? Cmp::Le : Cmp::Ge, Rational(1));
    }
    dual.sense = objective == ReachObjective::Max ? Sense::Max : Sense::Min;
    for (const auto& sa : rf.en) {
        Rational hit = rf.mdp.prob_into(sa.first, sa.second, target);
        if (hit != 0) dual.objective[yidx.at(sa)] = hit;
    }
    LpResult dres = lp_solve(dual);
    if (dres.status != LpStatus::Optimal) throw reachability_error("dual bound LP failed");

    AllStateBounds out;
    Rational primal_total = pres.value;
    Rational dual_total = dres.value;
    out.delta = primal_total >= dual_total ? primal_total - dual_total : dual_total - primal_total;
    for (StateId s : rf.transient) {
        Rational x = pres.assignment[idx.at(s)];
        out.primal_x[s] = x;
        if (objective == ReachObjective::Max) {
            out.lower[s] = x - out.delta;
            out.upper[s] = x;
        } else {
            out.lower[s] = x;
            out.upper[s] = x + out.delta;
        }
    }
    for (const auto& sa : rf.en) out.dual_y[sa] = dres.assignment[yidx.at(sa)];
    return out;
}

}  // namespace certimdp

#endif

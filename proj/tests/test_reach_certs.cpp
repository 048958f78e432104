#include <catch2/catch_amalgamated.hpp>

#include "certimdp/ec_analysis.hpp"
#include "certimdp/quotient.hpp"
#include "certimdp/reach_certs.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace certimdp;

namespace {

// The running-example quotient as a reachability form, with targets
// G_1 = {bot{1}}, G_2 = {bot{2}} and their complements.
struct QuotientFixture {
    QuotientMdp q;
    ReachabilityForm rf;
    std::vector<StateSet> reach, co_reach;
};

QuotientFixture running_quotient() {
    Mdp m = fixtures::running_example();
    auto props = fixtures::running_properties(m);
    Partition part = mec_decomposition(m);
    IndexSet istar = compute_index_sets(m, part, props);
    std::set<std::pair<int, std::set<int>>> rel;
    for (int b = 0; b < 3; ++b)
        for (const auto& indices : istar.closure_of(b)) rel.insert({b, indices});
    QuotientFixture f;
    f.q = build_quotient(m, part, rel);
    auto t = quotient_targets(f.q, 2);
    f.reach = t.reach;
    f.co_reach = t.co_reach;
    f.rf = to_reachability_form(f.q.mdp, f.reach);
    return f;
}

// Random EC-free reachability form: a DAG-ish transient part plus absorbing
// goals. Used for oracle comparisons.
struct RandomRf {
    ReachabilityForm rf;
    std::vector<StateSet> targets;
};

RandomRf random_reach_form(oracle::Rng& rng, int max_transient, int num_targets) {
    int n = 2 + rng.below(max_transient - 1);
    std::vector<TransitionTriple> triples;
    int sinks = num_targets + 1;  // targets plus a dud sink
    auto sink_name = [](int i) { return "f" + std::to_string(i); };
    for (int i = 0; i < sinks; ++i)
        triples.push_back({sink_name(i), "loop", sink_name(i), Rational(1)});
    for (int s = 0; s < n; ++s) {
        int acts = 1 + rng.below(3);
        for (int a = 0; a < acts; ++a) {
            // Forward edges only (to higher transient states or sinks) keep
            // the form EC-free by construction.
            std::string an = "a" + std::to_string(a);
            int fan = 1 + rng.below(2);
            Rational total = 0;
            std::set<std::string> used;
            for (int e = 0; e < fan; ++e) {
                Rational p = e + 1 == fan ? Rational(1) - total : make_rational(1, 2);
                if (p <= 0) continue;
                std::string dst;
                int pick = rng.below(n - s + sinks);
                if (pick < n - s - 1)
                    dst = "t" + std::to_string(s + 1 + pick);
                else
                    dst = sink_name(rng.below(sinks));
                if (used.count(dst)) {
                    for (auto& tr : triples)
                        if (tr.src == "t" + std::to_string(s) && tr.action == an && tr.dst == dst)
                            tr.prob += p;
                } else {
                    used.insert(dst);
                    triples.push_back({"t" + std::to_string(s), an, dst, p});
                }
                total += p;
            }
        }
    }
    Mdp m = build_mdp(triples, "t0");
    RandomRf out;
    out.targets.resize(num_targets);
    for (int i = 0; i < num_targets; ++i) out.targets[i] = {m.state_by_name(sink_name(i))};
    out.rf = to_reachability_form(m, out.targets);
    return out;
}

// Oracle: achievable points of deterministic memoryless schedulers.
std::vector<std::vector<Rational>> rf_scheduler_points(const ReachabilityForm& rf,
                                                       const std::vector<StateSet>& targets) {
    std::vector<StateId> states = rf.transient;
    std::vector<std::vector<ActionId>> choices;
    for (StateId s : states) choices.push_back(rf.mdp.actions_of(s));
    std::vector<std::size_t> pick(states.size(), 0);
    std::vector<std::vector<Rational>> points;
    while (true) {
        oracle::Chain c;
        c.n = rf.mdp.state_count();
        c.rows.resize(c.n);
        for (std::size_t i = 0; i < states.size(); ++i) {
            for (const auto& [t, p] : rf.mdp.dist(states[i], choices[i][pick[i]]))
                c.rows[states[i]][t] += p;
        }
        for (StateId f : rf.frontier) c.rows[f][f] = 1;
        std::vector<Rational> point;
        for (const auto& g : targets) {
            std::set<int> goal(g.begin(), g.end());
            auto probs = oracle::chain_reach(c, goal);
            point.push_back(rf.mdp.initial() < c.n ? probs[rf.mdp.initial()] : Rational(0));
        }
        points.push_back(point);
        int i = static_cast<int>(states.size()) - 1;
        while (i >= 0) {
            if (++pick[i] < choices[i].size()) break;
            pick[i] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return points;
}

}  // namespace

TEST_CASE("reachability form construction and failure modes") {
    auto f = running_quotient();
    REQUIRE(f.rf.frontier.size() == 3);
    REQUIRE(f.rf.transient.size() == 3);

    // Non-absorbing target.
    Mdp m = fixtures::running_example();
    REQUIRE_THROWS_AS(to_reachability_form(m, {{m.state_by_name("s1")}}), reachability_error);

    // An EC outside the frontier errors when EC-freeness is required.
    Mdp chain = build_mdp({{"u", "a", "v", Rational(1)},
                           {"v", "a", "u", Rational(1)},
                           {"u", "b", "g", Rational(1)},
                           {"g", "a", "g", Rational(1)}},
                          "u");
    REQUIRE_THROWS_AS(to_reachability_form(chain, {{chain.state_by_name("g")}}),
                      reachability_error);
    REQUIRE_NOTHROW(to_reachability_form(chain, {{chain.state_by_name("g")}}, false));

    // Plain chain into a sink is fine.
    Mdp ok = build_mdp({{"u", "a", "g", Rational(1)}, {"g", "a", "g", Rational(1)}}, "u");
    REQUIRE_NOTHROW(to_reachability_form(ok, {{ok.state_by_name("g")}}));
}

TEST_CASE("exists certification on the running example quotient") {
    auto f = running_quotient();
    std::vector<Rational> lambda = {make_rational(1, 4), make_rational(3, 4)};
    auto res = certify_exists_reach(f.rf, f.reach, lambda, Relation::Geq);
    REQUIRE(res.holds);
    REQUIRE(validate_farkas_y(f.rf, f.reach, res.y, lambda, Relation::Geq).ok);

    // Mass into bot{1} and bot{2} meets the thresholds.
    Rational into1 = 0, into2 = 0;
    for (const auto& [sa, v] : res.y.y) {
        into1 += v * f.rf.mdp.prob_into(sa.first, sa.second, f.reach[0]);
        into2 += v * f.rf.mdp.prob_into(sa.first, sa.second, f.reach[1]);
    }
    REQUIRE(into1 >= make_rational(1, 4));
    REQUIRE(into2 >= make_rational(3, 4));

    // (3/4, 3/4) is not achievable: the separating certificate validates the
    // reversed system.
    std::vector<Rational> high = {make_rational(3, 4), make_rational(3, 4)};
    auto no = certify_exists_reach(f.rf, f.reach, high, Relation::Geq);
    REQUIRE_FALSE(no.holds);
    // x(init) < lambda . z and A x >= T z by construction; spot-check rows.
    Rational bound = 0;
    for (int i = 0; i < 2; ++i) bound += high[i] * no.no_cert.z[i];
    REQUIRE(no.no_cert.x.at(f.rf.mdp.initial()) < bound);
    for (const auto& sa : f.rf.en) {
        Rational rhs = 0;
        for (const auto& [t, p] : f.rf.mdp.dist(sa.first, sa.second))
            if (f.rf.is_transient(t)) rhs += p * no.no_cert.x.at(t);
        for (int i = 0; i < 2; ++i)
            rhs += no.no_cert.z[i] * f.rf.mdp.prob_into(sa.first, sa.second, f.reach[i]);
        REQUIRE(no.no_cert.x.at(sa.first) >= rhs);
    }

    // Threshold zero holds with the empty certificate.
    auto zero = certify_exists_reach(f.rf, f.reach, {Rational(0), Rational(0)}, Relation::Geq);
    REQUIRE(zero.holds);
    REQUIRE(zero.y.y.empty());
    REQUIRE(validate_farkas_y(f.rf, f.reach, zero.y, {Rational(0), Rational(0)}, Relation::Geq).ok);
}

TEST_CASE("forall certification on the running example quotient") {
    auto f = running_quotient();
    std::vector<Rational> lambda = {make_rational(1, 4), make_rational(1, 4)};
    auto res = certify_forall_reach(f.rf, f.co_reach, lambda, Relation::Geq);
    REQUIRE(res.holds);
    REQUIRE(validate_farkas_xz(f.rf, f.co_reach, res.xz, lambda, Relation::Geq).ok);

    // k = 1 with the whole frontier as target and threshold one.
    std::vector<StateSet> whole = {f.rf.frontier};
    auto certain = certify_forall_reach(f.rf, whole, {Rational(1)}, Relation::Geq);
    REQUIRE(certain.holds);
    REQUIRE(validate_farkas_xz(f.rf, whole, certain.xz, {Rational(1)}, Relation::Geq).ok);
}

TEST_CASE("farkas validators reject broken certificates") {
    auto f = running_quotient();
    std::vector<Rational> lambda = {make_rational(1, 4), make_rational(3, 4)};
    auto res = certify_exists_reach(f.rf, f.reach, lambda, Relation::Geq);
    REQUIRE(res.holds);

    FarkasY neg = res.y;
    neg.y.begin()->second = -neg.y.begin()->second;
    auto v = validate_farkas_y(f.rf, f.reach, neg, lambda, Relation::Geq);
    REQUIRE_FALSE(v.ok);
    REQUIRE(v.reason.find("nonnegativity") == 0);

    auto forall = certify_forall_reach(f.rf, f.co_reach, {make_rational(1, 4), make_rational(1, 4)},
                                       Relation::Geq);
    FarkasXZ scaled = forall.xz;
    for (auto& [s, x] : scaled.x) x *= 2;
    // Doubling x breaks some Bellman row or the threshold; either way the
    // row-wise recheck decides.
    auto vx = validate_farkas_xz(f.rf, f.co_reach, scaled,
                                 {make_rational(1, 4), make_rational(1, 4)}, Relation::Geq);
    bool any_row_broken = false;
    for (const auto& sa : f.rf.en) {
        Rational rhs = 0;
        for (const auto& [t, p] : f.rf.mdp.dist(sa.first, sa.second))
            if (f.rf.is_transient(t)) rhs += p * scaled.x.at(t);
        for (int i = 0; i < 2; ++i)
            rhs += forall.xz.z[i] * f.rf.mdp.prob_into(sa.first, sa.second, f.co_reach[i]);
        if (scaled.x.at(sa.first) > rhs) any_row_broken = true;
    }
    REQUIRE(vx.ok == !any_row_broken);

    FarkasXZ zerod = forall.xz;
    for (auto& z : zerod.z) z = 0;
    REQUIRE(validate_farkas_xz(f.rf, f.co_reach, zerod,
                               {make_rational(1, 4), make_rational(1, 4)}, Relation::Geq)
                .reason == "z-zero");
}

TEST_CASE("duality dichotomy against the achievable-set oracle") {
    oracle::Rng rng(111);
    for (int inst = 0; inst < 40; ++inst) {
        auto r = random_reach_form(rng, 5, 2);
        auto points = rf_scheduler_points(r.rf, r.targets);
        std::vector<Rational> lambda = {oracle::random_threshold(rng), oracle::random_threshold(rng)};
        Relation rel = rng.chance(1, 2) ? Relation::Geq : Relation::Gt;

        auto exists = certify_exists_reach(r.rf, r.targets, lambda, rel);
        bool truth = oracle::dominated(points, lambda, rel);
        REQUIRE(exists.holds == truth);
        if (exists.holds)
            REQUIRE(validate_farkas_y(r.rf, r.targets, exists.y, lambda, rel).ok);

        // The dual universal query over complement targets with complemented
        // relation/threshold holds exactly when the existential fails.
        std::vector<StateSet> complements(2);
        for (int i = 0; i < 2; ++i)
            for (StateId fstate : r.rf.frontier)
                if (!r.targets[i].count(fstate)) complements[i].insert(fstate);
        std::vector<Rational> co_lambda = {Rational(1) - lambda[0], Rational(1) - lambda[1]};
        Relation co_rel = rel == Relation::Geq ? Relation::Gt : Relation::Geq;
        auto forall = certify_forall_reach(r.rf, complements, co_lambda, co_rel);
        REQUIRE(forall.holds == !exists.holds);
        if (forall.holds)
            REQUIRE(validate_farkas_xz(r.rf, complements, forall.xz, co_lambda, co_rel).ok);
        else
            REQUIRE(validate_farkas_y(r.rf, forall.dual_targets, forall.dual_y, forall.dual_lambda,
                                      forall.dual_rel)
                        .ok);
    }
}

TEST_CASE("visiting times of the mixture match the flow equations") {
    oracle::Rng rng(113);
    int verified = 0;
    for (int inst = 0; inst < 25; ++inst) {
        auto r = random_reach_form(rng, 5, 2);
        std::vector<Rational> lambda = {oracle::random_threshold(rng),
                                        oracle::random_threshold(rng)};
        auto res = certify_exists_reach(r.rf, r.targets, lambda, Relation::Geq);
        if (!res.holds || res.policies.empty()) continue;
        ++verified;
        // Independent visiting-time computation per recorded policy.
        std::map<StateId, Rational> expected;
        for (std::size_t j = 0; j < res.policies.size(); ++j) {
            oracle::Chain c;
            c.n = r.rf.mdp.state_count();
            c.rows.resize(c.n);
            for (const auto& [s, a] : res.policies[j])
                for (const auto& [t, p] : r.rf.mdp.dist(s, a)) c.rows[s][t] += p;
            // visits(s) solves xi = delta_init + P^T xi over transient states.
            std::vector<StateId> tr = r.rf.transient;
            std::map<StateId, int> idx;
            for (std::size_t i = 0; i < tr.size(); ++i) idx[tr[i]] = static_cast<int>(i);
            std::vector<std::vector<Rational>> a(tr.size(),
                                                 std::vector<Rational>(tr.size(), Rational(0)));
            std::vector<Rational> b(tr.size(), Rational(0));
            for (std::size_t i = 0; i < tr.size(); ++i) a[i][i] = 1;
            for (StateId s : tr)
                for (const auto& [t, p] : c.rows[s])
                    if (idx.count(t)) a[idx.at(t)][idx.at(s)] -= p;
            b[idx.at(r.rf.mdp.initial())] = 1;
            auto sol = oracle::gauss(a, b);
            REQUIRE(sol.has_value());
            for (std::size_t i = 0; i < tr.size(); ++i)
                expected[tr[i]] += res.gammas[j] * (*sol)[i];
        }
        std::map<StateId, Rational> got;
        for (const auto& [sa, v] : res.y.y) got[sa.first] += v;
        for (const auto& [s, v] : expected) {
            auto it = got.find(s);
            Rational g = it == got.end() ? Rational(0) : it->second;
            REQUIRE(g == v);
        }
    }
    REQUIRE(verified >= 5);
}

TEST_CASE("all-state bounds pinch at LP optima") {
    // Chain splitting half/half into goal and sink.
    Mdp m = build_mdp({{"s0", "a", "goal", make_rational(1, 2)},
                       {"s0", "a", "sink", make_rational(1, 2)},
                       {"goal", "l", "goal", Rational(1)},
                       {"sink", "l", "sink", Rational(1)}},
                      "s0");
    StateSet goal = {m.state_by_name("goal")};
    auto rf = to_reachability_form(m, {goal});
    auto bounds = all_state_bounds(rf, ReachObjective::Max, goal);
    REQUIRE(bounds.delta == 0);
    REQUIRE(bounds.lower.at(m.state_by_name("s0")) == make_rational(1, 2));
    REQUIRE(bounds.upper.at(m.state_by_name("s0")) == make_rational(1, 2));

    auto min_bounds = all_state_bounds(rf, ReachObjective::Min, goal);
    REQUIRE(min_bounds.delta == 0);
    REQUIRE(min_bounds.lower.at(m.state_by_name("s0")) == make_rational(1, 2));

    // Quotient of the running example: max into bot{2} from {s0} is 1.
    auto f = running_quotient();
    auto qb = all_state_bounds(f.rf, ReachObjective::Max, f.reach[1]);
    REQUIRE(qb.delta == 0);
    REQUIRE(qb.upper.at(f.rf.mdp.initial()) == 1);
}

TEST_CASE("suboptimal feasible pairs bracket the exact value") {
    Mdp m = build_mdp({{"s0", "a", "s1", make_rational(1, 2)},
                       {"s0", "a", "sink", make_rational(1, 2)},
                       {"s1", "a", "goal", make_rational(1, 2)},
                       {"s1", "a", "sink", make_rational(1, 2)},
                       {"goal", "l", "goal", Rational(1)},
                       {"sink", "l", "sink", Rational(1)}},
                      "s0");
    StateSet goal = {m.state_by_name("goal")};
    auto rf = to_reachability_form(m, {goal});
    auto bounds = all_state_bounds(rf, ReachObjective::Max, goal);

    // Exact values from the oracle chain solver.
    oracle::Chain c;
    c.n = m.state_count();
    c.rows.resize(c.n);
    for (const auto& [sa, dist] : m.transitions())
        for (const auto& [t, p] : dist) c.rows[sa.first][t] += p;
    auto exact = oracle::chain_reach(c, {m.state_by_name("goal")});
    for (StateId s : rf.transient) {
        REQUIRE(bounds.lower.at(s) <= exact[s]);
        REQUIRE(exact[s] <= bounds.upper.at(s));
    }
    // A deliberately loosened primal (x + 1/8 stays feasible for max) widens
    // the gap but still brackets.
    REQUIRE(bounds.delta == 0);
}

TEST_CASE("achievable refinement terminates within the vertex budget") {
    oracle::Rng rng(117);
    for (int inst = 0; inst < 10; ++inst) {
        auto r = random_reach_form(rng, 5, 2);
        auto res = certify_exists_reach(r.rf, r.targets,
                                        {make_rational(1, 4), make_rational(1, 4)}, Relation::Geq);
        // Rounds are bounded by the number of distinct scheduler points plus
        // the closing round.
        auto points = rf_scheduler_points(r.rf, r.targets);
        std::set<std::vector<Rational>> distinct(points.begin(), points.end());
        REQUIRE(res.rounds <= static_cast<long>(distinct.size()) + 1);
    }
}

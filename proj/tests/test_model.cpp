#include <catch2/catch_amalgamated.hpp>

#include "certimdp/automata.hpp"
#include "certimdp/model.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace certimdp;

TEST_CASE("build_mdp on the running example") {
    Mdp m = fixtures::running_example();
    REQUIRE(m.state_count() == 5);
    REQUIRE(m.proper());
    REQUIRE(m.transitions().size() == 6);  // |En| = 6
    REQUIRE(m.prob(m.state_by_name("s0"), 0, m.state_by_name("s1")) == make_rational(1, 2));
}

TEST_CASE("build_mdp smallest proper and sub-stochastic") {
    Mdp tiny = build_mdp({{"s", "a", "s", Rational(1)}}, "s");
    REQUIRE(tiny.proper());
    Mdp sub = build_mdp({{"s", "a", "s", make_rational(1, 3)}}, "s");
    REQUIRE_FALSE(sub.proper());
}

TEST_CASE("build_mdp rejects bad inputs") {
    REQUIRE_THROWS_AS(build_mdp({{"s", "a", "s", make_rational(2, 3)},
                                 {"s", "a", "t", make_rational(2, 3)},
                                 {"t", "a", "t", Rational(1)}},
                                "s"),
                      model_error);
    REQUIRE_THROWS_AS(build_mdp({{"s", "a", "s", Rational(1)}, {"s", "a", "s", Rational(1)}}, "s"),
                      model_error);
    REQUIRE_THROWS_AS(build_mdp({{"s", "a", "s", Rational(0)}}, "s"), model_error);
}

TEST_CASE("sub_mdp keeps only fully contained pairs") {
    Mdp m = fixtures::running_example();
    StateSet d1 = {m.state_by_name("s1"), m.state_by_name("s2")};
    auto pairs = sub_mdp_pairs(m, d1);
    REQUIRE(pairs.size() == 3);  // (s1,b), (s2,c), (s2,d)

    auto all_pairs = sub_mdp_pairs(m, m.all_states());
    REQUIRE(all_pairs.size() == m.transitions().size());

    StateSet d2 = {m.state_by_name("s0"), m.state_by_name("s1")};
    REQUIRE(sub_mdp_pairs(m, d2).empty());
}

TEST_CASE("sub_mdp pair membership matches the support rule") {
    oracle::Rng rng(11);
    for (int i = 0; i < 30; ++i) {
        Mdp m = oracle::random_mdp(rng, 6, 3);
        for (const auto& d : oracle::subsets_of(m.all_states())) {
            auto pairs = sub_mdp_pairs(m, d);
            for (const auto& [sa, dist] : m.transitions()) {
                bool expected = d.count(sa.first) > 0 && m.row_sum(sa.first, sa.second) == 1;
                if (expected)
                    for (const auto& [t, p] : dist)
                        if (!d.count(t)) expected = false;
                REQUIRE(pairs.count(sa) == (expected ? 1u : 0u));
            }
        }
    }
}

TEST_CASE("induced subsystem drops mass without renormalizing") {
    Mdp m = fixtures::running_example();
    StateSet kept = {m.state_by_name("s0"), m.state_by_name("s1"), m.state_by_name("s2")};
    Mdp sub = induced_subsystem(m, kept);
    REQUIRE(sub.state_count() == 3);
    REQUIRE_FALSE(sub.proper());
    StateId s0 = sub.state_by_name("s0");
    REQUIRE(sub.row_sum(s0, 0) == make_rational(1, 2));  // only the s1 branch survives

    Mdp full = induced_subsystem(m, m.all_states());
    REQUIRE(full.proper());
    REQUIRE(full.transitions().size() == m.transitions().size());

    Mdp lonely = induced_subsystem(m, {m.state_by_name("s0")});
    REQUIRE(lonely.row_sum(0, 0) == 0);  // action a kept with total mass zero

    REQUIRE_THROWS_AS(induced_subsystem(m, {m.state_by_name("s1")}), model_error);
}

TEST_CASE("model text round trip") {
    Mdp m = fixtures::running_example();
    std::string text = emit_model_text(m);
    Mdp again = parse_model_text(text);
    REQUIRE(emit_model_text(again) == text);
    REQUIRE(again.state_count() == m.state_count());

    // Parsing a non-canonical file and re-emitting is idempotent from the
    // first emission on.
    Mdp c = parse_model_text("@initial u\nu 1/2 v\nu 1/2 u\nv 1/1 v\n");
    REQUIRE(is_dtmc(c));
    std::string canonical = emit_model_text(c);
    REQUIRE(emit_model_text(parse_model_text(canonical)) == canonical);
}

TEST_CASE("model json round trip") {
    Mdp m = fixtures::running_example();
    json j = model_to_json(m);
    Mdp again = model_from_json(j);
    REQUIRE(model_to_json(again) == j);
}

TEST_CASE("trap completion restores properness") {
    Mdp m = fixtures::running_example();
    Mdp sub = induced_subsystem(m, {m.state_by_name("s0"), m.state_by_name("s1"),
                                    m.state_by_name("s2")});
    Mdp comp = complete_with_trap(sub);
    REQUIRE(comp.proper());
    REQUIRE(comp.state_count() == sub.state_count() + 1);
    REQUIRE(complete_with_trap(m).state_count() == m.state_count());
}

TEST_CASE("product with a one-state automaton is isomorphic") {
    Mdp m = fixtures::running_example();
    DeterministicAutomaton acc;
    acc.states = {"q0"};
    acc.alphabet = m.state_names();
    acc.initial = 0;
    acc.delta = {std::vector<int>(m.state_count(), 0)};
    AcceptancePair pair;
    pair.inf = {0};
    acc.acceptance = {pair};
    acc.kind = AutomatonKind::Buchi;

    auto res = product(m, {acc}, {PropertyKind::Rabin});
    REQUIRE(res.product.state_count() == m.state_count());
    REQUIRE(res.lifted[0].pairs.size() == 1);
    REQUIRE(res.lifted[0].pairs[0].F.size() == static_cast<std::size_t>(m.state_count()));
}

TEST_CASE("product tracks a two-state automaton and preserves row sums") {
    Mdp m = fixtures::running_example();
    // Buchi automaton remembering whether the last letter was s1.
    DeterministicAutomaton aut;
    aut.states = {"q0", "q1"};
    aut.alphabet = m.state_names();
    aut.initial = 0;
    aut.delta.assign(2, std::vector<int>(m.state_count(), 0));
    for (int q = 0; q < 2; ++q)
        for (StateId s = 0; s < m.state_count(); ++s)
            aut.delta[q][s] = (m.state_name(s) == "s1") ? 1 : 0;
    AcceptancePair pair;
    pair.inf = {1};
    aut.acceptance = {pair};
    aut.kind = AutomatonKind::Buchi;

    auto res = product(m, {aut}, {PropertyKind::Rabin});
    REQUIRE(res.product.state_count() <= 10);
    for (const auto& [sa, dist] : res.product.transitions()) {
        StateId orig = res.back_map[sa.first];
        REQUIRE(res.product.row_sum(sa.first, sa.second) == m.row_sum(orig, sa.second));
    }
    for (StateId p = 0; p < res.product.state_count(); ++p) {
        bool in_f = res.lifted[0].pairs[0].F.count(p) > 0;
        bool last_was_s1 = res.product.state_name(p).find(",q1)") != std::string::npos;
        REQUIRE(in_f == last_was_s1);
    }
}

TEST_CASE("product with two automata stays within the size bound") {
    Mdp m = fixtures::running_example();
    auto make_tracker = [&](const std::string& watched) {
        DeterministicAutomaton aut;
        aut.states = {"q0", "q1"};
        aut.alphabet = m.state_names();
        aut.initial = 0;
        aut.delta.assign(2, std::vector<int>(m.state_count(), 0));
        for (int q = 0; q < 2; ++q)
            for (StateId s = 0; s < m.state_count(); ++s)
                aut.delta[q][s] = (m.state_name(s) == watched) ? 1 : 0;
        AcceptancePair pair;
        pair.inf = {1};
        aut.acceptance = {pair};
        aut.kind = AutomatonKind::Buchi;
        return aut;
    };
    auto res = product(m, {make_tracker("s1"), make_tracker("s3")},
                       {PropertyKind::Rabin, PropertyKind::Rabin});
    REQUIRE(res.product.state_count() <= m.state_count() * 4);
    for (const auto& [sa, dist] : res.product.transitions())
        REQUIRE(res.product.row_sum(sa.first, sa.second) ==
                m.row_sum(res.back_map[sa.first], sa.second));
}

#ifndef CERTIMDP_TEST_FIXTURES_HPP
#define CERTIMDP_TEST_FIXTURES_HPP

#include "certimdp/automata.hpp"
#include "certimdp/model.hpp"

namespace fixtures {

using namespace certimdp;

// The five-state running example: s0 branches into the cycle {s1,s2} and the
// cycle {s3,s4}.
inline Mdp running_example() {
    std::vector<TransitionTriple> t = {
        {"s0", "a", "s1", Rational(1, 2)}, {"s0", "a", "s3", Rational(1, 2)},
        {"s1", "b", "s2", Rational(1)},    {"s2", "c", "s1", Rational(1)},
        {"s2", "d", "s2", Rational(1)},    {"s3", "e", "s4", Rational(1)},
        {"s4", "f", "s3", Rational(1)},
    };
    return build_mdp(t, "s0");
}

// P1 = {({s1}, S), (S, {s4})}, P2 = {(S, {s2, s3, s4})}.
inline std::vector<RabinProperty> running_properties(const Mdp& m) {
    StateSet all = m.all_states();
    RabinProperty p1, p2;
    p1.kind = PropertyKind::Rabin;
    p2.kind = PropertyKind::Rabin;
    PropertyPair p1a, p1b, p2a;
    p1a.F = {m.state_by_name("s1")};
    p1a.E = all;
    p1b.F = all;
    p1b.E = {m.state_by_name("s4")};
    p1.pairs = {p1a, p1b};
    p2a.F = all;
    p2a.E = {m.state_by_name("s2"), m.state_by_name("s3"), m.state_by_name("s4")};
    p2.pairs = {p2a};
    return {p1, p2};
}

inline Query running_exists_query(const Mdp& m) {
    auto props = running_properties(m);
    Query q;
    q.quantifier = Quantifier::ExistsAnd;
    Objective o1{props[0], Relation::Geq, Rational(1, 4)};
    Objective o2{props[1], Relation::Geq, Rational(3, 4)};
    q.objectives = {o1, o2};
    return q;
}

// Phi from the witness example: forall schedulers, P>=1/4(FG not s1) or
// P>=1/4(GF not s2), expressed as Streett-kind pairs over M's states.
inline Query witness_forall_query(const Mdp& m) {
    StateSet all = m.all_states();
    Query q;
    q.quantifier = Quantifier::ForallOr;
    RabinProperty phi1, phi2;
    phi1.kind = PropertyKind::Streett;
    phi2.kind = PropertyKind::Streett;
    PropertyPair a, b;
    a.F = {m.state_by_name("s1")};
    a.E = all;
    phi1.pairs = {a};
    b.F = all;
    b.E = {m.state_by_name("s2")};
    phi2.pairs = {b};
    Objective o1{phi1, Relation::Geq, Rational(1, 4)};
    Objective o2{phi2, Relation::Geq, Rational(1, 4)};
    q.objectives = {o1, o2};
    return q;
}

}  // namespace fixtures

#endif

#include <catch2/catch_amalgamated.hpp>

#include "certimdp/ec_analysis.hpp"
#include "certimdp/quotient.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace certimdp;

namespace {

std::set<std::pair<int, std::set<int>>> closure_relation(const IndexSet& istar, int blocks) {
    std::set<std::pair<int, std::set<int>>> rel;
    for (int b = 0; b < blocks; ++b)
        for (const auto& indices : istar.closure_of(b)) rel.insert({b, indices});
    return rel;
}

}  // namespace

TEST_CASE("quotient of the running example matches the drawn picture") {
    Mdp m = fixtures::running_example();
    auto props = fixtures::running_properties(m);
    Partition part = mec_decomposition(m);
    IndexSet istar = compute_index_sets(m, part, props);
    QuotientMdp q = build_quotient(m, part, closure_relation(istar, 3));

    // Non-sink states: the three blocks; sinks: bot{}, bot{1}, bot{2}.
    REQUIRE(q.block_count() == 3);
    REQUIRE(q.sinks.size() == 3);
    REQUIRE(q.sink_by_index.count({}));
    REQUIRE(q.sink_by_index.count({0}));
    REQUIRE(q.sink_by_index.count({1}));
    REQUIRE_FALSE(q.sink_by_index.count({0, 1}));

    // Block {s0} keeps action a with mass 1/2 to each cycle block.
    StateId b0 = q.block_state(0);
    auto acts0 = q.mdp.actions_of(b0);
    REQUIRE(acts0.size() == 1);
    const auto& d = q.mdp.dist(b0, acts0[0]);
    REQUIRE(d.at(q.block_state(1)) == make_rational(1, 2));
    REQUIRE(d.at(q.block_state(2)) == make_rational(1, 2));

    // D1 has taus to all three sinks, D2 to bot{} and bot{2}.
    auto tau_targets = [&](int block) {
        std::set<std::set<int>> out;
        for (ActionId a : q.mdp.actions_of(q.block_state(block))) {
            const auto& dist = q.mdp.dist(q.block_state(block), a);
            if (dist.size() == 1 && q.sink_index.count(dist.begin()->first))
                out.insert(q.sink_index.at(dist.begin()->first));
        }
        return out;
    };
    REQUIRE(tau_targets(1) == std::set<std::set<int>>{{}, {0}, {1}});
    REQUIRE(tau_targets(2) == std::set<std::set<int>>{{}, {1}});
    REQUIRE(tau_targets(0).empty());

    REQUIRE(quotient_ec_free(q));

    auto targets = quotient_targets(q, 2);
    REQUIRE(targets.reach[0] == StateSet{q.sink_by_index.at({0})});
    REQUIRE(targets.reach[1] == StateSet{q.sink_by_index.at({1})});
    REQUIRE(targets.co_reach[0] ==
            StateSet{q.sink_by_index.at({}), q.sink_by_index.at({1})});
    REQUIRE(targets.co_reach[1] ==
            StateSet{q.sink_by_index.at({}), q.sink_by_index.at({0})});
    for (int i = 0; i < 2; ++i) {
        StateSet all;
        all.insert(targets.reach[i].begin(), targets.reach[i].end());
        all.insert(targets.co_reach[i].begin(), targets.co_reach[i].end());
        REQUIRE(all == q.sinks);
        for (StateId s : targets.reach[i]) REQUIRE_FALSE(targets.co_reach[i].count(s));
    }
}

TEST_CASE("singleton partition quotient drops only self-loop actions") {
    Mdp m = fixtures::running_example();
    Partition singletons;
    for (StateId s = 0; s < m.state_count(); ++s) singletons.blocks.push_back({s});
    QuotientMdp q = build_quotient(m, singletons, {});
    // Only (s2, d) is class-internal; everything else survives.
    REQUIRE(q.mdp.transitions().size() == m.transitions().size() - 1);
    REQUIRE(q.sinks.empty());
}

TEST_CASE("one-EC MDP quotient is a two-state chain") {
    Mdp c = parse_model_text("@initial u\nu 1/2 v\nu 1/2 u\nv 1/1 u\n");
    Partition part = mec_decomposition(c);
    QuotientMdp q = build_quotient(c, part, {{0, {}}});
    REQUIRE(q.block_count() == 1);
    REQUIRE(q.sinks.size() == 1);
    auto acts = q.mdp.actions_of(q.block_state(0));
    REQUIRE(acts.size() == 1);  // only the tau
    REQUIRE(q.mdp.dist(q.block_state(0), acts[0]).begin()->first == *q.sinks.begin());
}

TEST_CASE("quotient block rows preserve action mass") {
    oracle::Rng rng(91);
    for (int inst = 0; inst < 30; ++inst) {
        Mdp m = oracle::random_mdp(rng, 6, 3);
        Partition part = mec_decomposition(m);
        std::vector<int> block_of(m.state_count());
        for (std::size_t b = 0; b < part.blocks.size(); ++b)
            for (StateId s : part.blocks[b]) block_of[s] = static_cast<int>(b);
        std::set<std::pair<int, std::set<int>>> rel;
        for (std::size_t b = 0; b < part.blocks.size(); ++b)
            if (!is_trivial_block(m, part.blocks[b])) rel.insert({static_cast<int>(b), {}});
        QuotientMdp q = build_quotient(m, part, rel);
        for (const auto& [qsa, origin] : q.action_origin) {
            REQUIRE(q.mdp.row_sum(qsa.first, qsa.second) ==
                    m.row_sum(origin.first, origin.second));
        }
        // With tau on every non-trivial MEC the quotient has no ECs left.
        REQUIRE(quotient_ec_free(q));
        // Every non-sink state reaches the sinks under every scheduler; the
        // EC-freeness check is exactly that certificate.
    }
}

TEST_CASE("index relation referencing an unknown block errors") {
    Mdp m = fixtures::running_example();
    Partition part = mec_decomposition(m);
    REQUIRE_THROWS_AS(build_quotient(m, part, {{7, {}}}), model_error);
}

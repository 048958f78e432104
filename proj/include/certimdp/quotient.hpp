#ifndef CERTIMDP_QUOTIENT_HPP
#define CERTIMDP_QUOTIENT_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "certimdp/component_certs.hpp"
#include "certimdp/model.hpp"

namespace certimdp {

/// MEC quotient: one state per block, absorbing sinks bot_I, and tau actions
/// wired according to the index relation. Action ids of retained pairs are
/// fresh per (state, action) so merged states cannot collide; the renaming is
/// recorded in action_origin.
struct QuotientMdp {
    Mdp mdp;
    std::vector<StateSet> block_states;                 // quotient block state -> original states
    std::map<StateId, std::set<int>> sink_index;        // sink state -> I
    std::map<std::set<int>, StateId> sink_by_index;     // I -> sink state
    std::map<StateActionPair, StateActionPair> action_origin;  // quotient pair -> original pair
    StateSet sinks;

    StateId block_state(int block) const { return static_cast<StateId>(block); }
    int block_count() const { return static_cast<int>(block_states.size()); }
};

/// Builds the quotient for a partition and an index relation given as
/// explicit (block, I) pairs. Sinks appear when referenced by a tau or listed
/// in extra_sinks.
inline QuotientMdp build_quotient(const Mdp& m, const Partition& part,
                                  const std::set<std::pair<int, std::set<int>>>& index_relation,
                                  const std::set<std::set<int>>& extra_sinks = {}) {
    if (!part.covers_exactly(m.state_count()))
        throw model_error("quotient requires a partition of the state space");
    for (const auto& [b, indices] : index_relation) {
        (void)indices;
        if (b < 0 || b >= static_cast<int>(part.blocks.size()))
            throw model_error("index relation references unknown block");
    }

    std::vector<int> block_of(m.state_count(), -1);
    for (std::size_t b = 0; b < part.blocks.size(); ++b)
        for (StateId s : part.blocks[b]) block_of[s] = static_cast<int>(b);

    // Sinks: those with an incoming tau, plus extras.
    std::set<std::set<int>> sink_sets = extra_sinks;
    for (const auto& [b, indices] : index_relation) {
        (void)b;
        sink_sets.insert(indices);
    }

    QuotientMdp q;
    std::vector<std::string> names;
    auto block_name = [&](int b) {
        std::string n = "{";
        bool first = true;
        for (StateId s : part.blocks[b]) {
            if (!first) n += ",";
            n += m.state_name(s);
            first = false;
        }
        return n + "}";
    };
    for (std::size_t b = 0; b < part.blocks.size(); ++b) {
        names.push_back(block_name(static_cast<int>(b)));
        q.block_states.push_back(part.blocks[b]);
    }
    auto sink_name = [](const std::set<int>& indices) {
        std::string n = "bot{";
        bool first = true;
        for (int i : indices) {
            if (!first) n += ",";
            n += std::to_string(i + 1);
            first = false;
        }
        return n + "}";
    };
    for (const auto& indices : sink_sets) {
        StateId id = static_cast<StateId>(names.size());
        names.push_back(sink_name(indices));
        q.sink_index[id] = indices;
        q.sink_by_index[indices] = id;
        q.sinks.insert(id);
    }

    std::vector<std::string> action_names;
    std::map<StateActionPair, Distribution> trans;

    auto leaving = detail::leaving_pairs(m, part, block_of);
    for (const auto& sa : leaving) {
        ActionId qa = static_cast<ActionId>(action_names.size());
        action_names.push_back(m.state_name(sa.first) + "." + m.action_name(sa.second));
        Distribution d;
        for (const auto& [t, p] : m.dist(sa.first, sa.second))
            d[block_of[t]] += p;
        StateId src = block_of[sa.first];
        trans[{src, qa}] = d;
        q.action_origin[{src, qa}] = sa;
    }
    for (const auto& [b, indices] : index_relation) {
        ActionId qa = static_cast<ActionId>(action_names.size());
        action_names.push_back("tau" + sink_name(indices).substr(3) + "@" + block_name(b));
        trans[{b, qa}] = {{q.sink_by_index.at(indices), Rational(1)}};
    }
    ActionId loop = static_cast<ActionId>(action_names.size());
    action_names.push_back("loop");
    for (StateId s : q.sinks) trans[{s, loop}] = {{s, Rational(1)}};

    StateId init = block_of[m.initial()];
    q.mdp = Mdp::from_parts(std::move(names), std::move(action_names), init, std::move(trans));
    return q;
}

struct QuotientTargets {
    std::vector<StateSet> reach;      // G_i: sinks whose index set contains i
    std::vector<StateSet> co_reach;   // bar G_i: sinks whose index set misses i
};

inline QuotientTargets quotient_targets(const QuotientMdp& q, int k) {
    QuotientTargets t;
    t.reach.assign(k, {});
    t.co_reach.assign(k, {});
    for (const auto& [sink, indices] : q.sink_index) {
        for (int i = 0; i < k; ++i) {
            if (indices.count(i))
                t.reach[i].insert(sink);
            else
                t.co_reach[i].insert(sink);
        }
    }
    return t;
}

/// No end component may survive among the non-sink states; Theorem-style
/// reductions rely on the sinks being reached almost surely.
inline bool quotient_ec_free(const QuotientMdp& q) {
    StateSet non_sink;
    for (StateId s = 0; s < q.mdp.state_count(); ++s)
        if (!q.sinks.count(s)) non_sink.insert(s);
    Partition part = mec_decomposition_restricted(q.mdp, non_sink, sub_mdp_pairs(q.mdp, non_sink));
    for (const auto& block : part.blocks)
        if (!sub_mdp_pairs(q.mdp, block).empty()) return false;
    return true;
}

}  // namespace certimdp

#endif

#ifndef CERTIMDP_MODEL_HPP
#define CERTIMDP_MODEL_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "certimdp/rational.hpp"

namespace certimdp {

using json = nlohmann::json;

using StateId = int;
using ActionId = int;
using StateSet = std::set<StateId>;
using StateActionPair = std::pair<StateId, ActionId>;
using Distribution = std::map<StateId, Rational>;

class model_error : public std::runtime_error {
public:
    explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

/// A partition of the state space into pairwise-disjoint blocks.
struct Partition {
    std::vector<StateSet> blocks;

    int block_of(StateId s) const {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (blocks[i].count(s)) return static_cast<int>(i);
        return -1;
    }

    bool covers_exactly(int num_states) const {
        std::set<StateId> seen;
        for (const auto& b : blocks) {
            for (StateId s : b) {
                if (s < 0 || s >= num_states) return false;
                if (!seen.insert(s).second) return false;  // overlap
            }
        }
        return static_cast<int>(seen.size()) == num_states;
    }
};

/// Finite label set with a total state labeling.
struct Labeling {
    std::vector<std::string> labels;
    std::vector<std::set<int>> map;  // state -> label ids

    static Labeling per_state(const std::vector<std::string>& state_names) {
        Labeling l;
        l.labels = state_names;
        l.map.resize(state_names.size());
        for (std::size_t s = 0; s < state_names.size(); ++s) l.map[s] = {static_cast<int>(s)};
        return l;
    }

    std::set<int> labels_of(const StateSet& states) const {
        std::set<int> out;
        for (StateId s : states) out.insert(map[s].begin(), map[s].end());
        return out;
    }
};

/// Exact-rational MDP with a partial transition function. Sub-stochastic rows
/// are first class: a subsystem simply drops probability mass.
class Mdp {
public:
    Mdp() = default;

    int state_count() const { return static_cast<int>(state_names_.size()); }
    StateId initial() const { return initial_; }
    bool proper() const { return proper_; }

    const std::string& state_name(StateId s) const { return state_names_.at(s); }
    const std::string& action_name(ActionId a) const { return action_names_.at(a); }
    const std::vector<std::string>& state_names() const { return state_names_; }
    const std::vector<std::string>& action_names() const { return action_names_; }

    StateId state_by_name(const std::string& n) const {
        auto it = state_index_.find(n);
        if (it == state_index_.end()) throw model_error("unknown state: " + n);
        return it->second;
    }
    bool has_state(const std::string& n) const { return state_index_.count(n) > 0; }

    const std::map<StateActionPair, Distribution>& transitions() const { return trans_; }

    bool enabled(StateId s, ActionId a) const { return trans_.count({s, a}) > 0; }

    const Distribution& dist(StateId s, ActionId a) const { return trans_.at({s, a}); }

    std::vector<ActionId> actions_of(StateId s) const {
        std::vector<ActionId> out;
        for (auto it = trans_.lower_bound({s, 0}); it != trans_.end() && it->first.first == s; ++it)
            out.push_back(it->first.second);
        return out;
    }

    Rational row_sum(StateId s, ActionId a) const {
        Rational total = 0;
        for (const auto& [t, p] : dist(s, a)) total += p;
        return total;
    }

    Rational prob(StateId s, ActionId a, StateId t) const {
        const auto& d = dist(s, a);
        auto it = d.find(t);
        return it == d.end() ? Rational(0) : it->second;
    }

    Rational prob_into(StateId s, ActionId a, const StateSet& targets) const {
        Rational total = 0;
        for (const auto& [t, p] : dist(s, a))
            if (targets.count(t)) total += p;
        return total;
    }

    bool absorbing(StateId s) const {
        auto acts = actions_of(s);
        if (acts.empty()) return false;
        for (ActionId a : acts) {
            const auto& d = dist(s, a);
            if (d.size() != 1 || d.begin()->first != s || d.begin()->second != 1) return false;
        }
        return true;
    }

    StateSet all_states() const {
        StateSet out;
        for (StateId s = 0; s < state_count(); ++s) out.insert(s);
        return out;
    }

    /// Raw constructor for internal use; validates nothing beyond ids.
    static Mdp from_parts(std::vector<std::string> state_names,
                          std::vector<std::string> action_names, StateId initial,
                          std::map<StateActionPair, Distribution> trans) {
        Mdp m;
        m.state_names_ = std::move(state_names);
        m.action_names_ = std::move(action_names);
        m.initial_ = initial;
        m.trans_ = std::move(trans);
        for (std::size_t i = 0; i < m.state_names_.size(); ++i)
            m.state_index_[m.state_names_[i]] = static_cast<StateId>(i);
        m.classify();
        return m;
    }

private:
    void classify() {
        proper_ = true;
        std::vector<bool> has_action(state_names_.size(), false);
        for (const auto& [sa, d] : trans_) {
            has_action[sa.first] = true;
            Rational total = 0;
            for (const auto& [t, p] : d) total += p;
            if (total != 1) proper_ = false;
        }
        for (bool h : has_action)
            if (!h) proper_ = false;
    }

    std::vector<std::string> state_names_;
    std::vector<std::string> action_names_;
    std::map<std::string, StateId> state_index_;
    StateId initial_ = 0;
    std::map<StateActionPair, Distribution> trans_;
    bool proper_ = true;
};

struct TransitionTriple {
    std::string src, action, dst;
    Rational prob;
};

/// Validates and assembles an MDP from transition triples. States and actions
/// get dense ids in order of first appearance (initial state first).
inline Mdp build_mdp(const std::vector<TransitionTriple>& triples, const std::string& initial) {
    std::vector<std::string> state_names, action_names;
    std::map<std::string, StateId> sidx;
    std::map<std::string, ActionId> aidx;
    auto intern_state = [&](const std::string& n) {
        auto it = sidx.find(n);
        if (it != sidx.end()) return it->second;
        StateId id = static_cast<StateId>(state_names.size());
        state_names.push_back(n);
        sidx[n] = id;
        return id;
    };
    auto intern_action = [&](const std::string& n) {
        auto it = aidx.find(n);
        if (it != aidx.end()) return it->second;
        ActionId id = static_cast<ActionId>(action_names.size());
        action_names.push_back(n);
        aidx[n] = id;
        return id;
    };

    StateId init = intern_state(initial);
    std::map<StateActionPair, Distribution> trans;
    for (const auto& t : triples) {
        if (t.prob <= 0 || t.prob > 1)
            throw model_error("probability out of (0,1]: " + rational_to_string(t.prob));
        StateId s = intern_state(t.src);
        StateId d = intern_state(t.dst);
        ActionId a = intern_action(t.action);
        auto& row = trans[{s, a}];
        if (row.count(d))
            throw model_error("duplicate triple: " + t.src + " " + t.action + " -> " + t.dst);
        row[d] = t.prob;
    }
    for (const auto& [sa, d] : trans) {
        Rational total = 0;
        for (const auto& [tgt, p] : d) total += p;
        if (total > 1)
            throw model_error("row sum exceeds 1 at (" + state_names[sa.first] + ", " +
                              action_names[sa.second] + ")");
    }
    return Mdp::from_parts(std::move(state_names), std::move(action_names), init, std::move(trans));
}

/// The sub-MDP M[D]: states D with the state-action pairs fully supported
/// inside D. States may end up action-less.
inline Mdp sub_mdp(const Mdp& m, const StateSet& domain) {
    std::map<StateActionPair, Distribution> trans;
    for (const auto& [sa, d] : m.transitions()) {
        if (!domain.count(sa.first)) continue;
        bool inside = true;
        for (const auto& [t, p] : d)
            if (!domain.count(t)) { inside = false; break; }
        if (inside && m.row_sum(sa.first, sa.second) == 1) trans[sa] = d;
    }
    // Keep the full state table so ids stay aligned with the parent model;
    // states outside the domain simply have no transitions and are marked by
    // the domain set kept alongside where needed.
    std::vector<std::string> names;
    std::map<StateId, StateId> remap;
    for (StateId s : domain) {
        remap[s] = static_cast<StateId>(names.size());
        names.push_back(m.state_name(s));
    }
    std::map<StateActionPair, Distribution> remapped;
    for (const auto& [sa, d] : trans) {
        Distribution nd;
        for (const auto& [t, p] : d) nd[remap.at(t)] = p;
        remapped[{remap.at(sa.first), sa.second}] = nd;
    }
    StateId init = domain.count(m.initial()) ? remap.at(m.initial()) : 0;
    return Mdp::from_parts(std::move(names), m.action_names(), init, std::move(remapped));
}

/// State-action pairs of M[D], expressed in the parent model's ids.
inline std::set<StateActionPair> sub_mdp_pairs(const Mdp& m, const StateSet& domain) {
    std::set<StateActionPair> out;
    for (const auto& [sa, d] : m.transitions()) {
        if (!domain.count(sa.first)) continue;
        if (m.row_sum(sa.first, sa.second) != 1) continue;
        bool inside = true;
        for (const auto& [t, p] : d)
            if (!domain.count(t)) { inside = false; break; }
        if (inside) out.insert(sa);
    }
    return out;
}

/// The induced subsystem M_{S'}: transitions leaving S' are dropped without
/// renormalization, so the result is typically sub-stochastic.
inline Mdp induced_subsystem(const Mdp& m, const StateSet& kept) {
    if (!kept.count(m.initial())) throw model_error("subsystem must contain the initial state");
    std::vector<std::string> names;
    std::map<StateId, StateId> remap;
    for (StateId s : kept) {
        remap[s] = static_cast<StateId>(names.size());
        names.push_back(m.state_name(s));
    }
    std::map<StateActionPair, Distribution> trans;
    for (const auto& [sa, d] : m.transitions()) {
        if (!kept.count(sa.first)) continue;
        Distribution nd;
        for (const auto& [t, p] : d)
            if (kept.count(t)) nd[remap.at(t)] = p;
        trans[{remap.at(sa.first), sa.second}] = nd;  // possibly empty row
    }
    return Mdp::from_parts(std::move(names), m.action_names(), remap.at(m.initial()),
                           std::move(trans));
}

/// Appendix-style bottom completion: adds an explicit trap state absorbing
/// all missing probability mass. Identity on proper MDPs (no state added).
inline Mdp complete_with_trap(const Mdp& m, const std::string& trap_name = "__bot") {
    if (m.proper()) return m;
    std::vector<std::string> names = m.state_names();
    if (m.has_state(trap_name)) throw model_error("trap name collides: " + trap_name);
    StateId trap = static_cast<StateId>(names.size());
    names.push_back(trap_name);
    std::vector<std::string> actions = m.action_names();
    ActionId tau = static_cast<ActionId>(actions.size());
    actions.push_back("__tau_bot");
    auto trans = m.transitions();
    for (auto& [sa, d] : trans) {
        Rational total = 0;
        for (const auto& [t, p] : d) total += p;
        if (total < 1) d[trap] = Rational(1) - total;
    }
    for (StateId s = 0; s < m.state_count(); ++s)
        if (m.actions_of(s).empty()) trans[{s, tau}] = {{trap, Rational(1)}};
    trans[{trap, tau}] = {{trap, Rational(1)}};
    return Mdp::from_parts(std::move(names), std::move(actions), m.initial(), std::move(trans));
}

// ---------------------------------------------------------------------------
// Model text format: one transition per line `src action prob dst` (DTMCs drop
// the action column), with a `@initial <state>` header line.
// ---------------------------------------------------------------------------

inline Mdp parse_model_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string initial;
    std::vector<TransitionTriple> triples;
    bool dtmc_rows = false, mdp_rows = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        std::string t;
        while (ls >> t) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0] == "@initial") {
            if (tok.size() != 2) throw model_error("line " + std::to_string(lineno) + ": malformed @initial");
            initial = tok[1];
        } else if (tok.size() == 4) {
            mdp_rows = true;
            triples.push_back({tok[0], tok[1], tok[3], parse_rational(tok[2])});
        } else if (tok.size() == 3) {
            dtmc_rows = true;
            triples.push_back({tok[0], "__d", tok[2], parse_rational(tok[1])});
        } else {
            throw model_error("line " + std::to_string(lineno) + ": expected 3 or 4 fields");
        }
    }
    if (initial.empty()) throw model_error("missing @initial header");
    if (dtmc_rows && mdp_rows) throw model_error("mixed 3- and 4-field transition lines");
    return build_mdp(triples, initial);
}

inline bool is_dtmc(const Mdp& m) {
    for (StateId s = 0; s < m.state_count(); ++s)
        if (m.actions_of(s).size() > 1) return false;
    return true;
}

inline std::string emit_model_text(const Mdp& m) {
    std::ostringstream out;
    out << "@initial " << m.state_name(m.initial()) << "\n";
    bool dtmc = is_dtmc(m);
    for (const auto& [sa, d] : m.transitions()) {
        for (const auto& [t, p] : d) {
            check_denom_bits(p);
            if (dtmc)
                out << m.state_name(sa.first) << " " << rational_to_string(p) << " "
                    << m.state_name(t) << "\n";
            else
                out << m.state_name(sa.first) << " " << m.action_name(sa.second) << " "
                    << rational_to_string(p) << " " << m.state_name(t) << "\n";
        }
    }
    return out.str();
}

inline json model_to_json(const Mdp& m) {
    json j;
    j["states"] = m.state_names();
    if (!is_dtmc(m)) {
        std::vector<std::string> actions = m.action_names();
        std::sort(actions.begin(), actions.end());
        j["actions"] = actions;
    }
    j["initial"] = m.state_name(m.initial());
    json rows = json::array();
    for (const auto& [sa, d] : m.transitions()) {
        json row;
        row["src"] = m.state_name(sa.first);
        if (!is_dtmc(m)) row["act"] = m.action_name(sa.second);
        json dist;
        for (const auto& [t, p] : d) {
            check_denom_bits(p);
            dist[m.state_name(t)] = rational_to_string(p);
        }
        row["dist"] = dist;
        rows.push_back(row);
    }
    j["transitions"] = rows;
    return j;
}

inline Mdp model_from_json(const json& j) {
    std::vector<TransitionTriple> triples;
    bool dtmc = !j.contains("actions");
    for (const auto& row : j.at("transitions")) {
        std::string src = row.at("src").get<std::string>();
        std::string act = dtmc ? "__d" : row.at("act").get<std::string>();
        for (const auto& [dst, p] : row.at("dist").items())
            triples.push_back({src, act, dst, parse_rational(p.get<std::string>())});
    }
    Mdp m = build_mdp(triples, j.at("initial").get<std::string>());
    // Declared-but-unreferenced states are not representable by triples alone;
    // reject rather than silently dropping them.
    for (const auto& n : j.at("states"))
        if (!m.has_state(n.get<std::string>()))
            throw model_error("state declared but unused in transitions: " + n.get<std::string>());
    return m;
}

inline Labeling labeling_from_json(const json& j, const Mdp& m) {
    Labeling l;
    std::map<std::string, int> lidx;
    for (const auto& name : j.at("labels")) {
        lidx[name.get<std::string>()] = static_cast<int>(l.labels.size());
        l.labels.push_back(name.get<std::string>());
    }
    l.map.resize(m.state_count());
    for (const auto& [state, labs] : j.at("map").items()) {
        StateId s = m.state_by_name(state);
        for (const auto& lab : labs) {
            auto it = lidx.find(lab.get<std::string>());
            if (it == lidx.end()) throw model_error("unknown label: " + lab.get<std::string>());
            l.map[s].insert(it->second);
        }
    }
    return l;
}

}  // namespace certimdp

#endif

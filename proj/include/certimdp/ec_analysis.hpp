#ifndef CERTIMDP_EC_ANALYSIS_HPP
#define CERTIMDP_EC_ANALYSIS_HPP

#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "certimdp/automata.hpp"
#include "certimdp/component_certs.hpp"
#include "certimdp/model.hpp"

namespace certimdp {

struct EcAnalysisLimits {
    int k_cap = 6;
    long combination_cap = 4096;
    int threads = 1;
};

namespace detail {

inline void check_limits(const std::vector<RabinProperty>& props, const EcAnalysisLimits& lim) {
    if (static_cast<int>(props.size()) > lim.k_cap)
        throw model_error("number of properties exceeds k-cap (" + std::to_string(lim.k_cap) + ")");
    long combos = 1;
    for (const auto& p : props) {
        combos *= static_cast<long>(p.pairs.size());
        if (combos > lim.combination_cap)
            throw model_error("pair-combination count exceeds combination-cap (" +
                              std::to_string(lim.combination_cap) + ")");
    }
}

/// Enumerates pair-index combinations in lexicographic order.
inline std::vector<std::vector<int>> combinations(const std::vector<RabinProperty>& props) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(props.size(), 0);
    while (true) {
        out.push_back(cur);
        int i = static_cast<int>(props.size()) - 1;
        while (i >= 0) {
            if (++cur[i] < static_cast<int>(props[i].pairs.size())) break;
            cur[i] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

inline StateSet intersect_e(const std::vector<RabinProperty>& props, const std::vector<int>& combo,
                            const StateSet& universe) {
    StateSet out = universe;
    for (std::size_t i = 0; i < props.size(); ++i) {
        StateSet next;
        const StateSet& e = props[i].pairs[combo[i]].E;
        for (StateId s : out)
            if (e.count(s)) next.insert(s);
        out = std::move(next);
    }
    return out;
}

/// Order-preserving id maps between a parent model and sub_mdp(parent, dom).
struct SubMap {
    std::map<StateId, StateId> to_sub, to_parent;
};

inline SubMap sub_map(const StateSet& dom) {
    SubMap m;
    StateId next = 0;
    for (StateId s : dom) {
        m.to_sub[s] = next;
        m.to_parent[next] = s;
        ++next;
    }
    return m;
}

inline StateSet remap(const StateSet& set, const std::map<StateId, StateId>& how) {
    StateSet out;
    for (StateId s : set) out.insert(how.at(s));
    return out;
}

inline EcCertificate remap(const EcCertificate& c, const std::map<StateId, StateId>& how) {
    EcCertificate out;
    out.domain = remap(c.domain, how);
    out.hub = how.at(c.hub);
    for (const auto& [s, v] : c.f) out.f[how.at(s)] = v;
    for (const auto& [s, v] : c.b) out.b[how.at(s)] = v;
    return out;
}

inline MecCertificate remap(const MecCertificate& c, const std::map<StateId, StateId>& how) {
    MecCertificate out;
    for (const auto& b : c.partition.blocks) out.partition.blocks.push_back(remap(b, how));
    for (const auto& ec : c.ec_certs) out.ec_certs.push_back(remap(ec, how));
    out.r = c.r;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Satisfying-EC search.
// ---------------------------------------------------------------------------

struct SatisfyingEc {
    std::set<StateActionPair> ec;      // the EC's state-action pairs
    StateSet states;                   // S(EC)
    EcCertificate cert;                // over `states`
    std::vector<int> chosen_pairs;     // pair index per property
};

/// Searches pair combinations lexicographically; for each, restricts to the
/// intersection of the E-components, MEC-decomposes, and returns the first
/// non-trivial MEC meeting every F-component.
inline std::optional<SatisfyingEc> find_satisfying_ec(const Mdp& m,
                                                      const std::vector<RabinProperty>& props,
                                                      const EcAnalysisLimits& lim = {}) {
    detail::check_limits(props, lim);
    for (const auto& combo : detail::combinations(props)) {
        StateSet domain = detail::intersect_e(props, combo, m.all_states());
        if (domain.empty()) continue;
        Partition part = mec_decomposition_restricted(m, domain, sub_mdp_pairs(m, domain));
        Mdp sub = sub_mdp(m, domain);
        auto smap = detail::sub_map(domain);
        for (const auto& block : part.blocks) {
            // Triviality is judged in the restricted sub-MDP.
            if (is_trivial_block(sub, detail::remap(block, smap.to_sub))) continue;
            bool meets_all = true;
            for (std::size_t i = 0; i < props.size(); ++i) {
                const StateSet& f = props[i].pairs[combo[i]].F;
                bool hit = false;
                for (StateId s : block)
                    if (f.count(s)) { hit = true; break; }
                if (!hit) { meets_all = false; break; }
            }
            if (!meets_all) continue;
            SatisfyingEc result;
            result.states = block;
            result.ec = sub_mdp_pairs(m, block);
            auto cert = generate_ec_certificate(m, block);
            if (!cert) continue;  // cannot happen for MEC blocks
            result.cert = std::move(*cert);
            result.chosen_pairs = combo;
            return result;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Index sets: which property subsets are satisfiable inside which MEC.
// ---------------------------------------------------------------------------

struct IndexEntry {
    int block = -1;
    std::set<int> indices;  // I
    SatisfyingEc witness;
};

/// Stores only the maximal I per block; membership closes downward.
struct IndexSet {
    std::vector<IndexEntry> entries;

    bool contains(int block, const std::set<int>& indices) const {
        for (const auto& e : entries) {
            if (e.block != block) continue;
            if (std::includes(e.indices.begin(), e.indices.end(), indices.begin(), indices.end()))
                return true;
        }
        return false;
    }

    std::set<std::set<int>> closure_of(int block) const {
        // All subsets of the maximal entries of this block.
        std::set<std::set<int>> out;
        for (const auto& e : entries) {
            if (e.block != block) continue;
            std::vector<int> base(e.indices.begin(), e.indices.end());
            int n = static_cast<int>(base.size());
            for (int mask = 0; mask < (1 << n); ++mask) {
                std::set<int> sub;
                for (int i = 0; i < n; ++i)
                    if (mask & (1 << i)) sub.insert(base[i]);
                out.insert(sub);
            }
        }
        return out;
    }
};

/// I*: for every MEC block and every I, whether some EC inside satisfies all
/// properties indexed by I. Non-trivial blocks always carry the empty set.
inline IndexSet compute_index_sets(const Mdp& m, const Partition& mec_partition,
                                   const std::vector<RabinProperty>& props,
                                   const EcAnalysisLimits& lim = {}) {
    detail::check_limits(props, lim);
    int k = static_cast<int>(props.size());
    IndexSet out;
    for (std::size_t b = 0; b < mec_partition.blocks.size(); ++b) {
        const StateSet& block = mec_partition.blocks[b];
        if (is_trivial_block(m, block)) continue;
        Mdp blk_sub = sub_mdp(m, block);
        auto smap = detail::sub_map(block);
        // Properties restricted to the block keep their pair structure.
        std::map<std::set<int>, std::optional<SatisfyingEc>> memo;
        std::function<bool(const std::set<int>&)> satisfiable = [&](const std::set<int>& indices) {
            auto it = memo.find(indices);
            if (it != memo.end()) return it->second.has_value();
            std::vector<RabinProperty> sel;
            for (int i : indices) {
                RabinProperty p;
                p.kind = PropertyKind::Rabin;
                for (const auto& pp : props[i].pairs) {
                    PropertyPair q;
                    for (StateId s : pp.F)
                        if (block.count(s)) q.F.insert(smap.to_sub.at(s));
                    for (StateId s : pp.E)
                        if (block.count(s)) q.E.insert(smap.to_sub.at(s));
                    p.pairs.push_back(q);
                }
                sel.push_back(p);
            }
            auto res = find_satisfying_ec(blk_sub, sel, lim);
            memo[indices] = res;
            return res.has_value();
        };
        // Enumerate subsets, largest first, and keep the maximal satisfiable ones.
        std::vector<std::set<int>> maximal;
        std::vector<std::set<int>> all_subsets;
        for (int mask = 0; mask < (1 << k); ++mask) {
            std::set<int> indices;
            for (int i = 0; i < k; ++i)
                if (mask & (1 << i)) indices.insert(i);
            all_subsets.push_back(indices);
        }
        std::sort(all_subsets.begin(), all_subsets.end(),
                  [](const std::set<int>& a, const std::set<int>& b) {
                      if (a.size() != b.size()) return a.size() > b.size();
                      return a < b;
                  });
        for (const auto& indices : all_subsets) {
            bool covered = false;
            for (const auto& mx : maximal)
                if (std::includes(mx.begin(), mx.end(), indices.begin(), indices.end())) {
                    covered = true;
                    break;
                }
            if (covered) continue;
            if (satisfiable(indices)) maximal.push_back(indices);
        }
        for (const auto& mx : maximal) {
            IndexEntry e;
            e.block = static_cast<int>(b);
            e.indices = mx;
            SatisfyingEc w = *memo.at(mx);
            // Lift the witness back to parent ids. chosen_pairs indexes into
            // the selected properties, re-spread over [k].
            SatisfyingEc lifted;
            lifted.states = detail::remap(w.states, smap.to_parent);
            lifted.cert = detail::remap(w.cert, smap.to_parent);
            for (auto sa : w.ec) lifted.ec.insert({smap.to_parent.at(sa.first), sa.second});
            lifted.chosen_pairs.assign(k, -1);
            int at = 0;
            for (int i : mx) lifted.chosen_pairs[i] = w.chosen_pairs[at++];
            e.witness = std::move(lifted);
            out.entries.push_back(std::move(e));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Absence certificates.
// ---------------------------------------------------------------------------

struct AbsenceEvidence {
    bool trivial = false;
    int misses_f = -1;  // property index when not trivial
};

struct AbsenceEntry {
    std::vector<int> combo;          // pair index per property
    MecCertificate mec;              // parent-id blocks over the E-intersection
    std::vector<AbsenceEvidence> evidence;  // per block
};

struct AbsenceCertificate {
    std::vector<RabinProperty> properties;
    std::vector<AbsenceEntry> entries;  // full cartesian product, lexicographic
};

/// Builds evidence that no EC satisfies all properties at once: per pair
/// combination, a MEC certificate of the E-intersection sub-MDP whose blocks
/// are all trivial or miss some F.
inline std::optional<AbsenceCertificate> generate_absence_certificate(
    const Mdp& m, const std::vector<RabinProperty>& props, const EcAnalysisLimits& lim = {}) {
    detail::check_limits(props, lim);
    AbsenceCertificate cert;
    cert.properties = props;
    auto combos = detail::combinations(props);

    auto build_entry = [&](const std::vector<int>& combo) -> std::optional<AbsenceEntry> {
        AbsenceEntry entry;
        entry.combo = combo;
        StateSet domain = detail::intersect_e(props, combo, m.all_states());
        if (domain.empty()) return entry;  // vacuous: empty partition
        Mdp sub = sub_mdp(m, domain);
        auto smap = detail::sub_map(domain);
        Partition part = mec_decomposition(sub);
        auto mec = generate_mec_certificate(sub, part);
        if (!mec) return std::nullopt;  // cannot happen
        for (const auto& block : part.blocks) {
            AbsenceEvidence ev;
            if (is_trivial_block(sub, block)) {
                ev.trivial = true;
            } else {
                StateSet parent_block = detail::remap(block, smap.to_parent);
                for (std::size_t i = 0; i < props.size(); ++i) {
                    const StateSet& f = props[i].pairs[combo[i]].F;
                    bool hit = false;
                    for (StateId s : parent_block)
                        if (f.count(s)) { hit = true; break; }
                    if (!hit) {
                        ev.misses_f = static_cast<int>(i);
                        break;
                    }
                }
                if (ev.misses_f < 0) return std::nullopt;  // satisfying EC exists
            }
            entry.evidence.push_back(ev);
        }
        entry.mec = detail::remap(*mec, smap.to_parent);
        return entry;
    };

    if (lim.threads > 1 && combos.size() > 1) {
        std::vector<std::future<std::optional<AbsenceEntry>>> futures;
        for (const auto& combo : combos)
            futures.push_back(std::async(std::launch::async, build_entry, combo));
        for (auto& f : futures) {
            auto entry = f.get();
            if (!entry) return std::nullopt;
            cert.entries.push_back(std::move(*entry));
        }
    } else {
        for (const auto& combo : combos) {
            auto entry = build_entry(combo);
            if (!entry) return std::nullopt;
            cert.entries.push_back(std::move(*entry));
        }
    }
    return cert;
}

inline Verdict validate_absence_certificate(const Mdp& m, const AbsenceCertificate& cert,
                                            const EcAnalysisLimits& lim = {}) {
    detail::check_limits(cert.properties, lim);
    auto combos = detail::combinations(cert.properties);
    if (combos.size() != cert.entries.size()) return Verdict::reject("missing-combination");
    for (std::size_t c = 0; c < combos.size(); ++c) {
        const AbsenceEntry& entry = cert.entries[c];
        if (entry.combo != combos[c]) return Verdict::reject("missing-combination");
        StateSet domain = detail::intersect_e(cert.properties, combos[c], m.all_states());
        if (domain.empty()) {
            if (!entry.mec.partition.blocks.empty()) return Verdict::reject("bad-mec-cert");
            continue;
        }
        Mdp sub = sub_mdp(m, domain);
        auto smap = detail::sub_map(domain);
        MecCertificate local = detail::remap(entry.mec, smap.to_sub);
        Verdict v = validate_mec_certificate(sub, local);
        if (!v) return Verdict::reject("bad-mec-cert: " + v.reason);
        if (entry.evidence.size() != entry.mec.partition.blocks.size())
            return Verdict::reject("bad-mec-cert: evidence size");
        for (std::size_t b = 0; b < entry.mec.partition.blocks.size(); ++b) {
            const StateSet& parent_block = entry.mec.partition.blocks[b];
            const AbsenceEvidence& ev = entry.evidence[b];
            if (ev.trivial) {
                if (!is_trivial_block(sub, detail::remap(parent_block, smap.to_sub)))
                    return Verdict::reject("evidence-false(block " + std::to_string(b) + ")");
            } else {
                if (ev.misses_f < 0 ||
                    ev.misses_f >= static_cast<int>(cert.properties.size()))
                    return Verdict::reject("evidence-false(block " + std::to_string(b) + ")");
                const StateSet& f = cert.properties[ev.misses_f].pairs[combos[c][ev.misses_f]].F;
                for (StateId s : parent_block)
                    if (f.count(s))
                        return Verdict::reject("evidence-false(block " + std::to_string(b) + ")");
            }
        }
    }
    return Verdict::accept();
}

// ---------------------------------------------------------------------------
// CNF hard instances: star MDP whose satisfying ECs are exactly the
// satisfying assignments.
// ---------------------------------------------------------------------------

struct HardInstance {
    Mdp mdp;
    std::vector<RabinProperty> props;
};

/// Clauses are literal lists: +i for x_i, -(i+1)... we use +-(i+1) like DIMACS.
inline HardInstance generate_hard_instance(const std::vector<std::vector<int>>& clauses) {
    int max_var = 0;
    for (const auto& cl : clauses) {
        if (cl.empty()) throw model_error("empty clause");
        for (int lit : cl) {
            if (lit == 0) throw model_error("zero literal");
            max_var = std::max(max_var, std::abs(lit));
        }
    }
    std::vector<TransitionTriple> triples;
    auto var_name = [](int v) { return "x" + std::to_string(v - 1); };
    triples.push_back({"hub", "stay", "hub", Rational(1)});
    for (int v = 1; v <= max_var; ++v) {
        triples.push_back({"hub", "go_" + var_name(v), var_name(v), Rational(1)});
        triples.push_back({var_name(v), "back", "hub", Rational(1)});
    }
    Mdp mdp = build_mdp(triples, "hub");

    StateSet all = mdp.all_states();
    HardInstance out;
    out.props.reserve(clauses.size());
    for (const auto& cl : clauses) {
        RabinProperty p;
        p.kind = PropertyKind::Rabin;
        for (int lit : cl) {
            PropertyPair pp;
            StateId x = mdp.state_by_name(var_name(std::abs(lit)));
            if (lit > 0) {
                pp.F = {x};
                pp.E = all;
            } else {
                pp.F = all;
                pp.E = all;
                pp.E.erase(x);
            }
            p.pairs.push_back(pp);
        }
        out.props.push_back(std::move(p));
    }
    out.mdp = std::move(mdp);
    return out;
}

inline std::vector<std::vector<int>> parse_dimacs(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<int>> clauses;
    std::vector<int> cur;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'c' || line[0] == 'p') continue;
        std::istringstream ls(line);
        int lit;
        while (ls >> lit) {
            if (lit == 0) {
                if (!cur.empty()) clauses.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(lit);
            }
        }
    }
    if (!cur.empty()) clauses.push_back(cur);
    return clauses;
}

}  // namespace certimdp

#endif

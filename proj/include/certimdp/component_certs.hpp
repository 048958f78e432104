#ifndef CERTIMDP_COMPONENT_CERTS_HPP
#define CERTIMDP_COMPONENT_CERTS_HPP

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "certimdp/graph.hpp"
#include "certimdp/model.hpp"

namespace certimdp {

struct Verdict {
    bool ok = false;
    std::string reason;  // empty on accept

    static Verdict accept() { return {true, ""}; }
    static Verdict reject(std::string why) { return {false, std::move(why)}; }
    explicit operator bool() const { return ok; }
};

/// Certificate that M[D] is strongly connected: distances to and from the hub
/// along D-internal state-action pairs.
struct EcCertificate {
    StateSet domain;
    std::map<StateId, long> f;  // decreases toward the hub
    std::map<StateId, long> b;  // decreases back from the hub
    StateId hub = -1;
};

/// Certificate that a partition is exactly the MEC decomposition.
struct MecCertificate {
    Partition partition;
    std::vector<EcCertificate> ec_certs;  // one per block
    std::vector<long> r;                  // one per block
};

/// Certificate that the minimal probability of reaching the target is
/// positive from every state.
struct RankCertificate {
    StateSet target;
    std::map<StateId, long> r;
};

/// A block is trivial if it is a singleton without a probability-one
/// self-loop action.
inline bool is_trivial_block(const Mdp& m, const StateSet& d) {
    if (d.size() != 1) return false;
    StateId s = *d.begin();
    for (ActionId a : m.actions_of(s)) {
        const auto& dist = m.dist(s, a);
        if (dist.size() == 1 && dist.begin()->first == s && dist.begin()->second == 1) return false;
    }
    return true;
}

namespace detail {

/// Adjacency over `universe` restricted to D-internal pairs (P(s,a,D)=1).
inline std::vector<std::vector<int>> internal_adjacency(const Mdp& m, const StateSet& d,
                                                        std::vector<StateId>& order) {
    order.assign(d.begin(), d.end());
    std::map<StateId, int> idx;
    for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> adj(order.size());
    for (auto sa : sub_mdp_pairs(m, d)) {
        for (const auto& [t, p] : m.dist(sa.first, sa.second)) {
            (void)p;
            adj[idx.at(sa.first)].push_back(idx.at(t));
        }
    }
    for (auto& row : adj) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    return adj;
}

}  // namespace detail

/// BFS construction from Lemma-style conditions: hub is the smallest state in
/// D; f measures distance to the hub, b distance from it. none when M[D] is
/// not strongly connected.
inline std::optional<EcCertificate> generate_ec_certificate(const Mdp& m, const StateSet& d) {
    if (d.empty()) return std::nullopt;
    std::vector<StateId> order;
    auto adj = detail::internal_adjacency(m, d, order);
    std::vector<std::vector<int>> radj(adj.size());
    for (std::size_t v = 0; v < adj.size(); ++v)
        for (int w : adj[v]) radj[w].push_back(static_cast<int>(v));

    EcCertificate cert;
    cert.domain = d;
    cert.hub = order[0];  // smallest id in D
    auto to_hub = bfs_distances(radj, {0});
    auto from_hub = bfs_distances(adj, {0});
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (to_hub[i] < 0 || from_hub[i] < 0) return std::nullopt;
        cert.f[order[i]] = to_hub[i];
        cert.b[order[i]] = from_hub[i];
    }
    return cert;
}

/// Pure condition re-check of the hub/descent conditions; never recomputes
/// reachability.
inline Verdict validate_ec_certificate(const Mdp& m, const EcCertificate& cert) {
    const StateSet& d = cert.domain;
    if (d.empty()) return Verdict::reject("empty-domain");
    for (StateId s : d)
        if (!cert.f.count(s) || !cert.b.count(s)) return Verdict::reject("missing-entry");
    int hubs = 0;
    StateId hub = -1;
    for (StateId s : d)
        if (cert.f.at(s) == 0 && cert.b.at(s) == 0) {
            ++hubs;
            hub = s;
        }
    if (hubs == 0) return Verdict::reject("no-hub");
    if (hubs > 1) return Verdict::reject("multiple-hubs");
    if (cert.hub != hub) return Verdict::reject("hub-mismatch");
    auto internal = sub_mdp_pairs(m, d);
    for (StateId s : d) {
        if (s == hub) continue;
        bool fwd = false;
        for (auto sa : internal) {
            if (sa.first != s) continue;
            for (const auto& [t, p] : m.dist(sa.first, sa.second)) {
                (void)p;
                if (cert.f.at(s) > cert.f.at(t)) fwd = true;
            }
        }
        if (!fwd) return Verdict::reject("forward-violation(" + m.state_name(s) + ")");
        bool bwd = false;
        for (auto sa : internal) {
            for (const auto& [t, p] : m.dist(sa.first, sa.second)) {
                (void)p;
                if (t == s && cert.b.at(s) > cert.b.at(sa.first)) bwd = true;
            }
        }
        if (!bwd) return Verdict::reject("backward-violation(" + m.state_name(s) + ")");
    }
    return Verdict::accept();
}

// ---------------------------------------------------------------------------
// MEC decomposition: iterative SCC pruning on the enabled-pair graph.
// ---------------------------------------------------------------------------

/// Restricted variant used on sub-MDPs. `pairs` must be closed over `states`.
inline Partition mec_decomposition_restricted(const Mdp& m, const StateSet& states,
                                              std::set<StateActionPair> pairs) {
    std::vector<StateId> order(states.begin(), states.end());
    std::map<StateId, int> idx;
    for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = static_cast<int>(i);

    bool changed = true;
    std::vector<int> comp;
    while (changed) {
        changed = false;
        std::vector<std::vector<int>> adj(order.size());
        for (const auto& sa : pairs)
            for (const auto& [t, p] : m.dist(sa.first, sa.second)) {
                (void)p;
                adj[idx.at(sa.first)].push_back(idx.at(t));
            }
        comp = strongly_connected_components(adj);
        for (auto it = pairs.begin(); it != pairs.end();) {
            bool leaves = false;
            for (const auto& [t, p] : m.dist(it->first, it->second)) {
                (void)p;
                if (comp[idx.at(t)] != comp[idx.at(it->first)]) {
                    leaves = true;
                    break;
                }
            }
            if (leaves) {
                it = pairs.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
    std::map<int, StateSet> by_comp;
    std::set<int> comp_with_pair;
    for (const auto& sa : pairs) comp_with_pair.insert(comp[idx.at(sa.first)]);
    for (std::size_t i = 0; i < order.size(); ++i) by_comp[comp[i]].insert(order[i]);

    Partition part;
    for (const auto& [c, block] : by_comp) {
        if (comp_with_pair.count(c)) {
            part.blocks.push_back(block);
        } else {
            for (StateId s : block) part.blocks.push_back({s});
        }
    }
    std::sort(part.blocks.begin(), part.blocks.end(),
              [](const StateSet& a, const StateSet& b) { return *a.begin() < *b.begin(); });
    return part;
}

inline Partition mec_decomposition(const Mdp& m) {
    StateSet states = m.all_states();
    std::set<StateActionPair> pairs;
    for (const auto& [sa, d] : m.transitions()) {
        (void)d;
        if (m.row_sum(sa.first, sa.second) == 1) pairs.insert(sa);
    }
    return mec_decomposition_restricted(m, states, std::move(pairs));
}

// ---------------------------------------------------------------------------
// MEC certificate: per-block EC certificates and the rank vector r showing
// maximality.
// ---------------------------------------------------------------------------

namespace detail {

constexpr long kInfRank = std::numeric_limits<long>::max() / 4;

/// Pairs leaving their block: (s, a) with P(s, a, [s]) < 1. (Sub-stochastic
/// rows with all remaining mass inside count as leaving too.)
inline std::vector<StateActionPair> leaving_pairs(const Mdp& m, const Partition& part,
                                                  const std::vector<int>& block_of) {
    std::vector<StateActionPair> out;
    for (const auto& [sa, dist] : m.transitions()) {
        Rational inside = 0;
        for (const auto& [t, p] : dist)
            if (block_of[t] == block_of[sa.first]) inside += p;
        if (inside < 1) out.push_back(sa);
    }
    (void)part;
    return out;
}

}  // namespace detail

/// Rank construction on the quotient graph: blocks that keep all their mass
/// inside get rank 1, everything else sits strictly above the minimum of some
/// successor support per leaving pair.
inline std::optional<MecCertificate> generate_mec_certificate(const Mdp& m,
                                                              const Partition& part) {
    if (!part.covers_exactly(m.state_count())) return std::nullopt;
    MecCertificate cert;
    cert.partition = part;
    for (const auto& block : part.blocks) {
        auto ec = generate_ec_certificate(m, block);
        if (!ec) return std::nullopt;
        cert.ec_certs.push_back(std::move(*ec));
    }
    std::vector<int> block_of(m.state_count(), -1);
    for (std::size_t b = 0; b < part.blocks.size(); ++b)
        for (StateId s : part.blocks[b]) block_of[s] = static_cast<int>(b);

    auto leaving = detail::leaving_pairs(m, part, block_of);
    std::vector<std::vector<std::size_t>> leaving_of_block(part.blocks.size());
    for (std::size_t i = 0; i < leaving.size(); ++i)
        leaving_of_block[block_of[leaving[i].first]].push_back(i);

    std::vector<long> r(part.blocks.size(), detail::kInfRank);
    for (std::size_t b = 0; b < part.blocks.size(); ++b)
        if (leaving_of_block[b].empty()) r[b] = 1;

    // Bellman fixpoint of r(B) = max over leaving pairs of 1 + min over the
    // pair's support blocks; tau edges of non-trivial blocks contribute the
    // baseline 1.
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t b = 0; b < part.blocks.size(); ++b) {
            if (leaving_of_block[b].empty()) continue;
            long value = is_trivial_block(m, part.blocks[b]) ? 0 : 1;
            for (std::size_t i : leaving_of_block[b]) {
                long best = detail::kInfRank;
                for (const auto& [t, p] : m.dist(leaving[i].first, leaving[i].second)) {
                    (void)p;
                    best = std::min(best, r[block_of[t]]);
                }
                long need = best >= detail::kInfRank ? detail::kInfRank : best + 1;
                value = std::max(value, need);
            }
            if (value != r[b]) {
                r[b] = value;
                changed = true;
            }
        }
    }
    for (long v : r)
        if (v >= detail::kInfRank) return std::nullopt;
    cert.r = std::move(r);
    return cert;
}

inline Verdict validate_mec_certificate(const Mdp& m, const MecCertificate& cert) {
    const Partition& part = cert.partition;
    if (!part.covers_exactly(m.state_count())) return Verdict::reject("not-a-partition");
    if (cert.ec_certs.size() != part.blocks.size() || cert.r.size() != part.blocks.size())
        return Verdict::reject("size-mismatch");
    for (std::size_t b = 0; b < part.blocks.size(); ++b) {
        if (cert.ec_certs[b].domain != part.blocks[b])
            return Verdict::reject("block-not-ec(" + std::to_string(b) + ")");
        Verdict v = validate_ec_certificate(m, cert.ec_certs[b]);
        if (!v) return Verdict::reject("block-not-ec(" + std::to_string(b) + "): " + v.reason);
        if (cert.r[b] < 0) return Verdict::reject("negative-rank");
    }
    std::vector<int> block_of(m.state_count(), -1);
    for (std::size_t b = 0; b < part.blocks.size(); ++b)
        for (StateId s : part.blocks[b]) block_of[s] = static_cast<int>(b);
    for (const auto& sa : detail::leaving_pairs(m, part, block_of)) {
        long best = detail::kInfRank;
        for (const auto& [t, p] : m.dist(sa.first, sa.second)) {
            (void)p;
            best = std::min(best, cert.r[block_of[t]]);
        }
        if (cert.r[block_of[sa.first]] < 1 + best)
            return Verdict::reject("rank-violation(" + m.state_name(sa.first) + "," +
                                   m.action_name(sa.second) + ")");
    }
    return Verdict::accept();
}

// ---------------------------------------------------------------------------
// Qualitative rank certificate: positive minimal reachability everywhere.
// ---------------------------------------------------------------------------

inline std::optional<RankCertificate> generate_rank_certificate(const Mdp& m,
                                                                const StateSet& target) {
    RankCertificate cert;
    cert.target = target;
    std::vector<long> r(m.state_count(), detail::kInfRank);
    for (StateId s : target) r[s] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateId s = 0; s < m.state_count(); ++s) {
            if (target.count(s)) continue;
            auto acts = m.actions_of(s);
            long value = acts.empty() ? 1 : 0;
            for (ActionId a : acts) {
                long best = detail::kInfRank;
                for (const auto& [t, p] : m.dist(s, a)) {
                    (void)p;
                    best = std::min(best, r[t]);
                }
                long need = best >= detail::kInfRank ? detail::kInfRank : best + 1;
                value = std::max(value, need);
            }
            if (value != r[s]) {
                r[s] = value;
                changed = true;
            }
        }
    }
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (r[s] >= detail::kInfRank) return std::nullopt;
        cert.r[s] = r[s];
    }
    return cert;
}

inline Verdict validate_rank_certificate(const Mdp& m, const RankCertificate& cert) {
    for (StateId s : cert.target) {
        auto it = cert.r.find(s);
        if (it == cert.r.end() || it->second != 0) return Verdict::reject("target-rank-nonzero");
    }
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (cert.target.count(s)) continue;
        auto it = cert.r.find(s);
        if (it == cert.r.end()) return Verdict::reject("missing-entry");
        for (ActionId a : m.actions_of(s)) {
            long best = detail::kInfRank;
            for (const auto& [t, p] : m.dist(s, a)) {
                (void)p;
                best = std::min(best, cert.r.at(t));
            }
            if (it->second < 1 + best)
                return Verdict::reject("rank-violation(" + m.state_name(s) + "," +
                                       m.action_name(a) + ")");
        }
    }
    return Verdict::accept();
}

}  // namespace certimdp

#endif

#ifndef CERTIMDP_AUTOMATA_HPP
#define CERTIMDP_AUTOMATA_HPP

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "certimdp/model.hpp"

namespace certimdp {

class automaton_error : public std::runtime_error {
public:
    explicit automaton_error(const std::string& what) : std::runtime_error(what) {}
};

/// Acceptance pair in automaton convention: a run is Rabin-accepted by (F, E)
/// iff it visits F infinitely often and E only finitely often.
struct AcceptancePair {
    std::set<int> inf;  // F
    std::set<int> fin;  // E
};

enum class AutomatonKind { Rabin, Streett, Buchi };

/// Deterministic omega-automaton over MDP states as letters. delta is total.
struct DeterministicAutomaton {
    std::vector<std::string> states;
    std::vector<std::string> alphabet;  // MDP state names
    int initial = 0;
    std::vector<std::vector<int>> delta;  // [state][letter] -> state
    std::vector<AcceptancePair> acceptance;
    AutomatonKind kind = AutomatonKind::Rabin;

    int step(int q, int letter) const { return delta[q][letter]; }
};

/// Nondeterministic Buchi automaton asserted (or verified) unambiguous.
struct Uba {
    std::vector<std::string> states;
    std::vector<std::string> alphabet;
    int initial = 0;
    std::vector<std::vector<std::set<int>>> delta;  // [state][letter] -> successors
    std::set<int> accepting;
    bool unambiguity_verified = false;  // false: trusted from the input flag
};

struct ParsedAutomaton {
    std::optional<DeterministicAutomaton> det;
    std::optional<Uba> uba;
};

// ---------------------------------------------------------------------------
// Rabin/Streett properties over MDP states and multi-objective queries.
// ---------------------------------------------------------------------------

/// Property pair convention: Rabin kind reads pairs (F, E) as
/// "infinitely often F and eventually always E", disjoined over the pair
/// list. Streett kind denotes the complement of the Rabin reading of the
/// same pairs.
struct PropertyPair {
    StateSet F, E;
    bool operator==(const PropertyPair&) const = default;
};

enum class PropertyKind { Rabin, Streett };

struct RabinProperty {
    std::vector<PropertyPair> pairs;
    PropertyKind kind = PropertyKind::Rabin;
    bool operator==(const RabinProperty&) const = default;
};

inline RabinProperty dualize(const RabinProperty& p) {
    RabinProperty d = p;
    d.kind = p.kind == PropertyKind::Rabin ? PropertyKind::Streett : PropertyKind::Rabin;
    return d;
}

enum class Quantifier { ExistsAnd, ForallOr };
enum class Relation { Geq, Gt };

struct Objective {
    RabinProperty property;
    Relation rel = Relation::Geq;
    Rational lambda;
};

struct Query {
    Quantifier quantifier = Quantifier::ExistsAnd;
    std::vector<Objective> objectives;
};

/// Negation of a query: quantifier flips, properties dualize and thresholds
/// complement. Only lower-bounded relations exist, so < lambda becomes
/// > 1-lambda on the complement property.
inline Query dual_query(const Query& q) {
    Query d;
    d.quantifier =
        q.quantifier == Quantifier::ExistsAnd ? Quantifier::ForallOr : Quantifier::ExistsAnd;
    for (const auto& o : q.objectives) {
        Objective od;
        od.property = dualize(o.property);
        od.rel = o.rel == Relation::Geq ? Relation::Gt : Relation::Geq;
        od.lambda = Rational(1) - o.lambda;
        d.objectives.push_back(od);
    }
    return d;
}

inline bool rel_holds(const Rational& value, Relation rel, const Rational& bound) {
    return rel == Relation::Geq ? value >= bound : value > bound;
}

inline Query parse_query_json(const json& j, const Mdp& m) {
    Query q;
    std::string quant = j.at("quantifier").get<std::string>();
    if (quant == "exists-and")
        q.quantifier = Quantifier::ExistsAnd;
    else if (quant == "forall-or")
        q.quantifier = Quantifier::ForallOr;
    else
        throw automaton_error("unknown quantifier: " + quant);
    PropertyKind kind =
        q.quantifier == Quantifier::ExistsAnd ? PropertyKind::Rabin : PropertyKind::Streett;
    for (const auto& oj : j.at("objectives")) {
        Objective o;
        o.property.kind = kind;
        if (oj.contains("pairs")) {
            for (const auto& pj : oj.at("pairs")) {
                PropertyPair pp;
                for (const auto& n : pj.at("F")) pp.F.insert(m.state_by_name(n.get<std::string>()));
                for (const auto& n : pj.at("E")) pp.E.insert(m.state_by_name(n.get<std::string>()));
                o.property.pairs.push_back(pp);
            }
            if (o.property.pairs.empty()) throw automaton_error("empty pair list");
        }
        std::string rel = oj.at("rel").get<std::string>();
        if (rel == ">=")
            o.rel = Relation::Geq;
        else if (rel == ">")
            o.rel = Relation::Gt;
        else
            throw automaton_error("unknown relation: " + rel);
        o.lambda = parse_rational(oj.at("lambda").get<std::string>());
        if (o.lambda < 0 || o.lambda > 1) throw automaton_error("threshold outside [0,1]");
        q.objectives.push_back(o);
    }
    if (q.objectives.empty()) throw automaton_error("query needs at least one objective");
    return q;
}

inline json query_to_json(const Query& q, const Mdp& m) {
    json j;
    j["quantifier"] = q.quantifier == Quantifier::ExistsAnd ? "exists-and" : "forall-or";
    json objs = json::array();
    for (const auto& o : q.objectives) {
        json oj;
        json pairs = json::array();
        for (const auto& pp : o.property.pairs) {
            json pj;
            pj["F"] = json::array();
            pj["E"] = json::array();
            for (StateId s : pp.F) pj["F"].push_back(m.state_name(s));
            for (StateId s : pp.E) pj["E"].push_back(m.state_name(s));
            pairs.push_back(pj);
        }
        oj["pairs"] = pairs;
        oj["rel"] = o.rel == Relation::Geq ? ">=" : ">";
        check_denom_bits(o.lambda);
        oj["lambda"] = rational_to_string(o.lambda);
        objs.push_back(oj);
    }
    j["objectives"] = objs;
    return j;
}

// ---------------------------------------------------------------------------
// HOA-subset parser. Supported: States, Start, AP (propositions name MDP
// states), Alias, acc-name/Acceptance limited to Buchi and Rabin/Streett
// pairs, state-based acceptance marks. Everything else is rejected loudly.
// ---------------------------------------------------------------------------

namespace hoa_detail {

struct LabelExpr {
    // nodes: 0 atom(ap), 1 not, 2 and, 3 or, 4 true, 5 false
    int op = 4;
    int ap = -1;
    std::vector<LabelExpr> kids;

    bool eval(int letter) const {
        switch (op) {
            case 0: return ap == letter;
            case 1: return !kids[0].eval(letter);
            case 2: return kids[0].eval(letter) && kids[1].eval(letter);
            case 3: return kids[0].eval(letter) || kids[1].eval(letter);
            case 4: return true;
            default: return false;
        }
    }
};

class LabelParser {
public:
    LabelParser(const std::string& s, const std::map<std::string, LabelExpr>& aliases)
        : s_(s), aliases_(aliases) {}

    LabelExpr parse() {
        LabelExpr e = parse_or();
        skip_ws();
        if (pos_ != s_.size()) throw automaton_error("trailing junk in label: " + s_);
        return e;
    }

private:
    LabelExpr parse_or() {
        LabelExpr left = parse_and();
        skip_ws();
        while (pos_ < s_.size() && s_[pos_] == '|') {
            ++pos_;
            LabelExpr right = parse_and();
            LabelExpr node;
            node.op = 3;
            node.kids = {left, right};
            left = node;
            skip_ws();
        }
        return left;
    }
    LabelExpr parse_and() {
        LabelExpr left = parse_unary();
        skip_ws();
        while (pos_ < s_.size() && s_[pos_] == '&') {
            ++pos_;
            LabelExpr right = parse_unary();
            LabelExpr node;
            node.op = 2;
            node.kids = {left, right};
            left = node;
            skip_ws();
        }
        return left;
    }
    LabelExpr parse_unary() {
        skip_ws();
        if (pos_ >= s_.size()) throw automaton_error("truncated label: " + s_);
        char c = s_[pos_];
        if (c == '!') {
            ++pos_;
            LabelExpr node;
            node.op = 1;
            node.kids = {parse_unary()};
            return node;
        }
        if (c == '(') {
            ++pos_;
            LabelExpr e = parse_or();
            skip_ws();
            if (pos_ >= s_.size() || s_[pos_] != ')') throw automaton_error("unbalanced label parens");
            ++pos_;
            return e;
        }
        if (c == 't') {
            ++pos_;
            LabelExpr e;
            e.op = 4;
            return e;
        }
        if (c == 'f') {
            ++pos_;
            LabelExpr e;
            e.op = 5;
            return e;
        }
        if (c == '@') {
            std::size_t start = ++pos_;
            while (pos_ < s_.size() && (std::isalnum(s_[pos_]) || s_[pos_] == '_' || s_[pos_] == '-'))
                ++pos_;
            std::string name = s_.substr(start, pos_ - start);
            auto it = aliases_.find(name);
            if (it == aliases_.end()) throw automaton_error("unknown alias: @" + name);
            return it->second;
        }
        if (std::isdigit(c)) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(s_[pos_])) ++pos_;
            LabelExpr e;
            e.op = 0;
            e.ap = std::stoi(s_.substr(start, pos_ - start));
            return e;
        }
        throw automaton_error(std::string("unexpected character in label: ") + c);
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(s_[pos_])) ++pos_;
    }

    const std::string& s_;
    const std::map<std::string, LabelExpr>& aliases_;
    std::size_t pos_ = 0;
};

inline std::vector<std::string> tokenize_quoted(const std::string& line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(line[i])) { ++i; continue; }
        if (line[i] == '"') {
            std::size_t j = line.find('"', i + 1);
            if (j == std::string::npos) throw automaton_error("unterminated string");
            out.push_back(line.substr(i + 1, j - i - 1));
            i = j + 1;
        } else {
            std::size_t j = i;
            while (j < line.size() && !std::isspace(line[j])) ++j;
            out.push_back(line.substr(i, j - i));
            i = j;
        }
    }
    return out;
}

// Acceptance formula shapes we accept, as (acc-set count, pairs).
struct ParsedAcceptance {
    AutomatonKind kind;
    std::vector<AcceptancePair> pairs;
};

inline ParsedAcceptance parse_acceptance(int nsets, std::string formula) {
    // Normalize whitespace away.
    std::string f;
    for (char c : formula)
        if (!std::isspace(c)) f += c;
    ParsedAcceptance out;
    if (f == "Inf(0)") {
        if (nsets != 1) throw automaton_error("Buchi acceptance needs exactly one set");
        out.kind = AutomatonKind::Buchi;
        AcceptancePair p;
        p.inf = {0};
        out.pairs = {p};
        return out;
    }
    // Rabin: (Fin(0)&Inf(1))|(Fin(2)&Inf(3))|...   Streett: (Fin(0)|Inf(1))&...
    auto parse_pairs = [&](char outer, char inner) -> std::optional<std::vector<AcceptancePair>> {
        std::vector<AcceptancePair> pairs;
        std::size_t i = 0;
        int expected = 0;
        while (i < f.size()) {
            if (!pairs.empty()) {
                if (f[i] != outer) return std::nullopt;
                ++i;
            }
            char buf[64];
            int fin_id, inf_id;
            std::snprintf(buf, sizeof buf, "(Fin(%d)%cInf(%d))", expected, inner, expected + 1);
            std::string want(buf);
            if (f.compare(i, want.size(), want) != 0) return std::nullopt;
            fin_id = expected;
            inf_id = expected + 1;
            i += want.size();
            AcceptancePair p;
            p.fin = {fin_id};
            p.inf = {inf_id};
            pairs.push_back(p);
            expected += 2;
        }
        if (expected != nsets || pairs.empty()) return std::nullopt;
        return pairs;
    };
    if (auto pairs = parse_pairs('|', '&')) {
        out.kind = AutomatonKind::Rabin;
        out.pairs = *pairs;
        return out;
    }
    if (auto pairs = parse_pairs('&', '|')) {
        out.kind = AutomatonKind::Streett;
        out.pairs = *pairs;
        return out;
    }
    throw automaton_error("unsupported acceptance: " + formula);
}

}  // namespace hoa_detail

inline ParsedAutomaton parse_automaton(const std::string& text) {
    using namespace hoa_detail;
    std::istringstream in(text);
    std::string line;

    int nstates = -1, start = -1, nap = -1, nsets = -1;
    std::vector<std::string> ap;
    std::map<std::string, LabelExpr> aliases;
    std::optional<AutomatonKind> acc_name_kind;
    int acc_name_count = -1;
    std::string acceptance_formula;
    bool unambiguous_flag = false;
    bool in_body = false;

    struct Edge {
        LabelExpr label;
        int dst;
    };
    std::vector<std::vector<Edge>> edges;
    std::vector<std::set<int>> state_marks;
    int current_state = -1;

    while (std::getline(in, line)) {
        auto comment = line.find("/*");
        if (comment != std::string::npos) line.erase(comment);
        std::string trimmed = line;
        while (!trimmed.empty() && std::isspace(trimmed.front())) trimmed.erase(trimmed.begin());
        while (!trimmed.empty() && std::isspace(trimmed.back())) trimmed.pop_back();
        if (trimmed.empty()) continue;

        if (!in_body) {
            if (trimmed == "--BODY--") {
                if (nstates < 0 || start < 0 || nap < 0 || nsets < 0)
                    throw automaton_error("missing mandatory HOA headers");
                edges.resize(nstates);
                state_marks.resize(nstates);
                in_body = true;
                continue;
            }
            auto tok = tokenize_quoted(trimmed);
            const std::string& key = tok[0];
            if (key == "HOA:") {
                if (tok.size() != 2 || tok[1] != "v1") throw automaton_error("expected HOA: v1");
            } else if (key == "States:") {
                nstates = std::stoi(tok.at(1));
            } else if (key == "Start:") {
                if (start >= 0) throw automaton_error("multiple Start: headers unsupported");
                start = std::stoi(tok.at(1));
            } else if (key == "AP:") {
                nap = std::stoi(tok.at(1));
                for (int i = 0; i < nap; ++i) ap.push_back(tok.at(2 + i));
            } else if (key == "Alias:") {
                std::string name = tok.at(1);
                if (name.empty() || name[0] != '@') throw automaton_error("alias must start with @");
                std::string rest = trimmed.substr(trimmed.find(name) + name.size());
                aliases[name.substr(1)] = LabelParser(rest, aliases).parse();
            } else if (key == "acc-name:") {
                if (tok.at(1) == "Buchi") {
                    acc_name_kind = AutomatonKind::Buchi;
                } else if (tok.at(1) == "Rabin") {
                    acc_name_kind = AutomatonKind::Rabin;
                    acc_name_count = std::stoi(tok.at(2));
                } else if (tok.at(1) == "Streett") {
                    acc_name_kind = AutomatonKind::Streett;
                    acc_name_count = std::stoi(tok.at(2));
                } else {
                    throw automaton_error("unsupported acc-name: " + tok.at(1));
                }
            } else if (key == "Acceptance:") {
                nsets = std::stoi(tok.at(1));
                acceptance_formula.clear();
                for (std::size_t i = 2; i < tok.size(); ++i) acceptance_formula += tok[i];
            } else if (key == "properties:") {
                for (std::size_t i = 1; i < tok.size(); ++i)
                    if (tok[i] == "unambiguous") unambiguous_flag = true;
            } else if (key == "name:" || key == "tool:") {
                // informational, ignored
            } else {
                throw automaton_error("unsupported HOA header: " + key);
            }
            continue;
        }

        if (trimmed == "--END--") break;
        if (trimmed.rfind("State:", 0) == 0) {
            auto tok = tokenize_quoted(trimmed);
            std::size_t i = 1;
            if (i < tok.size() && tok[i] == "[")
                throw automaton_error("state labels unsupported");
            current_state = std::stoi(tok.at(i++));
            if (current_state < 0 || current_state >= nstates)
                throw automaton_error("state id out of range");
            // optional "name" then optional {marks}
            while (i < tok.size()) {
                std::string& t = tok[i];
                if (!t.empty() && t.front() == '{') {
                    std::string marks = trimmed.substr(trimmed.find('{') + 1);
                    marks = marks.substr(0, marks.find('}'));
                    std::istringstream ms(marks);
                    int mk;
                    while (ms >> mk) state_marks[current_state].insert(mk);
                    break;
                }
                ++i;
            }
            continue;
        }
        if (trimmed[0] == '[') {
            if (current_state < 0) throw automaton_error("edge before any State:");
            auto close = trimmed.find(']');
            if (close == std::string::npos) throw automaton_error("unterminated label");
            std::string lbl = trimmed.substr(1, close - 1);
            std::string rest = trimmed.substr(close + 1);
            if (rest.find('{') != std::string::npos)
                throw automaton_error("transition-based acceptance unsupported");
            std::istringstream rs(rest);
            int dst;
            if (!(rs >> dst)) throw automaton_error("missing edge destination");
            std::string extra;
            if (rs >> extra) throw automaton_error("multiple destinations unsupported: " + extra);
            if (dst < 0 || dst >= nstates) throw automaton_error("edge destination out of range");
            edges[current_state].push_back({LabelParser(lbl, aliases).parse(), dst});
            continue;
        }
        throw automaton_error("unparsable body line: " + trimmed);
    }

    ParsedAcceptance acc = parse_acceptance(nsets, acceptance_formula);
    if (acc_name_kind && *acc_name_kind != acc.kind)
        throw automaton_error("acc-name disagrees with Acceptance formula");
    if (acc_name_count >= 0 && acc_name_count != static_cast<int>(acc.pairs.size()))
        throw automaton_error("acc-name pair count disagrees with Acceptance formula");

    // Expand label expressions letter by letter.
    std::vector<std::vector<std::set<int>>> delta(nstates,
                                                  std::vector<std::set<int>>(ap.size()));
    for (int q = 0; q < nstates; ++q)
        for (const auto& e : edges[q])
            for (int letter = 0; letter < static_cast<int>(ap.size()); ++letter)
                if (e.label.eval(letter)) delta[q][letter].insert(e.dst);

    bool deterministic = true, complete = true;
    for (int q = 0; q < nstates; ++q)
        for (std::size_t letter = 0; letter < ap.size(); ++letter) {
            if (delta[q][letter].size() > 1) deterministic = false;
            if (delta[q][letter].empty()) complete = false;
        }

    ParsedAutomaton out;
    if (deterministic && complete) {
        DeterministicAutomaton det;
        det.states.resize(nstates);
        for (int q = 0; q < nstates; ++q) det.states[q] = "q" + std::to_string(q);
        det.alphabet = ap;
        det.initial = start;
        det.delta.assign(nstates, std::vector<int>(ap.size(), 0));
        for (int q = 0; q < nstates; ++q)
            for (std::size_t l = 0; l < ap.size(); ++l) det.delta[q][l] = *delta[q][l].begin();
        for (const auto& p : acc.pairs) {
            AcceptancePair dp;
            for (int q = 0; q < nstates; ++q) {
                for (int m : p.inf)
                    if (state_marks[q].count(m)) dp.inf.insert(q);
                for (int m : p.fin)
                    if (state_marks[q].count(m)) dp.fin.insert(q);
            }
            det.acceptance.push_back(dp);
        }
        det.kind = acc.kind;
        out.det = det;
    } else if (acc.kind == AutomatonKind::Buchi) {
        if (!deterministic && !unambiguous_flag)
            throw automaton_error("nondeterministic automaton lacks the unambiguous flag");
    } else {
        if (!deterministic)
            throw automaton_error("nondeterministic Rabin/Streett automata unsupported");
        throw automaton_error("deterministic automaton must be complete");
    }

    if (acc.kind == AutomatonKind::Buchi) {
        Uba uba;
        uba.states.resize(nstates);
        for (int q = 0; q < nstates; ++q) uba.states[q] = "q" + std::to_string(q);
        uba.alphabet = ap;
        uba.initial = start;
        uba.delta = delta;
        for (int q = 0; q < nstates; ++q)
            if (state_marks[q].count(0)) uba.accepting.insert(q);
        uba.unambiguity_verified = deterministic;
        out.uba = uba;
    }
    if (!out.det && !out.uba) throw automaton_error("automaton is neither deterministic nor a UBA");
    return out;
}

// ---------------------------------------------------------------------------
// Unambiguity check: self-product on distinct state pairs reached by a common
// prefix, then generalized-Buchi nonemptiness (both components must be able
// to continue to acceptance on one shared word).
// ---------------------------------------------------------------------------

struct UnambiguityVerdict {
    bool verified = false;
    std::vector<std::string> witness_prefix;  // letters, on refutation
};

inline UnambiguityVerdict check_unambiguous(const Uba& a) {
    int n = static_cast<int>(a.states.size());
    int nl = static_cast<int>(a.alphabet.size());
    auto id = [n](int p, int q) { return p * n + q; };

    // Ordered-pair graph; an "accepting cycle" must touch F in both coords.
    // First find pairs (p, q) with p != q reachable from the diagonal start
    // by a shared word, keeping a parent letter for the witness.
    std::vector<int> parent(n * n, -2);
    std::vector<int> parent_letter(n * n, -1);
    std::deque<int> queue;
    parent[id(a.initial, a.initial)] = -1;
    queue.push_back(id(a.initial, a.initial));
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        int p = cur / n, q = cur % n;
        for (int l = 0; l < nl; ++l)
            for (int p2 : a.delta[p][l])
                for (int q2 : a.delta[q][l]) {
                    int nxt = id(p2, q2);
                    if (parent[nxt] == -2) {
                        parent[nxt] = cur;
                        parent_letter[nxt] = l;
                        queue.push_back(nxt);
                    }
                }
    }

    // SCCs of the pair graph (iterative Tarjan over reachable pairs only).
    std::vector<int> index(n * n, -1), low(n * n, 0), comp(n * n, -1);
    std::vector<bool> on_stack(n * n, false);
    std::vector<int> stack;
    int next_index = 0, next_comp = 0;
    struct Frame {
        int v;
        int l = 0;
        std::size_t i1 = 0, i2 = 0;
        std::vector<int> succ;
        std::size_t si = 0;
    };
    auto successors = [&](int v) {
        std::vector<int> out;
        int p = v / n, q = v % n;
        for (int l = 0; l < nl; ++l)
            for (int p2 : a.delta[p][l])
                for (int q2 : a.delta[q][l]) out.push_back(id(p2, q2));
        return out;
    };
    for (int root = 0; root < n * n; ++root) {
        if (parent[root] == -2 || index[root] >= 0) continue;
        std::vector<Frame> call;
        call.push_back({root});
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.si == 0 && index[f.v] < 0) {
                index[f.v] = low[f.v] = next_index++;
                stack.push_back(f.v);
                on_stack[f.v] = true;
                f.succ = successors(f.v);
            }
            bool descended = false;
            while (f.si < f.succ.size()) {
                int w = f.succ[f.si++];
                if (index[w] < 0) {
                    call.push_back({w});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
            }
            if (descended) continue;
            if (low[f.v] == index[f.v]) {
                while (true) {
                    int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if (w == f.v) break;
                }
                ++next_comp;
            }
            int v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }

    // A component is "good" if it contains a cycle and touches acceptance in
    // both coordinates.
    std::vector<bool> comp_nontrivial(next_comp, false), comp_acc1(next_comp, false),
        comp_acc2(next_comp, false);
    std::vector<int> comp_size(next_comp, 0);
    for (int v = 0; v < n * n; ++v) {
        if (comp[v] < 0) continue;
        ++comp_size[comp[v]];
        if (a.accepting.count(v / n)) comp_acc1[comp[v]] = true;
        if (a.accepting.count(v % n)) comp_acc2[comp[v]] = true;
    }
    for (int v = 0; v < n * n; ++v) {
        if (comp[v] < 0) continue;
        for (int w : successors(v))
            if (comp[w] == comp[v] && (w != v || true)) {
                if (w == v || comp_size[comp[v]] > 1) comp_nontrivial[comp[v]] = true;
            }
    }
    std::vector<bool> good(next_comp);
    for (int c = 0; c < next_comp; ++c)
        good[c] = comp_nontrivial[c] && comp_acc1[c] && comp_acc2[c];

    // Which pairs can reach a good component? Propagate backwards via forward
    // DFS with memoization.
    std::vector<int> can_reach(n * n, -1);  // -1 unknown, 0 no, 1 yes
    std::vector<int> order;
    std::vector<int> dfs;
    for (int v = 0; v < n * n; ++v) {
        if (comp[v] < 0 || can_reach[v] >= 0) continue;
        dfs.push_back(v);
        std::vector<int> local;
        while (!dfs.empty()) {
            int x = dfs.back();
            dfs.pop_back();
            if (can_reach[x] >= 0) continue;
            can_reach[x] = -2;  // visiting
            local.push_back(x);
            for (int w : successors(x))
                if (can_reach[w] == -1) dfs.push_back(w);
        }
        // Fixpoint over the reachable region (small graphs, quadratic is fine).
        bool changed = true;
        while (changed) {
            changed = false;
            for (int x : local) {
                if (can_reach[x] == 1) continue;
                bool yes = good[comp[x]];
                if (!yes)
                    for (int w : successors(x))
                        if (can_reach[w] == 1 || (can_reach[w] == -2 && good[comp[w]])) yes = true;
                if (yes && can_reach[x] != 1) {
                    can_reach[x] = 1;
                    changed = true;
                }
            }
        }
        for (int x : local)
            if (can_reach[x] == -2) can_reach[x] = 0;
    }

    for (int v = 0; v < n * n; ++v) {
        int p = v / n, q = v % n;
        if (p == q || parent[v] == -2) continue;
        if (can_reach[v] == 1) {
            UnambiguityVerdict verdict;
            std::vector<std::string> prefix;
            int cur = v;
            while (parent[cur] != -1) {
                prefix.push_back(a.alphabet[parent_letter[cur]]);
                cur = parent[cur];
            }
            std::reverse(prefix.begin(), prefix.end());
            verdict.witness_prefix = prefix;
            return verdict;
        }
    }
    UnambiguityVerdict verdict;
    verdict.verified = true;
    return verdict;
}

// ---------------------------------------------------------------------------
// Product of an MDP with deterministic automata; acceptance lifted to
// properties over product states.
// ---------------------------------------------------------------------------

struct ProductResult {
    Mdp product;
    std::vector<RabinProperty> lifted;      // one per automaton
    std::vector<StateId> back_map;          // product state -> original state
};

inline ProductResult product(const Mdp& m, const std::vector<DeterministicAutomaton>& autos,
                             const std::vector<PropertyKind>& lift_kinds) {
    int k = static_cast<int>(autos.size());
    std::vector<std::vector<int>> letter_of(k);  // automaton letter id per MDP state
    for (int i = 0; i < k; ++i) {
        std::map<std::string, int> ap;
        for (std::size_t l = 0; l < autos[i].alphabet.size(); ++l) ap[autos[i].alphabet[l]] = l;
        letter_of[i].resize(m.state_count());
        for (StateId s = 0; s < m.state_count(); ++s) {
            auto it = ap.find(m.state_name(s));
            if (it == ap.end())
                throw automaton_error("alphabet mismatch: automaton lacks letter " +
                                      m.state_name(s));
            letter_of[i][s] = it->second;
        }
    }

    using Tuple = std::vector<int>;  // [mdp state, q_1, ..., q_k]
    std::map<Tuple, StateId> index;
    std::vector<Tuple> tuples;
    auto intern = [&](const Tuple& t) {
        auto it = index.find(t);
        if (it != index.end()) return it->second;
        StateId id = static_cast<StateId>(tuples.size());
        index[t] = id;
        tuples.push_back(t);
        return id;
    };

    Tuple init(k + 1);
    init[0] = m.initial();
    for (int i = 0; i < k; ++i)
        init[i + 1] = autos[i].step(autos[i].initial, letter_of[i][m.initial()]);
    intern(init);

    std::map<StateActionPair, Distribution> trans;
    for (std::size_t done = 0; done < tuples.size(); ++done) {
        Tuple cur = tuples[done];
        StateId cid = static_cast<StateId>(done);
        StateId s = cur[0];
        for (ActionId a : m.actions_of(s)) {
            Distribution d;
            for (const auto& [t, p] : m.dist(s, a)) {
                Tuple nxt(k + 1);
                nxt[0] = t;
                for (int i = 0; i < k; ++i) nxt[i + 1] = autos[i].step(cur[i + 1], letter_of[i][t]);
                d[intern(nxt)] += p;
            }
            trans[{cid, a}] = d;
        }
    }

    std::vector<std::string> names(tuples.size());
    std::vector<StateId> back(tuples.size());
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        std::string n = "(" + m.state_name(tuples[i][0]);
        for (int j = 0; j < k; ++j) n += "," + autos[j].states[tuples[i][j + 1]];
        n += ")";
        names[i] = n;
        back[i] = tuples[i][0];
    }
    Mdp prod = Mdp::from_parts(std::move(names), m.action_names(), index.at(init), trans);

    std::vector<RabinProperty> lifted(k);
    for (int i = 0; i < k; ++i) {
        lifted[i].kind = lift_kinds.at(i);
        for (const auto& acc : autos[i].acceptance) {
            PropertyPair pp;
            for (std::size_t pstate = 0; pstate < tuples.size(); ++pstate) {
                int q = tuples[pstate][i + 1];
                if (acc.inf.count(q)) pp.F.insert(static_cast<StateId>(pstate));
                if (!acc.fin.count(q)) pp.E.insert(static_cast<StateId>(pstate));
            }
            lifted[i].pairs.push_back(pp);
        }
    }
    return {std::move(prod), std::move(lifted), std::move(back)};
}

}  // namespace certimdp

#endif

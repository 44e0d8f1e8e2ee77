#pragma once
// Query rewriting and conjunctive evaluation of basic graph patterns.
//
// SELECT queries are rewritten to SELECT * so intermediate variables are
// retained for graph construction, while the original projection is kept
// because answers derive from it. Evaluation joins patterns against the
// store, most-selective-first, and returns a canonically ordered set of
// total bindings. FILTERs are never evaluated.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kgqa/sparql.hpp"
#include "kgqa/store.hpp"

namespace kgqa {

// Raised for ASK queries, which the pipeline excludes by design.
class AskQueryError : public std::runtime_error {
public:
    AskQueryError() : std::runtime_error("ask_query: ASK queries carry no answer entities") {}
};

// Total variable assignment; std::map keeps iteration sorted by name.
using Binding = std::map<std::string, NodeId>;

// Duplicate-free bindings, sorted by their value tuple in variable-name
// order. The canonical order makes dataset files reproducible.
using BindingSet = std::vector<Binding>;

struct RewrittenQuery {
    ParsedQuery query;                           // projection forced to *
    std::vector<std::string> original_projection; // answers come from these
};

inline RewrittenQuery rewrite_to_star(const ParsedQuery& q) {
    if (q.form == ParsedQuery::Form::ask) throw AskQueryError();
    RewrittenQuery out;
    out.original_projection = q.star ? collect_variables(q) : q.projection;
    out.query = q;
    out.query.star = true;
    out.query.projection.clear();
    return out;
}

namespace detail {

inline std::optional<NodeId> resolve_position(const Term& t, const Binding& b) {
    if (!is_variable(t)) return as_iri(t).id;
    auto it = b.find(as_variable(t).name);
    if (it != b.end()) return it->second;
    return std::nullopt;
}

// Extends `b` with the assignments a concrete triple induces for the
// pattern's unbound variables. Fails when a repeated variable disagrees.
inline bool unify(const TriplePattern& pat, const Triple& t, Binding& b) {
    const std::pair<const Term*, const NodeId*> slots[3] = {
        {&pat.subject, &t.subject}, {&pat.predicate, &t.predicate}, {&pat.object, &t.object}};
    for (auto [term, value] : slots) {
        if (!is_variable(*term)) continue; // constants already matched by the index lookup
        const std::string& name = as_variable(*term).name;
        auto [it, inserted] = b.emplace(name, *value);
        if (!inserted && it->second != *value) return false;
    }
    return true;
}

inline void execute_step(const std::vector<TriplePattern>& patterns, std::vector<bool>& used,
                         std::size_t remaining, const TripleStore& store, Binding& b,
                         BindingSet& out) {
    if (remaining == 0) {
        out.push_back(b);
        return;
    }
    // Pick the unused pattern with the fewest index matches under the
    // current partial binding; correctness is order-independent.
    std::size_t best = patterns.size();
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        if (used[i]) continue;
        const TriplePattern& p = patterns[i];
        std::size_t count = store.match_count(resolve_position(p.subject, b),
                                              resolve_position(p.predicate, b),
                                              resolve_position(p.object, b));
        if (best == patterns.size() || count < best_count) {
            best = i;
            best_count = count;
        }
        if (best_count == 0) break;
    }
    if (best_count == 0) return;

    used[best] = true;
    const TriplePattern& p = patterns[best];
    store.visit_matches(resolve_position(p.subject, b), resolve_position(p.predicate, b),
                        resolve_position(p.object, b), [&](const Triple& t) {
                            Binding extended = b;
                            if (unify(p, t, extended)) {
                                execute_step(patterns, used, remaining - 1, store, extended, out);
                            }
                        });
    used[best] = false;
}

} // namespace detail

// Every total assignment under which all patterns are stored triples.
// Unsatisfiable queries yield an empty set, never an error.
inline BindingSet execute(const RewrittenQuery& rq, const TripleStore& store) {
    const std::vector<TriplePattern>& patterns = rq.query.patterns;
    BindingSet out;
    std::vector<bool> used(patterns.size(), false);
    Binding b;
    detail::execute_step(patterns, used, patterns.size(), store, b, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// DISTINCT projection: tuples in binding order, deduplicated keep-first.
inline std::vector<std::vector<NodeId>> project(const BindingSet& bindings,
                                                const std::vector<std::string>& vars) {
    std::vector<std::vector<NodeId>> out;
    if (bindings.empty()) return out;
    for (const std::string& v : vars) {
        if (!bindings.front().contains(v)) {
            throw std::invalid_argument("project: unknown variable '" + v + "'");
        }
    }
    std::unordered_set<std::string> seen;
    for (const Binding& b : bindings) {
        std::vector<NodeId> tuple;
        std::string key;
        tuple.reserve(vars.size());
        for (const std::string& v : vars) {
            const NodeId& id = b.at(v);
            tuple.push_back(id);
            key += id;
            key += '\t';
        }
        if (seen.insert(key).second) out.push_back(std::move(tuple));
    }
    return out;
}

} // namespace kgqa

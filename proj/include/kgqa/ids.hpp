#pragma once
// Knowledge-graph identifiers and triples.
//
// Ids follow the Wikidata convention (Q-prefixed entities, P-prefixed
// relations) but are treated as opaque tokens unless strict checking is
// requested, so fixtures may use readable names.

#include <compare>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

#include "kgqa/util.hpp"

namespace kgqa {

using NodeId = std::string;

// Opaque-token rule: non-empty, no whitespace of any kind.
inline bool is_valid_node_id(std::string_view id) {
    if (id.empty()) return false;
    for (char c : id) {
        if (is_ascii_space(c)) return false;
    }
    return true;
}

inline bool matches_prefixed_number(std::string_view id, char prefix) {
    if (id.size() < 2 || id[0] != prefix) return false;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (id[i] < '0' || id[i] > '9') return false;
    }
    return true;
}

inline bool is_strict_entity_id(std::string_view id) { return matches_prefixed_number(id, 'Q'); }
inline bool is_strict_relation_id(std::string_view id) { return matches_prefixed_number(id, 'P'); }

struct Triple {
    NodeId subject;
    NodeId predicate;
    NodeId object;

    auto operator<=>(const Triple&) const = default;
};

// Ids never contain tabs, so a tab-joined key is collision-free.
inline std::string triple_key(const Triple& t) {
    std::string key;
    key.reserve(t.subject.size() + t.predicate.size() + t.object.size() + 2);
    key += t.subject;
    key += '\t';
    key += t.predicate;
    key += '\t';
    key += t.object;
    return key;
}

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        return std::hash<std::string>()(triple_key(t));
    }
};

} // namespace kgqa

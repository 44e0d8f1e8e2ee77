#pragma once
// Grounding of query patterns into concrete subgraphs and conversion to
// the local-index edge-list record used in dataset files: entity and
// relation ids live in local lists, each edge is a triple of positions
// [subject index, predicate index, object index], and label lists are
// aligned with the id lists.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgqa/bgp.hpp"
#include "kgqa/ids.hpp"
#include "kgqa/store.hpp"

namespace kgqa {

// Fully ground triples, duplicate-free, in first-derivation order.
struct GroundedGraph {
    std::vector<Triple> triples;

    bool empty() const { return triples.empty(); }
    std::size_t size() const { return triples.size(); }
    bool operator==(const GroundedGraph&) const = default;
};

struct GraphEdge {
    std::size_t subject;   // position in entities
    std::size_t predicate; // position in relations
    std::size_t object;    // position in entities

    bool operator==(const GraphEdge&) const = default;
};

struct GraphRecord {
    std::vector<NodeId> entities;
    std::vector<NodeId> relations;
    std::vector<GraphEdge> edges;
    std::vector<std::string> entity_labels;
    std::vector<std::string> relation_labels;

    bool operator==(const GraphRecord&) const = default;
};

// Union over all bindings of all substituted patterns, deduplicated, in
// derivation order (binding order x pattern order).
inline GroundedGraph ground_patterns(const std::vector<TriplePattern>& patterns,
                                     const BindingSet& bindings) {
    GroundedGraph g;
    std::unordered_set<std::string> seen;
    auto substitute = [](const Term& t, const Binding& b) -> const NodeId& {
        if (!is_variable(t)) return as_iri(t).id;
        auto it = b.find(as_variable(t).name);
        if (it == b.end()) {
            throw std::invalid_argument("ground_patterns: binding is missing variable '" +
                                        as_variable(t).name + "'");
        }
        return it->second;
    };
    for (const Binding& b : bindings) {
        for (const TriplePattern& p : patterns) {
            Triple t{substitute(p.subject, b), substitute(p.predicate, b), substitute(p.object, b)};
            if (seen.insert(triple_key(t)).second) g.triples.push_back(std::move(t));
        }
    }
    return g;
}

// Local lists in first-appearance order; subject precedes object within a
// triple. Labels resolve through the table with the raw id as fallback.
inline GraphRecord to_graph_record(const GroundedGraph& g, const LabelTable& labels) {
    GraphRecord record;
    std::unordered_map<NodeId, std::size_t> entity_index;
    std::unordered_map<NodeId, std::size_t> relation_index;
    auto entity_slot = [&](const NodeId& id) {
        auto [it, inserted] = entity_index.emplace(id, record.entities.size());
        if (inserted) {
            record.entities.push_back(id);
            record.entity_labels.push_back(labels.resolve(id).text);
        }
        return it->second;
    };
    auto relation_slot = [&](const NodeId& id) {
        auto [it, inserted] = relation_index.emplace(id, record.relations.size());
        if (inserted) {
            record.relations.push_back(id);
            record.relation_labels.push_back(labels.resolve(id).text);
        }
        return it->second;
    };
    for (const Triple& t : g.triples) {
        GraphEdge e;
        e.subject = entity_slot(t.subject);
        e.predicate = relation_slot(t.predicate);
        e.object = entity_slot(t.object);
        record.edges.push_back(e);
    }
    return record;
}

// Inverse of to_graph_record: expand index edges back to concrete triples.
inline GroundedGraph expand_record(const GraphRecord& record) {
    GroundedGraph g;
    g.triples.reserve(record.edges.size());
    for (const GraphEdge& e : record.edges) {
        g.triples.push_back({record.entities.at(e.subject), record.relations.at(e.predicate),
                             record.entities.at(e.object)});
    }
    return g;
}

// Structural invariants of the record form; throws DataError on breach.
inline void validate_record(const GraphRecord& record) {
    if (record.entity_labels.size() != record.entities.size() ||
        record.relation_labels.size() != record.relations.size()) {
        throw DataError("graph record: label list lengths do not match id lists");
    }
    std::unordered_set<NodeId> unique_entities(record.entities.begin(), record.entities.end());
    std::unordered_set<NodeId> unique_relations(record.relations.begin(), record.relations.end());
    if (unique_entities.size() != record.entities.size() ||
        unique_relations.size() != record.relations.size()) {
        throw DataError("graph record: local id lists contain duplicates");
    }
    for (const GraphEdge& e : record.edges) {
        if (e.subject >= record.entities.size() || e.object >= record.entities.size() ||
            e.predicate >= record.relations.size()) {
            throw DataError("graph record: edge index out of bounds");
        }
    }
}

// Keeps triples whose subject AND object have embeddings; relations are
// only checked in strict mode. Order preserved; idempotent.
inline GroundedGraph filter_by_kge_vocab(const GroundedGraph& g,
                                         const std::unordered_set<NodeId>& vocab,
                                         bool require_relations = false) {
    GroundedGraph out;
    for (const Triple& t : g.triples) {
        if (!vocab.contains(t.subject) || !vocab.contains(t.object)) continue;
        if (require_relations && !vocab.contains(t.predicate)) continue;
        out.triples.push_back(t);
    }
    return out;
}

// Vocabulary file: one id per line, blank lines ignored.
inline std::unordered_set<NodeId> load_kge_vocab(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::unordered_set<NodeId> vocab;
    for_each_line(in, [&](std::size_t line_no, std::string_view line) {
        if (line.empty()) return;
        if (!is_valid_node_id(line)) {
            throw FormatError(path.string(), line_no, "invalid id token '" + std::string(line) + "'");
        }
        vocab.insert(NodeId(line));
    });
    return vocab;
}

} // namespace kgqa

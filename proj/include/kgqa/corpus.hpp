#pragma once
// Distant-pretraining pairs: paragraphs coupled with the subgraph of all
// store links between their co-mentioned entities. Paragraphs with too
// few mentions, or whose augmented graph comes out empty, are dropped
// and counted.

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgqa/graph.hpp"
#include "kgqa/pipeline.hpp"
#include "kgqa/store.hpp"

namespace kgqa {

struct ParagraphRecord {
    std::string doc_id;
    std::string text;
    std::vector<NodeId> mentions; // deduplicated, first-appearance order
};

struct PretrainPair {
    std::string doc_id;
    std::string text;
    GraphRecord graph; // entities are a subset of the paragraph's mentions
};

struct CorpusOutcome {
    std::vector<PretrainPair> pairs;
    std::size_t below_min_mentions = 0;
    std::size_t empty_graph = 0;
};

// Every store triple (a, p, b) over ordered pairs of distinct mentions.
// Wikidata edges are directed but co-mention is not, so both directions
// are probed. Deterministic: pair order x relation id order.
inline GroundedGraph augment_links(const std::vector<NodeId>& mentions, const TripleStore& store) {
    std::vector<NodeId> unique;
    std::unordered_set<NodeId> seen;
    for (const NodeId& m : mentions) {
        if (seen.insert(m).second) unique.push_back(m);
    }
    GroundedGraph g;
    for (const NodeId& a : unique) {
        for (const NodeId& b : unique) {
            if (a == b) continue;
            // match() returns id-sorted triples, fixing the relation order
            for (Triple& t : store.match(a, std::nullopt, b)) {
                g.triples.push_back(std::move(t));
            }
        }
    }
    return g;
}

inline CorpusOutcome build_pairs(const std::vector<ParagraphRecord>& paragraphs,
                                 const TripleStore& store, std::size_t min_mentions = 4) {
    if (min_mentions < 1) throw std::invalid_argument("min_mentions must be at least 1");
    CorpusOutcome outcome;
    for (const ParagraphRecord& p : paragraphs) {
        if (p.mentions.size() < min_mentions) {
            ++outcome.below_min_mentions;
            continue;
        }
        GroundedGraph g = augment_links(p.mentions, store);
        if (g.empty()) {
            ++outcome.empty_graph;
            continue;
        }
        outcome.pairs.push_back({p.doc_id, p.text, to_graph_record(g, store.labels())});
    }
    return outcome;
}

// Paragraph input lines: doc_id, text, mentions. Mentions are
// deduplicated on load, keeping first appearance.
inline std::vector<ParagraphRecord> read_paragraphs(std::istream& in, const std::string& source) {
    std::vector<ParagraphRecord> out;
    for_each_line(in, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) return;
        try {
            json j = json::parse(line);
            ParagraphRecord p;
            p.doc_id = detail::string_field(j, "doc_id");
            p.text = detail::string_field(j, "text");
            std::unordered_set<NodeId> seen;
            for (const std::string& m : detail::string_array(j, "mentions")) {
                if (!is_valid_node_id(m)) throw DataError("invalid mention id '" + m + "'");
                if (seen.insert(m).second) p.mentions.push_back(m);
            }
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw FormatError(source, line_no, std::string("invalid JSON: ") + e.what());
        } catch (const DataError& e) {
            throw FormatError(source, line_no, e.what());
        }
    });
    return out;
}

inline std::vector<ParagraphRecord> read_paragraphs(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return read_paragraphs(in, path.string());
}

// Pairs use the dataset line format with `question` replaced by `text`
// and no answer or flag fields.
inline json pair_to_json(const PretrainPair& p) {
    json j;
    j["id"] = p.doc_id;
    j["text"] = p.text;
    j["entities"] = p.graph.entities;
    j["relations"] = p.graph.relations;
    json edges = json::array();
    for (const GraphEdge& e : p.graph.edges) {
        edges.push_back(json::array({e.subject, e.predicate, e.object}));
    }
    j["edges"] = std::move(edges);
    j["entity_labels"] = p.graph.entity_labels;
    j["relation_labels"] = p.graph.relation_labels;
    return j;
}

inline void write_pairs(const std::vector<PretrainPair>& pairs, std::ostream& out) {
    for (const PretrainPair& p : pairs) {
        out << pair_to_json(p).dump() << '\n';
    }
}

inline void write_pairs(const std::vector<PretrainPair>& pairs, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    write_pairs(pairs, out);
    if (!out) throw IoError("failed while writing " + path.string());
}

} // namespace kgqa

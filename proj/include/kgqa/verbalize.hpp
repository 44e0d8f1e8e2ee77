#pragma once
// Graph-to-text rendering for the fine-tuning baselines. Templates are
// byte-exact and deliberately unsmoothed ("has a occupation" stays as
// the template produces it).

#include <string>

#include "kgqa/graph.hpp"
#include "kgqa/store.hpp"

namespace kgqa {

struct VerbalizedGraph {
    std::string text;
};

// "{subject label} has a {predicate label} {object label};"
inline std::string verbalize_triple(const Triple& t, const LabelTable& labels) {
    return labels.resolve(t.subject).text + " has a " + labels.resolve(t.predicate).text + " " +
           labels.resolve(t.object).text + ";";
}

// Per-triple clauses joined by a single space, graph order preserved.
inline VerbalizedGraph verbalize_graph(const GroundedGraph& g, const LabelTable& labels) {
    std::string text;
    for (std::size_t i = 0; i < g.triples.size(); ++i) {
        if (i > 0) text += ' ';
        text += verbalize_triple(g.triples[i], labels);
    }
    return {std::move(text)};
}

// Same rendering from a record's own label lists; records resolved label
// fallbacks at build time, so no table is needed.
inline VerbalizedGraph verbalize_record_graph(const GraphRecord& record) {
    std::string text;
    for (std::size_t i = 0; i < record.edges.size(); ++i) {
        const GraphEdge& e = record.edges[i];
        if (i > 0) text += ' ';
        text += record.entity_labels.at(e.subject) + " has a " +
                record.relation_labels.at(e.predicate) + " " + record.entity_labels.at(e.object) +
                ";";
    }
    return {std::move(text)};
}

// "question: {question}. context: {verbalized graph}"
inline std::string format_context_input(const std::string& question, const VerbalizedGraph& vg) {
    return "question: " + question + ". context: " + vg.text;
}

// "Question: {question}" — no trimming, no other changes.
inline std::string format_question_only(const std::string& question) {
    return "Question: " + question;
}

} // namespace kgqa

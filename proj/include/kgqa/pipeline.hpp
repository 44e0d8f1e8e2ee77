#pragma once
// Per-question processing: parse the query, evaluate it, ground the
// paired graph, derive answers, apply the selection rules, and account
// for every drop. Also owns the dataset line format and corpus stats.
//
// Dataset files are JSON lines with the frozen field order
//   id, question, answers, entities, relations, edges,
//   entity_labels, relation_labels, had_filters, truncated
// and are byte-reproducible for identical inputs.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"

#include "kgqa/bgp.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/sparql.hpp"
#include "kgqa/store.hpp"
#include "kgqa/util.hpp"

namespace kgqa {

enum class Provenance { mcwq, lcquad2, other };

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::mcwq: return "mcwq";
        case Provenance::lcquad2: return "lcquad2";
        case Provenance::other: return "other";
    }
    return "other";
}

struct SourceSample {
    std::string id;
    std::string question;
    std::string sparql;
    Provenance provenance = Provenance::other;
    std::optional<std::vector<std::string>> provided_answers;
};

enum class DropReason {
    ask_query,
    parse_failure,
    empty_bindings,
    empty_graph,
    no_labeled_answer,
};

inline const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::ask_query: return "ask_query";
        case DropReason::parse_failure: return "parse_failure";
        case DropReason::empty_bindings: return "empty_bindings";
        case DropReason::empty_graph: return "empty_graph";
        case DropReason::no_labeled_answer: return "no_labeled_answer";
    }
    return "unknown";
}

struct DatasetRecord {
    std::string id;
    std::string question;
    std::vector<std::string> answers; // non-empty, duplicate-free
    GraphRecord graph;                // non-empty
    bool had_filters = false;         // FILTERs were stripped, answers may over-approximate
    bool truncated = false;           // graph hit the size cap

    bool operator==(const DatasetRecord&) const = default;
};

struct Dropped {
    DropReason reason;
    std::string detail;
};

using SampleResult = std::variant<DatasetRecord, Dropped>;

enum class BindingsPolicy { all, first };

struct PipelineOptions {
    BindingsPolicy bindings = BindingsPolicy::all;
    std::optional<std::size_t> max_graph_size; // cap on grounded triples, default none
    bool vocab_covers_relations = false;       // strict KGE mode
};

// Provided answers win (deduplicated); otherwise project the bindings,
// label each id, and drop label misses rather than emitting raw ids.
inline std::vector<std::string> derive_answers(const BindingSet& bindings,
                                               const std::vector<std::string>& original_projection,
                                               const LabelTable& labels,
                                               const std::optional<std::vector<std::string>>& provided) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    auto push_unique = [&](const std::string& a) {
        if (seen.insert(a).second) out.push_back(a);
    };
    if (provided && !provided->empty()) {
        for (const std::string& a : *provided) push_unique(a);
        return out;
    }
    for (const std::vector<NodeId>& tuple : project(bindings, original_projection)) {
        for (const NodeId& id : tuple) {
            LabelResult label = labels.resolve(id);
            if (label.found) push_unique(label.text);
        }
    }
    return out;
}

inline SampleResult process_sample(const SourceSample& sample, const TripleStore& store,
                                   const std::unordered_set<NodeId>* vocab = nullptr,
                                   const PipelineOptions& opts = {}) {
    ParsedQuery parsed;
    try {
        parsed = parse_query(sample.sparql);
    } catch (const ParseError& e) {
        return Dropped{DropReason::parse_failure, e.what()};
    } catch (const std::exception& e) {
        return Dropped{DropReason::parse_failure, std::string("internal: ") + e.what()};
    }

    RewrittenQuery rewritten;
    try {
        rewritten = rewrite_to_star(parsed);
    } catch (const AskQueryError&) {
        return Dropped{DropReason::ask_query, "yes/no question"};
    }

    BindingSet bindings = execute(rewritten, store);
    if (bindings.empty()) {
        return Dropped{DropReason::empty_bindings, "query matched nothing in the store"};
    }

    GroundedGraph graph;
    if (opts.bindings == BindingsPolicy::first) {
        graph = ground_patterns(rewritten.query.patterns, BindingSet{bindings.front()});
    } else {
        graph = ground_patterns(rewritten.query.patterns, bindings);
    }
    if (vocab) graph = filter_by_kge_vocab(graph, *vocab, opts.vocab_covers_relations);

    bool truncated = false;
    if (opts.max_graph_size && graph.triples.size() > *opts.max_graph_size) {
        graph.triples.resize(*opts.max_graph_size);
        truncated = true;
    }
    if (graph.empty()) {
        return Dropped{DropReason::empty_graph,
                       vocab ? "all triples removed by the KGE vocabulary filter"
                             : "grounded graph is empty"};
    }

    std::vector<std::string> answers =
        derive_answers(bindings, rewritten.original_projection, store.labels(),
                       sample.provided_answers);
    if (answers.empty()) {
        return Dropped{DropReason::no_labeled_answer, "no answer with a usable label"};
    }

    DatasetRecord record;
    record.id = sample.id;
    record.question = sample.question;
    record.answers = std::move(answers);
    record.graph = to_graph_record(graph, store.labels());
    record.had_filters = parsed.stripped_filter_count() > 0;
    record.truncated = truncated;
    return record;
}

// ---- batch building -------------------------------------------------------

struct DropEntry {
    std::string id;
    DropReason reason;
    std::string detail;
};

struct BuildOutcome {
    std::vector<DatasetRecord> records;
    std::vector<DropEntry> drops;
    std::vector<std::string> filtered_out; // ids excluded by drop_filtered

    std::size_t drop_count(DropReason r) const {
        std::size_t n = 0;
        for (const DropEntry& d : drops) {
            if (d.reason == r) ++n;
        }
        return n;
    }
};

struct BuildOptions : PipelineOptions {
    bool drop_filtered = false; // exclude records whose query carried FILTERs
    unsigned jobs = 1;
};

// Samples are independent; workers share the read-only store. Results are
// folded in input order so output files are deterministic.
inline BuildOutcome build_dataset(const std::vector<SourceSample>& samples,
                                  const TripleStore& store,
                                  const std::unordered_set<NodeId>* vocab = nullptr,
                                  const BuildOptions& opts = {}) {
    std::vector<std::optional<SampleResult>> results(samples.size());
    unsigned jobs = opts.jobs == 0 ? 1 : opts.jobs;
    if (jobs <= 1 || samples.size() <= 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            results[i] = process_sample(samples[i], store, vocab, opts);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= samples.size()) break;
                results[i] = process_sample(samples[i], store, vocab, opts);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    BuildOutcome outcome;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        SampleResult& r = *results[i];
        if (auto* record = std::get_if<DatasetRecord>(&r)) {
            if (opts.drop_filtered && record->had_filters) {
                outcome.filtered_out.push_back(record->id);
            } else {
                outcome.records.push_back(std::move(*record));
            }
        } else {
            Dropped& d = std::get<Dropped>(r);
            outcome.drops.push_back({samples[i].id, d.reason, std::move(d.detail)});
        }
    }
    return outcome;
}

// ---- statistics -----------------------------------------------------------

struct DatasetStats {
    std::size_t record_count = 0;
    double avg_triples_per_graph = 0.0;
    double avg_answers_per_question = 0.0;
    double avg_answer_word_span = 0.0; // whitespace-separated tokens
    std::size_t distinct_entities = 0;
    std::size_t distinct_relations = 0;
    double answer_coverage_fraction = 0.0; // records with an in-graph answer label
};

namespace detail {

inline std::string coverage_key(std::string_view s) {
    return to_lower_ascii(normalize_whitespace(s));
}

} // namespace detail

inline DatasetStats compute_stats(const std::vector<DatasetRecord>& records) {
    if (records.empty()) throw DataError("stats undefined on empty dataset");
    DatasetStats stats;
    stats.record_count = records.size();
    std::unordered_set<NodeId> entities;
    std::unordered_set<NodeId> relations;
    double triple_sum = 0.0, answer_sum = 0.0, span_sum = 0.0;
    std::size_t covered = 0;
    for (const DatasetRecord& r : records) {
        triple_sum += static_cast<double>(r.graph.edges.size());
        answer_sum += static_cast<double>(r.answers.size());
        double record_span = 0.0;
        for (const std::string& a : r.answers) {
            record_span += static_cast<double>(split_whitespace(a).size());
        }
        span_sum += record_span / static_cast<double>(r.answers.size());
        entities.insert(r.graph.entities.begin(), r.graph.entities.end());
        relations.insert(r.graph.relations.begin(), r.graph.relations.end());

        std::unordered_set<std::string> graph_labels;
        for (const std::string& label : r.graph.entity_labels) {
            graph_labels.insert(detail::coverage_key(label));
        }
        for (const std::string& a : r.answers) {
            if (graph_labels.contains(detail::coverage_key(a))) {
                ++covered;
                break;
            }
        }
    }
    double n = static_cast<double>(records.size());
    stats.avg_triples_per_graph = triple_sum / n;
    stats.avg_answers_per_question = answer_sum / n;
    stats.avg_answer_word_span = span_sum / n;
    stats.distinct_entities = entities.size();
    stats.distinct_relations = relations.size();
    stats.answer_coverage_fraction = static_cast<double>(covered) / n;
    return stats;
}

// ---- line format ----------------------------------------------------------

using json = nlohmann::ordered_json;

inline json record_to_json(const DatasetRecord& r) {
    json j;
    j["id"] = r.id;
    j["question"] = r.question;
    j["answers"] = r.answers;
    j["entities"] = r.graph.entities;
    j["relations"] = r.graph.relations;
    json edges = json::array();
    for (const GraphEdge& e : r.graph.edges) {
        edges.push_back(json::array({e.subject, e.predicate, e.object}));
    }
    j["edges"] = std::move(edges);
    j["entity_labels"] = r.graph.entity_labels;
    j["relation_labels"] = r.graph.relation_labels;
    j["had_filters"] = r.had_filters;
    j["truncated"] = r.truncated;
    return j;
}

namespace detail {

inline std::vector<std::string> string_array(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_array()) {
        throw DataError(std::string("missing or non-array field '") + field + "'");
    }
    std::vector<std::string> out;
    for (const auto& v : j[field]) {
        if (!v.is_string()) throw DataError(std::string("non-string element in '") + field + "'");
        out.push_back(v.get<std::string>());
    }
    return out;
}

inline std::string string_field(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_string()) {
        throw DataError(std::string("missing or non-string field '") + field + "'");
    }
    return j[field].get<std::string>();
}

inline bool bool_field(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_boolean()) {
        throw DataError(std::string("missing or non-boolean field '") + field + "'");
    }
    return j[field].get<bool>();
}

} // namespace detail

inline DatasetRecord record_from_json(const json& j) {
    DatasetRecord r;
    r.id = detail::string_field(j, "id");
    r.question = detail::string_field(j, "question");
    r.answers = detail::string_array(j, "answers");
    r.graph.entities = detail::string_array(j, "entities");
    r.graph.relations = detail::string_array(j, "relations");
    if (!j.contains("edges") || !j["edges"].is_array()) {
        throw DataError("missing or non-array field 'edges'");
    }
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() ||
            !e[1].is_number_unsigned() || !e[2].is_number_unsigned()) {
            throw DataError("edge is not a [subject, predicate, object] index triple");
        }
        r.graph.edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(),
                                 e[2].get<std::size_t>()});
    }
    r.graph.entity_labels = detail::string_array(j, "entity_labels");
    r.graph.relation_labels = detail::string_array(j, "relation_labels");
    r.had_filters = detail::bool_field(j, "had_filters");
    r.truncated = detail::bool_field(j, "truncated");
    if (r.answers.empty()) throw DataError("record has no answers");
    std::unordered_set<std::string> unique_answers(r.answers.begin(), r.answers.end());
    if (unique_answers.size() != r.answers.size()) throw DataError("record answers contain duplicates");
    if (r.graph.edges.empty()) throw DataError("record graph is empty");
    validate_record(r.graph);
    return r;
}

inline void write_dataset(const std::vector<DatasetRecord>& records, std::ostream& out) {
    for (const DatasetRecord& r : records) {
        out << record_to_json(r).dump() << '\n';
    }
}

inline void write_dataset(const std::vector<DatasetRecord>& records,
                          const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    write_dataset(records, out);
    if (!out) throw IoError("failed while writing " + path.string());
}

inline std::vector<DatasetRecord> read_dataset(std::istream& in, const std::string& source) {
    std::vector<DatasetRecord> records;
    for_each_line(in, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) return;
        try {
            records.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError(source, line_no, std::string("invalid JSON: ") + e.what());
        } catch (const DataError& e) {
            throw FormatError(source, line_no, e.what());
        }
    });
    return records;
}

inline std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return read_dataset(in, path.string());
}

// Unified source-sample line format: id, question, sparql, provenance,
// answers (optional). Ids must be unique within a file.
inline std::vector<SourceSample> read_samples(std::istream& in, const std::string& source) {
    std::vector<SourceSample> samples;
    std::unordered_set<std::string> ids;
    for_each_line(in, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) return;
        try {
            json j = json::parse(line);
            SourceSample s;
            s.id = detail::string_field(j, "id");
            s.question = detail::string_field(j, "question");
            s.sparql = detail::string_field(j, "sparql");
            if (s.question.empty()) throw DataError("empty question");
            if (j.contains("provenance")) {
                std::string p = detail::string_field(j, "provenance");
                if (p == "mcwq") s.provenance = Provenance::mcwq;
                else if (p == "lcquad2") s.provenance = Provenance::lcquad2;
                else if (p == "other") s.provenance = Provenance::other;
                else throw DataError("unknown provenance '" + p + "'");
            }
            if (j.contains("answers")) {
                s.provided_answers = detail::string_array(j, "answers");
            }
            if (!ids.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw FormatError(source, line_no, std::string("invalid JSON: ") + e.what());
        } catch (const DataError& e) {
            throw FormatError(source, line_no, e.what());
        }
    });
    return samples;
}

inline std::vector<SourceSample> read_samples(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return read_samples(in, path.string());
}

} // namespace kgqa

// kgqa: deterministic dataset building, statistics, verbalization,
// pretraining-pair construction, and generative-QA evaluation over an
// embedded knowledge graph.
//
// Exit codes: 0 success, 1 usage error, 2 data error.
// Diagnostics go to stderr; data artifacts go only to declared outputs.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "kgqa/corpus.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/pipeline.hpp"
#include "kgqa/store.hpp"
#include "kgqa/verbalize.hpp"

namespace {

using kgqa::json;

struct BuildArgs {
    std::string triples, samples, output;
    std::string labels, vocab, drop_report;
    std::string bindings = "all";
    bool strict_ids = false;
    bool drop_filtered = false;
    std::size_t max_graph_size = 0; // 0 = uncapped
    unsigned jobs = 1;
};

struct StatsArgs {
    std::string dataset, output;
};

struct VerbalizeArgs {
    std::string dataset, output;
    std::string target_policy = "first";
    std::string format = "context";
};

struct CorpusArgs {
    std::string triples, paragraphs, output;
    std::string labels;
    std::size_t min_mentions = 4;
};

struct EvalArgs {
    std::string predictions, gold, output;
};

kgqa::TripleStore load_store_checked(const std::string& triples, const std::string& labels,
                                     bool strict_ids) {
    kgqa::StoreOptions opts;
    opts.strict_ids = strict_ids;
    std::optional<std::filesystem::path> labels_path;
    if (!labels.empty()) labels_path = labels;
    return kgqa::load_store(triples, labels_path, opts);
}

void emit_report_line(const json& j, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << j.dump() << '\n';
    } else {
        std::ofstream out = kgqa::open_output(output_path);
        out << j.dump() << '\n';
    }
}

int run_build(const BuildArgs& args) {
    kgqa::TripleStore store = load_store_checked(args.triples, args.labels, args.strict_ids);
    std::vector<kgqa::SourceSample> samples = kgqa::read_samples(args.samples);

    std::optional<std::unordered_set<kgqa::NodeId>> vocab;
    if (!args.vocab.empty()) vocab = kgqa::load_kge_vocab(args.vocab);

    kgqa::BuildOptions opts;
    opts.bindings = args.bindings == "first" ? kgqa::BindingsPolicy::first
                                             : kgqa::BindingsPolicy::all;
    if (args.max_graph_size > 0) opts.max_graph_size = args.max_graph_size;
    opts.drop_filtered = args.drop_filtered;
    opts.jobs = args.jobs;

    kgqa::BuildOutcome outcome =
        kgqa::build_dataset(samples, store, vocab ? &*vocab : nullptr, opts);
    kgqa::write_dataset(outcome.records, std::filesystem::path(args.output));

    if (!args.drop_report.empty()) {
        std::ofstream report = kgqa::open_output(args.drop_report);
        for (const kgqa::DropEntry& d : outcome.drops) {
            json j;
            j["id"] = d.id;
            j["reason"] = kgqa::to_string(d.reason);
            j["detail"] = d.detail;
            report << j.dump() << '\n';
        }
        for (const std::string& id : outcome.filtered_out) {
            json j;
            j["id"] = id;
            j["reason"] = "had_filters";
            j["detail"] = "record excluded by --drop-filtered";
            report << j.dump() << '\n';
        }
    }

    std::cerr << "input samples:  " << samples.size() << '\n'
              << "records:        " << outcome.records.size() << '\n';
    using kgqa::DropReason;
    for (DropReason r : {DropReason::ask_query, DropReason::parse_failure,
                         DropReason::empty_bindings, DropReason::empty_graph,
                         DropReason::no_labeled_answer}) {
        std::cerr << "drop " << kgqa::to_string(r) << ": " << outcome.drop_count(r) << '\n';
    }
    if (args.drop_filtered) {
        std::cerr << "drop had_filters: " << outcome.filtered_out.size() << '\n';
    }
    return 0;
}

int run_stats(const StatsArgs& args) {
    std::vector<kgqa::DatasetRecord> records = kgqa::read_dataset(args.dataset);
    kgqa::DatasetStats stats = kgqa::compute_stats(records); // throws on empty

    json j;
    j["record_count"] = stats.record_count;
    j["avg_triples_per_graph"] = stats.avg_triples_per_graph;
    j["avg_answers_per_question"] = stats.avg_answers_per_question;
    j["avg_answer_word_span"] = stats.avg_answer_word_span;
    j["distinct_entities"] = stats.distinct_entities;
    j["distinct_relations"] = stats.distinct_relations;
    j["answer_coverage_fraction"] = stats.answer_coverage_fraction;
    emit_report_line(j, args.output);

    std::cerr << "records:             " << stats.record_count << '\n'
              << "avg triples/graph:   " << stats.avg_triples_per_graph << '\n'
              << "avg answers/question:" << stats.avg_answers_per_question << '\n'
              << "avg answer word span:" << stats.avg_answer_word_span << '\n'
              << "distinct entities:   " << stats.distinct_entities << '\n'
              << "distinct relations:  " << stats.distinct_relations << '\n'
              << "answer coverage:     " << stats.answer_coverage_fraction << '\n';
    return 0;
}

int run_verbalize(const VerbalizeArgs& args) {
    std::vector<kgqa::DatasetRecord> records = kgqa::read_dataset(args.dataset);
    std::ofstream out = kgqa::open_output(args.output);
    for (const kgqa::DatasetRecord& r : records) {
        std::string input;
        if (args.format == "question-only") {
            input = kgqa::format_question_only(r.question);
        } else {
            input = kgqa::format_context_input(r.question, kgqa::verbalize_record_graph(r.graph));
        }
        std::string target;
        if (args.target_policy == "joined") {
            for (std::size_t i = 0; i < r.answers.size(); ++i) {
                if (i > 0) target += ", ";
                target += r.answers[i];
            }
        } else {
            target = r.answers.front();
        }
        json j;
        j["id"] = r.id;
        j["input"] = input;
        j["target"] = target;
        out << j.dump() << '\n';
    }
    std::cerr << "verbalized " << records.size() << " records\n";
    return 0;
}

int run_corpus(const CorpusArgs& args) {
    kgqa::TripleStore store = load_store_checked(args.triples, args.labels, false);
    std::vector<kgqa::ParagraphRecord> paragraphs = kgqa::read_paragraphs(args.paragraphs);
    kgqa::CorpusOutcome outcome = kgqa::build_pairs(paragraphs, store, args.min_mentions);
    kgqa::write_pairs(outcome.pairs, std::filesystem::path(args.output));

    std::cerr << "paragraphs:              " << paragraphs.size() << '\n'
              << "pairs:                   " << outcome.pairs.size() << '\n'
              << "drop below min mentions: " << outcome.below_min_mentions << '\n'
              << "drop empty graph:        " << outcome.empty_graph << '\n';
    return 0;
}

int run_eval(const EvalArgs& args) {
    kgqa::EvalReport report = kgqa::evaluate(args.predictions, args.gold);

    json j;
    j["em"] = report.exact_match;
    j["f1"] = report.f1;
    j["bleu"] = report.bleu;
    j["n_scored"] = report.n_scored;
    j["bleu_smoothing"] = "add-epsilon-1e-9";
    emit_report_line(j, args.output);

    std::cerr << "scored " << report.n_scored << " records\n"
              << "EM:   " << report.exact_match << '\n'
              << "F1:   " << report.f1 << '\n'
              << "BLEU: " << report.bleu << " (zero n-gram precisions smoothed with 1e-9)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph QA dataset toolkit"};
    app.require_subcommand(1);

    BuildArgs build_args;
    CLI::App* build = app.add_subcommand(
        "build", "derive question/graph/answer records from SPARQL-annotated samples");
    build->add_option("--triples", build_args.triples, "triple dump (s<TAB>p<TAB>o lines)")
        ->required();
    build->add_option("--labels", build_args.labels, "label dump (id<TAB>label lines)");
    build->add_option("--samples", build_args.samples, "source samples JSONL")->required();
    build->add_option("--vocab", build_args.vocab, "KGE vocabulary, one id per line");
    build->add_option("--output", build_args.output, "dataset JSONL to write")->required();
    build->add_option("--drop-report", build_args.drop_report, "per-sample drop reasons JSONL");
    build->add_option("--bindings", build_args.bindings, "ground all bindings or only the first")
        ->check(CLI::IsMember({"all", "first"}));
    build->add_flag("--strict-ids", build_args.strict_ids, "enforce Q<digits>/P<digits> ids");
    build->add_flag("--drop-filtered", build_args.drop_filtered,
                    "exclude records whose query carried FILTER clauses");
    build->add_option("--max-graph-size", build_args.max_graph_size,
                      "cap grounded triples per record; capped records are flagged")
        ->check(CLI::PositiveNumber);
    build->add_option("--jobs", build_args.jobs, "worker threads")->check(CLI::PositiveNumber);

    StatsArgs stats_args;
    CLI::App* stats = app.add_subcommand("stats", "corpus-level measurements of a dataset file");
    stats->add_option("--dataset", stats_args.dataset, "dataset JSONL")->required();
    stats->add_option("--output", stats_args.output, "write the report line here instead of stdout");

    VerbalizeArgs verbalize_args;
    CLI::App* verbalize =
        app.add_subcommand("verbalize", "emit fine-tuning inputs and targets from a dataset");
    verbalize->add_option("--dataset", verbalize_args.dataset, "dataset JSONL")->required();
    verbalize->add_option("--output", verbalize_args.output, "training pairs JSONL")->required();
    verbalize->add_option("--target-policy", verbalize_args.target_policy,
                          "target = first answer, or all answers joined by ', '")
        ->check(CLI::IsMember({"first", "joined"}));
    verbalize->add_option("--format", verbalize_args.format,
                          "context: 'question: {q}. context: {graph}'; question-only: 'Question: {q}'")
        ->check(CLI::IsMember({"context", "question-only"}));

    CorpusArgs corpus_args;
    CLI::App* corpus = app.add_subcommand(
        "corpus", "pair paragraphs with the subgraph linking their co-mentioned entities");
    corpus->add_option("--triples", corpus_args.triples, "triple dump")->required();
    corpus->add_option("--labels", corpus_args.labels, "label dump");
    corpus->add_option("--paragraphs", corpus_args.paragraphs, "paragraph JSONL")->required();
    corpus->add_option("--output", corpus_args.output, "pairs JSONL")->required();
    corpus->add_option("--min-mentions", corpus_args.min_mentions,
                       "drop paragraphs mentioning fewer entities")
        ->check(CLI::PositiveNumber);

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "score predictions against a gold dataset");
    eval->add_option("--predictions", eval_args.predictions, "predictions JSONL (id, text)")
        ->required();
    eval->add_option("--gold", eval_args.gold, "gold dataset JSONL")->required();
    eval->add_option("--output", eval_args.output, "write the report line here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (build->parsed()) return run_build(build_args);
        if (stats->parsed()) return run_stats(stats_args);
        if (verbalize->parsed()) return run_verbalize(verbalize_args);
        if (corpus->parsed()) return run_corpus(corpus_args);
        if (eval->parsed()) return run_eval(eval_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

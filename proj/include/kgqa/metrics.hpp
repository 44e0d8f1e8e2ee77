#pragma once
// Scoring for generated answers: exact match and token-level F1 with
// SQuAD-style normalization, plus corpus-level BLEU-4.
//
// EM and F1 first split a prediction on common connection words so a
// sentence carrying several answers is credited per answer; BLEU scores
// the surface string unsplit. Gold aggregation is max over the gold list.

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgqa/pipeline.hpp"
#include "kgqa/util.hpp"

namespace kgqa {

// Lowercase, strip ASCII punctuation, drop whole-token articles, collapse
// whitespace. The de-facto QA normalization, frozen for reproducibility.
inline std::string normalize(std::string_view text) {
    std::string lowered = to_lower_ascii(text);
    std::string stripped;
    stripped.reserve(lowered.size());
    for (char c : lowered) {
        bool punct = (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
                     (c >= '{' && c <= '~');
        if (!punct) stripped.push_back(c);
    }
    std::string out;
    for (const std::string& token : split_whitespace(stripped)) {
        if (token == "a" || token == "an" || token == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

// Splits on ", and ", " and ", ", ", ";" (longest match first); trims
// segments and drops empty ones.
inline std::vector<std::string> split_answers(std::string_view pred) {
    static constexpr std::array<std::string_view, 4> connectives = {", and ", " and ", ", ", ";"};
    std::vector<std::string> out;
    std::string current;
    std::size_t i = 0;
    auto flush = [&] {
        std::string_view trimmed = trim(current);
        if (!trimmed.empty()) out.emplace_back(trimmed);
        current.clear();
    };
    while (i < pred.size()) {
        bool matched = false;
        for (std::string_view sep : connectives) {
            if (pred.substr(i, sep.size()) == sep) {
                flush();
                i += sep.size();
                matched = true;
                break;
            }
        }
        if (!matched) current.push_back(pred[i++]);
    }
    flush();
    return out;
}

// 1 iff some predicted segment normalizes equal to some gold answer.
inline int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
    for (const std::string& segment : split_answers(pred)) {
        std::string norm_segment = normalize(segment);
        for (const std::string& gold : golds) {
            if (norm_segment == normalize(gold)) return 1;
        }
    }
    return 0;
}

namespace detail {

inline double pair_token_f1(const std::vector<std::string>& pred_tokens,
                            const std::vector<std::string>& gold_tokens) {
    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;
    std::unordered_map<std::string, std::size_t> gold_counts;
    for (const std::string& t : gold_tokens) ++gold_counts[t];
    std::size_t overlap = 0;
    for (const std::string& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

} // namespace detail

// Max over (segments x golds) of the token-multiset F1 on normalized text.
inline double token_f1(std::string_view pred, const std::vector<std::string>& golds) {
    double best = 0.0;
    for (const std::string& segment : split_answers(pred)) {
        std::vector<std::string> pred_tokens = split_whitespace(normalize(segment));
        for (const std::string& gold : golds) {
            std::vector<std::string> gold_tokens = split_whitespace(normalize(gold));
            best = std::max(best, detail::pair_token_f1(pred_tokens, gold_tokens));
        }
    }
    return best;
}

namespace detail {

constexpr int kBleuMaxOrder = 4;
constexpr double kBleuEpsilon = 1e-9; // substitute for zero n-gram precisions

inline std::unordered_map<std::string, std::size_t> ngram_counts(
    const std::vector<std::string>& tokens, int order) {
    std::unordered_map<std::string, std::size_t> counts;
    if (tokens.size() < static_cast<std::size_t>(order)) return counts;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        std::string key;
        for (int k = 0; k < order; ++k) {
            key += tokens[i + k];
            key += '\x1f';
        }
        ++counts[key];
    }
    return counts;
}

} // namespace detail

// Corpus BLEU-4 with multi-reference clipping, brevity penalty, and
// uniform weights over the n-gram orders that have any candidates (short
// corpora would otherwise be zeroed by impossible 3/4-gram orders).
// Remaining zero precisions are replaced by a 1e-9 epsilon.
inline double corpus_bleu(const std::vector<std::string>& preds,
                          const std::vector<std::vector<std::string>>& golds_list) {
    if (preds.size() != golds_list.size()) {
        throw std::invalid_argument("corpus_bleu: predictions and gold lists are not aligned");
    }
    if (preds.empty()) throw std::invalid_argument("corpus_bleu: empty input");

    std::array<std::size_t, detail::kBleuMaxOrder> clipped{}, candidates{};
    std::size_t hyp_total = 0, ref_total = 0;

    for (std::size_t i = 0; i < preds.size(); ++i) {
        std::vector<std::string> hyp = split_whitespace(preds[i]);
        hyp_total += hyp.size();

        // closest reference length; ties go to the shorter reference
        std::size_t best_len = 0;
        bool have_len = false;
        for (const std::string& ref : golds_list[i]) {
            std::size_t len = split_whitespace(ref).size();
            auto diff = [&](std::size_t l) {
                return l > hyp.size() ? l - hyp.size() : hyp.size() - l;
            };
            if (!have_len || diff(len) < diff(best_len) ||
                (diff(len) == diff(best_len) && len < best_len)) {
                best_len = len;
                have_len = true;
            }
        }
        ref_total += best_len;

        for (int order = 1; order <= detail::kBleuMaxOrder; ++order) {
            auto hyp_counts = detail::ngram_counts(hyp, order);
            std::unordered_map<std::string, std::size_t> max_ref_counts;
            for (const std::string& ref : golds_list[i]) {
                for (auto& [key, count] : detail::ngram_counts(split_whitespace(ref), order)) {
                    std::size_t& slot = max_ref_counts[key];
                    slot = std::max(slot, count);
                }
            }
            for (auto& [key, count] : hyp_counts) {
                candidates[order - 1] += count;
                auto it = max_ref_counts.find(key);
                if (it != max_ref_counts.end()) {
                    clipped[order - 1] += std::min(count, it->second);
                }
            }
        }
    }

    double log_sum = 0.0;
    int included = 0;
    for (int order = 0; order < detail::kBleuMaxOrder; ++order) {
        if (candidates[order] == 0) continue;
        double p = static_cast<double>(clipped[order]) / static_cast<double>(candidates[order]);
        if (p == 0.0) p = detail::kBleuEpsilon;
        log_sum += std::log(p);
        ++included;
    }
    if (hyp_total == 0) return 0.0; // every prediction empty
    double geometric = included == 0 ? 1.0 : std::exp(log_sum / included);
    double brevity = hyp_total >= ref_total
                         ? 1.0
                         : std::exp(1.0 - static_cast<double>(ref_total) / static_cast<double>(hyp_total));
    return brevity * geometric;
}

struct Prediction {
    std::string id;
    std::string text;
};

struct EvalReport {
    double exact_match = 0.0;
    double f1 = 0.0;
    double bleu = 0.0;
    std::size_t n_scored = 0;
};

// EM and F1 are means over all gold records; a record without a
// prediction scores 0 (and enters BLEU as an empty hypothesis).
inline EvalReport evaluate_pairs(const std::vector<Prediction>& predictions,
                                 const std::vector<DatasetRecord>& gold) {
    if (gold.empty()) throw DataError("evaluation undefined on an empty gold dataset");

    std::unordered_map<std::string, const std::string*> by_id;
    std::unordered_set<std::string> gold_ids;
    for (const DatasetRecord& r : gold) gold_ids.insert(r.id);
    for (const Prediction& p : predictions) {
        if (!gold_ids.contains(p.id)) {
            throw DataError("prediction id '" + p.id + "' does not appear in the gold dataset");
        }
        if (!by_id.emplace(p.id, &p.text).second) {
            throw DataError("duplicate prediction id '" + p.id + "'");
        }
    }

    double em_sum = 0.0, f1_sum = 0.0;
    std::vector<std::string> hyp_list;
    std::vector<std::vector<std::string>> ref_list;
    hyp_list.reserve(gold.size());
    ref_list.reserve(gold.size());
    for (const DatasetRecord& r : gold) {
        auto it = by_id.find(r.id);
        const std::string text = it == by_id.end() ? std::string() : *it->second;
        em_sum += exact_match(text, r.answers);
        f1_sum += token_f1(text, r.answers);
        hyp_list.push_back(text);
        ref_list.push_back(r.answers);
    }

    EvalReport report;
    report.n_scored = gold.size();
    report.exact_match = em_sum / static_cast<double>(gold.size());
    report.f1 = f1_sum / static_cast<double>(gold.size());
    report.bleu = corpus_bleu(hyp_list, ref_list);
    return report;
}

// Prediction lines: id, text.
inline std::vector<Prediction> read_predictions(std::istream& in, const std::string& source) {
    std::vector<Prediction> out;
    for_each_line(in, [&](std::size_t line_no, std::string_view line) {
        if (trim(line).empty()) return;
        try {
            json j = json::parse(line);
            out.push_back({detail::string_field(j, "id"), detail::string_field(j, "text")});
        } catch (const json::exception& e) {
            throw FormatError(source, line_no, std::string("invalid JSON: ") + e.what());
        } catch (const DataError& e) {
            throw FormatError(source, line_no, e.what());
        }
    });
    return out;
}

inline std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return read_predictions(in, path.string());
}

inline EvalReport evaluate(const std::filesystem::path& predictions_path,
                           const std::filesystem::path& gold_dataset_path) {
    return evaluate_pairs(read_predictions(predictions_path), read_dataset(gold_dataset_path));
}

} // namespace kgqa

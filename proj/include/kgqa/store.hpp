#pragma once
// Embedded knowledge graph: an immutable triple set with pattern indexes
// and a label table, loaded from flat dump files.
//
// Dump formats (UTF-8, '#'-prefixed lines are comments):
//   triples: subject<TAB>predicate<TAB>object
//   labels:  id<TAB>label            (later entries overwrite earlier ones)
//
// All lookups are const; a loaded store may be shared across threads.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgqa/ids.hpp"
#include "kgqa/util.hpp"

namespace kgqa {

struct LabelResult {
    std::string text;
    bool found = false;
};

class LabelTable {
public:
    // Last write wins, so patch files can be layered over a base dump.
    void set(NodeId id, std::string label) { labels_[std::move(id)] = std::move(label); }

    const std::string* find(const NodeId& id) const {
        auto it = labels_.find(id);
        return it == labels_.end() ? nullptr : &it->second;
    }

    // Falls back to the raw id; never fabricates text. The miss flag lets
    // callers drop answers that would otherwise leak bare identifiers.
    LabelResult resolve(const NodeId& id) const {
        if (const std::string* label = find(id)) return {*label, true};
        return {id, false};
    }

    std::size_t size() const { return labels_.size(); }

private:
    std::unordered_map<NodeId, std::string> labels_;
};

struct StoreOptions {
    bool strict_ids = false; // enforce Q\d+ / P\d+ by position
};

class LoadError : public FormatError {
public:
    using FormatError::FormatError;
};

class TripleStore {
public:
    TripleStore() = default;

    static TripleStore from_triples(std::vector<Triple> triples, LabelTable labels = {}) {
        TripleStore store;
        std::sort(triples.begin(), triples.end());
        triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
        store.triples_ = std::move(triples);
        store.labels_ = std::move(labels);
        store.build_indexes();
        return store;
    }

    std::size_t size() const { return triples_.size(); }
    const std::vector<Triple>& triples() const { return triples_; }
    const LabelTable& labels() const { return labels_; }

    bool contains(const Triple& t) const {
        return std::binary_search(triples_.begin(), triples_.end(), t);
    }

    LabelResult label_of(const NodeId& id) const { return labels_.resolve(id); }

    // Triples agreeing with every bound position, in id-sorted order.
    std::vector<Triple> match(const std::optional<NodeId>& s,
                              const std::optional<NodeId>& p,
                              const std::optional<NodeId>& o) const {
        std::vector<Triple> out;
        visit_matches(s, p, o, [&](const Triple& t) { out.push_back(t); });
        return out;
    }

    // Cheap cardinality estimate used for join ordering. Exact for the
    // index-backed shapes; an upper bound for (s,-,o).
    std::size_t match_count(const std::optional<NodeId>& s,
                            const std::optional<NodeId>& p,
                            const std::optional<NodeId>& o) const {
        if (s && p && o) return contains({*s, *p, *o}) ? 1 : 0;
        if (s && p) return bucket_size(by_subject_predicate_, pair_key(*s, *p));
        if (p && o) return bucket_size(by_predicate_object_, pair_key(*p, *o));
        if (s) return bucket_size(by_subject_, *s);
        if (o) return bucket_size(by_object_, *o);
        if (p) return bucket_size(by_predicate_, *p);
        return triples_.size();
    }

    template <typename Fn>
    void visit_matches(const std::optional<NodeId>& s,
                       const std::optional<NodeId>& p,
                       const std::optional<NodeId>& o,
                       Fn&& fn) const {
        if (s && p && o) {
            Triple t{*s, *p, *o};
            if (contains(t)) fn(t);
            return;
        }
        const std::vector<std::uint32_t>* bucket = nullptr;
        if (s && p) bucket = find_bucket(by_subject_predicate_, pair_key(*s, *p));
        else if (p && o) bucket = find_bucket(by_predicate_object_, pair_key(*p, *o));
        else if (s) bucket = find_bucket(by_subject_, *s);
        else if (o) bucket = find_bucket(by_object_, *o);
        else if (p) bucket = find_bucket(by_predicate_, *p);
        else {
            for (const Triple& t : triples_) fn(t);
            return;
        }
        if (!bucket) return;
        for (std::uint32_t idx : *bucket) {
            const Triple& t = triples_[idx];
            if (s && t.subject != *s) continue;
            if (p && t.predicate != *p) continue;
            if (o && t.object != *o) continue;
            fn(t);
        }
    }

private:
    static std::string pair_key(const NodeId& a, const NodeId& b) { return a + '\t' + b; }

    template <typename Map, typename Key>
    static const std::vector<std::uint32_t>* find_bucket(const Map& map, const Key& key) {
        auto it = map.find(key);
        return it == map.end() ? nullptr : &it->second;
    }

    template <typename Map, typename Key>
    static std::size_t bucket_size(const Map& map, const Key& key) {
        auto it = map.find(key);
        return it == map.end() ? 0 : it->second.size();
    }

    void build_indexes() {
        for (std::uint32_t i = 0; i < triples_.size(); ++i) {
            const Triple& t = triples_[i];
            by_subject_[t.subject].push_back(i);
            by_predicate_[t.predicate].push_back(i);
            by_object_[t.object].push_back(i);
            by_subject_predicate_[pair_key(t.subject, t.predicate)].push_back(i);
            by_predicate_object_[pair_key(t.predicate, t.object)].push_back(i);
        }
    }

    std::vector<Triple> triples_; // sorted, deduplicated
    LabelTable labels_;
    std::unordered_map<NodeId, std::vector<std::uint32_t>> by_subject_;
    std::unordered_map<NodeId, std::vector<std::uint32_t>> by_predicate_;
    std::unordered_map<NodeId, std::vector<std::uint32_t>> by_object_;
    std::unordered_map<std::string, std::vector<std::uint32_t>> by_subject_predicate_;
    std::unordered_map<std::string, std::vector<std::uint32_t>> by_predicate_object_;
};

namespace detail {

inline bool is_comment_or_blank(std::string_view line) {
    return line.empty() || line.front() == '#';
}

inline void check_id(std::string_view id, bool strict, bool relation_position,
                     const std::string& source, std::size_t line_no) {
    if (!is_valid_node_id(id)) {
        throw LoadError(source, line_no, "invalid id token '" + std::string(id) + "'");
    }
    if (!strict) return;
    bool ok = relation_position ? is_strict_relation_id(id) : is_strict_entity_id(id);
    if (!ok) {
        throw LoadError(source, line_no,
                        std::string("id '") + std::string(id) + "' does not match the strict " +
                            (relation_position ? "P<digits>" : "Q<digits>") + " form");
    }
}

} // namespace detail

inline std::vector<Triple> parse_triples(std::istream& in, const std::string& source,
                                         const StoreOptions& opts = {}) {
    std::vector<Triple> triples;
    for_each_line(in, [&](std::size_t line_no, std::string_view line) {
        if (detail::is_comment_or_blank(line)) return;
        std::size_t tab1 = line.find('\t');
        std::size_t tab2 = tab1 == std::string_view::npos ? std::string_view::npos
                                                          : line.find('\t', tab1 + 1);
        if (tab1 == std::string_view::npos || tab2 == std::string_view::npos ||
            line.find('\t', tab2 + 1) != std::string_view::npos) {
            throw LoadError(source, line_no, "expected exactly three tab-separated fields");
        }
        std::string_view s = line.substr(0, tab1);
        std::string_view p = line.substr(tab1 + 1, tab2 - tab1 - 1);
        std::string_view o = line.substr(tab2 + 1);
        detail::check_id(s, opts.strict_ids, false, source, line_no);
        detail::check_id(p, opts.strict_ids, true, source, line_no);
        detail::check_id(o, opts.strict_ids, false, source, line_no);
        triples.push_back({NodeId(s), NodeId(p), NodeId(o)});
    });
    return triples;
}

inline void parse_labels(std::istream& in, const std::string& source, LabelTable& table,
                         const StoreOptions& opts = {}) {
    for_each_line(in, [&](std::size_t line_no, std::string_view line) {
        if (detail::is_comment_or_blank(line)) return;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw LoadError(source, line_no, "expected id<TAB>label");
        }
        std::string_view id = line.substr(0, tab);
        std::string_view label = line.substr(tab + 1);
        if (!is_valid_node_id(id)) {
            throw LoadError(source, line_no, "invalid id token '" + std::string(id) + "'");
        }
        if (opts.strict_ids && !is_strict_entity_id(id) && !is_strict_relation_id(id)) {
            throw LoadError(source, line_no, "id '" + std::string(id) + "' is neither Q<digits> nor P<digits>");
        }
        if (label.empty()) {
            throw LoadError(source, line_no, "empty label for id '" + std::string(id) + "'");
        }
        table.set(NodeId(id), std::string(label));
    });
}

inline TripleStore load_store(const std::filesystem::path& triples_path,
                              const std::optional<std::filesystem::path>& labels_path = {},
                              const StoreOptions& opts = {}) {
    std::ifstream triples_in = open_input(triples_path);
    std::vector<Triple> triples = parse_triples(triples_in, triples_path.string(), opts);
    LabelTable labels;
    if (labels_path) {
        std::ifstream labels_in = open_input(*labels_path);
        parse_labels(labels_in, labels_path->string(), labels, opts);
    }
    return TripleStore::from_triples(std::move(triples), std::move(labels));
}

} // namespace kgqa

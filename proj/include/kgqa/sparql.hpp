#pragma once
// Parser for the SPARQL fragment found in the source QA datasets:
// SELECT/ASK over basic graph patterns with wd:/wdt: terms, variables,
// optional DISTINCT, and FILTER clauses that are captured verbatim and
// stripped from the pattern list.
//
// Anything outside the fragment (property paths, OPTIONAL, UNION,
// subqueries, solution modifiers, literals in pattern positions) is
// rejected with a named error carrying the byte span of the offending
// construct. Silent misinterpretation would corrupt derived graphs, so
// there is no best-effort mode.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "kgqa/ids.hpp"

namespace kgqa {

struct Variable {
    std::string name; // without the leading '?'
    auto operator<=>(const Variable&) const = default;
};

struct Iri {
    NodeId id; // prefix dropped: wd:Q42 and <.../entity/Q42> both become Q42
    auto operator<=>(const Iri&) const = default;
};

using Term = std::variant<Variable, Iri>;

inline bool is_variable(const Term& t) { return std::holds_alternative<Variable>(t); }
inline const Variable& as_variable(const Term& t) { return std::get<Variable>(t); }
inline const Iri& as_iri(const Term& t) { return std::get<Iri>(t); }

struct TriplePattern {
    Term subject;
    Term predicate;
    Term object;

    bool operator==(const TriplePattern&) const = default;
};

struct ParsedQuery {
    enum class Form { select, ask };

    Form form = Form::select;
    bool distinct = false;               // SELECT only
    bool star = false;                   // SELECT * (projection list empty)
    std::vector<std::string> projection; // named projection, duplicate-free
    std::vector<TriplePattern> patterns;
    std::vector<std::string> raw_filters; // verbatim FILTER(...) texts, in source order

    std::size_t stripped_filter_count() const { return raw_filters.size(); }

    bool operator==(const ParsedQuery&) const = default;
};

enum class ParseErrorKind {
    syntax,
    property_path,
    optional_clause,
    union_clause,
    subquery,
    solution_modifier,
    literal_term,
    empty_where,
    unknown_prefix,
    duplicate_projection,
    unbound_projection,
    unsupported_keyword,
};

inline const char* to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::syntax: return "syntax";
        case ParseErrorKind::property_path: return "property_path";
        case ParseErrorKind::optional_clause: return "optional_clause";
        case ParseErrorKind::union_clause: return "union_clause";
        case ParseErrorKind::subquery: return "subquery";
        case ParseErrorKind::solution_modifier: return "solution_modifier";
        case ParseErrorKind::literal_term: return "literal_term";
        case ParseErrorKind::empty_where: return "empty_where";
        case ParseErrorKind::unknown_prefix: return "unknown_prefix";
        case ParseErrorKind::duplicate_projection: return "duplicate_projection";
        case ParseErrorKind::unbound_projection: return "unbound_projection";
        case ParseErrorKind::unsupported_keyword: return "unsupported_keyword";
    }
    return "unknown";
}

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, std::size_t offset, std::size_t length, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " at byte " + std::to_string(offset) +
                             "..+" + std::to_string(length) + ": " + what),
          kind_(kind), offset_(offset), length_(length) {}

    ParseErrorKind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }
    std::size_t length() const { return length_; }

private:
    ParseErrorKind kind_;
    std::size_t offset_;
    std::size_t length_;
};

namespace detail {

inline bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

class QueryParser {
public:
    explicit QueryParser(std::string_view src) : src_(src) {}

    ParsedQuery parse() {
        ParsedQuery q;
        skip_trivia();
        if (consume_keyword("SELECT")) {
            q.form = ParsedQuery::Form::select;
            parse_select_clause(q);
        } else if (consume_keyword("ASK")) {
            q.form = ParsedQuery::Form::ask;
        } else if (peek_keyword("PREFIX") || peek_keyword("BASE")) {
            fail_word(ParseErrorKind::unsupported_keyword, "prefix declarations are not part of the fragment");
        } else {
            throw ParseError(ParseErrorKind::syntax, pos_, token_length(), "expected SELECT or ASK");
        }
        consume_keyword("WHERE"); // optional in SPARQL, always accepted
        parse_group(q);
        check_trailing();
        if (q.patterns.empty()) {
            throw ParseError(ParseErrorKind::empty_where, group_start_, pos_ - group_start_,
                             "WHERE clause has no triple patterns");
        }
        if (q.form == ParsedQuery::Form::select && !q.star) check_projection_bound(q);
        return q;
    }

private:
    void parse_select_clause(ParsedQuery& q) {
        skip_trivia();
        if (consume_keyword("DISTINCT")) {
            q.distinct = true;
        } else if (peek_keyword("REDUCED")) {
            fail_word(ParseErrorKind::unsupported_keyword, "REDUCED is not supported");
        }
        skip_trivia();
        if (!eof() && src_[pos_] == '*') {
            ++pos_;
            q.star = true;
            return;
        }
        std::unordered_set<std::string> seen;
        while (true) {
            skip_trivia();
            if (eof()) throw ParseError(ParseErrorKind::syntax, pos_, 0, "unexpected end of query in SELECT clause");
            if (src_[pos_] != '?') break;
            std::size_t var_start = pos_;
            std::string name = parse_variable_name();
            if (!seen.insert(name).second) {
                throw ParseError(ParseErrorKind::duplicate_projection, var_start, pos_ - var_start,
                                 "variable ?" + name + " projected twice");
            }
            q.projection.push_back(std::move(name));
            projection_spans_.push_back({var_start, pos_ - var_start});
        }
        if (q.projection.empty()) {
            throw ParseError(ParseErrorKind::syntax, pos_, token_length(), "SELECT needs '*' or at least one variable");
        }
    }

    void parse_group(ParsedQuery& q) {
        skip_trivia();
        if (eof() || src_[pos_] != '{') {
            throw ParseError(ParseErrorKind::syntax, pos_, token_length(), "expected '{'");
        }
        group_start_ = pos_;
        ++pos_;
        while (true) {
            skip_trivia();
            if (eof()) throw ParseError(ParseErrorKind::syntax, pos_, 0, "unterminated group, expected '}'");
            char c = src_[pos_];
            if (c == '}') {
                ++pos_;
                return;
            }
            if (c == '.') { // stray separators are harmless
                ++pos_;
                continue;
            }
            if (c == '{') {
                throw ParseError(ParseErrorKind::subquery, pos_, 1, "nested groups/subqueries are not supported");
            }
            if (consume_keyword("FILTER")) {
                q.raw_filters.push_back(capture_filter());
                continue;
            }
            if (peek_keyword("OPTIONAL")) fail_word(ParseErrorKind::optional_clause, "OPTIONAL is not supported");
            if (peek_keyword("UNION")) fail_word(ParseErrorKind::union_clause, "UNION is not supported");
            for (const char* kw : {"MINUS", "SERVICE", "GRAPH", "BIND", "VALUES", "SELECT", "ASK"}) {
                if (peek_keyword(kw)) {
                    fail_word(ParseErrorKind::unsupported_keyword, std::string(kw) + " inside WHERE is not supported");
                }
            }
            q.patterns.push_back(parse_pattern());
        }
    }

    TriplePattern parse_pattern() {
        Term s = parse_term(false);
        Term p = parse_term(true);
        // A path operator directly after the predicate means this is a
        // property path, not a plain triple pattern.
        if (!eof() && (src_[pos_] == '/' || src_[pos_] == '*' || src_[pos_] == '+' || src_[pos_] == '|')) {
            throw ParseError(ParseErrorKind::property_path, pos_, 1, "property paths are not supported");
        }
        Term o = parse_term(false);
        skip_trivia();
        if (!eof() && src_[pos_] == '.') ++pos_; // trailing dot on the last pattern is optional
        return {std::move(s), std::move(p), std::move(o)};
    }

    Term parse_term(bool predicate_position) {
        skip_trivia();
        if (eof()) throw ParseError(ParseErrorKind::syntax, pos_, 0, "expected a term");
        char c = src_[pos_];
        if (c == '?' || c == '$') return Term(Variable{parse_variable_name()});
        if (c == '^' || c == '/' || c == '|' || c == '*' ||
            (c == '+' && (pos_ + 1 >= src_.size() || !is_digit(src_[pos_ + 1])))) {
            throw ParseError(ParseErrorKind::property_path, pos_, 1, "property paths are not supported");
        }
        if (c == '<') return Term(Iri{parse_full_iri()});
        if (c == '"' || c == '\'') {
            std::size_t start = pos_;
            skip_quoted(src_[pos_]);
            throw ParseError(ParseErrorKind::literal_term, start, pos_ - start,
                             "string literals cannot appear in triple patterns");
        }
        if (is_digit(c) || ((c == '+' || c == '-') && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            std::size_t start = pos_;
            while (!eof() && (is_digit(src_[pos_]) || src_[pos_] == '.' || src_[pos_] == '+' ||
                              src_[pos_] == '-' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
                ++pos_;
            }
            throw ParseError(ParseErrorKind::literal_term, start, pos_ - start,
                             "numeric literals cannot appear in triple patterns");
        }
        if (c == '[') {
            throw ParseError(ParseErrorKind::syntax, pos_, 1, "blank nodes are not supported");
        }
        if (is_name_char(c)) return Term(Iri{parse_prefixed_name(predicate_position)});
        throw ParseError(ParseErrorKind::syntax, pos_, 1, std::string("unexpected character '") + c + "'");
    }

    std::string parse_variable_name() {
        ++pos_; // consume '?' (or '$')
        std::size_t start = pos_;
        while (!eof() && is_name_char(src_[pos_])) ++pos_;
        if (pos_ == start) {
            throw ParseError(ParseErrorKind::syntax, start - 1, 1, "variable marker without a name");
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    NodeId parse_full_iri() {
        std::size_t start = pos_;
        ++pos_;
        while (!eof() && src_[pos_] != '>') ++pos_;
        if (eof()) throw ParseError(ParseErrorKind::syntax, start, pos_ - start, "unterminated IRI");
        std::string_view body = src_.substr(start + 1, pos_ - start - 1);
        ++pos_;
        std::size_t cut = body.find_last_of("/#");
        std::string_view local = cut == std::string_view::npos ? body : body.substr(cut + 1);
        if (local.empty()) {
            throw ParseError(ParseErrorKind::syntax, start, pos_ - start, "IRI has no trailing identifier");
        }
        return NodeId(local);
    }

    NodeId parse_prefixed_name(bool predicate_position) {
        std::size_t start = pos_;
        while (!eof() && is_name_char(src_[pos_])) ++pos_;
        std::string_view word = src_.substr(start, pos_ - start);
        if (eof() || src_[pos_] != ':') {
            // A bare word where a term belongs: most likely an unsupported
            // keyword ('a', NOT EXISTS, ...) or a typo.
            throw ParseError(ParseErrorKind::syntax, start, word.size(),
                             "expected a variable, prefixed name, or IRI; got '" + std::string(word) + "'");
        }
        ++pos_; // ':'
        std::size_t local_start = pos_;
        while (!eof() && is_name_char(src_[pos_])) ++pos_;
        std::string_view local = src_.substr(local_start, pos_ - local_start);
        if (local.empty()) {
            throw ParseError(ParseErrorKind::syntax, start, pos_ - start, "prefixed name without a local part");
        }
        if (word != "wd" && word != "wdt") {
            // p:, ps:, pq:, psv:... signal statement-level constructs the
            // fragment deliberately leaves out.
            (void)predicate_position;
            throw ParseError(ParseErrorKind::unknown_prefix, start, pos_ - start,
                             "unsupported prefix '" + std::string(word) + ":'");
        }
        return NodeId(local);
    }

    // Captures "FILTER ... ( balanced )" verbatim, string-literal aware.
    std::string capture_filter() {
        std::size_t start = last_keyword_start_;
        skip_trivia();
        if (eof() || src_[pos_] != '(') {
            throw ParseError(ParseErrorKind::syntax, start, pos_ - start,
                             "FILTER must be followed by a parenthesized expression");
        }
        int depth = 0;
        while (!eof()) {
            char c = src_[pos_];
            if (c == '"' || c == '\'') {
                skip_quoted(c);
                continue;
            }
            ++pos_;
            if (c == '(') ++depth;
            if (c == ')') {
                --depth;
                if (depth == 0) return std::string(src_.substr(start, pos_ - start));
            }
        }
        throw ParseError(ParseErrorKind::syntax, start, pos_ - start, "unbalanced parentheses in FILTER");
    }

    void skip_quoted(char quote) {
        ++pos_; // opening quote
        while (!eof()) {
            char c = src_[pos_++];
            if (c == '\\' && !eof()) ++pos_;
            else if (c == quote) return;
        }
        throw ParseError(ParseErrorKind::syntax, pos_, 0, "unterminated string literal");
    }

    void check_trailing() {
        skip_trivia();
        if (eof()) return;
        for (const char* kw : {"LIMIT", "ORDER", "GROUP", "HAVING", "OFFSET"}) {
            if (peek_keyword(kw)) {
                fail_word(ParseErrorKind::solution_modifier, std::string(kw) + " clauses are not supported");
            }
        }
        throw ParseError(ParseErrorKind::syntax, pos_, token_length(), "unexpected content after '}'");
    }

    void check_projection_bound(const ParsedQuery& q) {
        std::unordered_set<std::string> in_patterns;
        for (const TriplePattern& p : q.patterns) {
            for (const Term* t : {&p.subject, &p.predicate, &p.object}) {
                if (is_variable(*t)) in_patterns.insert(as_variable(*t).name);
            }
        }
        for (std::size_t i = 0; i < q.projection.size(); ++i) {
            if (!in_patterns.contains(q.projection[i])) {
                auto [off, len] = projection_spans_[i];
                throw ParseError(ParseErrorKind::unbound_projection, off, len,
                                 "projected variable ?" + q.projection[i] + " never occurs in the patterns");
            }
        }
    }

    // --- low-level cursor helpers ---

    bool eof() const { return pos_ >= src_.size(); }

    void skip_trivia() {
        while (!eof()) {
            char c = src_[pos_];
            if (is_ascii_space(c)) {
                ++pos_;
            } else if (c == '#') { // SPARQL comment to end of line
                while (!eof() && src_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    bool keyword_at(std::size_t at, std::string_view kw) const {
        if (at + kw.size() > src_.size()) return false;
        for (std::size_t i = 0; i < kw.size(); ++i) {
            if (lower(src_[at + i]) != lower(kw[i])) return false;
        }
        std::size_t end = at + kw.size();
        return end >= src_.size() || !is_name_char(src_[end]);
    }

    bool peek_keyword(std::string_view kw) {
        skip_trivia();
        return keyword_at(pos_, kw);
    }

    bool consume_keyword(std::string_view kw) {
        skip_trivia();
        if (!keyword_at(pos_, kw)) return false;
        last_keyword_start_ = pos_;
        pos_ += kw.size();
        return true;
    }

    [[noreturn]] void fail_word(ParseErrorKind kind, const std::string& message) {
        skip_trivia();
        throw ParseError(kind, pos_, token_length(), message);
    }

    std::size_t token_length() const {
        std::size_t end = pos_;
        while (end < src_.size() && !is_ascii_space(src_[end])) ++end;
        return end - pos_;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t group_start_ = 0;
    std::size_t last_keyword_start_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> projection_spans_;
};

} // namespace detail

inline ParsedQuery parse_query(std::string_view text) {
    return detail::QueryParser(text).parse();
}

// Duplicate-free variable names in first-occurrence order over the patterns.
inline std::vector<std::string> collect_variables(const ParsedQuery& q) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const TriplePattern& p : q.patterns) {
        for (const Term* t : {&p.subject, &p.predicate, &p.object}) {
            if (!is_variable(*t)) continue;
            const std::string& name = as_variable(*t).name;
            if (seen.insert(name).second) out.push_back(name);
        }
    }
    return out;
}

inline std::string render_term(const Term& t, bool predicate_position) {
    if (is_variable(t)) return "?" + as_variable(t).name;
    return (predicate_position ? "wdt:" : "wd:") + as_iri(t).id;
}

inline std::string render_pattern(const TriplePattern& p) {
    return render_term(p.subject, false) + " " + render_term(p.predicate, true) + " " +
           render_term(p.object, false);
}

// Text form that parses back to a structurally equal query. Stripped
// filters are re-emitted verbatim so the round trip preserves them.
inline std::string render_query(const ParsedQuery& q) {
    std::string out;
    if (q.form == ParsedQuery::Form::ask) {
        out = "ASK WHERE { ";
    } else {
        out = "SELECT ";
        if (q.distinct) out += "DISTINCT ";
        if (q.star) {
            out += "* ";
        } else {
            for (const std::string& v : q.projection) {
                out += "?" + v + " ";
            }
        }
        out += "WHERE { ";
    }
    for (std::size_t i = 0; i < q.patterns.size(); ++i) {
        if (i > 0) out += " . ";
        out += render_pattern(q.patterns[i]);
    }
    for (const std::string& f : q.raw_filters) {
        out += " ";
        out += f;
    }
    out += " }";
    return out;
}

} // namespace kgqa

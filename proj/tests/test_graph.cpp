#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "kgqa/graph.hpp"
#include "test_util.hpp"

using namespace kgqa;

namespace {

std::vector<TriplePattern> fixture_patterns() {
    return parse_query(testutil::fixture_query()).patterns;
}

} // namespace

TEST_CASE("ground_patterns substitutes bindings in derivation order", "[graph]") {
    BindingSet bindings = {{{"x0", "Q2"}, {"x1", "Q1"}}};
    GroundedGraph g = ground_patterns(fixture_patterns(), bindings);

    REQUIRE(g.triples.size() == 3);
    CHECK(g.triples[0] == Triple{"Q1", "P155", "Q830295"});
    CHECK(g.triples[1] == Triple{"Q1", "P1040", "Q2"});
    CHECK(g.triples[2] == Triple{"Q2", "P27", "Q145"});

    SECTION("empty binding set gives an empty graph") {
        CHECK(ground_patterns(fixture_patterns(), {}).empty());
    }
    SECTION("identical grounded triples appear once") {
        std::vector<TriplePattern> ground = {{Iri{"Qc"}, Iri{"Pz"}, Iri{"Qd"}}};
        BindingSet two = {{{"x", "Qa"}}, {{"x", "Qb"}}};
        CHECK(ground_patterns(ground, two).triples.size() == 1);
    }
    SECTION("a binding missing a variable is a contract violation") {
        BindingSet incomplete = {{{"x0", "Q2"}}};
        CHECK_THROWS_AS(ground_patterns(fixture_patterns(), incomplete), std::invalid_argument);
    }
}

TEST_CASE("to_graph_record assigns local indexes by first appearance", "[graph]") {
    TripleStore store = testutil::fixture_store();
    GroundedGraph g = ground_patterns(fixture_patterns(), {{{"x0", "Q2"}, {"x1", "Q1"}}});
    GraphRecord record = to_graph_record(g, store.labels());

    CHECK(record.entities == std::vector<NodeId>{"Q1", "Q830295", "Q2", "Q145"});
    CHECK(record.relations == std::vector<NodeId>{"P155", "P1040", "P27"});
    REQUIRE(record.edges.size() == 3);
    CHECK(record.edges[0] == GraphEdge{0, 0, 1});
    CHECK(record.edges[1] == GraphEdge{0, 1, 2});
    CHECK(record.edges[2] == GraphEdge{2, 2, 3});
    CHECK(record.entity_labels ==
          std::vector<std::string>{"The Second Best Exotic Marigold Hotel",
                                   "The Best Exotic Marigold Hotel", "Deborah Moggach",
                                   "United Kingdom"});
    CHECK(record.relation_labels ==
          std::vector<std::string>{"follows", "film editor", "country of citizenship"});

    SECTION("empty graph gives empty lists") {
        GraphRecord empty = to_graph_record(GroundedGraph{}, store.labels());
        CHECK(empty.entities.empty());
        CHECK(empty.relations.empty());
        CHECK(empty.edges.empty());
    }
    SECTION("self-loops reuse the single entity slot") {
        GraphRecord loop = to_graph_record(GroundedGraph{{{"Qa", "Pz", "Qa"}}}, LabelTable{});
        CHECK(loop.entities == std::vector<NodeId>{"Qa"});
        REQUIRE(loop.edges.size() == 1);
        CHECK(loop.edges[0] == GraphEdge{0, 0, 0});
        // unlabeled ids fall back to themselves
        CHECK(loop.entity_labels == std::vector<std::string>{"Qa"});
    }
}

TEST_CASE("filter_by_kge_vocab keeps triples with embedded endpoints", "[graph]") {
    GroundedGraph g = ground_patterns(fixture_patterns(), {{{"x0", "Q2"}, {"x1", "Q1"}}});

    std::unordered_set<NodeId> full = {"Q1", "Q830295", "Q2", "Q145"};
    CHECK(filter_by_kge_vocab(g, full) == g);

    std::unordered_set<NodeId> no_q2 = {"Q1", "Q830295", "Q145"};
    GroundedGraph filtered = filter_by_kge_vocab(g, no_q2);
    REQUIRE(filtered.triples.size() == 1);
    CHECK(filtered.triples[0] == Triple{"Q1", "P155", "Q830295"});

    CHECK(filter_by_kge_vocab(g, {}).empty());

    SECTION("strict mode also requires relation coverage") {
        std::unordered_set<NodeId> no_relations = full;
        CHECK(filter_by_kge_vocab(g, no_relations, true).empty());
        no_relations.insert("P155");
        CHECK(filter_by_kge_vocab(g, no_relations, true).triples.size() == 1);
    }
}

TEST_CASE("load_kge_vocab reads one id per line", "[graph]") {
    testutil::TempDir dir;
    auto vocab = load_kge_vocab(dir.write("vocab.txt", "Q1\nQ2\n\nQ1\n"));
    CHECK(vocab == std::unordered_set<NodeId>{"Q1", "Q2"});
    CHECK_THROWS_AS(load_kge_vocab(dir.write("bad.txt", "Q 1\n")), FormatError);
}

namespace {

GroundedGraph random_graph(std::mt19937& rng) {
    std::uniform_int_distribution<int> entity(0, 11), relation(0, 4);
    std::uniform_int_distribution<int> size(0, 12);
    std::set<Triple> unique;
    int n = size(rng);
    for (int i = 0; i < n; ++i) {
        unique.insert({"Q" + std::to_string(entity(rng)), "P" + std::to_string(relation(rng)),
                       "Q" + std::to_string(entity(rng))});
    }
    GroundedGraph g;
    g.triples.assign(unique.begin(), unique.end());
    std::shuffle(g.triples.begin(), g.triples.end(), rng);
    return g;
}

} // namespace

TEST_CASE("record round-trip reproduces the triple list and respects bounds", "[graph]") {
    std::mt19937 rng(1618);
    LabelTable labels;
    for (int i = 0; i < 120; ++i) {
        GroundedGraph g = random_graph(rng);
        GraphRecord record = to_graph_record(g, labels);

        REQUIRE(expand_record(record).triples == g.triples);
        REQUIRE(record.edges.size() == g.triples.size());
        REQUIRE(record.entities.size() <= 2 * record.edges.size());
        REQUIRE(record.relations.size() <= record.edges.size());
        REQUIRE_NOTHROW(validate_record(record));
    }
}

TEST_CASE("validate_record rejects broken records", "[graph]") {
    GraphRecord r = to_graph_record(GroundedGraph{{{"Qa", "Pz", "Qb"}}}, LabelTable{});
    GraphRecord bad_edge = r;
    bad_edge.edges[0].object = 9;
    CHECK_THROWS_AS(validate_record(bad_edge), DataError);

    GraphRecord bad_labels = r;
    bad_labels.entity_labels.pop_back();
    CHECK_THROWS_AS(validate_record(bad_labels), DataError);

    GraphRecord dup = r;
    dup.entities.push_back("Qa");
    dup.entity_labels.push_back("Qa");
    CHECK_THROWS_AS(validate_record(dup), DataError);
}

TEST_CASE("vocab filter is idempotent and monotone", "[graph]") {
    std::mt19937 rng(2718);
    std::uniform_int_distribution<int> entity(0, 11), coin(0, 1);
    for (int i = 0; i < 60; ++i) {
        GroundedGraph g = random_graph(rng);
        std::unordered_set<NodeId> small, big;
        for (int e = 0; e <= 11; ++e) {
            NodeId id = "Q" + std::to_string(e);
            if (coin(rng)) {
                small.insert(id);
                big.insert(id);
            } else if (coin(rng)) {
                big.insert(id);
            }
        }
        GroundedGraph once = filter_by_kge_vocab(g, small);
        CHECK(filter_by_kge_vocab(once, small) == once);

        GroundedGraph more = filter_by_kge_vocab(g, big);
        for (const Triple& t : once.triples) {
            CHECK(std::find(more.triples.begin(), more.triples.end(), t) != more.triples.end());
        }
    }
}

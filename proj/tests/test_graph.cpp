#include "navq/error.hpp"
#include "navq/graph.hpp"
#include "navq/relation.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace navq;

TEST(Relation, KeepsSetSemantics)
{
    Relation r({"a", "b"}, {{2, 1}, {1, 2}, {2, 1}});
    EXPECT_EQ(r.size(), 2u);
    EXPECT_TRUE(r.contains(Tuple{1, 2}));
    EXPECT_FALSE(r.contains(Tuple{1, 1}));
    EXPECT_THROW(Relation({"a"}, {{1, 2}}), SchemaError);
}

TEST(Relation, ColumnOrderDoesNotMatterForEquality)
{
    Relation r({"a", "b"}, {{1, 2}, {3, 4}});
    Relation s({"b", "a"}, {{2, 1}, {4, 3}});
    EXPECT_TRUE(r.same_set(s));
    EXPECT_EQ(r.reordered({"b", "a"}).tuples(), s.tuples());
}

TEST(Relation, ProjectUniteSubtract)
{
    Relation r({"a", "b"}, {{1, 2}, {1, 3}, {2, 3}});
    EXPECT_EQ(r.project({"a"}).size(), 2u);
    Relation s({"b", "a"}, {{9, 9}, {2, 1}});
    auto u = r.unite(s);
    EXPECT_EQ(u.size(), 4u);
    EXPECT_EQ(u.subtract(r).tuples(), (std::vector<Tuple>{{9, 9}}));
    EXPECT_THROW(r.project({"zz"}), SchemaError);
}

TEST(Dictionary, InternsDensely)
{
    Dictionary d;
    EXPECT_EQ(d.intern("x"), 0u);
    EXPECT_EQ(d.intern("y"), 1u);
    EXPECT_EQ(d.intern("x"), 0u);
    EXPECT_EQ(d.decode(1), "y");
    EXPECT_FALSE(d.find("z"));
}

TEST(Dictionary, CanonicalValueNormalizesIntegers)
{
    EXPECT_EQ(canonical_value("007"), "7");
    EXPECT_EQ(canonical_value("+12"), "12");
    EXPECT_EQ(canonical_value("-3"), "-3");
    EXPECT_EQ(canonical_value("IE12 BOFI"), "IE12 BOFI");
    EXPECT_EQ(canonical_value(""), "");
}

TEST(GraphLoad, ParsesTabSeparatedFiles)
{
    std::istringstream edges("# src\tedge\tdst\n1\t10\t2\n2\t11\t3\n\n");
    std::istringstream props("10\tlabel\tknows\n11\tlabel\tknows\n3\tage\t042\n");
    auto g = load_graph(edges, props);
    EXPECT_EQ(g.edges().size(), 2u);
    EXPECT_EQ(g.vertices(), (std::vector<Value>{1, 2, 3}));
    EXPECT_TRUE(g.is_edge(10));
    EXPECT_FALSE(g.is_vertex(10));
    ASSERT_TRUE(g.dict().find("42"));
    auto *adj = g.adjacency("knows");
    ASSERT_NE(adj, nullptr);
    EXPECT_EQ(adj->edge_count, 2u);
    ASSERT_EQ(adj->forward.row(1).size(), 1u);
    EXPECT_EQ(adj->forward.row(1)[0].neighbor, 2u);
    EXPECT_EQ(adj->reverse.row(3)[0].neighbor, 2u);
    EXPECT_TRUE(adj->forward.row(3).empty());
}

TEST(GraphLoad, ReportsLineOfMalformedInput)
{
    std::istringstream edges("1\t10\t2\n1\tx\t2\n");
    std::istringstream props("");
    try {
        load_graph(edges, props);
        FAIL() << "expected a parse error";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line, 2u);
    }
    std::istringstream short_line("1\t10\n");
    std::istringstream none("");
    EXPECT_THROW(load_graph(short_line, none), ParseError);
}

TEST(GraphLoad, RejectsIntegrityViolations)
{
    std::istringstream dup("1\t10\t2\n3\t10\t4\n"), none1("");
    EXPECT_THROW(load_graph(dup, none1), IntegrityError);
    std::istringstream clash("1\t2\t3\n"), none2("");
    EXPECT_NO_THROW(load_graph(clash, none2));
    std::istringstream clash2("1\t10\t2\n10\t11\t4\n"), none3("");
    EXPECT_THROW(load_graph(clash2, none3), IntegrityError);
}

TEST(GraphLoad, MissingFileNamesPath)
{
    try {
        load_graph_files("/nonexistent/edges.tsv", "");
        FAIL();
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/edges.tsv"), std::string::npos);
    }
}

TEST(GraphWrite, RoundTrips)
{
    auto g = random_graph(7, 20, 40, 3);
    std::stringstream e, p;
    write_graph(g, e, p);
    auto h = load_graph(e, p);
    EXPECT_EQ(h.edges(), g.edges());
    EXPECT_EQ(h.props().size(), g.props().size());
    for (auto l : {"l1", "l2", "l3"})
        EXPECT_EQ(scan_label(h, l), scan_label(g, l));
}

TEST(Rdf, IngestsTriplesAsLabelledEdges)
{
    std::istringstream in("alice\tknows\tbob\nbob\tknows\tcarol\nalice\tknows\tbob\nalice\tlikes\tcarol\n");
    auto triples = parse_rdf(in);
    ASSERT_EQ(triples.size(), 4u);
    auto g = ingest_rdf(triples);
    EXPECT_EQ(g.edges().size(), 3u); // the repeated triple collapses
    EXPECT_EQ(g.vertices().size(), 3u);
    auto knows = scan_label(g, "knows");
    EXPECT_EQ(knows.size(), 2u);
    std::set<std::string> names;
    for (auto &t : knows)
        names.insert(g.display(t[0]) + ">" + g.display(t[1]));
    EXPECT_EQ(names, (std::set<std::string>{"alice>bob", "bob>carol"}));
    EXPECT_EQ(scan_label(g, "likes").size(), 1u);
}

TEST(Rdf, RejectsMalformedLine)
{
    std::istringstream in("a\tb\n");
    EXPECT_THROW(parse_rdf(in), ParseError);
}

TEST(Catalog, MatchesDirectCounts)
{
    auto g = random_graph(3, 30, 120, 4);
    auto c = build_catalog(g);
    EXPECT_EQ(c.total_edges, 120u);
    EXPECT_EQ(c.vertex_count, g.vertices().size());
    std::size_t sum = 0;
    for (std::size_t l = 1; l <= 4; ++l) {
        auto name = "l" + std::to_string(l);
        auto rel = scan_label(g, name);
        std::set<Value> src, dst;
        std::size_t edges = 0;
        for (auto &e : g.edges())
            for (auto &p : g.props())
                if (p.obj == e.edge && g.dict().decode(p.key) == "label" && g.dict().decode(p.value) == name) {
                    ++edges;
                    src.insert(e.src);
                    dst.insert(e.dst);
                }
        auto *ls = c.label(name);
        ASSERT_NE(ls, nullptr);
        EXPECT_EQ(ls->edges, edges);
        EXPECT_EQ(ls->distinct_sources, src.size());
        EXPECT_EQ(ls->distinct_targets, dst.size());
        EXPECT_EQ(ls->distinct_pairs, rel.size());
        sum += edges;
    }
    EXPECT_EQ(sum, 120u);
    EXPECT_EQ(c.label("nope"), nullptr);
}

TEST(ScanLabel, ReverseSwapsEndpoints)
{
    test::BankFragment f;
    auto fwd = scan_label(f.graph, "transaction");
    auto rev = scan_label(f.graph, "transaction", Direction::Reverse);
    EXPECT_EQ(fwd.tuples(), (std::vector<Tuple>{{test::BankFragment::a1, test::BankFragment::a3},
                                               {test::BankFragment::a3, test::BankFragment::a5}}));
    EXPECT_EQ(rev.size(), 2u);
    EXPECT_TRUE(rev.contains(Tuple{test::BankFragment::a5, test::BankFragment::a3}));
    EXPECT_TRUE(scan_label(f.graph, "missing").empty());
}

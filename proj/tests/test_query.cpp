#include "navq/error.hpp"
#include "navq/query.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace navq;

namespace {

ConjunctiveQuery body_of(const std::string &text)
{
    return parse_program(text).answer_query();
}

}

TEST(Parser, ReadsRulesClosuresAndFilters)
{
    auto p = test::iban_query();
    EXPECT_EQ(p.answer, "Ans");
    EXPECT_EQ(p.rules.size(), 5u);
    auto q = p.answer_query();
    EXPECT_EQ(q.head, (std::vector<std::string>{"w", "z"}));
    ASSERT_EQ(q.body.size(), 4u);
    EXPECT_TRUE(q.body[1].closure);
    EXPECT_EQ(q.body[1].predicate, "I");
    EXPECT_FALSE(q.body[0].closure);
    EXPECT_EQ(p.arity("F"), 1u);
    EXPECT_EQ(p.arity("I"), 2u);
}

TEST(Parser, ConstantsInIdbAtomsBecomeFilters)
{
    auto q = body_of(test::label_rule("R", "a") + "Ans(x) :- R(x, 7).\n");
    ASSERT_EQ(q.body.size(), 2u);
    EXPECT_TRUE(q.body[1].is_filter());
    EXPECT_EQ(q.body[1].terms[0].var, q.body[0].terms[1].var);
    EXPECT_EQ(std::get<std::int64_t>(q.body[1].terms[1].value), 7);
}

TEST(Parser, AcceptsCommentsAndExplicitFilters)
{
    auto q = body_of("% comment\n" + test::label_rule("R", "a") + "# another\nAns(x, y) :- R(x, y), y = \"v\".\n");
    ASSERT_EQ(q.body.size(), 2u);
    EXPECT_TRUE(q.body[1].is_filter());
    EXPECT_EQ(std::get<std::string>(q.body[1].terms[1].value), "v");
}

TEST(Parser, AnswerDefaultsToLastRuleWithoutAns)
{
    auto p = parse_program(test::label_rule("R", "a") + "Q(x, y) :- R(x, y).\n");
    EXPECT_EQ(p.answer, "Q");
}

TEST(Parser, ReportsSyntaxErrorLine)
{
    try {
        parse_program("R(s, t) :- E(s, e, t).\nAns(x :- R(x, y).\n");
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line, 2u);
    }
}

TEST(Parser, RejectsMalformedRegularQueries)
{
    EXPECT_THROW(parse_program("Ans(x) :- R(x, y).\n"), QueryError);                        // undefined
    EXPECT_THROW(parse_program("E(x, y, z) :- E(x, y, z).\n"), QueryError);                 // EDB head
    EXPECT_THROW(parse_program("Ans(x, y) :- E+(x, e, y).\n"), QueryError);                 // closure on EDB
    EXPECT_THROW(parse_program("Ans(x, z) :- E(x, e, y).\n"), QueryError);                  // unsafe
    EXPECT_THROW(parse_program("A(x) :- E(x, e, y).\nAns(x) :- A+(x).\n"), QueryError);     // non-binary closure
    EXPECT_THROW(parse_program("A(x, y) :- E(x, e, y).\nAns(x) :- A(x).\n"), QueryError);   // arity
    EXPECT_THROW(parse_program("A(x, x) :- E(x, e, x).\n"), QueryError);                    // repeated head var
    EXPECT_THROW(parse_program("A(x, y) :- E(x, e, y).\nB(x, y) :- A(x, y), C(y, x).\n"
                               "C(x, y) :- B(x, y).\n"),
                 QueryError); // plain recursion
}

TEST(LabelShape, RecognizesLabelRules)
{
    auto p = parse_program(test::label_rule("R", "knows") + "Rv(t, s) :- E(s, e, t), P(e, \"label\", \"knows\").\n" +
                           "Q(s, t) :- E(s, e, t), P(e, \"weight\", 3).\nAns(a, b) :- R(a, b), Rv(a, b), Q(a, b).\n");
    auto r = label_shape(p, "R");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->label, "knows");
    EXPECT_FALSE(r->reversed);
    auto rv = label_shape(p, "Rv");
    ASSERT_TRUE(rv);
    EXPECT_TRUE(rv->reversed);
    EXPECT_FALSE(label_shape(p, "Q"));
    EXPECT_FALSE(label_shape(p, "Ans"));
}

TEST(Domains, PropertyValuesAreDictionaryColumns)
{
    auto p = parse_program("V(x, v) :- P(x, \"name\", v).\nAns(x, v) :- V(x, v).\n");
    EXPECT_EQ(p.column_domain("V", 0), Domain::Id);
    EXPECT_EQ(p.column_domain("V", 1), Domain::Dict);
    auto q = p.answer_query();
    EXPECT_EQ(var_domain(p, q, "v"), Domain::Dict);
    EXPECT_EQ(var_domain(p, q, "x"), Domain::Id);
}

TEST(JoinGraphTest, EdgesCarrySharedVariables)
{
    auto q = test::mixed_closure_query().answer_query();
    auto g = join_graph(q);
    EXPECT_EQ(g.size(), 4u);
    EXPECT_TRUE(g.connected());
    // V-W (x), V-Z (x), W-Y (y), W-Z (x), Y-Z (z)
    EXPECT_EQ(g.edges.size(), 5u);
    EXPECT_FALSE(g.connected(0b0101)); // V and Y alone
    EXPECT_TRUE(g.connected(0b0011));
}

TEST(ClosurePartitionTest, SplitsMixedQuery)
{
    auto q = test::mixed_closure_query().answer_query();
    auto part = classify_closures(q);
    EXPECT_EQ(part.N, (std::vector<std::size_t>{3}));
    EXPECT_EQ(part.I, (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(part.X, (std::vector<std::size_t>{0}));
}

TEST(ClosurePartitionTest, RejectsDisconnectedBodies)
{
    auto q = body_of(test::label_rule("R", "a") + "Ans(x, y, u, v) :- R(x, y), R(u, v).\n");
    EXPECT_THROW(classify_closures(q), QueryError);
}

TEST(CanonicalSignature, InvariantUnderRenamingAndReordering)
{
    auto base = test::label_rule("R", "a") + test::label_rule("S", "b");
    auto a = body_of(base + "Ans(x, z) :- R(x, y), S+(y, z).\n");
    auto b = body_of(base + "Ans(p, r) :- S+(q, r), R(p, q).\n");
    auto c = body_of(base + "Ans(x, z) :- R(x, y), S(y, z).\n");
    auto d = body_of(base + "Ans(x, z) :- S(x, y), R+(y, z).\n");
    auto ka = canonical_signature(a), kb = canonical_signature(b);
    EXPECT_EQ(ka.key, kb.key);
    EXPECT_NE(ka.key, canonical_signature(c).key);
    EXPECT_NE(ka.key, canonical_signature(d).key);
    // The correspondence maps x->p, y->q, z->r.
    ASSERT_EQ(ka.order.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        auto pos = std::find(a.head.begin(), a.head.end(), ka.order[i]) - a.head.begin();
        auto pos_b = std::find(b.head.begin(), b.head.end(), kb.order[i]) - b.head.begin();
        EXPECT_EQ(pos, pos_b);
    }
}

TEST(CanonicalSignature, HeadMatters)
{
    auto base = test::label_rule("R", "a");
    auto a = body_of(base + "Ans(x, y) :- R(x, y).\n");
    auto c = body_of(base + "Ans(x) :- R(x, y).\n");
    EXPECT_NE(canonical_signature(a).key, canonical_signature(c).key);
}

TEST(Printing, RoundTripsThroughParser)
{
    auto q = test::iban_query().answer_query();
    auto text = to_string(q, "Ans");
    EXPECT_NE(text.find("I+("), std::string::npos);
    auto again = body_of(std::string(test::owns_transfers_rules) +
                         "F(s) :- T+(s, t), P(t, \"IBAN\", \"IE12BOFI90000112345678\").\n"
                         "I(x, y) :- T(x, y), F(x).\n" + text + "\n");
    EXPECT_EQ(canonical_signature(again).key, canonical_signature(q).key);
}

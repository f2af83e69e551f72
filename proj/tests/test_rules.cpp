#include "navq/bench.hpp"
#include "navq/rules.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace navq;

namespace {

/** Connectivity of `mask` by plain breadth-first search over the shared-variable relation of the body. */
bool bfs_connected(const ConjunctiveQuery &q, const std::vector<std::size_t> &nodes, std::uint64_t mask)
{
    if (!mask)
        return false;
    auto shares = [&](std::size_t a, std::size_t b) {
        for (auto &v : q.body[nodes[a]].vars()) {
            auto w = q.body[nodes[b]].vars();
            if (std::find(w.begin(), w.end(), v) != w.end())
                return true;
        }
        return false;
    };
    std::uint64_t seen = mask & (~mask + 1);
    bool grew = true;
    while (grew) {
        grew = false;
        for (std::size_t a = 0; a < nodes.size(); ++a)
            if (seen >> a & 1)
                for (std::size_t b = 0; b < nodes.size(); ++b)
                    if ((mask >> b & 1) && !(seen >> b & 1) && shares(a, b)) {
                        seen |= 1ULL << b;
                        grew = true;
                    }
    }
    return seen == mask;
}

/** Every split of the body into two connected halves, the half holding the first atom listed first. */
std::vector<CcpPair> brute_force_ccp(const ConjunctiveQuery &q)
{
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < q.body.size(); ++i)
        if (!q.body[i].is_filter())
            nodes.push_back(i);
    std::uint64_t all = (1ULL << nodes.size()) - 1;
    std::vector<CcpPair> out;
    for (std::uint64_t s = 1; s < all; s += 2)
        if (bfs_connected(q, nodes, s) && bfs_connected(q, nodes, all & ~s))
            out.push_back({s, all & ~s});
    return out;
}

std::vector<CcpPair> sorted(std::vector<CcpPair> v)
{
    std::sort(v.begin(), v.end(), [](auto &a, auto &b) { return a.left < b.left; });
    return v;
}

std::shared_ptr<const Subquery> subquery_of(const Program &p)
{
    auto prog = std::make_shared<Program>(p);
    return make_subquery(prog->answer_query(), prog);
}

int count_kind(const PlanGraph &p, OpKind k)
{
    return int(std::count_if(p.ops.begin(), p.ops.end(), [&](auto &o) { return o.kind == k; }));
}

/** Catalog in which the l3 closure is far smaller than the l2 one. */
struct SmallY
{
    PropertyGraph graph;
    Catalog catalog;
    CostModel cost;

    static PropertyGraph make()
    {
        GraphBuilder b(1000);
        for (Value v = 0; v < 30; ++v)
            b.edge(v, v + 1, "l2");
        b.edge(0, 1, "l3");
        return b.build();
    }
    SmallY() : graph(make()), catalog(build_catalog(graph)), cost(catalog) { }

    RuleContext context(RuleSet rules = {}) const { return {rules, &cost}; }
};

int count_role(const PlanGraph &p, BufferRole r)
{
    return int(std::count_if(p.ops.begin(), p.ops.end(),
                             [&](auto &o) { return o.kind == OpKind::BufferWrite && o.role == r; }));
}

}

TEST(Ccp, MixedQueryHasSixPairs)
{
    auto q = test::mixed_closure_query().answer_query();
    auto pairs = ccp_pairs(join_graph(q));
    EXPECT_EQ(pairs.size(), 6u);
    EXPECT_EQ(pairs, sorted(brute_force_ccp(q)));
}

TEST(Ccp, CliquesMatchBruteForce)
{
    for (int k = 2; k <= 8; ++k) {
        auto q = make_star_query(k, false).answer_query();
        auto pairs = ccp_pairs(join_graph(q));
        EXPECT_EQ(pairs.size(), (1u << (k - 1)) - 1) << k;
        EXPECT_EQ(pairs, sorted(brute_force_ccp(q))) << k;
    }
}

TEST(Ccp, ChainsAndCyclesMatchBruteForce)
{
    for (int n = 2; n <= 7; ++n) {
        auto chain = make_chain_query(n, false).answer_query();
        auto pairs = ccp_pairs(join_graph(chain));
        EXPECT_EQ(pairs.size(), std::size_t(n - 1));
        EXPECT_EQ(pairs, sorted(brute_force_ccp(chain)));
        if (n >= 3) {
            auto cycle = make_cycle_query(n, false).answer_query();
            EXPECT_EQ(ccp_pairs(join_graph(cycle)), sorted(brute_force_ccp(cycle))) << n;
        }
    }
}

TEST(JoinRule, OnePlanPerPairWithSharedVariablesJoined)
{
    auto sq = subquery_of(test::mixed_closure_query());
    auto plans = apply_join_rule(*sq);
    ASSERT_EQ(plans.size(), 6u);
    for (auto &p : plans) {
        EXPECT_EQ(p.abstractions.size(), 2u);
        EXPECT_EQ(p.op(p.root).schema, sq->cq.head);
        EXPECT_EQ(count_kind(p, OpKind::Join), 1);
    }
}

TEST(LeafRules, LabelAtomBecomesFilteredEdgeScan)
{
    auto sq = subquery_of(parse_program(test::label_rule("R", "a") + "Ans(x, y) :- R(x, y).\n"));
    auto plans = apply_leaf_rules(*sq);
    ASSERT_FALSE(plans.empty());
    auto &p = plans.front();
    EXPECT_TRUE(p.abstractions.empty());
    EXPECT_TRUE(validate(p).empty());
    EXPECT_EQ(count_kind(p, OpKind::ScanE), 1);
    EXPECT_EQ(count_kind(p, OpKind::ScanP), 1);
}

TEST(LeafRules, MultiRulePredicateBecomesUnion)
{
    auto sq = subquery_of(parse_program(test::label_rule("R", "a") + test::label_rule("R", "b") +
                                        "Ans(x, y) :- R(x, y).\n"));
    std::map<std::string, std::size_t> applied;
    auto plans = apply_rules(*sq, {}, &applied);
    ASSERT_EQ(plans.size(), 1u);
    EXPECT_EQ(applied["union"], 1u);
    EXPECT_EQ(count_kind(plans[0], OpKind::Union), 1);
    EXPECT_EQ(plans[0].abstractions.size(), 2u);
}

TEST(ClosureRule, BuildsUnseededFixpoint)
{
    auto sq = subquery_of(parse_program(test::label_rule("R", "a") + "Ans(x, y) :- R+(x, y).\n"));
    auto p = apply_closure_rule(*sq);
    ASSERT_TRUE(p);
    EXPECT_FALSE(p->optimized);
    EXPECT_EQ(count_role(*p, BufferRole::Fixpoint), 1);
    EXPECT_EQ(count_kind(*p, OpKind::Dedup), 1);
    int fix = 0;
    for (auto &g : flow_groups(*p))
        fix += g.fixpoint;
    EXPECT_EQ(fix, 1);
}

TEST(H1, FreesFirstVariableWhenBodyStaysConnected)
{
    auto q = test::triple_path_query().answer_query();
    auto c = h1_choose_free_variable(q.body, 1, "f");
    ASSERT_TRUE(c);
    EXPECT_EQ(c->freed, "s");
    EXPECT_EQ(c->base.terms[0].var, "f");
    EXPECT_EQ(c->base.terms[1].var, "t");
    EXPECT_FALSE(c->base.closure);
}

TEST(H1, RejectsClosureThatBridgesTheBody)
{
    auto rules = test::label_rule("A", "l1") + test::label_rule("B", "l2") + test::label_rule("C", "l3");
    auto cycle = parse_program(rules + "Ans(x, y, z) :- A(x, z), B+(x, y), C(y, z).\n").answer_query();
    auto c = h1_choose_free_variable(cycle.body, 1, "f");
    ASSERT_TRUE(c);
    EXPECT_EQ(c->freed, "x");
    auto bridge = parse_program(rules + "Ans(x, y) :- A(x, x2), B+(x, y), C(y, z).\n").answer_query();
    EXPECT_FALSE(h1_choose_free_variable(bridge.body, 1, "f"));
}

TEST(H1, InapplicableOnIbanQuery)
{
    auto q = test::iban_query().answer_query();
    EXPECT_FALSE(h1_choose_free_variable(q.body, 1, "f"));
    auto sq = subquery_of(test::iban_query());
    EXPECT_FALSE(apply_seeding_rule(*sq, {}));
}

TEST(H2, OrdersBySizeThenName)
{
    auto prog = test::mixed_closure_query();
    auto q = prog.answer_query();
    EXPECT_EQ(h2_order_interior(q, {2, 1}, prog, nullptr), (std::vector<std::size_t>{1, 2}));
    SmallY small;
    EXPECT_EQ(h2_order_interior(q, {1, 2}, prog, &small.cost), (std::vector<std::size_t>{2, 1}));
}

TEST(SeedingQueryTest, MixedQueryWithSmallerClosureFirst)
{
    auto q = test::mixed_closure_query().answer_query();
    auto part = classify_closures(q);
    auto s = build_seeding_query(q, part, {2, 1});
    ASSERT_TRUE(s);
    const auto &b = s->query.body;
    ASSERT_EQ(b.size(), 4u);
    for (auto &a : b)
        EXPECT_FALSE(a.closure);
    // V(s', x), W(x, y1), Y(y2, z), Z(x, z) with fresh s', y1, y2
    EXPECT_NE(b[0].terms[0].var, "s");
    EXPECT_EQ(b[0].terms[1].var, "x");
    EXPECT_EQ(b[1].terms[0].var, "x");
    EXPECT_NE(b[1].terms[1].var, "y");
    EXPECT_NE(b[2].terms[0].var, "y");
    EXPECT_EQ(b[2].terms[1].var, "z");
    EXPECT_EQ(b[3], q.body[3]);
    std::set<std::string> fresh{b[0].terms[0].var, b[1].terms[1].var, b[2].terms[0].var};
    EXPECT_EQ(fresh.size(), 3u);

    ASSERT_EQ(s->closures.size(), 3u);
    EXPECT_EQ(s->closures[0].atom, 2u);
    EXPECT_EQ(s->closures[0].freed, "y");
    EXPECT_EQ(s->closures[0].direction, Direction::Reverse);
    EXPECT_EQ(s->closures[1].atom, 1u);
    EXPECT_EQ(s->closures[1].freed, "y");
    EXPECT_EQ(s->closures[1].direction, Direction::Forward);
    EXPECT_EQ(s->closures[2].atom, 0u);
    EXPECT_EQ(s->closures[2].freed, "s");
    EXPECT_FALSE(s->closures[2].interior);
}

TEST(ExpansionDirection, FollowsFreedEndpoint)
{
    Atom a{"R", {Term::variable("u"), Term::variable("v")}, true};
    EXPECT_EQ(expansion_direction(a, "v"), Direction::Forward);
    EXPECT_EQ(expansion_direction(a, "u"), Direction::Reverse);
}

TEST(SeedingRule, ExteriorPlanStructure)
{
    auto sq = subquery_of(test::owner_reach_query());
    auto p = apply_seeding_rule(*sq, {});
    ASSERT_TRUE(p);
    EXPECT_TRUE(p->optimized);
    EXPECT_EQ(count_role(*p, BufferRole::Seed), 1);
    EXPECT_EQ(count_role(*p, BufferRole::Fixpoint), 1);
    EXPECT_EQ(count_role(*p, BufferRole::Stack), 0);
    EXPECT_EQ(p->op(p->root).schema, (std::vector<std::string>{"x", "z"}));
    // The seed is a projection of the seeding relation onto one column, joined with itself for the identity pairs.
    bool identity = false;
    for (auto &o : p->ops)
        if (o.kind == OpKind::Join && o.children[1] >= 0 && p->op(o.children[1]).kind == OpKind::Rename &&
            p->op(o.children[1]).children[0] == o.children[0] && p->op(o.children[0]).kind == OpKind::Dedup)
            identity = true;
    EXPECT_TRUE(identity);
}

TEST(SeedingRule, MixedQueryNeedsTheSmallerClosureFirst)
{
    auto q = test::mixed_closure_query().answer_query();
    // W first frees x, then Y can only free z and the W, Y pair detaches from V, Z.
    EXPECT_FALSE(build_seeding_query(q, classify_closures(q), {1, 2}));
    auto sq = subquery_of(test::mixed_closure_query());
    EXPECT_FALSE(apply_seeding_rule(*sq, {}));
}

TEST(SeedingRule, StacksAfterEverySecondClosure)
{
    SmallY small;
    auto sq = subquery_of(test::mixed_closure_query());
    auto p = apply_seeding_rule(*sq, small.context());
    ASSERT_TRUE(p);
    EXPECT_EQ(count_role(*p, BufferRole::Fixpoint), 3);
    EXPECT_EQ(count_role(*p, BufferRole::Stack), 2);
    RuleSet no_stack;
    no_stack.stacking = false;
    auto q = apply_seeding_rule(*sq, small.context(no_stack));
    ASSERT_TRUE(q);
    EXPECT_EQ(count_role(*q, BufferRole::Stack), 0);
}

TEST(SeedingRule, Toggles)
{
    auto mixed = subquery_of(test::mixed_closure_query());
    auto exterior = subquery_of(test::owner_reach_query());
    RuleContext off;
    off.rules.seed = false;
    EXPECT_FALSE(apply_seeding_rule(*exterior, off));
    RuleContext exterior_only;
    exterior_only.rules.seed_interior = false;
    EXPECT_TRUE(apply_seeding_rule(*exterior, exterior_only));
    EXPECT_FALSE(apply_seeding_rule(*mixed, exterior_only));
    SmallY small;
    RuleSet no_join;
    no_join.join = false;
    std::map<std::string, std::size_t> applied;
    auto plans = apply_rules(*mixed, small.context(no_join), &applied);
    EXPECT_EQ(plans.size(), 1u);
    EXPECT_EQ(applied.count("join"), 0u);
    EXPECT_EQ(applied["seed"], 1u);
}

TEST(FreshVar, AvoidsTakenNames)
{
    auto q = test::owner_reach_query().answer_query();
    auto a = fresh_var(q, "$s");
    auto b = fresh_var(q, "$s", {a});
    EXPECT_NE(a, b);
    EXPECT_EQ(a, fresh_var(q, "$s"));
    for (auto &v : q.body_vars()) {
        EXPECT_NE(a, v);
        EXPECT_NE(b, v);
    }
}

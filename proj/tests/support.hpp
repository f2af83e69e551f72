#pragma once

#include "navq/bench.hpp"
#include "navq/enumerator.hpp"
#include "navq/executor.hpp"
#include "navq/graph.hpp"
#include "navq/query.hpp"

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace navq::test {

/** Small banking graph: people own accounts, accounts transfer money, one account carries an IBAN.
 *
 *   p1 -owns-> a1 -transaction-> a3 -transaction-> a5 (IBAN)
 *   p3 -owns-> a3
 */
struct BankFragment
{
    static constexpr Value p1 = 1, p3 = 3, a1 = 11, a3 = 13, a5 = 15;
    PropertyGraph graph;

    BankFragment()
    {
        GraphBuilder b(100);
        b.edge(p1, a1, "owns");
        b.edge(p3, a3, "owns");
        b.edge(a1, a3, "transaction");
        b.edge(a3, a5, "transaction");
        b.property(a5, "IBAN", "IE12BOFI90000112345678");
        graph = PropertyGraph::build(b.edges, b.props, b.dict,
                                     {{p1, "p1"}, {p3, "p3"}, {a1, "a1"}, {a3, "a3"}, {a5, "a5"}});
    }
};

inline const char *owns_transfers_rules = "O(s, t) :- E(s, e, t), P(e, \"label\", \"owns\").\n"
                                          "T(s, t) :- E(s, e, t), P(e, \"label\", \"transaction\").\n";

/** Pairs of owners whose accounts are linked by transactions through accounts that reach the IBAN account. */
inline Program iban_query()
{
    return parse_program(std::string(owns_transfers_rules) +
                         "F(s) :- T+(s, t), P(t, \"IBAN\", \"IE12BOFI90000112345678\").\n"
                         "I(x, y) :- T(x, y), F(x).\n"
                         "Ans(w, z) :- O(w, x), I+(x, y), O(z, y), F(y).\n");
}

/** Owners and every account reachable from one of their accounts. */
inline Program owner_reach_query()
{
    return parse_program(std::string(owns_transfers_rules) + "Ans(x, z) :- O(x, y), T+(y, z).\n");
}

inline std::string label_rule(const std::string &pred, const std::string &label)
{
    return pred + "(s, t) :- E(s, e, t), P(e, \"label\", \"" + label + "\").\n";
}

/** Three parallel closures over labels l1, l2, l3. */
inline Program triple_path_query()
{
    return parse_program(label_rule("X", "l1") + label_rule("Y", "l2") + label_rule("Z", "l3") +
                         "Ans(s, t) :- X+(s, t), Y+(s, t), Z+(s, t).\n");
}

/** One exterior closure, two interior closures and one plain atom over labels l1..l4. */
inline Program mixed_closure_query()
{
    return parse_program(label_rule("V", "l1") + label_rule("W", "l2") + label_rule("Y", "l3") +
                         label_rule("Z", "l4") + "Ans(x, y, z) :- V+(s, x), W+(x, y), Y+(y, z), Z(x, z).\n");
}

inline std::map<std::string, std::string> default_bindings()
{
    return {{"l1", "l1"}, {"l2", "l2"}, {"l3", "l3"}, {"c1", "3"}};
}

inline Relation rel(std::vector<std::string> schema, std::vector<Tuple> rows)
{
    return Relation(std::move(schema), std::move(rows));
}

/** A program whose answer is the given conjunctive query, for comparing sub-plans against the oracle. */
inline Program as_program(const Program &base, const ConjunctiveQuery &q)
{
    Program p = base;
    Atom head{"$sub", {}, false};
    for (auto &v : q.head)
        head.terms.push_back(Term::variable(v));
    p.rules["$sub"] = {Rule{head, q.body}};
    p.answer = "$sub";
    return p;
}

/** Random labelled graph that also carries a 4-cycle for every label. */
inline PropertyGraph cyclic_graph(std::uint64_t seed, std::size_t vertices, std::size_t edges, std::size_t labels)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Value> vertex(0, vertices - 1);
    std::uniform_int_distribution<std::size_t> label(1, labels);
    GraphBuilder b(vertices);
    for (std::size_t i = 0; i < edges; ++i) {
        Value s = vertex(rng), t = vertex(rng);
        b.edge(s, t, "l" + std::to_string(label(rng)));
    }
    for (std::size_t l = 1; l <= labels; ++l)
        for (Value v = 0; v < 4; ++v)
            b.edge(v, (v + 1) % 4, "l" + std::to_string(l));
    return b.build();
}

}

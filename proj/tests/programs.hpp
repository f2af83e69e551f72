#pragma once

// Hand-written seeded programs, evaluated relation by relation without any plan machinery.  They are the reference
// the seeding rule's plans are checked against.

#include "navq/enumerator.hpp"
#include "navq/executor.hpp"
#include "navq/graph.hpp"
#include "navq/rules.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace navq::test {

/** Nested-loop natural join over equally named columns. */
inline Relation natural_join(const Relation &a, const Relation &b)
{
    std::vector<std::pair<std::size_t, std::size_t>> shared;
    std::vector<std::size_t> extra;
    auto schema = a.schema();
    for (std::size_t j = 0; j < b.arity(); ++j) {
        auto it = std::find(a.schema().begin(), a.schema().end(), b.schema()[j]);
        if (it != a.schema().end())
            shared.emplace_back(std::size_t(it - a.schema().begin()), j);
        else {
            extra.push_back(j);
            schema.push_back(b.schema()[j]);
        }
    }
    std::vector<Tuple> rows;
    for (auto &s : a)
        for (auto &t : b) {
            bool match = std::all_of(shared.begin(), shared.end(), [&](auto &p) { return s[p.first] == t[p.second]; });
            if (!match)
                continue;
            Tuple r = s;
            for (auto j : extra)
                r.push_back(t[j]);
            rows.push_back(std::move(r));
        }
    return Relation(std::move(schema), std::move(rows));
}

/** Edges of one label under the given column names. */
inline Relation labelled(const PropertyGraph &g, const std::string &label, const std::string &src, const std::string &dst)
{
    auto r = scan_label(g, label);
    return Relation({src, dst}, {r.tuples().begin(), r.tuples().end()});
}

inline std::set<Value> column_values(const Relation &r, const std::string &col)
{
    auto i = *r.index_of(col);
    std::set<Value> out;
    for (auto &t : r)
        out.insert(t[i]);
    return out;
}

/** Seeded closure of a label with the seed in column `seed` and the far end in column `far`. */
inline Relation seeded(const PropertyGraph &g, const std::string &label, const std::set<Value> &seed, Direction dir,
                       const std::string &seed_col, const std::string &far_col)
{
    auto c = seeded_closure_oracle(scan_label(g, label), seed, dir);
    std::vector<Tuple> rows;
    for (auto &t : c)
        rows.push_back(dir == Direction::Forward ? Tuple{t[0], t[1]} : Tuple{t[1], t[0]});
    return Relation({seed_col, far_col}, std::move(rows));
}

/** Ans(x, z) :- O(x, y), T+(y, z) by exterior seeding:
 *   R(x, f) :- O(x, y), T(y, f).   S(f) :- R(_, f).   S->(f, z) seeded forward.   Ans(x, z) :- R(x, f), S->(f, z). */
inline Relation exterior_seeded_program(const PropertyGraph &g, const std::string &o, const std::string &t)
{
    auto r = natural_join(labelled(g, o, "x", "y"), labelled(g, t, "y", "f")).project({"x", "f"});
    auto s = seeded(g, t, column_values(r, "f"), Direction::Forward, "f", "z");
    return natural_join(r, s).project({"x", "z"});
}

/** Ans(s, t) :- X+(s, t), Y+(s, t), Z+(s, t) with the t side kept in the seeding relation:
 *   R(t, a, b, c) :- X(a, t), Y(b, t), Z(c, t).
 *   Each closure is seeded backwards from its fresh column, and every result is stacked before seeding the next:
 *   W1 = R joined with X<-(s, a); W2 = W1 joined with Y<-(s, b) seeded from W1; Ans from W2 and Z<- seeded from W2. */
inline Relation stacked_program(const PropertyGraph &g, const std::string &x, const std::string &y, const std::string &z,
                                bool stack = true)
{
    auto r = natural_join(natural_join(labelled(g, x, "a", "t"), labelled(g, y, "b", "t")), labelled(g, z, "c", "t"));
    auto w1 = natural_join(r, seeded(g, x, column_values(r, "a"), Direction::Reverse, "a", "s")).project({"t", "b", "c", "s"});
    auto w2 = natural_join(w1, seeded(g, y, column_values(stack ? w1 : r, "b"), Direction::Reverse, "b", "s"))
                  .project({"t", "c", "s"});
    auto ans = natural_join(w2, seeded(g, z, column_values(stack ? w2 : r, "c"), Direction::Reverse, "c", "s"));
    return ans.project({"s", "t"});
}

/** Ans(x, y, z) :- V+(s, x), W+(x, y), Y+(y, z), Z(x, z) from the seeding relation
 *   Qs(p, x, y1, y2, z) :- V(p, x), W(x, y1), Y(y2, z), Z(x, z)
 * with Y seeded backwards from y2, W forwards from y1 and V backwards from p. */
inline Relation mixed_seeded_program(const PropertyGraph &g)
{
    auto qs = natural_join(natural_join(natural_join(labelled(g, "l1", "p", "x"), labelled(g, "l2", "x", "y1")),
                                        labelled(g, "l3", "y2", "z")),
                           labelled(g, "l4", "x", "z"));
    auto c1 = natural_join(qs, seeded(g, "l3", column_values(qs, "y2"), Direction::Reverse, "y2", "y"));
    auto c2 = natural_join(c1, seeded(g, "l2", column_values(c1, "y1"), Direction::Forward, "y1", "y"));
    auto c3 = natural_join(c2, seeded(g, "l1", column_values(c2, "p"), Direction::Reverse, "p", "s"));
    return c3.project({"x", "y", "z"});
}

/** Resolves every abstraction of `plan` from a filled memo table, the way the enumerator substitutes memo hits. */
inline PlanGraph resolve(PlanGraph plan, const MemoTable &memo)
{
    while (!plan.abstractions.empty()) {
        int abs = plan.abstractions.back();
        auto &q = *plan.op(abs).query;
        auto *hit = memo.find(q.canon.key);
        if (!hit)
            throw Error("no memo entry for " + to_string(q.cq));
        std::vector<std::pair<std::string, std::string>> renames;
        for (std::size_t i = 0; i < q.canon.order.size(); ++i)
            renames.emplace_back(hit->query->canon.order[i], q.canon.order[i]);
        plan = substitute(plan, abs, hit->plan, renames);
    }
    return plan;
}

/** The seeding rule's plan for the answer query of `prog`, with its sub-queries planned by full enumeration. */
inline std::optional<PlanGraph> seeded_root_plan(const Program &prog, const CostModel &cost, RuleSet rules = {})
{
    auto shared = std::make_shared<const Program>(prog);
    auto sq = make_subquery(prog.answer_query(), shared);
    auto p = apply_seeding_rule(*sq, {rules, &cost});
    if (!p)
        return std::nullopt;
    MemoTable memo;
    enumerate(prog.answer_query(), shared, rules, cost, false, &memo);
    return resolve(*p, memo);
}

inline int count_writes(const PlanGraph &p, BufferRole role)
{
    return int(std::count_if(p.ops.begin(), p.ops.end(),
                             [&](const Op &o) { return o.kind == OpKind::BufferWrite && o.role == role; }));
}

/** True when some Dedup over a projection of a buffer read feeds a join with its own renamed copy. */
inline bool has_identity_seed(const PlanGraph &p)
{
    for (auto &o : p.ops) {
        if (o.kind != OpKind::Join)
            continue;
        auto &l = p.op(o.children[0]);
        auto &r = p.op(o.children[1]);
        if (l.kind != OpKind::Dedup || r.kind != OpKind::Rename || r.children[0] != o.children[0])
            continue;
        auto &proj = p.op(l.children[0]);
        if (proj.kind == OpKind::Project && proj.vars.size() == 1 && p.op(proj.children[0]).kind == OpKind::BufferRead)
            return true;
    }
    return false;
}

}

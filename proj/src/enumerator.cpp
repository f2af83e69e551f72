#include "navq/enumerator.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

namespace navq {

const MemoEntry * MemoTable::find(const std::string &key) const
{
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void MemoTable::offer(MemoEntry entry)
{
    auto &key = entry.query->canon.key;
    auto it = entries_.find(key);
    if (it == entries_.end())
        entries_.emplace(key, std::move(entry));
    else if (entry.cost < it->second.cost)
        it->second = std::move(entry);
}

namespace {

struct Item
{
    PlanGraph plan;
    std::shared_ptr<const Subquery> owner; ///< query the plan answers; null for the initial item
};

PlanGraph bare(std::shared_ptr<const Subquery> q)
{
    PlanGraph p;
    p.root = p.abstraction(std::move(q));
    return p;
}

/** Maps the columns of a memoized plan onto the variable names of an equivalent query. */
std::vector<std::pair<std::string, std::string>> correspondence(const Subquery &from, const Subquery &to)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < from.canon.order.size() && i < to.canon.order.size(); ++i)
        out.emplace_back(from.canon.order[i], to.canon.order[i]);
    return out;
}

}

EnumerationResult enumerate(const ConjunctiveQuery &q, std::shared_ptr<const Program> prog, const RuleSet &rules,
                            const CostModel &cost, bool exhaustive, MemoTable *memo_out)
{
    auto start = std::chrono::steady_clock::now();
    EnumerationResult res;
    MemoTable local;
    MemoTable &memo = memo_out ? *memo_out : local;
    RuleContext ctx{rules, &cost};

    auto root = make_subquery(q, prog);
    std::set<std::string> expanded;
    std::vector<Item> stack;
    stack.push_back({bare(root), nullptr});

    while (!stack.empty()) {
        res.stats.peak_depth = std::max(res.stats.peak_depth, stack.size());
        Item &top = stack.back();
        if (top.plan.abstractions.empty()) {
            double c = cost.estimate_cost(top.plan);
            ++res.stats.leaves;
            if (exhaustive && top.owner == root)
                res.root_plans.push_back({top.plan, c});
            memo.offer({top.owner, std::move(top.plan), c});
            stack.pop_back();
            continue;
        }
        int abs = top.plan.abstractions.back();
        auto sub = top.plan.op(abs).query;
        if (const MemoEntry *hit = memo.find(sub->canon.key)) {
            ++res.stats.memo_hits;
            if (!top.owner) {
                stack.pop_back();
                continue;
            }
            top.plan = substitute(top.plan, abs, hit->plan, correspondence(*hit->query, *sub));
            continue;
        }
        if (!expanded.insert(sub->canon.key).second)
            throw EnumerationError("no plan found for sub-query " + to_string(sub->cq));
        auto plans = apply_rules(*sub, ctx, &res.stats.rule_applications);
        if (plans.empty())
            throw EnumerationError("no rule applies to sub-query " + to_string(sub->cq));
        // Pushed in reverse so the first rule output is processed first.
        for (auto it = plans.rbegin(); it != plans.rend(); ++it)
            stack.push_back({std::move(*it), sub});
    }

    const MemoEntry *best = memo.find(root->canon.key);
    if (!best)
        throw EnumerationError("no plan found for " + to_string(q));
    res.best = best->plan;
    res.cost = best->cost;
    res.stats.memo_entries = memo.size();
    res.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return res;
}

EnumerationResult enumerate(const Program &prog, const RuleSet &rules, const CostModel &cost, bool exhaustive)
{
    auto shared = std::make_shared<const Program>(prog);
    return enumerate(prog.answer_query(), shared, rules, cost, exhaustive);
}

std::vector<CostedPlan> exhaustive_plans(const Program &prog, const RuleSet &rules, const CostModel &cost)
{
    return enumerate(prog, rules, cost, true).root_plans;
}

std::uint64_t predicted_plan_count(int n, bool recursive)
{
    if (n < 2)
        throw Error("plan count needs n >= 2, got " + std::to_string(n));
    std::uint64_t total = recursive ? 2 * std::uint64_t(n) : std::uint64_t(n);
    std::uint64_t binom = n; // C(n, 1)
    for (int k = 2; k <= n; ++k) {
        binom = binom * std::uint64_t(n - k + 1) / std::uint64_t(k);
        std::uint64_t per = recursive ? (1ULL << k) - 1 : (1ULL << (k - 1)) - 1;
        total += binom * per;
    }
    return total;
}

namespace {

Program shaped_query(int n, bool recursive, const std::string &shape)
{
    if (n < 1)
        throw Error(shape + " query needs n >= 1");
    std::ostringstream text;
    for (int i = 1; i <= n; ++i)
        text << "L" << i << "(s, t) :- E(s, e, t), P(e, \"label\", \"l" << i << "\").\n";
    std::vector<std::string> atoms, head;
    for (int i = 1; i <= n; ++i) {
        std::string a, b;
        if (shape == "star") {
            a = "c";
            b = "x" + std::to_string(i);
        } else {
            a = "x" + std::to_string(i - 1);
            b = (shape == "cycle" && i == n) ? "x0" : "x" + std::to_string(i);
        }
        atoms.push_back("L" + std::to_string(i) + (recursive ? "+" : "") + "(" + a + ", " + b + ")");
        for (auto &v : {a, b})
            if (std::find(head.begin(), head.end(), v) == head.end())
                head.push_back(v);
    }
    text << "Ans(";
    for (std::size_t i = 0; i < head.size(); ++i)
        text << (i ? ", " : "") << head[i];
    text << ") :- ";
    for (std::size_t i = 0; i < atoms.size(); ++i)
        text << (i ? ", " : "") << atoms[i];
    text << ".\n";
    return parse_program(text.str());
}

}

Program make_star_query(int n, bool recursive) { return shaped_query(n, recursive, "star"); }
Program make_chain_query(int n, bool recursive) { return shaped_query(n, recursive, "chain"); }
Program make_cycle_query(int n, bool recursive) { return shaped_query(n, recursive, "cycle"); }

}

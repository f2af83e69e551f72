#pragma once

#include "navq/cost.hpp"
#include "navq/plan.hpp"
#include "navq/query.hpp"
#include "navq/rules.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace navq {

struct EnumerationStats
{
    std::size_t leaves = 0; ///< concrete plans costed
    std::map<std::string, std::size_t> rule_applications;
    std::size_t peak_depth = 0;
    std::size_t memo_hits = 0;
    std::size_t memo_entries = 0;
    double wall_ms = 0;
};

struct CostedPlan
{
    PlanGraph plan;
    double cost = 0;
};

struct EnumerationResult
{
    PlanGraph best;
    double cost = 0;
    EnumerationStats stats;
    std::vector<CostedPlan> root_plans; ///< every concrete plan of the input query, filled in exhaustive mode
};

struct MemoEntry
{
    std::shared_ptr<const Subquery> query;
    PlanGraph plan;
    double cost = 0;
};

/** Best concrete plan per canonical query signature. */
class MemoTable
{
    std::map<std::string, MemoEntry> entries_;

public:
    const MemoEntry * find(const std::string &key) const;
    /** Keeps the cheaper of `entry` and the incumbent; the incumbent wins ties. */
    void offer(MemoEntry entry);
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, MemoEntry> & entries() const { return entries_; }
};

/** Top-down enumeration with memoization.
 * @throws EnumerationError when some sub-query has no applicable rule */
EnumerationResult enumerate(const Program &prog, const RuleSet &rules, const CostModel &cost,
                            bool exhaustive = false);
EnumerationResult enumerate(const ConjunctiveQuery &q, std::shared_ptr<const Program> prog, const RuleSet &rules,
                            const CostModel &cost, bool exhaustive = false, MemoTable *memo = nullptr);

/** Every concrete plan of the answer query, each with its cost. */
std::vector<CostedPlan> exhaustive_plans(const Program &prog, const RuleSet &rules, const CostModel &cost);

/** Worst-case leaf count for a star of n atoms, unoptimized or with every rule enabled.
 * @throws Error when n < 2 */
std::uint64_t predicted_plan_count(int n, bool recursive);

/** Star of n label predicates around one centre variable; `recursive` marks every atom as a closure. */
Program make_star_query(int n, bool recursive);
/** Chain L1(x0,x1), ..., Ln(x{n-1},xn). */
Program make_chain_query(int n, bool recursive);
/** Cycle L1(x0,x1), ..., Ln(x{n-1},x0). */
Program make_cycle_query(int n, bool recursive);

}

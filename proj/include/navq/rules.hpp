#pragma once

#include "navq/cost.hpp"
#include "navq/graph.hpp"
#include "navq/plan.hpp"
#include "navq/query.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace navq {

/** Enabled enumeration rules.  Leaf, union and unseeded closure rules are always on. */
struct RuleSet
{
    bool join = true;
    bool seed = true;
    bool seed_interior = true; ///< off: seeding only applies when every closure is exterior
    bool stacking = true;
};

/** A connected-complement pair, as bitmasks over join-graph node positions. */
struct CcpPair
{
    std::uint64_t left;
    std::uint64_t right;

    bool operator==(const CcpPair &) const = default;
};

/** All connected-complement pairs, one orientation each (`left` holds the lowest node), ordered by `left`. */
std::vector<CcpPair> ccp_pairs(const JoinGraph &jg);

struct RuleContext
{
    RuleSet rules;
    const CostModel *cost = nullptr; ///< used by h2; without it closures keep body order
};

std::vector<PlanGraph> apply_join_rule(const Subquery &q);
/** Scan, inlining and union plans for a query with exactly one non-filter, non-closure atom. */
std::vector<PlanGraph> apply_leaf_rules(const Subquery &q);
/** Unseeded fixpoint for a query with exactly one non-filter atom that is a closure. */
std::optional<PlanGraph> apply_closure_rule(const Subquery &q);
std::optional<PlanGraph> apply_seeding_rule(const Subquery &q, const RuleContext &ctx);

/** Outputs of every applicable enabled rule, in a fixed order; `applied` counts applications per rule name. */
std::vector<PlanGraph> apply_rules(const Subquery &q, const RuleContext &ctx,
                                   std::map<std::string, std::size_t> *applied = nullptr);

/** How one closure is split off by seeding: the base atom in the seeding query has `freed` renamed to `fresh`. */
struct SeededClosure
{
    std::size_t atom;  ///< body index of the closure
    std::string freed; ///< closure endpoint reconnected after the fixpoint
    std::string fresh; ///< seed column
    Direction direction;
    bool interior;
};

struct FreedVariable
{
    std::string freed;
    std::string fresh;
    Atom base;
};

/** Chooses which endpoint of interior closure `closure` to free: the first if the body stays connected, else the
 * second.  `body` is the working body with earlier choices applied.  Empty when both choices disconnect it. */
std::optional<FreedVariable> h1_choose_free_variable(const std::vector<Atom> &body, std::size_t closure,
                                                     const std::string &fresh);

/** Interior closures by ascending estimated cardinality, ties by predicate name then position. */
std::vector<std::size_t> h2_order_interior(const ConjunctiveQuery &q, const std::vector<std::size_t> &interior,
                                           const Program &prog, const CostModel *cost);

struct SeedingQuery
{
    ConjunctiveQuery query;
    std::vector<SeededClosure> closures; ///< processing order: interior (h2 order), then exterior
    std::vector<Atom> residual_filters;  ///< filters whose variable left the seeding query
};

/** Seeding query for `q` given its partition and the interior order; empty when seeding is inapplicable. */
std::optional<SeedingQuery> build_seeding_query(const ConjunctiveQuery &q, const ClosurePartition &part,
                                                const std::vector<std::size_t> &interior_order);

/** Forward when the seed binds the closure's source (the target was freed), reverse otherwise. */
Direction expansion_direction(const Atom &closure, const std::string &freed);

/** Fresh variable name not used in `q`, deterministic. */
std::string fresh_var(const ConjunctiveQuery &q, std::string_view prefix, const std::set<std::string> &taken = {});

}

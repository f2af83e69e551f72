#pragma once

#include "navq/graph.hpp"
#include "navq/plan.hpp"
#include "navq/query.hpp"
#include "navq/relation.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <vector>

namespace navq {

struct EvalMetrics
{
    /// c(p): tuples output by scans and joins, fixpoint joins counted once per iteration.
    std::uint64_t tuples_processed = 0;
    std::vector<std::uint64_t> op_outputs; ///< final output size per operator
    std::vector<std::size_t> iterations;   ///< one entry per fixpoint group, in evaluation order
    double exec_ms = 0;
    double opt_ms = 0; ///< left for the caller
};

struct Execution
{
    Relation result;
    EvalMetrics metrics;
};

struct ExecOptions
{
    std::optional<std::chrono::milliseconds> timeout;
};

/** Evaluates an abstraction-free plan with set semantics.
 * @throws ExecutionError on invalid plans, Timeout when the time limit passes */
Execution execute(const PlanGraph &plan, const PropertyGraph &g, const ExecOptions &opts = {});

/** Naive transitive closure of a binary relation. */
Relation transitive_closure_oracle(const Relation &base);

/** Pairs of the closure starting (forward) or ending (reverse) in `seed`, plus identity pairs on the seed. */
Relation seeded_closure_oracle(const Relation &base, const std::set<Value> &seed, Direction dir);

/** Bottom-up evaluation of the answer predicate straight from the rules, without plans. */
Relation datalog_oracle(const Program &prog, const PropertyGraph &g);

inline std::size_t count_results(const Relation &r) { return r.size(); }

/** Tab-separated decoded rows in sorted order; `domains` gives the value space of each column. */
void write_tsv(std::ostream &out, const Relation &r, const std::vector<Domain> &domains, const PropertyGraph &g);

}

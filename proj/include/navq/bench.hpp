#pragma once

#include "navq/cost.hpp"
#include "navq/enumerator.hpp"
#include "navq/executor.hpp"
#include "navq/graph.hpp"
#include "navq/query.hpp"
#include "navq/rules.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace navq {

enum class Mode { Unopt, Waveguide, Opt };

const char * mode_name(Mode m);
/** @throws Error on an unknown name */
Mode parse_mode(std::string_view name);
RuleSet rules_for(Mode m);

/** Applies `k=v[,k=v...]` settings.  Rule keys: join, seed, seed.interior, seed.stacking, optionally
 * prefixed `rules.` (seed_interior and stacking are accepted too); values on/off/true/false/1/0.
 * Cost keys: cost.expansion_cap, cost.default_selectivity, cost.iteration_factor, cost.weight.<OperatorKind>.
 * @throws Error on unknown keys or malformed values */
void apply_settings(std::string_view settings, RuleSet &rules, CostConfig &cost);

// -- templates --------------------------------------------------------------------------------------------------

const std::vector<std::string> & template_names();
/** Template program text with `l1`, `l2`, `l3` bound to labels and `c1` to a vertex id.
 * @throws Error naming the first unbound variable the template needs */
std::string template_text(const std::string &name, const std::map<std::string, std::string> &bindings);
Program instantiate_template(const std::string &name, const std::map<std::string, std::string> &bindings);
/** Reads `name = value` lines; blank lines and `#` comments are skipped. */
std::map<std::string, std::string> parse_bindings(std::istream &in);

// -- graphs -----------------------------------------------------------------------------------------------------

struct GraphBuilder
{
    std::vector<EdgeTriple> edges;
    std::vector<PropertyTriple> props;
    Dictionary dict;
    Value next_edge;

    explicit GraphBuilder(Value first_edge_id) : next_edge(first_edge_id) { }
    /** Adds an edge with a "label" property. */
    void edge(Value src, Value dst, std::string_view label);
    void property(Value obj, std::string_view key, std::string_view value);
    PropertyGraph build();
};

/** Uniformly random labelled multigraph (self loops allowed, duplicate endpoints allowed) over labels l1..lk. */
PropertyGraph random_graph(std::uint64_t seed, std::size_t vertices, std::size_t edges, std::size_t labels);

/** A graph plus a query built so that seeding prunes most of the closure work. */
struct Instance
{
    std::string name;
    PropertyGraph graph;
    Program program;
};

/** Instances engineered so each optimization layer bites:
 *  - "exterior": O(x,y), T+(y,z) over 10 chains of 100 vertices, 1% of chain vertices reached by O;
 *  - "interior": R+(x,y), S(x,z), T(z,y) where only a few R-chain ends are touched by T;
 *  - "stacked":  R+(x,y), S+(x,y), T+(x,y), a dense R region and sparse S, T. */
Instance selective_instance(const std::string &kind);
const std::vector<std::string> & selective_instance_kinds();

// -- reports ----------------------------------------------------------------------------------------------------

struct BenchRow
{
    std::string query;
    std::string mode; ///< mode name, or "u"/"o" for exhaustive plan classes
    int plan = -1;    ///< root plan index in exhaustive mode
    double cost = 0;
    double t_opt_ms = 0;
    double t_exec_ms = 0;
    std::uint64_t tuples = 0;
    std::size_t results = 0;
    bool timed_out = false;
};

/** Improvement ratios of one query; empty when either side is unavailable. */
struct Ratios
{
    std::optional<double> pc, pt, ac, at;
};

struct BenchReport
{
    std::vector<BenchRow> rows;
    std::map<std::string, Ratios> ratios;

    void write_text(std::ostream &out) const;
    void write_csv(std::ostream &out) const;
};

struct RunResult
{
    EnumerationResult plan;
    Execution execution;
};

/** Enumerates with the mode's rules and executes the best plan. */
RunResult run_query(const Program &prog, const PropertyGraph &g, const Catalog &catalog, const RuleSet &rules,
                    const CostConfig &config = {}, const ExecOptions &opts = {});

/** Executes every unoptimized root plan and every optimized one, then derives the ratios. */
void exhaustive_report(BenchReport &report, const std::string &name, const Program &prog, const PropertyGraph &g,
                       const CostConfig &config, const ExecOptions &opts);

}

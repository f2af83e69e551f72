#pragma once

#include "navq/graph.hpp"
#include "navq/plan.hpp"

#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace navq {

struct CostConfig
{
    double expansion_cap = 16.0;
    double default_selectivity = 0.1;
    double iteration_factor = 4.0;
    std::map<OpKind, double> weights; ///< missing kinds weigh 1

    double weight(OpKind k) const;
    /** @throws Error when a weight is not positive or the cap is below 1 */
    void check() const;
};

/** Distinct-value counts per column; a handful of columns, so a flat vector beats a tree. */
class DistinctCounts
{
    std::vector<std::pair<std::string, double>> cols_;

public:
    DistinctCounts() = default;
    DistinctCounts(std::initializer_list<std::pair<std::string, double>> init);
    double & operator[](const std::string &col);
    std::size_t count(const std::string &col) const;
    double at(const std::string &col) const;
    void clear() { cols_.clear(); }
    auto begin() { return cols_.begin(); }
    auto end() { return cols_.end(); }
    auto begin() const { return cols_.begin(); }
    auto end() const { return cols_.end(); }
};

/** Cardinality estimate of one operator output. */
struct Estimate
{
    double rows = 0;
    DistinctCounts distinct;
    /** Set when the output is exactly the edges of one label: `src`/`dst` name the endpoint columns. */
    std::string label;
    std::string src;
    std::string dst;
    /** Set on a label-selected property scan: the column holding edge ids. */
    std::string edge;

    double distinct_of(const std::string &col) const;
};

class CostModel
{
    const Catalog *catalog_;
    CostConfig config_;

public:
    explicit CostModel(const Catalog &catalog, CostConfig config = {});

    const Catalog & catalog() const { return *catalog_; }
    const CostConfig & config() const { return config_; }

    /** Per-operator estimates; fixpoint buffers carry their estimated total. */
    std::vector<Estimate> estimate_all(const PlanGraph &plan) const;
    double estimate_cardinality(const PlanGraph &plan, int op) const;
    double estimate_cost(const PlanGraph &plan) const;

    /** min(cap, edges / max(1, distinct sources)) for a label; reverse expansion uses distinct targets. */
    double expansion_factor(const std::string &label, bool reverse = false) const;
    /** Estimated size of the closure of a predicate, used to order interior closures. */
    double closure_estimate(const Program &prog, const std::string &pred) const;

private:
    double evaluate(const PlanGraph &plan, std::vector<Estimate> &est, double *cost) const;
};

}

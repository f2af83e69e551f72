#pragma once

#include "navq/query.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace navq {

enum class OpKind { ScanE, ScanP, Join, Project, Rename, Select, Union, BufferWrite, BufferRead, Dedup, Abstraction };

const char * kind_name(OpKind k);

/** Equality between a left and a right input column. */
struct JoinPred
{
    std::string left;
    std::string right;

    bool operator==(const JoinPred &) const = default;
};

/** Equality between a column and a constant. */
struct Filter
{
    std::string var;
    Constant value;
    Domain domain = Domain::Id;

    bool operator==(const Filter &) const = default;
};

enum class BufferRole { Seed, Stack, Fixpoint };

/** A conjunctive query embedded in a plan, with the program its IDB atoms refer to. */
struct Subquery
{
    ConjunctiveQuery cq;
    CanonicalForm canon;
    std::shared_ptr<const Program> program;
};

std::shared_ptr<const Subquery> make_subquery(ConjunctiveQuery cq, std::shared_ptr<const Program> program);

/** One logical operator.  Only the payload fields of its kind are meaningful. */
struct Op
{
    OpKind kind;
    std::vector<int> children;
    std::vector<std::string> schema; ///< output columns

    std::vector<JoinPred> preds;                              ///< Join
    std::vector<std::string> vars;                            ///< Project
    std::vector<std::pair<std::string, std::string>> renames; ///< Rename, from -> to
    std::vector<Filter> filters;                              ///< Select
    int buffer = -1;                                          ///< BufferWrite, BufferRead
    BufferRole role = BufferRole::Seed;                       ///< BufferWrite
    std::shared_ptr<const Subquery> query;                    ///< Abstraction
};

/** A plan: operators addressed by index, a root, and the stack of unresolved abstractions (top at the back).
 *
 * The builder methods compute output schemas and throw SchemaError on inconsistent inputs. */
struct PlanGraph
{
    std::vector<Op> ops;
    int root = -1;
    std::vector<int> abstractions;
    int next_buffer = 0;
    bool optimized = false; ///< derived with at least one seeding-rule application

    const Op & op(int id) const { return ops.at(std::size_t(id)); }

    int scan_e(std::vector<std::string> cols);
    int scan_p(std::vector<std::string> cols);
    int join(int left, int right, std::vector<JoinPred> preds);
    int project(int child, std::vector<std::string> vars);
    int rename(int child, std::vector<std::pair<std::string, std::string>> renames);
    int select(int child, std::vector<Filter> filters);
    int unite(std::vector<int> children);
    int write(int child, int buffer, BufferRole role);
    int read(int buffer, std::vector<std::string> schema);
    int dedup(int child);
    /** Adds an abstraction and pushes it on the abstraction stack. */
    int abstraction(std::shared_ptr<const Subquery> q);
    int new_buffer() { return next_buffer++; }

    /** Project onto `vars` unless the child already has exactly that schema. */
    int project_if_needed(int child, const std::vector<std::string> &vars);

private:
    int add(Op op);
};

/** Every violated structural invariant, empty when the plan is well formed. */
std::vector<std::string> validate(const PlanGraph &plan);

/** Replaces the abstraction `abstraction_id` (top of the stack) by a copy of `replacement`.
 *
 * `rename` maps replacement output columns to the abstraction's variable names.  Operator and buffer ids of the
 * replacement are freshened.
 * @throws SchemaError when the renamed replacement output does not cover the abstraction head */
PlanGraph substitute(const PlanGraph &plan, int abstraction_id, const PlanGraph &replacement,
                     const std::vector<std::pair<std::string, std::string>> &rename = {});

struct FlowGroup
{
    std::vector<int> ops;
    bool fixpoint = false;
};

/** Strongly connected components of the tuple-flow graph, in topological order. */
std::vector<FlowGroup> flow_groups(const PlanGraph &plan);

std::string render_dot(const PlanGraph &plan);

/** One-line-per-operator indented dump. */
std::string render_text(const PlanGraph &plan);

}

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace navq {

using Constant = std::variant<std::int64_t, std::string>;

/** Canonical text of a constant, the form looked up in a graph dictionary. */
std::string constant_text(const Constant &c);

struct Term
{
    bool is_const = false;
    std::string var;
    Constant value;

    static Term variable(std::string name) { return {false, std::move(name), {}}; }
    static Term constant(Constant c) { return {true, {}, std::move(c)}; }

    bool operator==(const Term &) const = default;
};

/** A body or head literal.  Filters `v = c` use the predicate name "=" with terms (v, c). */
struct Atom
{
    std::string predicate;
    std::vector<Term> terms;
    bool closure = false;

    bool is_filter() const { return predicate == "="; }
    bool is_edb() const { return predicate == "E" || predicate == "P"; }
    /** Variables in term order, without repetition. */
    std::vector<std::string> vars() const;

    bool operator==(const Atom &) const = default;
};

struct Rule
{
    Atom head;
    std::vector<Atom> body;
};

/** A conjunctive query: distinct head variables plus a body that may contain filters. */
struct ConjunctiveQuery
{
    std::vector<std::string> head;
    std::vector<Atom> body;

    std::vector<std::string> body_vars() const;
};

/** Which value space a column ranges over: vertex/edge ids or dictionary references. */
enum class Domain { Id, Dict };

class Program
{
public:
    std::map<std::string, std::vector<Rule>> rules;
    std::string answer;

    bool defines(const std::string &pred) const { return rules.count(pred) != 0; }
    const std::vector<Rule> & rules_for(const std::string &pred) const;
    std::size_t arity(const std::string &pred) const;

    /** Value space of column `pos` of predicate `pred`. */
    Domain column_domain(const std::string &pred, std::size_t pos) const;

    /** The query the enumerator starts from: the answer rule's body when it has a single rule, otherwise a single
     * atom over the answer predicate. */
    ConjunctiveQuery answer_query() const;
};

/** Parses and validates a program.
 * @throws ParseError on syntax errors, QueryError on semantic ones */
Program parse_program(std::string_view text);
Program parse_program_file(const std::string &path);

/** A predicate defined by exactly one rule of the form `L(s, t) :- E(s, e, t), P(e, "label", c)`. */
struct LabelShape
{
    std::string label;
    bool reversed = false; ///< head lists (t, s)
};

std::optional<LabelShape> label_shape(const Program &prog, const std::string &pred);

/** Value space a variable ranges over within a query. */
Domain var_domain(const Program &prog, const ConjunctiveQuery &q, const std::string &var);

/** Undirected join graph over the non-filter atoms of a body. */
struct JoinGraph
{
    struct Edge
    {
        std::size_t a;
        std::size_t b;
        std::vector<std::string> shared;
    };

    std::vector<std::size_t> nodes; ///< body indices
    std::vector<std::uint64_t> adj; ///< adjacency bitmask over positions in `nodes`
    std::vector<Edge> edges;        ///< a < b, positions in `nodes`

    std::size_t size() const { return nodes.size(); }
    bool connected(std::uint64_t subset) const;
    bool connected() const { return connected(size() >= 64 ? ~0ULL : (1ULL << size()) - 1); }
};

JoinGraph join_graph(const ConjunctiveQuery &q);

struct ClosurePartition
{
    std::vector<std::size_t> N; ///< body indices of non-recursive atoms
    std::vector<std::size_t> I; ///< interior closures
    std::vector<std::size_t> X; ///< exterior closures
};

/** @throws QueryError when the join graph is disconnected or a closure shares neither endpoint */
ClosurePartition classify_closures(const ConjunctiveQuery &q);

struct CanonicalForm
{
    std::string key;
    /** Body variables in canonical order; position i of two equivalent queries correspond. */
    std::vector<std::string> order;
};

/** Key identical for queries equal up to variable renaming and body reordering. */
CanonicalForm canonical_signature(const ConjunctiveQuery &q);

std::string to_string(const Term &t);
std::string to_string(const Atom &a);
std::string to_string(const ConjunctiveQuery &q, std::string_view name = "Q");

}

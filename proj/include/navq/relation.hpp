#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace navq {

/** A single attribute value: vertex id, edge id or dictionary reference. */
using Value = std::uint64_t;
using Tuple = std::vector<Value>;

struct TupleHash
{
    std::size_t operator()(const Tuple &t) const noexcept;
};

/** A set of tuples over named columns.
 *
 * Tuples are kept sorted and duplicate-free at all times, so two relations over the same schema compare equal iff
 * they hold the same set. */
class Relation
{
    std::vector<std::string> schema_;
    std::vector<Tuple> tuples_;

public:
    Relation() = default;
    explicit Relation(std::vector<std::string> schema) : schema_(std::move(schema)) { }
    Relation(std::vector<std::string> schema, std::vector<Tuple> tuples);

    const std::vector<std::string> & schema() const { return schema_; }
    std::size_t arity() const { return schema_.size(); }
    std::size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }
    const std::vector<Tuple> & tuples() const { return tuples_; }
    auto begin() const { return tuples_.begin(); }
    auto end() const { return tuples_.end(); }

    std::optional<std::size_t> index_of(const std::string &var) const;
    bool contains(std::span<const Value> t) const;

    /** Same tuples with the columns permuted into `order`; `order` must be a permutation of the schema. */
    Relation reordered(const std::vector<std::string> &order) const;
    /** Projection onto `vars` (set semantics). */
    Relation project(const std::vector<std::string> &vars) const;

    /** Set union; `other` may list its columns in a different order. */
    Relation unite(const Relation &other) const;
    /** Tuples of `*this` not in `other`. */
    Relation subtract(const Relation &other) const;

    /** Equal as sets, irrespective of column order. */
    bool same_set(const Relation &other) const;
    friend bool operator==(const Relation &a, const Relation &b) { return a.same_set(b); }
};

}

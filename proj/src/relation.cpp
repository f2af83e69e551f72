#include "navq/relation.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <iterator>
#include <unordered_map>

namespace navq {

std::size_t TupleHash::operator()(const Tuple &t) const noexcept
{
    std::size_t h = 0xcbf29ce484222325ULL;
    for (Value v : t) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

namespace {

void normalize(std::vector<Tuple> &tuples)
{
    std::sort(tuples.begin(), tuples.end());
    tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
}

std::vector<std::size_t> positions(const std::vector<std::string> &from, const std::vector<std::string> &to)
{
    std::vector<std::size_t> pos;
    pos.reserve(to.size());
    for (auto &v : to) {
        auto it = std::find(from.begin(), from.end(), v);
        if (it == from.end())
            throw SchemaError("column '" + v + "' not in relation");
        pos.push_back(std::size_t(it - from.begin()));
    }
    return pos;
}

}

Relation::Relation(std::vector<std::string> schema, std::vector<Tuple> tuples)
    : schema_(std::move(schema))
    , tuples_(std::move(tuples))
{
    for (auto &t : tuples_)
        if (t.size() != schema_.size())
            throw SchemaError("tuple arity does not match schema");
    normalize(tuples_);
}

std::optional<std::size_t> Relation::index_of(const std::string &var) const
{
    auto it = std::find(schema_.begin(), schema_.end(), var);
    if (it == schema_.end())
        return std::nullopt;
    return std::size_t(it - schema_.begin());
}

bool Relation::contains(std::span<const Value> t) const
{
    Tuple key(t.begin(), t.end());
    return std::binary_search(tuples_.begin(), tuples_.end(), key);
}

Relation Relation::reordered(const std::vector<std::string> &order) const
{
    if (order == schema_)
        return *this;
    if (order.size() != schema_.size())
        throw SchemaError("reorder requires a permutation of the schema");
    return project(order);
}

Relation Relation::project(const std::vector<std::string> &vars) const
{
    auto pos = positions(schema_, vars);
    std::vector<Tuple> out;
    out.reserve(tuples_.size());
    for (auto &t : tuples_) {
        Tuple p;
        p.reserve(pos.size());
        for (auto i : pos)
            p.push_back(t[i]);
        out.push_back(std::move(p));
    }
    return Relation(vars, std::move(out));
}

Relation Relation::unite(const Relation &other) const
{
    Relation o = other.reordered(schema_);
    std::vector<Tuple> out;
    out.reserve(tuples_.size() + o.tuples_.size());
    std::set_union(tuples_.begin(), tuples_.end(), o.tuples_.begin(), o.tuples_.end(), std::back_inserter(out));
    Relation r(schema_);
    r.tuples_ = std::move(out);
    return r;
}

Relation Relation::subtract(const Relation &other) const
{
    Relation o = other.reordered(schema_);
    std::vector<Tuple> out;
    std::set_difference(tuples_.begin(), tuples_.end(), o.tuples_.begin(), o.tuples_.end(), std::back_inserter(out));
    Relation r(schema_);
    r.tuples_ = std::move(out);
    return r;
}

bool Relation::same_set(const Relation &other) const
{
    if (arity() != other.arity() || size() != other.size())
        return false;
    std::vector<std::string> a = schema_, b = other.schema_;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
        return false;
    return other.reordered(schema_).tuples_ == tuples_;
}

}

#pragma once

#include "navq/relation.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace navq {

enum class Direction { Forward, Reverse };

/** Bidirectional string <-> reference map.  References are dense, starting at 0. */
class Dictionary
{
    std::vector<std::string> strings_;
    std::unordered_map<std::string, Value> refs_;

public:
    Value intern(std::string_view s);
    std::optional<Value> find(std::string_view s) const;
    const std::string & decode(Value ref) const { return strings_.at(ref); }
    std::size_t size() const { return strings_.size(); }
};

/** Canonical text of a property value: integers are normalized to plain decimal, everything else is kept verbatim. */
std::string canonical_value(std::string_view raw);

struct EdgeTriple
{
    Value src;
    Value edge;
    Value dst;

    auto operator<=>(const EdgeTriple &) const = default;
};

struct PropertyTriple
{
    Value obj;
    Value key;   ///< dictionary reference
    Value value; ///< dictionary reference

    auto operator<=>(const PropertyTriple &) const = default;
};

/** Adjacency of all edges carrying one label, compressed by distinct endpoint. */
struct LabelAdjacency
{
    struct Entry
    {
        Value neighbor;
        Value edge;
    };

    /** One compressed sparse row store: `keys[i]` owns `entries[offsets[i] .. offsets[i+1])`. */
    struct Rows
    {
        std::vector<Value> keys;
        std::vector<std::size_t> offsets;
        std::vector<Entry> entries;

        std::span<const Entry> row(Value key) const;
    };

    Rows forward; ///< keyed by source
    Rows reverse; ///< keyed by target
    std::size_t edge_count = 0;
};

/** A property graph G = (E, P): edge triples plus property triples over dictionary-encoded keys and values.
 *
 * Immutable once built.  Vertex ids and edge ids are disjoint. */
class PropertyGraph
{
    std::vector<EdgeTriple> edges_;        ///< sorted by edge id
    std::vector<PropertyTriple> props_;    ///< sorted
    Dictionary dict_;
    std::vector<Value> vertices_;          ///< sorted
    std::unordered_map<Value, std::string> names_;
    std::map<Value, LabelAdjacency> by_label_;

public:
    PropertyGraph() = default;

    /** Validates and indexes raw triples.  Property objects that are neither edge ids nor edge endpoints become
     * isolated vertices.
     * @throws IntegrityError on duplicate edge ids or vertex/edge id collisions */
    static PropertyGraph build(std::vector<EdgeTriple> edges, std::vector<PropertyTriple> props, Dictionary dict,
                               std::unordered_map<Value, std::string> names = {});

    const std::vector<EdgeTriple> & edges() const { return edges_; }
    const std::vector<PropertyTriple> & props() const { return props_; }
    const Dictionary & dict() const { return dict_; }
    const std::vector<Value> & vertices() const { return vertices_; }

    bool is_vertex(Value id) const;
    bool is_edge(Value id) const;

    /** Labels present on at least one edge, as dictionary references, ascending. */
    std::vector<Value> labels() const;
    const LabelAdjacency * adjacency(std::string_view label) const;

    /** External name of a vertex (RDF ingestion), or its decimal id. */
    std::string display(Value id) const;
    const std::unordered_map<Value, std::string> & names() const { return names_; }
};

PropertyGraph load_graph(std::istream &edges, std::istream &props);
/** @throws Error naming the path when a file cannot be opened */
PropertyGraph load_graph_files(const std::string &edges_path, const std::string &props_path);

struct RdfTriple
{
    std::string subject;
    std::string predicate;
    std::string object;
};

std::vector<RdfTriple> parse_rdf(std::istream &in);
PropertyGraph ingest_rdf(std::span<const RdfTriple> triples);

/** Writes the edge and property files `load_graph` reads back. */
void write_graph(const PropertyGraph &g, std::ostream &edges, std::ostream &props);

struct LabelStats
{
    std::size_t edges = 0;
    std::size_t distinct_sources = 0;
    std::size_t distinct_targets = 0;
    std::size_t distinct_pairs = 0;
};

/** Exact statistics over a graph, consumed by the cost model. */
struct Catalog
{
    std::size_t total_edges = 0;
    std::size_t vertex_count = 0;
    std::size_t total_props = 0;
    std::size_t distinct_keys = 0;
    std::size_t distinct_values = 0;
    std::map<std::string, LabelStats, std::less<>> labels;
    std::map<std::string, std::size_t, std::less<>> key_counts;

    const LabelStats * label(std::string_view l) const;
};

Catalog build_catalog(const PropertyGraph &g);

/** All (s, t) connected by an edge labelled `label`; `Reverse` yields (t, s).  Columns are named "src", "dst". */
Relation scan_label(const PropertyGraph &g, std::string_view label, Direction dir = Direction::Forward);

}

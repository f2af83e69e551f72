#include "navq/graph.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace navq {

Value Dictionary::intern(std::string_view s)
{
    auto it = refs_.find(std::string(s));
    if (it != refs_.end())
        return it->second;
    Value ref = strings_.size();
    strings_.emplace_back(s);
    refs_.emplace(strings_.back(), ref);
    return ref;
}

std::optional<Value> Dictionary::find(std::string_view s) const
{
    auto it = refs_.find(std::string(s));
    if (it == refs_.end())
        return std::nullopt;
    return it->second;
}

std::string canonical_value(std::string_view raw)
{
    long long v = 0;
    auto first = raw.data(), last = raw.data() + raw.size();
    if (!raw.empty() && raw.front() == '+')
        ++first;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && p == last && first != last)
        return std::to_string(v);
    return std::string(raw);
}

std::span<const LabelAdjacency::Entry> LabelAdjacency::Rows::row(Value key) const
{
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key)
        return {};
    auto i = std::size_t(it - keys.begin());
    return std::span<const Entry>(entries.data() + offsets[i], offsets[i + 1] - offsets[i]);
}

namespace {

LabelAdjacency::Rows make_rows(std::vector<std::pair<Value, LabelAdjacency::Entry>> pairs)
{
    std::sort(pairs.begin(), pairs.end(), [](auto &a, auto &b) {
        return std::tie(a.first, a.second.neighbor, a.second.edge) < std::tie(b.first, b.second.neighbor, b.second.edge);
    });
    LabelAdjacency::Rows rows;
    for (auto &[key, entry] : pairs) {
        if (rows.keys.empty() || rows.keys.back() != key) {
            rows.keys.push_back(key);
            rows.offsets.push_back(rows.entries.size());
        }
        rows.entries.push_back(entry);
    }
    rows.offsets.push_back(rows.entries.size());
    return rows;
}

}

PropertyGraph PropertyGraph::build(std::vector<EdgeTriple> edges, std::vector<PropertyTriple> props, Dictionary dict,
                                   std::unordered_map<Value, std::string> names)
{
    PropertyGraph g;
    std::sort(edges.begin(), edges.end(), [](auto &a, auto &b) { return a.edge < b.edge; });
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (edges[i].edge == edges[i - 1].edge)
            throw IntegrityError("duplicate edge id " + std::to_string(edges[i].edge));

    std::vector<Value> vertices;
    vertices.reserve(edges.size() * 2);
    for (auto &e : edges) {
        vertices.push_back(e.src);
        vertices.push_back(e.dst);
    }
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());

    auto is_edge = [&](Value id) {
        auto it = std::lower_bound(edges.begin(), edges.end(), id, [](auto &e, Value v) { return e.edge < v; });
        return it != edges.end() && it->edge == id;
    };
    for (Value v : vertices)
        if (is_edge(v))
            throw IntegrityError("id " + std::to_string(v) + " used both as vertex and as edge");

    std::sort(props.begin(), props.end());
    props.erase(std::unique(props.begin(), props.end()), props.end());
    for (auto &p : props)
        if (!is_edge(p.obj))
            vertices.push_back(p.obj);
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());

    g.edges_ = std::move(edges);
    g.props_ = std::move(props);
    g.dict_ = std::move(dict);
    g.vertices_ = std::move(vertices);
    g.names_ = std::move(names);

    if (auto label_key = g.dict_.find("label")) {
        std::map<Value, std::vector<std::pair<Value, LabelAdjacency::Entry>>> fwd, rev;
        for (auto &p : g.props_) {
            if (p.key != *label_key)
                continue;
            auto it = std::lower_bound(g.edges_.begin(), g.edges_.end(), p.obj,
                                       [](auto &e, Value v) { return e.edge < v; });
            if (it == g.edges_.end() || it->edge != p.obj)
                continue;
            fwd[p.value].push_back({it->src, {it->dst, it->edge}});
            rev[p.value].push_back({it->dst, {it->src, it->edge}});
        }
        for (auto &[label, pairs] : fwd) {
            LabelAdjacency adj;
            adj.edge_count = pairs.size();
            adj.forward = make_rows(std::move(pairs));
            adj.reverse = make_rows(std::move(rev[label]));
            g.by_label_.emplace(label, std::move(adj));
        }
    }
    return g;
}

bool PropertyGraph::is_vertex(Value id) const
{
    return std::binary_search(vertices_.begin(), vertices_.end(), id);
}

bool PropertyGraph::is_edge(Value id) const
{
    auto it = std::lower_bound(edges_.begin(), edges_.end(), id, [](auto &e, Value v) { return e.edge < v; });
    return it != edges_.end() && it->edge == id;
}

std::vector<Value> PropertyGraph::labels() const
{
    std::vector<Value> out;
    for (auto &[l, _] : by_label_)
        out.push_back(l);
    return out;
}

const LabelAdjacency * PropertyGraph::adjacency(std::string_view label) const
{
    auto ref = dict_.find(label);
    if (!ref)
        return nullptr;
    auto it = by_label_.find(*ref);
    return it == by_label_.end() ? nullptr : &it->second;
}

std::string PropertyGraph::display(Value id) const
{
    auto it = names_.find(id);
    return it == names_.end() ? std::to_string(id) : it->second;
}

namespace {

/** Splits a TAB-separated line; returns false for blank and comment lines. */
bool split_line(const std::string &line, std::vector<std::string> &fields)
{
    fields.clear();
    std::string_view s = line;
    if (!s.empty() && s.back() == '\r')
        s.remove_suffix(1);
    if (s.empty() || s.front() == '#')
        return false;
    std::size_t start = 0;
    for (;;) {
        auto tab = s.find('\t', start);
        fields.emplace_back(s.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos)
            break;
        start = tab + 1;
    }
    return true;
}

Value parse_id(const std::string &field, std::size_t line)
{
    Value v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size() || field.empty())
        throw ParseError("expected a non-negative integer id, got '" + field + "'", line);
    return v;
}

}

PropertyGraph load_graph(std::istream &edges_in, std::istream &props_in)
{
    std::vector<EdgeTriple> edges;
    std::vector<PropertyTriple> props;
    Dictionary dict;
    std::vector<std::string> f;
    std::string line;

    std::size_t lineno = 0;
    while (std::getline(edges_in, line)) {
        ++lineno;
        if (!split_line(line, f))
            continue;
        if (f.size() != 3)
            throw ParseError("edge line needs 3 TAB-separated fields", lineno);
        edges.push_back({parse_id(f[0], lineno), parse_id(f[1], lineno), parse_id(f[2], lineno)});
    }

    lineno = 0;
    while (std::getline(props_in, line)) {
        ++lineno;
        if (!split_line(line, f))
            continue;
        if (f.size() != 3)
            throw ParseError("property line needs 3 TAB-separated fields", lineno);
        Value obj = parse_id(f[0], lineno);
        props.push_back({obj, dict.intern(f[1]), dict.intern(canonical_value(f[2]))});
    }
    return PropertyGraph::build(std::move(edges), std::move(props), std::move(dict));
}

PropertyGraph load_graph_files(const std::string &edges_path, const std::string &props_path)
{
    std::ifstream e(edges_path);
    if (!e)
        throw Error("cannot open edge file '" + edges_path + "'");
    std::ifstream p;
    std::istringstream empty;
    if (!props_path.empty()) {
        p.open(props_path);
        if (!p)
            throw Error("cannot open property file '" + props_path + "'");
    }
    try {
        return props_path.empty() ? load_graph(e, empty) : load_graph(e, p);
    } catch (const ParseError &err) {
        throw Error(std::string(err.what()) + " in input graph files '" + edges_path + "', '" + props_path + "'");
    }
}

std::vector<RdfTriple> parse_rdf(std::istream &in)
{
    std::vector<RdfTriple> out;
    std::vector<std::string> f;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!split_line(line, f))
            continue;
        if (f.size() != 3)
            throw ParseError("RDF line needs 3 TAB-separated fields", lineno);
        out.push_back({f[0], f[1], f[2]});
    }
    return out;
}

PropertyGraph ingest_rdf(std::span<const RdfTriple> triples)
{
    // The triple set is a set: repeated triples map to one edge.
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    std::vector<const RdfTriple *> unique;
    for (auto &t : triples)
        if (seen.emplace(t.subject, t.predicate, t.object).second)
            unique.push_back(&t);

    std::unordered_map<std::string, Value> node_ids;
    std::unordered_map<Value, std::string> names;
    auto node = [&](const std::string &s) {
        auto [it, inserted] = node_ids.emplace(s, node_ids.size());
        if (inserted)
            names.emplace(it->second, s);
        return it->second;
    };
    for (auto *t : unique) {
        node(t->subject);
        node(t->object);
    }

    Dictionary dict;
    Value label = dict.intern("label");
    std::vector<EdgeTriple> edges;
    std::vector<PropertyTriple> props;
    Value next_edge = node_ids.size();
    for (auto *t : unique) {
        Value e = next_edge++;
        edges.push_back({node_ids.at(t->subject), e, node_ids.at(t->object)});
        props.push_back({e, label, dict.intern(t->predicate)});
    }
    return PropertyGraph::build(std::move(edges), std::move(props), std::move(dict), std::move(names));
}

void write_graph(const PropertyGraph &g, std::ostream &edges, std::ostream &props)
{
    for (auto &e : g.edges())
        edges << e.src << '\t' << e.edge << '\t' << e.dst << '\n';
    for (auto &p : g.props())
        props << p.obj << '\t' << g.dict().decode(p.key) << '\t' << g.dict().decode(p.value) << '\n';
}

const LabelStats * Catalog::label(std::string_view l) const
{
    auto it = labels.find(l);
    return it == labels.end() ? nullptr : &it->second;
}

Catalog build_catalog(const PropertyGraph &g)
{
    Catalog c;
    c.total_edges = g.edges().size();
    c.vertex_count = g.vertices().size();
    c.total_props = g.props().size();

    std::set<Value> keys, values;
    for (auto &p : g.props()) {
        keys.insert(p.key);
        values.insert(p.value);
        ++c.key_counts[g.dict().decode(p.key)];
    }
    c.distinct_keys = keys.size();
    c.distinct_values = values.size();

    for (Value l : g.labels()) {
        auto &name = g.dict().decode(l);
        auto *adj = g.adjacency(name);
        LabelStats s;
        s.edges = adj->edge_count;
        s.distinct_sources = adj->forward.keys.size();
        s.distinct_targets = adj->reverse.keys.size();
        for (std::size_t i = 0; i + 1 < adj->forward.offsets.size(); ++i) {
            std::set<Value> targets;
            for (auto j = adj->forward.offsets[i]; j < adj->forward.offsets[i + 1]; ++j)
                targets.insert(adj->forward.entries[j].neighbor);
            s.distinct_pairs += targets.size();
        }
        c.labels.emplace(name, s);
    }
    return c;
}

Relation scan_label(const PropertyGraph &g, std::string_view label, Direction dir)
{
    std::vector<Tuple> out;
    if (auto *adj = g.adjacency(label)) {
        auto &rows = dir == Direction::Forward ? adj->forward : adj->reverse;
        for (std::size_t i = 0; i < rows.keys.size(); ++i)
            for (auto j = rows.offsets[i]; j < rows.offsets[i + 1]; ++j)
                out.push_back({rows.keys[i], rows.entries[j].neighbor});
    }
    return Relation({"src", "dst"}, std::move(out));
}

}

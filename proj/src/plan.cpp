#include "navq/plan.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace navq {

const char * kind_name(OpKind k)
{
    switch (k) {
    case OpKind::ScanE: return "ScanE";
    case OpKind::ScanP: return "ScanP";
    case OpKind::Join: return "Join";
    case OpKind::Project: return "Project";
    case OpKind::Rename: return "Rename";
    case OpKind::Select: return "Select";
    case OpKind::Union: return "Union";
    case OpKind::BufferWrite: return "BufferWrite";
    case OpKind::BufferRead: return "BufferRead";
    case OpKind::Dedup: return "Dedup";
    case OpKind::Abstraction: return "Abstraction";
    }
    return "?";
}

std::shared_ptr<const Subquery> make_subquery(ConjunctiveQuery cq, std::shared_ptr<const Program> program)
{
    auto q = std::make_shared<Subquery>();
    q->canon = canonical_signature(cq);
    q->cq = std::move(cq);
    q->program = std::move(program);
    return q;
}

namespace {

bool has(const std::vector<std::string> &cols, const std::string &c)
{
    return std::find(cols.begin(), cols.end(), c) != cols.end();
}

bool same_columns(std::vector<std::string> a, std::vector<std::string> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

}

int PlanGraph::add(Op op)
{
    ops.push_back(std::move(op));
    return int(ops.size()) - 1;
}

int PlanGraph::scan_e(std::vector<std::string> cols)
{
    if (cols.size() != 3)
        throw SchemaError("ScanE needs 3 columns");
    return add(Op{OpKind::ScanE, {}, std::move(cols)});
}

int PlanGraph::scan_p(std::vector<std::string> cols)
{
    if (cols.size() != 3)
        throw SchemaError("ScanP needs 3 columns");
    return add(Op{OpKind::ScanP, {}, std::move(cols)});
}

int PlanGraph::join(int left, int right, std::vector<JoinPred> preds)
{
    auto &l = op(left).schema;
    auto &r = op(right).schema;
    std::vector<std::string> schema = l;
    for (auto &p : preds)
        if (!has(l, p.left) || !has(r, p.right))
            throw SchemaError("join predicate " + p.left + "=" + p.right + " refers to a missing column");
    for (auto &c : r) {
        if (!has(l, c)) {
            schema.push_back(c);
            continue;
        }
        bool matched = std::any_of(preds.begin(), preds.end(), [&](auto &p) { return p.left == c && p.right == c; });
        if (!matched)
            throw SchemaError("join inputs share column '" + c + "' without an equality on it");
    }
    Op o{OpKind::Join, {left, right}, std::move(schema)};
    o.preds = std::move(preds);
    return add(std::move(o));
}

int PlanGraph::project(int child, std::vector<std::string> vars)
{
    for (auto &v : vars)
        if (!has(op(child).schema, v))
            throw SchemaError("projection onto missing column '" + v + "'");
    Op o{OpKind::Project, {child}, vars};
    o.vars = std::move(vars);
    return add(std::move(o));
}

int PlanGraph::project_if_needed(int child, const std::vector<std::string> &vars)
{
    return op(child).schema == vars ? child : project(child, vars);
}

int PlanGraph::rename(int child, std::vector<std::pair<std::string, std::string>> renames)
{
    // All renames apply simultaneously, so swaps are expressible.
    const auto &in = op(child).schema;
    auto schema = in;
    for (auto &[from, to] : renames) {
        auto it = std::find(in.begin(), in.end(), from);
        if (it == in.end())
            throw SchemaError("rename of missing column '" + from + "'");
        schema[std::size_t(it - in.begin())] = to;
    }
    if (std::set<std::string>(schema.begin(), schema.end()).size() != schema.size())
        throw SchemaError("rename produces duplicate columns");
    Op o{OpKind::Rename, {child}, std::move(schema)};
    o.renames = std::move(renames);
    return add(std::move(o));
}

int PlanGraph::select(int child, std::vector<Filter> filters)
{
    for (auto &f : filters)
        if (!has(op(child).schema, f.var))
            throw SchemaError("filter on missing column '" + f.var + "'");
    Op o{OpKind::Select, {child}, op(child).schema};
    o.filters = std::move(filters);
    return add(std::move(o));
}

int PlanGraph::unite(std::vector<int> children)
{
    if (children.empty())
        throw SchemaError("union without inputs");
    for (int c : children)
        if (!same_columns(op(c).schema, op(children.front()).schema))
            throw SchemaError("union inputs have different columns");
    auto schema = op(children.front()).schema;
    return add(Op{OpKind::Union, std::move(children), std::move(schema)});
}

int PlanGraph::write(int child, int buffer, BufferRole role)
{
    Op o{OpKind::BufferWrite, {child}, op(child).schema};
    o.buffer = buffer;
    o.role = role;
    return add(std::move(o));
}

int PlanGraph::read(int buffer, std::vector<std::string> schema)
{
    Op o{OpKind::BufferRead, {}, std::move(schema)};
    o.buffer = buffer;
    return add(std::move(o));
}

int PlanGraph::dedup(int child)
{
    return add(Op{OpKind::Dedup, {child}, op(child).schema});
}

int PlanGraph::abstraction(std::shared_ptr<const Subquery> q)
{
    Op o{OpKind::Abstraction, {}, q->cq.head};
    o.query = std::move(q);
    int id = add(std::move(o));
    abstractions.push_back(id);
    return id;
}

// ---------------------------------------------------------------------------------------------------------------

namespace {

std::size_t expected_children(OpKind k)
{
    switch (k) {
    case OpKind::ScanE:
    case OpKind::ScanP:
    case OpKind::BufferRead:
    case OpKind::Abstraction:
        return 0;
    case OpKind::Join:
        return 2;
    default:
        return 1;
    }
}

/** True when the graph given by adjacency lists has a directed cycle. */
bool cyclic(const std::vector<std::vector<int>> &adj)
{
    std::vector<int> state(adj.size(), 0);
    std::function<bool(int)> dfs = [&](int u) {
        state[std::size_t(u)] = 1;
        for (int v : adj[std::size_t(u)]) {
            if (state[std::size_t(v)] == 1)
                return true;
            if (state[std::size_t(v)] == 0 && dfs(v))
                return true;
        }
        state[std::size_t(u)] = 2;
        return false;
    };
    for (std::size_t u = 0; u < adj.size(); ++u)
        if (state[u] == 0 && dfs(int(u)))
            return true;
    return false;
}

/** Tuple-flow edges: child -> parent and BufferWrite -> BufferRead. */
std::vector<std::vector<int>> flow_edges(const PlanGraph &plan)
{
    std::vector<std::vector<int>> adj(plan.ops.size());
    std::map<int, std::vector<int>> readers;
    for (std::size_t i = 0; i < plan.ops.size(); ++i)
        if (plan.ops[i].kind == OpKind::BufferRead)
            readers[plan.ops[i].buffer].push_back(int(i));
    for (std::size_t i = 0; i < plan.ops.size(); ++i) {
        auto &o = plan.ops[i];
        for (int c : o.children)
            adj[std::size_t(c)].push_back(int(i));
        if (o.kind == OpKind::BufferWrite)
            for (int r : readers[o.buffer])
                adj[i].push_back(r);
    }
    return adj;
}

}

std::vector<std::string> validate(const PlanGraph &plan)
{
    std::vector<std::string> v;
    const int n = int(plan.ops.size());
    if (plan.root < 0 || plan.root >= n) {
        v.push_back("root is not an operator");
        return v;
    }
    bool ids_ok = true;
    std::map<int, std::vector<int>> writers, readers;
    for (int i = 0; i < n; ++i) {
        auto &o = plan.ops[std::size_t(i)];
        std::string self = std::string(kind_name(o.kind)) + " #" + std::to_string(i);
        for (int c : o.children)
            if (c < 0 || c >= n) {
                v.push_back(self + " has an out-of-range child");
                ids_ok = false;
            }
        std::size_t want = expected_children(o.kind);
        if (o.kind == OpKind::Union ? o.children.empty() : o.children.size() != want)
            v.push_back(self + " has " + std::to_string(o.children.size()) + " children");
        if (o.kind == OpKind::Join && o.preds.empty())
            v.push_back(self + " carries no join predicate");
        if (o.kind == OpKind::Select && o.filters.empty())
            v.push_back(self + " carries no filter");
        if (o.kind == OpKind::Abstraction && !o.query)
            v.push_back(self + " carries no query");
        if (o.kind == OpKind::BufferWrite)
            writers[o.buffer].push_back(i);
        if (o.kind == OpKind::BufferRead)
            readers[o.buffer].push_back(i);
    }
    if (!ids_ok)
        return v;

    for (auto &[b, ws] : writers) {
        if (ws.size() != 1)
            v.push_back("buffer " + std::to_string(b) + " has " + std::to_string(ws.size()) + " writers");
        if (!readers.count(b))
            v.push_back("buffer " + std::to_string(b) + " is never read");
    }
    for (auto &[b, rs] : readers) {
        if (!writers.count(b)) {
            v.push_back("buffer " + std::to_string(b) + " is read but never written");
            continue;
        }
        for (int r : rs)
            if (!same_columns(plan.ops[std::size_t(r)].schema, plan.ops[std::size_t(writers[b].front())].schema))
                v.push_back("BufferRead #" + std::to_string(r) + " schema differs from its writer");
    }

    std::vector<std::vector<int>> down(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        down[std::size_t(i)] = plan.ops[std::size_t(i)].children;
    if (cyclic(down))
        v.push_back("operator dependencies form a cycle");

    auto flow = flow_edges(plan);
    for (int i = 0; i < n; ++i)
        if (plan.ops[std::size_t(i)].kind == OpKind::Dedup)
            flow[std::size_t(i)].clear();
    if (cyclic(flow))
        v.push_back("a cyclic tuple flow avoids every Dedup");

    std::vector<bool> seen(std::size_t(n), false);
    std::vector<int> todo{plan.root};
    seen[std::size_t(plan.root)] = true;
    while (!todo.empty()) {
        int u = todo.back();
        todo.pop_back();
        auto &o = plan.ops[std::size_t(u)];
        std::vector<int> next = o.children;
        if (o.kind == OpKind::BufferRead && writers.count(o.buffer))
            next.insert(next.end(), writers[o.buffer].begin(), writers[o.buffer].end());
        for (int c : next)
            if (!seen[std::size_t(c)]) {
                seen[std::size_t(c)] = true;
                todo.push_back(c);
            }
    }
    for (int i = 0; i < n; ++i)
        if (!seen[std::size_t(i)])
            v.push_back(std::string(kind_name(plan.ops[std::size_t(i)].kind)) + " #" + std::to_string(i) +
                        " is unreachable from the root");

    std::set<int> stacked(plan.abstractions.begin(), plan.abstractions.end());
    if (stacked.size() != plan.abstractions.size())
        v.push_back("abstraction stack lists an operator twice");
    for (int a : plan.abstractions)
        if (a < 0 || a >= n || plan.ops[std::size_t(a)].kind != OpKind::Abstraction)
            v.push_back("abstraction stack refers to a non-abstraction");
    for (int i = 0; i < n; ++i)
        if (plan.ops[std::size_t(i)].kind == OpKind::Abstraction && !stacked.count(i))
            v.push_back("Abstraction #" + std::to_string(i) + " is missing from the abstraction stack");
    return v;
}

// ---------------------------------------------------------------------------------------------------------------

PlanGraph substitute(const PlanGraph &plan, int abstraction_id, const PlanGraph &replacement,
                     const std::vector<std::pair<std::string, std::string>> &rename)
{
    if (plan.abstractions.empty() || plan.abstractions.back() != abstraction_id)
        throw Error("substitute: operator " + std::to_string(abstraction_id) + " is not the top abstraction");
    if (!replacement.abstractions.empty())
        throw Error("substitute: replacement still contains abstractions");
    auto &abs = plan.op(abstraction_id);
    auto &head = abs.schema;

    std::vector<std::pair<std::string, std::string>> effective;
    const auto &inner = replacement.op(replacement.root).schema;
    auto out = inner;
    for (auto &[from, to] : rename) {
        auto it = std::find(inner.begin(), inner.end(), from);
        if (from == to || it == inner.end())
            continue;
        out[std::size_t(it - inner.begin())] = to;
        effective.emplace_back(from, to);
    }
    for (auto &h : head)
        if (!has(out, h))
            throw SchemaError("replacement output lacks column '" + h + "' of " +
                              to_string(abs.query->cq));
    bool wrapped = !effective.empty() || out != head;

    PlanGraph r = plan;
    r.abstractions.pop_back();
    r.optimized = plan.optimized || replacement.optimized;
    const int base = int(r.ops.size());
    const int buffers = r.next_buffer;
    r.next_buffer += replacement.next_buffer;
    const int root = replacement.root;
    auto map_id = [&](int j) {
        if (wrapped)
            return base + j;
        if (j == root)
            return abstraction_id;
        return base + (j < root ? j : j - 1);
    };

    for (int j = 0; j < int(replacement.ops.size()); ++j) {
        Op o = replacement.ops[std::size_t(j)];
        for (int &c : o.children)
            c = map_id(c);
        if (o.buffer >= 0)
            o.buffer += buffers;
        if (!wrapped && j == root)
            r.ops[std::size_t(abstraction_id)] = std::move(o);
        else
            r.ops.push_back(std::move(o));
    }
    if (wrapped) {
        int cur = base + root;
        if (!effective.empty())
            cur = r.rename(cur, effective);
        if (r.op(cur).schema != head)
            cur = r.project(cur, head);
        // Move the outermost wrapper into the abstraction's slot.
        Op outer = r.ops[std::size_t(cur)];
        r.ops.pop_back();
        r.ops[std::size_t(abstraction_id)] = std::move(outer);
    }
    return r;
}

// ---------------------------------------------------------------------------------------------------------------

std::vector<FlowGroup> flow_groups(const PlanGraph &plan)
{
    auto adj = flow_edges(plan);
    const std::size_t n = adj.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    std::vector<FlowGroup> groups;
    int counter = 0;

    std::function<void(int)> strong = [&](int u) {
        index[std::size_t(u)] = low[std::size_t(u)] = counter++;
        stack.push_back(u);
        on_stack[std::size_t(u)] = true;
        for (int w : adj[std::size_t(u)]) {
            if (index[std::size_t(w)] < 0) {
                strong(w);
                low[std::size_t(u)] = std::min(low[std::size_t(u)], low[std::size_t(w)]);
            } else if (on_stack[std::size_t(w)]) {
                low[std::size_t(u)] = std::min(low[std::size_t(u)], index[std::size_t(w)]);
            }
        }
        if (low[std::size_t(u)] == index[std::size_t(u)]) {
            FlowGroup g;
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[std::size_t(w)] = false;
                g.ops.push_back(w);
            } while (w != u);
            std::sort(g.ops.begin(), g.ops.end());
            g.fixpoint = g.ops.size() > 1;
            groups.push_back(std::move(g));
        }
    };
    for (std::size_t u = 0; u < n; ++u)
        if (index[u] < 0)
            strong(int(u));
    // Tarjan emits a component only after everything downstream of it.
    std::reverse(groups.begin(), groups.end());
    return groups;
}

// ---------------------------------------------------------------------------------------------------------------

namespace {

std::string describe(const Op &o)
{
    std::string s = kind_name(o.kind);
    auto list = [](const std::vector<std::string> &xs) {
        std::string t;
        for (std::size_t i = 0; i < xs.size(); ++i)
            t += (i ? "," : "") + xs[i];
        return t;
    };
    switch (o.kind) {
    case OpKind::ScanE:
    case OpKind::ScanP:
        s += "(" + list(o.schema) + ")";
        break;
    case OpKind::Join: {
        s += " ";
        for (std::size_t i = 0; i < o.preds.size(); ++i)
            s += (i ? "," : "") + o.preds[i].left + "=" + o.preds[i].right;
        break;
    }
    case OpKind::Project:
        s += " [" + list(o.vars) + "]";
        break;
    case OpKind::Rename:
        s += " ";
        for (std::size_t i = 0; i < o.renames.size(); ++i)
            s += (i ? "," : "") + o.renames[i].first + "->" + o.renames[i].second;
        break;
    case OpKind::Select:
        s += " ";
        for (std::size_t i = 0; i < o.filters.size(); ++i)
            s += (i ? "," : "") + o.filters[i].var + "=" + to_string(Term::constant(o.filters[i].value));
        break;
    case OpKind::BufferWrite:
        s += " b" + std::to_string(o.buffer);
        s += o.role == BufferRole::Fixpoint ? " fixpoint" : o.role == BufferRole::Stack ? " stack" : " seed";
        break;
    case OpKind::BufferRead:
        s += " b" + std::to_string(o.buffer);
        break;
    case OpKind::Abstraction:
        s += " " + to_string(o.query->cq);
        break;
    default:
        break;
    }
    return s;
}

std::string escape(const std::string &s)
{
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out;
}

}

std::string render_dot(const PlanGraph &plan)
{
    std::ostringstream out;
    out << "digraph plan {\n";
    out << "  node [shape=box, fontname=\"monospace\"];\n";
    auto groups = flow_groups(plan);
    std::set<int> clustered;
    int k = 0;
    for (auto &g : groups) {
        if (!g.fixpoint)
            continue;
        out << "  subgraph cluster_fixpoint_" << k << " {\n";
        out << "    label=\"fixpoint " << k << "\";\n";
        for (int id : g.ops) {
            out << "    n" << id << ";\n";
            clustered.insert(id);
        }
        out << "  }\n";
        ++k;
    }
    for (std::size_t i = 0; i < plan.ops.size(); ++i) {
        out << "  n" << i << " [label=\"" << escape(describe(plan.ops[i])) << "\"";
        if (int(i) == plan.root)
            out << ", peripheries=2";
        out << "];\n";
    }
    for (std::size_t i = 0; i < plan.ops.size(); ++i)
        for (int c : plan.ops[i].children)
            out << "  n" << i << " -> n" << c << ";\n";
    for (std::size_t i = 0; i < plan.ops.size(); ++i) {
        if (plan.ops[i].kind != OpKind::BufferRead)
            continue;
        for (std::size_t j = 0; j < plan.ops.size(); ++j)
            if (plan.ops[j].kind == OpKind::BufferWrite && plan.ops[j].buffer == plan.ops[i].buffer)
                out << "  n" << i << " -> n" << j << " [style=dashed];\n";
    }
    out << "}\n";
    return out.str();
}

std::string render_text(const PlanGraph &plan)
{
    std::ostringstream out;
    std::set<int> printed;
    std::function<void(int, int)> walk = [&](int id, int depth) {
        out << std::string(std::size_t(depth) * 2, ' ') << "#" << id << " " << describe(plan.op(id));
        if (!printed.insert(id).second) {
            out << " (shared)\n";
            return;
        }
        out << "\n";
        for (int c : plan.op(id).children)
            walk(c, depth + 1);
    };
    walk(plan.root, 0);
    for (std::size_t i = 0; i < plan.ops.size(); ++i)
        if (plan.ops[i].kind == OpKind::BufferWrite && !printed.count(int(i)))
            walk(int(i), 0);
    return out.str();
}

}

#include "navq/cost.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace navq {

double CostConfig::weight(OpKind k) const
{
    auto it = weights.find(k);
    return it == weights.end() ? 1.0 : it->second;
}

void CostConfig::check() const
{
    for (auto &[k, w] : weights)
        if (!(w > 0))
            throw Error(std::string("cost weight for ") + kind_name(k) + " must be positive");
    if (!(expansion_cap >= 1))
        throw Error("expansion cap must be at least 1");
    if (!(default_selectivity > 0 && default_selectivity <= 1))
        throw Error("default selectivity must lie in (0, 1]");
}

DistinctCounts::DistinctCounts(std::initializer_list<std::pair<std::string, double>> init)
{
    for (auto &[col, d] : init)
        (*this)[col] = d;
}

double & DistinctCounts::operator[](const std::string &col)
{
    for (auto &[c, d] : cols_)
        if (c == col)
            return d;
    return cols_.emplace_back(col, 0.0).second;
}

std::size_t DistinctCounts::count(const std::string &col) const
{
    for (auto &[c, _] : cols_)
        if (c == col)
            return 1;
    return 0;
}

double DistinctCounts::at(const std::string &col) const
{
    for (auto &[c, d] : cols_)
        if (c == col)
            return d;
    throw std::out_of_range("no distinct count for column '" + col + "'");
}

double Estimate::distinct_of(const std::string &col) const
{
    for (auto &[c, d] : distinct)
        if (c == col)
            return d;
    return 0.0;
}

CostModel::CostModel(const Catalog &catalog, CostConfig config)
    : catalog_(&catalog)
    , config_(std::move(config))
{
    config_.check();
}

double CostModel::expansion_factor(const std::string &label, bool reverse) const
{
    auto *ls = catalog_->label(label);
    if (!ls)
        return 0.0;
    double d = double(reverse ? ls->distinct_targets : ls->distinct_sources);
    return std::min(config_.expansion_cap, double(ls->edges) / std::max(1.0, d));
}

double CostModel::closure_estimate(const Program &prog, const std::string &pred) const
{
    if (auto shape = label_shape(prog, pred)) {
        auto *ls = catalog_->label(shape->label);
        double edges = ls ? double(ls->edges) : 0.0;
        return edges * std::max(1.0, expansion_factor(shape->label, shape->reversed));
    }
    return double(catalog_->total_edges) * config_.expansion_cap;
}

namespace {

void cap_distinct(Estimate &e)
{
    for (auto &[_, d] : e.distinct)
        d = std::min(d, e.rows);
}

}

double CostModel::evaluate(const PlanGraph &plan, std::vector<Estimate> &est, double *cost) const
{
    const auto &cat = *catalog_;
    const double sel = config_.default_selectivity;
    std::map<int, int> writer;
    for (std::size_t i = 0; i < plan.ops.size(); ++i)
        if (plan.ops[i].kind == OpKind::BufferWrite)
            writer[plan.ops[i].buffer] = int(i);

    auto input_rows = [&](int id) {
        double s = 0;
        for (int c : plan.op(id).children)
            s += est[std::size_t(c)].rows;
        return s;
    };

    auto estimate_op = [&](int id) {
        const Op &o = plan.op(id);
        Estimate e;
        switch (o.kind) {
        case OpKind::ScanE: {
            double n = double(cat.total_edges);
            double v = std::min(n, double(cat.vertex_count));
            e.rows = n;
            e.distinct = {{o.schema[0], v}, {o.schema[1], n}, {o.schema[2], v}};
            break;
        }
        case OpKind::ScanP: {
            double n = double(cat.total_props);
            e.rows = n;
            e.distinct = {{o.schema[0], std::min(n, double(cat.vertex_count + cat.total_edges))},
                          {o.schema[1], double(cat.distinct_keys)},
                          {o.schema[2], double(cat.distinct_values)}};
            cap_distinct(e);
            break;
        }
        case OpKind::Select: {
            const Op &child = plan.op(o.children[0]);
            const Estimate &c = est[std::size_t(o.children[0])];
            e = c;
            const Filter *key = nullptr, *val = nullptr;
            if (child.kind == OpKind::ScanP)
                for (auto &f : o.filters) {
                    if (f.var == child.schema[1])
                        key = &f;
                    if (f.var == child.schema[2])
                        val = &f;
                }
            if (key) {
                auto k = constant_text(key->value);
                if (val && k == "label") {
                    auto *ls = cat.label(constant_text(val->value));
                    e.rows = ls ? double(ls->edges) : 0.0;
                    e.label = constant_text(val->value);
                    e.edge = child.schema[0];
                    e.distinct[child.schema[0]] = e.rows;
                } else {
                    auto it = cat.key_counts.find(k);
                    e.rows = it == cat.key_counts.end() ? 0.0 : double(it->second);
                    if (val)
                        e.rows /= std::max(1.0, double(cat.distinct_values));
                }
                e.distinct[child.schema[1]] = 1;
                if (val)
                    e.distinct[child.schema[2]] = 1;
                for (auto &f : o.filters)
                    if (&f != key && &f != val) {
                        double d = c.distinct_of(f.var);
                        e.rows *= d > 0 ? 1.0 / d : sel;
                    }
            } else {
                for (auto &f : o.filters) {
                    double d = c.distinct_of(f.var);
                    e.rows *= d > 0 ? 1.0 / std::max(1.0, d) : sel;
                    e.distinct[f.var] = 1;
                }
                e.label.clear();
                e.edge.clear();
            }
            cap_distinct(e);
            break;
        }
        case OpKind::Join: {
            int li = o.children[0], ri = o.children[1];
            const Estimate &l = est[std::size_t(li)], &r = est[std::size_t(ri)];
            // A label-selected property scan joined with the edge scan on the edge id: exact label statistics.
            auto label_join = [&](int scan, const Estimate &tag, bool scan_left) {
                const Op &s = plan.op(scan);
                if (s.kind != OpKind::ScanE || tag.edge.empty())
                    return false;
                for (auto &p : o.preds) {
                    auto &sc = scan_left ? p.left : p.right;
                    auto &tc = scan_left ? p.right : p.left;
                    if (sc == s.schema[1] && tc == tag.edge)
                        return true;
                }
                return false;
            };
            bool left_scan = label_join(li, r, true);
            bool right_scan = !left_scan && label_join(ri, l, false);
            if (left_scan || right_scan) {
                const Estimate &tag = left_scan ? r : l;
                const Op &s = plan.op(left_scan ? li : ri);
                e.rows = tag.rows;
                e.distinct = tag.distinct;
                std::string label = tag.label;
                e.label = label;
                e.src = s.schema[0];
                e.dst = s.schema[2];
                auto *ls = label.empty() ? nullptr : cat.label(label);
                e.distinct[s.schema[0]] = ls ? double(ls->distinct_sources) : tag.rows;
                e.distinct[s.schema[1]] = tag.rows;
                e.distinct[s.schema[2]] = ls ? double(ls->distinct_targets) : tag.rows;
                for (auto &col : o.schema)
                    if (!e.distinct.count(col))
                        e.distinct[col] = tag.rows;
                cap_distinct(e);
                break;
            }
            e.rows = l.rows * r.rows;
            for (auto &p : o.preds) {
                double d = std::max(l.distinct_of(p.left), r.distinct_of(p.right));
                e.rows *= d > 0 ? 1.0 / d : sel;
            }
            for (auto &[col, d] : l.distinct)
                e.distinct[col] = d;
            for (auto &[col, d] : r.distinct)
                if (!e.distinct.count(col))
                    e.distinct[col] = d;
            for (auto &p : o.preds) {
                double dl = l.distinct_of(p.left), dr = r.distinct_of(p.right);
                double d = dl > 0 && dr > 0 ? std::min(dl, dr) : std::max(dl, dr);
                e.distinct[p.left] = d;
                e.distinct[p.right] = d;
            }
            cap_distinct(e);
            break;
        }
        case OpKind::Project: {
            const Estimate &c = est[std::size_t(o.children[0])];
            e.rows = c.rows;
            for (auto &v : o.vars)
                if (c.distinct.count(v))
                    e.distinct[v] = c.distinct.at(v);
            auto keep = [&](const std::string &col) {
                return std::find(o.vars.begin(), o.vars.end(), col) != o.vars.end();
            };
            if (!c.label.empty() && (c.edge.empty() ? keep(c.src) && keep(c.dst) : keep(c.edge))) {
                e.label = c.label;
                e.src = c.src;
                e.dst = c.dst;
                e.edge = c.edge;
            }
            break;
        }
        case OpKind::Rename: {
            const Estimate &c = est[std::size_t(o.children[0])];
            e = c;
            e.distinct.clear();
            auto map = [&](const std::string &col) {
                for (auto &[from, to] : o.renames)
                    if (from == col)
                        return to;
                return col;
            };
            for (auto &[col, d] : c.distinct)
                e.distinct[map(col)] = d;
            if (!e.src.empty())
                e.src = map(c.src);
            if (!e.dst.empty())
                e.dst = map(c.dst);
            if (!e.edge.empty())
                e.edge = map(c.edge);
            break;
        }
        case OpKind::Union: {
            for (int c : o.children) {
                const Estimate &ce = est[std::size_t(c)];
                e.rows += ce.rows;
                for (auto &[col, d] : ce.distinct)
                    e.distinct[col] += d;
            }
            cap_distinct(e);
            break;
        }
        case OpKind::Dedup:
        case OpKind::BufferWrite:
            e = est[std::size_t(o.children[0])];
            break;
        case OpKind::BufferRead: {
            auto it = writer.find(o.buffer);
            if (it != writer.end())
                e = est[std::size_t(it->second)];
            break;
        }
        case OpKind::Abstraction:
            e.rows = 1;
            break;
        }
        return e;
    };

    auto op_cost = [&](int id) { return config_.weight(plan.op(id).kind) * (input_rows(id) + est[std::size_t(id)].rows); };

    double total = 0;
    for (auto &g : flow_groups(plan)) {
        if (!g.fixpoint) {
            est[std::size_t(g.ops[0])] = estimate_op(g.ops[0]);
            total += op_cost(g.ops[0]);
            continue;
        }
        std::set<int> in(g.ops.begin(), g.ops.end());
        // Children-first order within the group; reads of in-group buffers have no children, which cuts the cycle.
        std::vector<int> order;
        std::set<int> done;
        std::function<void(int)> visit = [&](int u) {
            if (!done.insert(u).second)
                return;
            for (int c : plan.op(u).children)
                if (in.count(c))
                    visit(c);
            order.push_back(u);
        };
        for (int u : g.ops)
            visit(u);

        std::vector<int> loop_reads, writers;
        for (int u : g.ops) {
            auto &o = plan.op(u);
            if (o.kind == OpKind::BufferRead && writer.count(o.buffer) && in.count(writer.at(o.buffer)))
                loop_reads.push_back(u);
            if (o.kind == OpKind::BufferWrite)
                writers.push_back(u);
        }
        auto pass = [&] {
            for (int u : order)
                if (std::find(loop_reads.begin(), loop_reads.end(), u) == loop_reads.end())
                    est[std::size_t(u)] = estimate_op(u);
        };

        for (int r : loop_reads)
            est[std::size_t(r)] = Estimate{};
        pass();
        std::map<int, Estimate> seed;
        for (int w : writers)
            seed[w] = est[std::size_t(w)];

        double ef = 0;
        bool found = false;
        for (int u : g.ops) {
            auto &o = plan.op(u);
            if (o.kind != OpKind::Join)
                continue;
            bool lin = in.count(o.children[0]) != 0, rin = in.count(o.children[1]) != 0;
            if (lin == rin)
                continue;
            const Estimate &ext = est[std::size_t(lin ? o.children[1] : o.children[0])];
            for (auto &p : o.preds) {
                auto &col = lin ? p.right : p.left;
                double f;
                if (!ext.label.empty() && (col == ext.src || col == ext.dst))
                    f = expansion_factor(ext.label, col == ext.dst);
                else {
                    double d = ext.distinct_of(col);
                    f = ext.rows / std::max(1.0, d > 0 ? d : ext.rows * config_.default_selectivity);
                }
                ef = std::max(ef, f);
                found = true;
            }
        }
        double factor = found ? std::clamp(ef, 1.0, config_.expansion_cap) : 1.0;
        double iterations = std::clamp(config_.iteration_factor * factor, 1.0, config_.expansion_cap);

        for (int r : loop_reads) {
            Estimate e = seed[writer.at(plan.op(r).buffer)];
            e.rows = e.rows * factor / iterations;
            cap_distinct(e);
            est[std::size_t(r)] = e;
        }
        pass();
        double per_iteration = 0;
        for (int u : g.ops)
            per_iteration += op_cost(u);
        total += per_iteration * iterations;

        for (int w : writers) {
            Estimate e = seed[w];
            e.rows *= factor;
            for (auto &[_, d] : e.distinct)
                d *= factor;
            e.label.clear();
            e.edge.clear();
            cap_distinct(e);
            est[std::size_t(w)] = e;
        }
    }
    if (cost)
        *cost = total;
    return total;
}

std::vector<Estimate> CostModel::estimate_all(const PlanGraph &plan) const
{
    std::vector<Estimate> est(plan.ops.size());
    evaluate(plan, est, nullptr);
    return est;
}

double CostModel::estimate_cardinality(const PlanGraph &plan, int op) const
{
    return estimate_all(plan).at(std::size_t(op)).rows;
}

double CostModel::estimate_cost(const PlanGraph &plan) const
{
    std::vector<Estimate> est(plan.ops.size());
    return evaluate(plan, est, nullptr);
}

}

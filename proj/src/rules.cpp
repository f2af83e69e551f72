#include "navq/rules.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <functional>

namespace navq {

std::string fresh_var(const ConjunctiveQuery &q, std::string_view prefix, const std::set<std::string> &taken)
{
    auto used = q.body_vars();
    used.insert(used.end(), q.head.begin(), q.head.end());
    for (std::size_t k = 0;; ++k) {
        std::string v = std::string(prefix) + std::to_string(k);
        if (!taken.count(v) && std::find(used.begin(), used.end(), v) == used.end())
            return v;
    }
}

namespace {

std::vector<std::size_t> non_filter(const ConjunctiveQuery &q)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < q.body.size(); ++i)
        if (!q.body[i].is_filter())
            out.push_back(i);
    return out;
}

bool contains(const std::vector<std::string> &xs, const std::string &x)
{
    return std::find(xs.begin(), xs.end(), x) != xs.end();
}

Filter to_filter(const Program &prog, const ConjunctiveQuery &q, const Atom &f)
{
    return Filter{f.terms[0].var, f.terms[1].value, var_domain(prog, q, f.terms[0].var)};
}

std::vector<Filter> filters_of(const Program &prog, const ConjunctiveQuery &q, const std::vector<Atom> &atoms)
{
    std::vector<Filter> out;
    for (auto &a : atoms)
        if (a.is_filter())
            out.push_back(to_filter(prog, q, a));
    return out;
}

Atom binary(const std::string &pred, const std::string &a, const std::string &b)
{
    return Atom{pred, {Term::variable(a), Term::variable(b)}, false};
}

std::shared_ptr<const Subquery> sub(const Subquery &parent, ConjunctiveQuery cq)
{
    return make_subquery(std::move(cq), parent.program);
}

/** The base relation of a closure as a query over the given column names. */
std::shared_ptr<const Subquery> base_query(const Subquery &parent, const std::string &pred, const std::string &a,
                                           const std::string &b)
{
    return sub(parent, ConjunctiveQuery{{a, b}, {binary(pred, a, b)}});
}

/** Vars of `atoms` (non-filter ones) in first-appearance order. */
std::vector<std::string> vars_of(const std::vector<Atom> &atoms)
{
    std::vector<std::string> out;
    for (auto &a : atoms)
        if (!a.is_filter())
            for (auto &v : a.vars())
                if (!contains(out, v))
                    out.push_back(v);
    return out;
}

}

// ---------------------------------------------------------------------------------------------------------------
// Join rule

std::vector<CcpPair> ccp_pairs(const JoinGraph &jg)
{
    const std::size_t n = jg.size();
    std::vector<CcpPair> out;
    if (n < 2 || !jg.connected())
        return out;
    const std::uint64_t all = n >= 64 ? ~0ULL : (1ULL << n) - 1;

    auto neighbours = [&](std::uint64_t s) {
        std::uint64_t nb = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (s >> i & 1)
                nb |= jg.adj[i];
        return nb & ~s;
    };
    // Grows connected sets from node 0; each connected set containing node 0 is reached exactly once because a
    // branch forbids the whole neighbourhood it has already offered.
    std::function<void(std::uint64_t, std::uint64_t)> grow = [&](std::uint64_t s, std::uint64_t forbidden) {
        if (s != all && jg.connected(all & ~s))
            out.push_back({s, all & ~s});
        std::uint64_t nb = neighbours(s) & ~forbidden;
        for (std::uint64_t sub = nb; sub; sub = (sub - 1) & nb)
            grow(s | sub, forbidden | nb);
    };
    grow(1, 1);
    std::sort(out.begin(), out.end(), [](auto &a, auto &b) { return a.left < b.left; });
    return out;
}

std::vector<PlanGraph> apply_join_rule(const Subquery &sq)
{
    const auto &q = sq.cq;
    auto jg = join_graph(q);
    std::vector<PlanGraph> plans;
    for (auto &pair : ccp_pairs(jg)) {
        auto side = [&](std::uint64_t mask) {
            std::vector<Atom> atoms;
            for (std::size_t i = 0; i < jg.size(); ++i)
                if (mask >> i & 1)
                    atoms.push_back(q.body[jg.nodes[i]]);
            auto vs = vars_of(atoms);
            for (auto &a : q.body)
                if (a.is_filter() && contains(vs, a.terms[0].var))
                    atoms.push_back(a);
            return atoms;
        };
        auto t = side(pair.left), u = side(pair.right);
        auto tv = vars_of(t), uv = vars_of(u);
        ConjunctiveQuery tq{{}, t}, uq{{}, u};
        std::vector<JoinPred> preds;
        for (auto &v : tv) {
            bool in_u = contains(uv, v);
            if (in_u || contains(q.head, v))
                tq.head.push_back(v);
            if (in_u)
                preds.push_back({v, v});
        }
        for (auto &v : uv)
            if (contains(tv, v) || contains(q.head, v))
                uq.head.push_back(v);

        PlanGraph p;
        int l = p.abstraction(sub(sq, std::move(tq)));
        int r = p.abstraction(sub(sq, std::move(uq)));
        int j = p.join(l, r, std::move(preds));
        p.root = p.project_if_needed(j, q.head);
        plans.push_back(std::move(p));
    }
    return plans;
}

// ---------------------------------------------------------------------------------------------------------------
// Leaf and union rules

std::vector<PlanGraph> apply_leaf_rules(const Subquery &sq)
{
    const auto &q = sq.cq;
    auto atoms = non_filter(q);
    if (atoms.size() != 1 || q.body[atoms[0]].closure)
        return {};
    const Atom &a = q.body[atoms[0]];
    const Program &prog = *sq.program;
    auto filters = filters_of(prog, q, q.body);

    if (a.is_edb()) {
        PlanGraph p;
        std::vector<std::string> cols;
        std::vector<Filter> consts;
        std::set<std::string> taken;
        for (std::size_t i = 0; i < a.terms.size(); ++i) {
            auto &t = a.terms[i];
            if (!t.is_const) {
                cols.push_back(t.var);
                continue;
            }
            auto col = fresh_var(q, "$k", taken);
            taken.insert(col);
            cols.push_back(col);
            consts.push_back({col, t.value, prog.column_domain(a.predicate, i)});
        }
        consts.insert(consts.end(), filters.begin(), filters.end());
        int scan = a.predicate == "E" ? p.scan_e(cols) : p.scan_p(cols);
        int root = consts.empty() ? scan : p.select(scan, consts);
        p.root = p.project_if_needed(root, q.head);
        return {std::move(p)};
    }

    if (auto shape = label_shape(prog, a.predicate)) {
        PlanGraph p;
        auto &src = a.terms[shape->reversed ? 1 : 0].var;
        auto &dst = a.terms[shape->reversed ? 0 : 1].var;
        std::set<std::string> taken;
        auto e = fresh_var(q, "$e", taken);
        taken.insert(e);
        auto k = fresh_var(q, "$k", taken);
        taken.insert(k);
        auto v = fresh_var(q, "$v", taken);
        int edges = p.scan_e({src, e, dst});
        int props = p.scan_p({e, k, v});
        int labelled = p.select(props, {{k, std::string("label"), Domain::Dict}, {v, shape->label, Domain::Dict}});
        int root = p.join(edges, labelled, {{e, e}});
        if (!filters.empty())
            root = p.select(root, filters);
        p.root = p.project(root, q.head);
        return {std::move(p)};
    }

    // Inline each defining rule with the atom's variables substituted for the rule head.
    auto &rules = prog.rules_for(a.predicate);
    std::vector<std::shared_ptr<const Subquery>> branches;
    for (auto &r : rules) {
        std::map<std::string, std::string> rename;
        for (std::size_t i = 0; i < r.head.terms.size(); ++i)
            rename[r.head.terms[i].var] = a.terms[i].var;
        std::set<std::string> taken;
        ConjunctiveQuery inl{q.head, {}};
        for (auto &b : r.body) {
            Atom c = b;
            for (auto &t : c.terms) {
                if (t.is_const)
                    continue;
                auto it = rename.find(t.var);
                if (it == rename.end()) {
                    auto f = fresh_var(q, "$i", taken);
                    taken.insert(f);
                    it = rename.emplace(t.var, f).first;
                }
                t.var = it->second;
            }
            inl.body.push_back(std::move(c));
        }
        for (auto &f : q.body)
            if (f.is_filter())
                inl.body.push_back(f);
        branches.push_back(sub(sq, std::move(inl)));
    }
    PlanGraph p;
    std::vector<int> ids;
    for (auto &b : branches)
        ids.push_back(p.abstraction(b));
    p.root = ids.size() == 1 ? ids[0] : p.unite(ids);
    return {std::move(p)};
}

// ---------------------------------------------------------------------------------------------------------------
// Unseeded closure rule

std::optional<PlanGraph> apply_closure_rule(const Subquery &sq)
{
    const auto &q = sq.cq;
    auto atoms = non_filter(q);
    if (atoms.size() != 1 || !q.body[atoms[0]].closure)
        return std::nullopt;
    const Atom &c = q.body[atoms[0]];
    const auto &a = c.terms[0].var;
    const auto &b = c.terms[1].var;
    auto m = fresh_var(q, "$m");

    PlanGraph p;
    int buf = p.new_buffer();
    int base = p.abstraction(base_query(sq, c.predicate, a, b));
    int rd = p.read(buf, {a, b});
    int rn = p.rename(rd, {{b, m}});
    int step = p.abstraction(base_query(sq, c.predicate, m, b));
    int j = p.join(rn, step, {{m, m}});
    int pj = p.project(j, {a, b});
    int d = p.dedup(p.unite({base, pj}));
    p.write(d, buf, BufferRole::Fixpoint);
    int root = p.read(buf, {a, b});
    auto filters = filters_of(*sq.program, q, q.body);
    if (!filters.empty())
        root = p.select(root, filters);
    p.root = p.project_if_needed(root, q.head);
    return p;
}

// ---------------------------------------------------------------------------------------------------------------
// Seeding rule

Direction expansion_direction(const Atom &closure, const std::string &freed)
{
    return closure.terms[1].var == freed ? Direction::Forward : Direction::Reverse;
}

std::optional<FreedVariable> h1_choose_free_variable(const std::vector<Atom> &body, std::size_t closure,
                                                     const std::string &fresh)
{
    const Atom &c = body.at(closure);
    for (std::size_t side = 0; side < 2; ++side) {
        auto cand = body;
        Atom base = c;
        base.closure = false;
        base.terms[side] = Term::variable(fresh);
        cand[closure] = base;
        if (join_graph(ConjunctiveQuery{{}, cand}).connected())
            return FreedVariable{c.terms[side].var, fresh, base};
    }
    return std::nullopt;
}

std::vector<std::size_t> h2_order_interior(const ConjunctiveQuery &q, const std::vector<std::size_t> &interior,
                                           const Program &prog, const CostModel *cost)
{
    struct Key
    {
        double estimate;
        std::string pred;
        std::size_t index;
    };
    std::vector<Key> keys;
    for (auto i : interior) {
        auto &pred = q.body.at(i).predicate;
        keys.push_back({cost ? cost->closure_estimate(prog, pred) : 0.0, pred, i});
    }
    std::sort(keys.begin(), keys.end(), [](auto &x, auto &y) {
        return std::tie(x.estimate, x.pred, x.index) < std::tie(y.estimate, y.pred, y.index);
    });
    std::vector<std::size_t> out;
    for (auto &k : keys)
        out.push_back(k.index);
    return out;
}

std::optional<SeedingQuery> build_seeding_query(const ConjunctiveQuery &q, const ClosurePartition &part,
                                                const std::vector<std::size_t> &interior_order)
{
    auto work = q.body;
    std::set<std::string> taken;
    std::vector<SeededClosure> interior, exterior;
    auto shared = [&](std::size_t self, const std::string &v) {
        for (std::size_t j = 0; j < q.body.size(); ++j)
            if (j != self && contains(q.body[j].vars(), v))
                return true;
        return false;
    };

    for (auto i : part.X) {
        const Atom &c = q.body[i];
        std::size_t side = shared(i, c.terms[0].var) ? 1 : 0;
        auto f = fresh_var(q, "$s", taken);
        taken.insert(f);
        work[i].closure = false;
        work[i].terms[side] = Term::variable(f);
        auto &freed = c.terms[side].var;
        exterior.push_back({i, freed, f, expansion_direction(c, freed), false});
    }
    for (auto i : interior_order) {
        auto f = fresh_var(q, "$s", taken);
        taken.insert(f);
        auto choice = h1_choose_free_variable(work, i, f);
        if (!choice)
            return std::nullopt;
        work[i] = choice->base;
        interior.push_back({i, choice->freed, f, expansion_direction(q.body[i], choice->freed), true});
    }

    SeedingQuery out;
    std::vector<Atom> body;
    for (auto &a : work)
        if (!a.is_filter())
            body.push_back(a);
    auto vs = vars_of(body);
    for (auto &a : work)
        if (a.is_filter()) {
            if (contains(vs, a.terms[0].var))
                body.push_back(a);
            else
                out.residual_filters.push_back(a);
        }
    out.query.body = std::move(body);
    if (!join_graph(out.query).connected())
        return std::nullopt;

    std::vector<std::string> keep = q.head;
    out.closures = interior;
    out.closures.insert(out.closures.end(), exterior.begin(), exterior.end());
    for (auto &c : out.closures) {
        keep.push_back(q.body[c.atom].terms[0].var);
        keep.push_back(q.body[c.atom].terms[1].var);
        keep.push_back(c.fresh);
    }
    for (auto &v : vs)
        if (contains(keep, v))
            out.query.head.push_back(v);
    return out;
}

std::optional<PlanGraph> apply_seeding_rule(const Subquery &sq, const RuleContext &ctx)
{
    if (!ctx.rules.seed)
        return std::nullopt;
    const auto &q = sq.cq;
    if (std::none_of(q.body.begin(), q.body.end(), [](auto &a) { return a.closure; }))
        return std::nullopt;
    ClosurePartition part;
    try {
        part = classify_closures(q);
    } catch (const QueryError &) {
        return std::nullopt;
    }
    if (!ctx.rules.seed_interior && !part.I.empty())
        return std::nullopt;
    auto order = h2_order_interior(q, part.I, *sq.program, ctx.cost);
    auto seeding = build_seeding_query(q, part, order);
    if (!seeding)
        return std::nullopt;

    PlanGraph p;
    p.optimized = true;
    auto schema = seeding->query.head;
    int qs = p.abstraction(sub(sq, seeding->query));
    int buffer = p.new_buffer();
    p.write(qs, buffer, BufferRole::Seed);
    int chain = p.read(buffer, schema);

    for (std::size_t k = 0; k < seeding->closures.size(); ++k) {
        auto &c = seeding->closures[k];
        const Atom &atom = q.body[c.atom];
        const auto &f = c.fresh;
        const auto &v = c.freed;

        // Seed: the distinct values of the seed column in the current seeding (or stacking) relation.
        int seed = p.dedup(p.project(p.read(buffer, schema), {f}));
        int identity = p.join(seed, p.rename(seed, {{f, v}}), {{f, v}});

        // Fixpoint over (f, v): expand the far end v one base step per iteration.
        auto m = fresh_var(q, "$m", {f});
        int fix = p.new_buffer();
        int rd = p.rename(p.read(fix, {f, v}), {{v, m}});
        auto step_query = c.direction == Direction::Forward ? base_query(sq, atom.predicate, m, v)
                                                            : base_query(sq, atom.predicate, v, m);
        int step = p.abstraction(step_query);
        int grown = p.project(p.join(rd, step, {{m, m}}), {f, v});
        p.write(p.dedup(p.unite({identity, grown})), fix, BufferRole::Fixpoint);
        int closure = p.read(fix, {f, v});

        std::vector<JoinPred> preds{{f, f}};
        if (contains(p.op(chain).schema, v))
            preds.push_back({v, v});
        int joined = p.join(chain, closure, std::move(preds));
        std::vector<std::string> rest;
        for (auto &col : p.op(joined).schema)
            if (col != f)
                rest.push_back(col);
        chain = p.project(joined, rest);

        if (ctx.rules.stacking && k >= 1) {
            buffer = p.new_buffer();
            schema = p.op(chain).schema;
            p.write(chain, buffer, BufferRole::Stack);
            chain = p.read(buffer, schema);
        }
    }
    auto filters = filters_of(*sq.program, q, seeding->residual_filters);
    if (!filters.empty())
        chain = p.select(chain, filters);
    p.root = p.project_if_needed(chain, q.head);
    return p;
}

// ---------------------------------------------------------------------------------------------------------------

std::vector<PlanGraph> apply_rules(const Subquery &q, const RuleContext &ctx, std::map<std::string, std::size_t> *applied)
{
    std::vector<PlanGraph> out;
    auto note = [&](const char *rule, std::size_t n) {
        if (applied && n)
            (*applied)[rule] += n;
    };
    auto atoms = non_filter(q.cq);
    if (atoms.size() == 1 && !q.cq.body[atoms[0]].closure) {
        auto plans = apply_leaf_rules(q);
        const Atom &a = q.cq.body[atoms[0]];
        bool is_union = !a.is_edb() && q.program->rules_for(a.predicate).size() > 1;
        note(is_union ? "union" : "leaf", plans.size());
        for (auto &p : plans)
            out.push_back(std::move(p));
    }
    if (atoms.size() == 1 && q.cq.body[atoms[0]].closure) {
        if (auto p = apply_closure_rule(q)) {
            note("closure", 1);
            out.push_back(std::move(*p));
        }
    }
    if (atoms.size() >= 2 && ctx.rules.join) {
        auto plans = apply_join_rule(q);
        note("join", plans.size());
        for (auto &p : plans)
            out.push_back(std::move(p));
    }
    if (auto p = apply_seeding_rule(q, ctx)) {
        note("seed", 1);
        out.push_back(std::move(*p));
    }
    return out;
}

}

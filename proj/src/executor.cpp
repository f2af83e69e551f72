#include "navq/executor.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace navq {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::size_t> positions(const std::vector<std::string> &from, const std::vector<std::string> &to)
{
    std::vector<std::size_t> pos;
    for (auto &v : to) {
        auto it = std::find(from.begin(), from.end(), v);
        if (it == from.end())
            throw ExecutionError("column '" + v + "' missing from operator input");
        pos.push_back(std::size_t(it - from.begin()));
    }
    return pos;
}

/** A filter resolved against the graph dictionary; `never` when the constant cannot occur. */
struct Resolved
{
    std::size_t column;
    Value value = 0;
    bool never = false;
};

class Evaluator
{
    const PlanGraph &plan_;
    const PropertyGraph &g_;
    std::optional<Clock::time_point> deadline_;
    EvalMetrics &metrics_;

    std::vector<Relation> out_;
    std::map<int, Relation> buffers_;
    std::map<int, std::vector<int>> writers_;

public:
    Evaluator(const PlanGraph &plan, const PropertyGraph &g, const ExecOptions &opts, EvalMetrics &metrics)
        : plan_(plan)
        , g_(g)
        , metrics_(metrics)
        , out_(plan.ops.size())
    {
        if (opts.timeout)
            deadline_ = Clock::now() + *opts.timeout;
        for (std::size_t i = 0; i < plan.ops.size(); ++i)
            if (plan.ops[i].kind == OpKind::BufferWrite)
                writers_[plan.ops[i].buffer].push_back(int(i));
    }

    Relation run()
    {
        auto needed = reachable();
        for (auto &group : flow_groups(plan_)) {
            std::vector<int> ops;
            for (int id : group.ops)
                if (needed[std::size_t(id)])
                    ops.push_back(id);
            if (ops.empty())
                continue;
            if (group.fixpoint)
                fixpoint(ops);
            else
                out_[std::size_t(ops[0])] = acyclic(ops[0]);
        }
        metrics_.op_outputs.clear();
        for (auto &r : out_)
            metrics_.op_outputs.push_back(r.size());
        return out_.at(std::size_t(plan_.root));
    }

private:
    void check_time() const
    {
        if (deadline_ && Clock::now() > *deadline_)
            throw Timeout();
    }

    std::vector<bool> reachable() const
    {
        std::vector<bool> seen(plan_.ops.size(), false);
        std::vector<int> todo{plan_.root};
        while (!todo.empty()) {
            int id = todo.back();
            todo.pop_back();
            if (seen[std::size_t(id)])
                continue;
            seen[std::size_t(id)] = true;
            auto &o = plan_.op(id);
            if (o.kind == OpKind::Abstraction)
                throw ExecutionError("plan still contains an abstraction");
            for (int c : o.children)
                todo.push_back(c);
            if (o.kind == OpKind::BufferRead) {
                auto it = writers_.find(o.buffer);
                if (it == writers_.end())
                    throw ExecutionError("buffer " + std::to_string(o.buffer) + " is read but never written");
                for (int w : it->second)
                    todo.push_back(w);
            }
        }
        return seen;
    }

    // -- set operations -------------------------------------------------------------------------------------------

    Relation scan(const Op &o) const
    {
        std::vector<Tuple> rows;
        if (o.kind == OpKind::ScanE) {
            rows.reserve(g_.edges().size());
            for (auto &e : g_.edges())
                rows.push_back({e.src, e.edge, e.dst});
        } else {
            rows.reserve(g_.props().size());
            for (auto &p : g_.props())
                rows.push_back({p.obj, p.key, p.value});
        }
        return Relation(o.schema, std::move(rows));
    }

    std::vector<Resolved> resolve(const Op &o, const std::vector<std::string> &schema) const
    {
        auto pos = positions(schema, [&] {
            std::vector<std::string> vs;
            for (auto &f : o.filters)
                vs.push_back(f.var);
            return vs;
        }());
        std::vector<Resolved> out;
        for (std::size_t i = 0; i < o.filters.size(); ++i) {
            auto &f = o.filters[i];
            Resolved r{pos[i]};
            if (f.domain == Domain::Dict) {
                auto ref = g_.dict().find(constant_text(f.value));
                r.never = !ref;
                r.value = ref.value_or(0);
            } else if (auto *n = std::get_if<std::int64_t>(&f.value); n && *n >= 0) {
                r.value = Value(*n);
            } else {
                r.never = true;
            }
            out.push_back(r);
        }
        return out;
    }

    Relation select(const Op &o, const Relation &in) const
    {
        auto conds = resolve(o, in.schema());
        std::vector<Tuple> rows;
        if (std::none_of(conds.begin(), conds.end(), [](auto &c) { return c.never; }))
            for (auto &t : in)
                if (std::all_of(conds.begin(), conds.end(), [&](auto &c) { return t[c.column] == c.value; }))
                    rows.push_back(t);
        return Relation(o.schema, std::move(rows));
    }

    Relation rename(const Op &o, const Relation &in) const
    {
        return Relation(o.schema, std::vector<Tuple>(in.begin(), in.end()));
    }

    Relation join(const Op &o, const Relation &l, const Relation &r) const
    {
        std::vector<std::size_t> lk, rk;
        for (auto &p : o.preds) {
            lk.push_back(*l.index_of(p.left));
            rk.push_back(*r.index_of(p.right));
        }
        std::vector<std::size_t> extra;
        for (std::size_t i = l.arity(); i < o.schema.size(); ++i)
            extra.push_back(*r.index_of(o.schema[i]));

        std::unordered_multimap<Tuple, const Tuple *, TupleHash> index;
        index.reserve(r.size());
        Tuple key(rk.size());
        for (auto &t : r) {
            for (std::size_t i = 0; i < rk.size(); ++i)
                key[i] = t[rk[i]];
            index.emplace(key, &t);
        }
        std::vector<Tuple> rows;
        key.resize(lk.size());
        std::size_t probes = 0;
        for (auto &t : l) {
            if (++probes % 4096 == 0)
                check_time();
            for (std::size_t i = 0; i < lk.size(); ++i)
                key[i] = t[lk[i]];
            auto [lo, hi] = index.equal_range(key);
            for (auto it = lo; it != hi; ++it) {
                Tuple row = t;
                for (auto x : extra)
                    row.push_back((*it->second)[x]);
                rows.push_back(std::move(row));
            }
        }
        return Relation(o.schema, std::move(rows));
    }

    Relation unite(const Op &o, const std::vector<const Relation *> &ins) const
    {
        std::vector<Tuple> rows;
        for (auto *in : ins) {
            auto r = in->reordered(o.schema);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        return Relation(o.schema, std::move(rows));
    }

    const Relation & child(const Op &o, std::size_t i) const { return out_[std::size_t(o.children.at(i))]; }

    /** Output of an operator whose inputs are all final. */
    Relation acyclic(int id)
    {
        check_time();
        auto &o = plan_.op(id);
        switch (o.kind) {
        case OpKind::ScanE:
        case OpKind::ScanP: {
            auto r = scan(o);
            metrics_.tuples_processed += r.size();
            return r;
        }
        case OpKind::Join: {
            auto r = join(o, child(o, 0), child(o, 1));
            metrics_.tuples_processed += r.size();
            return r;
        }
        case OpKind::Project:
            return child(o, 0).project(o.vars);
        case OpKind::Rename:
            return rename(o, child(o, 0));
        case OpKind::Select:
            return select(o, child(o, 0));
        case OpKind::Union: {
            std::vector<const Relation *> ins;
            for (std::size_t i = 0; i < o.children.size(); ++i)
                ins.push_back(&child(o, i));
            return unite(o, ins);
        }
        case OpKind::Dedup:
            return child(o, 0);
        case OpKind::BufferWrite: {
            auto &in = child(o, 0);
            auto it = buffers_.find(o.buffer);
            if (it == buffers_.end())
                buffers_.emplace(o.buffer, in);
            else
                it->second = it->second.unite(in);
            return in;
        }
        case OpKind::BufferRead: {
            auto it = buffers_.find(o.buffer);
            if (it == buffers_.end())
                throw ExecutionError("buffer " + std::to_string(o.buffer) + " read before it is written");
            return it->second.reordered(o.schema);
        }
        case OpKind::Abstraction:
            break;
        }
        throw ExecutionError("cannot execute operator kind " + std::string(kind_name(o.kind)));
    }

    /** Semi-naive evaluation of one strongly connected group. */
    void fixpoint(const std::vector<int> &ops)
    {
        std::set<int> members(ops.begin(), ops.end());
        std::set<int> own_buffers;
        for (int id : ops)
            if (plan_.op(id).kind == OpKind::BufferWrite)
                own_buffers.insert(plan_.op(id).buffer);

        // Children-first order inside the group; reads of the group's own buffers have no in-group inputs.
        std::vector<int> order;
        std::set<int> placed;
        std::function<void(int)> place = [&](int id) {
            if (placed.count(id))
                return;
            placed.insert(id);
            for (int c : plan_.op(id).children)
                if (members.count(c))
                    place(c);
            order.push_back(id);
        };
        for (int id : ops)
            place(id);

        // Accumulated outputs are materialized only when a join needs a whole side, and once at the end.
        struct Accum
        {
            Relation total;
            std::vector<Tuple> pending;

            const Relation & get()
            {
                if (!pending.empty()) {
                    total = total.unite(Relation(total.schema(), std::move(pending)));
                    pending.clear();
                }
                return total;
            }
        };
        std::map<int, Accum> full;
        std::map<int, Relation> delta, empty;
        std::map<int, std::unordered_set<Tuple, TupleHash>> seen; // Dedup state
        std::map<int, Relation> written_delta;
        for (int id : ops) {
            auto &o = plan_.op(id);
            full[id].total = Relation(o.schema);
            for (int c : o.children)
                empty.emplace(c, Relation(plan_.op(c).schema));
        }
        for (int b : own_buffers)
            buffers_.erase(b);

        auto delta_of = [&](int c, std::size_t iteration) -> const Relation & {
            if (members.count(c))
                return delta.at(c);
            return iteration == 0 ? out_[std::size_t(c)] : empty.at(c);
        };
        auto full_of = [&](int c) -> const Relation & {
            return members.count(c) ? full.at(c).get() : out_[std::size_t(c)];
        };

        std::size_t iteration = 0;
        for (;; ++iteration) {
            check_time();
            std::map<int, Relation> next_written;
            for (int id : order) {
                auto &o = plan_.op(id);
                Relation d;
                switch (o.kind) {
                case OpKind::Join: {
                    int l = o.children[0], r = o.children[1];
                    const Relation &dl = delta_of(l, iteration), &dr = delta_of(r, iteration);
                    // New left tuples against the whole right side, then the whole left side against new right
                    // tuples; both sides already include this iteration's delta.
                    d = Relation(o.schema);
                    if (!dl.empty())
                        d = join(o, dl, full_of(r));
                    if (!dr.empty())
                        d = d.unite(join(o, full_of(l), dr));
                    metrics_.tuples_processed += d.size();
                    break;
                }
                case OpKind::Project:
                    d = delta_of(o.children[0], iteration).project(o.vars);
                    break;
                case OpKind::Rename:
                    d = rename(o, delta_of(o.children[0], iteration));
                    break;
                case OpKind::Select:
                    d = select(o, delta_of(o.children[0], iteration));
                    break;
                case OpKind::Union: {
                    std::vector<const Relation *> ins;
                    for (int c : o.children)
                        ins.push_back(&delta_of(c, iteration));
                    d = unite(o, ins);
                    break;
                }
                case OpKind::Dedup: {
                    auto &state = seen[id];
                    std::vector<Tuple> fresh;
                    for (auto &t : delta_of(o.children[0], iteration))
                        if (state.insert(t).second)
                            fresh.push_back(t);
                    d = Relation(o.schema, std::move(fresh));
                    break;
                }
                case OpKind::BufferWrite: {
                    d = delta_of(o.children[0], iteration);
                    auto it = next_written.find(o.buffer);
                    if (it == next_written.end())
                        next_written.emplace(o.buffer, d);
                    else
                        it->second = it->second.unite(d);
                    break;
                }
                case OpKind::BufferRead:
                    if (own_buffers.count(o.buffer)) {
                        auto it = written_delta.find(o.buffer);
                        d = it == written_delta.end() ? Relation(o.schema) : it->second.reordered(o.schema);
                    } else {
                        d = iteration == 0 ? buffers_.at(o.buffer).reordered(o.schema) : Relation(o.schema);
                    }
                    break;
                default:
                    throw ExecutionError(std::string("operator kind ") + kind_name(o.kind) + " inside a fixpoint");
                }
                auto &acc = full.at(id);
                acc.pending.insert(acc.pending.end(), d.begin(), d.end());
                delta[id] = std::move(d);
            }
            bool changed = false;
            for (auto &[b, d] : next_written)
                changed = changed || !d.empty();
            written_delta = std::move(next_written);
            if (!changed)
                break;
        }
        for (int id : ops) {
            auto &o = plan_.op(id);
            if (o.kind == OpKind::BufferWrite) {
                auto &total = full.at(id).get();
                auto it = buffers_.find(o.buffer);
                if (it == buffers_.end())
                    buffers_.emplace(o.buffer, total);
                else
                    it->second = it->second.unite(total);
            }
        }
        metrics_.iterations.push_back(iteration + 1);
        for (int id : ops)
            out_[std::size_t(id)] = full.at(id).get();
    }
};

}

Execution execute(const PlanGraph &plan, const PropertyGraph &g, const ExecOptions &opts)
{
    auto problems = validate(plan);
    if (!problems.empty())
        throw ExecutionError("invalid plan: " + problems.front());
    auto start = Clock::now();
    Execution ex;
    Evaluator ev(plan, g, opts, ex.metrics);
    ex.result = ev.run();
    ex.metrics.exec_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return ex;
}

// ---------------------------------------------------------------------------------------------------------------
// Oracles

Relation transitive_closure_oracle(const Relation &base)
{
    if (base.arity() != 2)
        throw SchemaError("transitive closure needs a binary relation");
    std::set<std::pair<Value, Value>> closure;
    for (auto &t : base)
        closure.insert({t[0], t[1]});
    for (bool grew = true; grew;) {
        grew = false;
        auto snapshot = closure;
        for (auto &[a, b] : snapshot)
            for (auto &t : base)
                if (t[0] == b && closure.insert({a, t[1]}).second)
                    grew = true;
    }
    std::vector<Tuple> rows;
    for (auto &[a, b] : closure)
        rows.push_back({a, b});
    return Relation(base.schema(), std::move(rows));
}

Relation seeded_closure_oracle(const Relation &base, const std::set<Value> &seed, Direction dir)
{
    const std::size_t anchor = dir == Direction::Forward ? 0 : 1;
    std::vector<Tuple> rows;
    for (auto &t : transitive_closure_oracle(base))
        if (seed.count(t[anchor]))
            rows.push_back(t);
    for (Value s : seed)
        rows.push_back({s, s});
    return Relation(base.schema(), std::move(rows));
}

namespace {

/** Values carry their domain in the top bit so filters compare against the right value space. */
constexpr Value dict_tag = Value(1) << 63;

class NaiveDatalog
{
    const Program &prog_;
    const PropertyGraph &g_;
    std::map<std::string, std::vector<Tuple>> relations_;
    std::map<std::string, std::vector<Tuple>> closures_;

public:
    NaiveDatalog(const Program &prog, const PropertyGraph &g) : prog_(prog), g_(g) { }

    const std::vector<Tuple> & relation(const std::string &pred)
    {
        if (auto it = relations_.find(pred); it != relations_.end())
            return it->second;
        std::vector<Tuple> rows;
        if (pred == "E") {
            for (auto &e : g_.edges())
                rows.push_back({e.src, e.edge, e.dst});
        } else if (pred == "P") {
            for (auto &p : g_.props())
                rows.push_back({p.obj, p.key | dict_tag, p.value | dict_tag});
        } else {
            for (auto &r : prog_.rules_for(pred)) {
                std::vector<std::string> head;
                for (auto &t : r.head.terms)
                    head.push_back(t.var);
                for (auto &t : evaluate(head, r.body))
                    rows.push_back(t);
            }
            std::sort(rows.begin(), rows.end());
            rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        }
        return relations_[pred] = std::move(rows);
    }

    const std::vector<Tuple> & closure(const std::string &pred)
    {
        if (auto it = closures_.find(pred); it != closures_.end())
            return it->second;
        Relation base({"s", "t"}, relation(pred));
        auto tc = transitive_closure_oracle(base);
        return closures_[pred] = tc.tuples();
    }

    bool matches(Value v, const Constant &c) const
    {
        if (v & dict_tag)
            return g_.dict().decode(v & ~dict_tag) == constant_text(c);
        auto *n = std::get_if<std::int64_t>(&c);
        return n && *n >= 0 && Value(*n) == v;
    }

    /** All bindings of `head` satisfying `body`, by backtracking over hash indexes on the bound positions. */
    std::vector<Tuple> evaluate(const std::vector<std::string> &head, const std::vector<Atom> &body)
    {
        std::vector<const Atom *> pending, atoms, filters;
        for (auto &a : body)
            (a.is_filter() ? filters : pending).push_back(&a);

        // Greedy order: next atom sharing a variable with those already placed.
        std::set<std::string> bound;
        while (!pending.empty()) {
            auto pick = pending.begin();
            for (auto it = pending.begin(); it != pending.end(); ++it) {
                auto vs = (*it)->vars();
                if (std::any_of(vs.begin(), vs.end(), [&](auto &v) { return bound.count(v) != 0; })) {
                    pick = it;
                    break;
                }
            }
            for (auto &v : (*pick)->vars())
                bound.insert(v);
            atoms.push_back(*pick);
            pending.erase(pick);
        }

        struct Access
        {
            std::vector<std::size_t> keys; ///< term positions bound on entry
            std::unordered_multimap<Tuple, const Tuple *, TupleHash> index;
            const std::vector<Tuple> *rows;
        };
        std::vector<Access> access(atoms.size());
        bound.clear();
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const Atom &a = *atoms[i];
            auto &acc = access[i];
            acc.rows = a.closure ? &closure(a.predicate) : &relation(a.predicate);
            for (std::size_t k = 0; k < a.terms.size(); ++k)
                if (!a.terms[k].is_const && bound.count(a.terms[k].var))
                    acc.keys.push_back(k);
            if (!acc.keys.empty())
                for (auto &row : *acc.rows) {
                    Tuple key;
                    for (auto k : acc.keys)
                        key.push_back(row[k]);
                    acc.index.emplace(std::move(key), &row);
                }
            for (auto &v : a.vars())
                bound.insert(v);
        }

        std::map<std::string, Value> binding;
        std::vector<Tuple> out;
        std::function<void(std::size_t)> step = [&](std::size_t i) {
            if (i == atoms.size()) {
                for (auto *f : filters)
                    if (!matches(binding.at(f->terms[0].var), f->terms[1].value))
                        return;
                Tuple t;
                for (auto &h : head)
                    t.push_back(binding.at(h));
                out.push_back(std::move(t));
                return;
            }
            const Atom &a = *atoms[i];
            auto &acc = access[i];
            auto visit = [&](const Tuple &row) {
                std::vector<std::string> bound_here;
                bool ok = true;
                for (std::size_t k = 0; k < a.terms.size() && ok; ++k) {
                    auto &term = a.terms[k];
                    if (term.is_const) {
                        ok = matches(row[k], term.value);
                    } else if (auto it = binding.find(term.var); it != binding.end()) {
                        ok = it->second == row[k];
                    } else {
                        binding[term.var] = row[k];
                        bound_here.push_back(term.var);
                    }
                }
                if (ok)
                    step(i + 1);
                for (auto &v : bound_here)
                    binding.erase(v);
            };
            if (acc.keys.empty()) {
                for (auto &row : *acc.rows)
                    visit(row);
                return;
            }
            Tuple key;
            for (auto k : acc.keys)
                key.push_back(binding.at(a.terms[k].var));
            auto [lo, hi] = acc.index.equal_range(key);
            for (auto it = lo; it != hi; ++it)
                visit(*it->second);
        };
        step(0);
        return out;
    }
};

}

Relation datalog_oracle(const Program &prog, const PropertyGraph &g)
{
    NaiveDatalog eval(prog, g);
    auto q = prog.answer_query();
    std::vector<Tuple> rows;
    for (auto t : eval.evaluate(q.head, q.body)) {
        for (auto &v : t)
            v &= ~dict_tag;
        rows.push_back(std::move(t));
    }
    return Relation(q.head, std::move(rows));
}

void write_tsv(std::ostream &out, const Relation &r, const std::vector<Domain> &domains, const PropertyGraph &g)
{
    std::vector<std::string> lines;
    for (auto &t : r) {
        std::string line;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i)
                line += '\t';
            bool dict = i < domains.size() && domains[i] == Domain::Dict;
            line += dict ? g.dict().decode(t[i]) : g.display(t[i]);
        }
        lines.push_back(std::move(line));
    }
    std::sort(lines.begin(), lines.end());
    for (auto &l : lines)
        out << l << '\n';
}

}

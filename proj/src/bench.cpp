#include "navq/bench.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace navq {

const char * mode_name(Mode m)
{
    switch (m) {
    case Mode::Unopt: return "unopt";
    case Mode::Waveguide: return "waveguide";
    case Mode::Opt: return "opt";
    }
    return "?";
}

Mode parse_mode(std::string_view name)
{
    for (Mode m : {Mode::Unopt, Mode::Waveguide, Mode::Opt})
        if (name == mode_name(m))
            return m;
    throw Error("unknown mode '" + std::string(name) + "' (expected unopt, waveguide or opt)");
}

RuleSet rules_for(Mode m)
{
    RuleSet r;
    switch (m) {
    case Mode::Unopt:
        r.seed = false;
        r.stacking = false;
        break;
    case Mode::Waveguide:
        r.seed_interior = false;
        r.stacking = false;
        break;
    case Mode::Opt:
        break;
    }
    return r;
}

namespace {

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_switch(const std::string &key, const std::string &v)
{
    if (v == "on" || v == "true" || v == "1")
        return true;
    if (v == "off" || v == "false" || v == "0")
        return false;
    throw Error("setting '" + key + "' expects on/off, got '" + v + "'");
}

double parse_real(const std::string &key, const std::string &v)
{
    double d = 0;
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec != std::errc() || end != v.data() + v.size())
        throw Error("setting '" + key + "' expects a number, got '" + v + "'");
    return d;
}

}

void apply_settings(std::string_view settings, RuleSet &rules, CostConfig &cost)
{
    std::stringstream in{std::string(settings)};
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw Error("setting '" + item + "' is not of the form key=value");
        std::string key = trim(item.substr(0, eq)), value = trim(item.substr(eq + 1));
        std::string k = key.rfind("rules.", 0) == 0 ? key.substr(6) : key;
        if (k == "join")
            rules.join = parse_switch(key, value);
        else if (k == "seed")
            rules.seed = parse_switch(key, value);
        else if (k == "seed.interior" || k == "seed_interior" || k == "interior")
            rules.seed_interior = parse_switch(key, value);
        else if (k == "seed.stacking" || k == "stacking")
            rules.stacking = parse_switch(key, value);
        else if (k == "cost.expansion_cap")
            cost.expansion_cap = parse_real(key, value);
        else if (k == "cost.default_selectivity")
            cost.default_selectivity = parse_real(key, value);
        else if (k == "cost.iteration_factor")
            cost.iteration_factor = parse_real(key, value);
        else if (k.rfind("cost.weight.", 0) == 0) {
            auto name = k.substr(12);
            bool found = false;
            for (int i = 0; i <= int(OpKind::Abstraction); ++i)
                if (name == kind_name(OpKind(i))) {
                    cost.weights[OpKind(i)] = parse_real(key, value);
                    found = true;
                }
            if (!found)
                throw Error("unknown operator kind in '" + key + "'");
        } else
            throw Error("unknown setting '" + key + "'");
    }
    cost.check();
}

// ---------------------------------------------------------------------------------------------------------------

const std::vector<std::string> & template_names()
{
    static const std::vector<std::string> names{"CCC1", "CCC2", "CCC3", "CCC4", "PCC2", "PCC3", "RQ"};
    return names;
}

std::string template_text(const std::string &name, const std::map<std::string, std::string> &bindings)
{
    static const std::map<std::string, std::pair<std::vector<std::string>, std::string>> bodies{
        {"CCC1", {{"R", "S", "T"}, "CCC1(x, y, z) :- R+(x, y), S(x, z), T(z, y)."}},
        {"CCC2", {{"R", "S", "T"}, "CCC2(x, y, z) :- R+(x, y), S(x, z), T(y, z)."}},
        {"CCC3", {{"R", "S", "T"}, "CCC3(x, y, z) :- R+(x, y), S(z, x), T(z, y)."}},
        {"CCC4", {{"R", "S", "T"}, "CCC4(x, y, z) :- R+(x, y), S(z, x), T(y, z)."}},
        {"PCC2", {{"R", "S"}, "PCC2(x, y) :- R+(x, y), S+(x, y)."}},
        {"PCC3", {{"R", "S", "T"}, "PCC3(x, y) :- R+(x, y), S+(x, y), T+(x, y)."}},
        {"RQ", {{"R", "S", "T"}, "I(x, y) :- S(x, y), T+(x, z), z = c1.\nRQ(x, y, z) :- R(x, y), I+(y, z)."}},
    };
    auto it = bodies.find(name);
    if (it == bodies.end())
        throw Error("unknown template '" + name + "'");
    auto need = [&](const std::string &var) -> const std::string & {
        auto b = bindings.find(var);
        if (b == bindings.end())
            throw Error("template " + name + " needs a binding for '" + var + "'");
        return b->second;
    };

    std::ostringstream out;
    const std::map<std::string, std::string> label_var{{"R", "l1"}, {"S", "l2"}, {"T", "l3"}};
    for (auto &pred : it->second.first)
        out << pred << "(s, t) :- E(s, e, t), P(e, \"label\", \"" << need(label_var.at(pred)) << "\").\n";
    std::string body = it->second.second;
    if (auto pos = body.find("c1"); pos != std::string::npos) {
        auto &c = need("c1");
        bool numeric = !c.empty() && std::all_of(c.begin(), c.end(), [](char ch) { return std::isdigit((unsigned char)ch); });
        body.replace(pos, 2, numeric ? c : "\"" + c + "\"");
    }
    out << body << "\n";
    return out.str();
}

Program instantiate_template(const std::string &name, const std::map<std::string, std::string> &bindings)
{
    return parse_program(template_text(name, bindings));
}

std::map<std::string, std::string> parse_bindings(std::istream &in)
{
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'name = value'", n);
        out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------------------------

void GraphBuilder::edge(Value src, Value dst, std::string_view label)
{
    Value id = next_edge++;
    edges.push_back({src, id, dst});
    property(id, "label", label);
}

void GraphBuilder::property(Value obj, std::string_view key, std::string_view value)
{
    props.push_back({obj, dict.intern(key), dict.intern(canonical_value(value))});
}

PropertyGraph GraphBuilder::build() { return PropertyGraph::build(edges, props, dict); }

PropertyGraph random_graph(std::uint64_t seed, std::size_t vertices, std::size_t edges, std::size_t labels)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Value> vertex(0, vertices - 1);
    std::uniform_int_distribution<std::size_t> label(1, labels);
    GraphBuilder b(vertices);
    for (std::size_t i = 0; i < edges; ++i) {
        Value s = vertex(rng), t = vertex(rng);
        b.edge(s, t, "l" + std::to_string(label(rng)));
    }
    return b.build();
}

const std::vector<std::string> & selective_instance_kinds()
{
    static const std::vector<std::string> kinds{"exterior", "interior", "stacked"};
    return kinds;
}

Instance selective_instance(const std::string &kind)
{
    constexpr Value chains = 10, length = 100, region = chains * length;
    auto at = [](Value chain, Value pos) { return chain * length + pos; };
    GraphBuilder b(100000);
    auto chain_edges = [&](std::string_view label) {
        for (Value c = 0; c < chains; ++c)
            for (Value p = 0; p + 1 < length; ++p)
                b.edge(at(c, p), at(c, p + 1), label);
    };
    Instance inst;
    inst.name = kind;
    if (kind == "exterior") {
        chain_edges("t");
        for (Value c = 0; c < chains; ++c)
            b.edge(region + c, at(c, 0), "o");
        inst.program = parse_program("O(s, t) :- E(s, e, t), P(e, \"label\", \"o\").\n"
                                     "T(s, t) :- E(s, e, t), P(e, \"label\", \"t\").\n"
                                     "Ans(x, z) :- O(x, y), T+(y, z).\n");
    } else if (kind == "interior") {
        chain_edges("r");
        for (Value c = 0; c < 5; ++c) {
            b.edge(at(c, 0), region + c, "s");
            b.edge(region + c, at(c, 50), "t");
        }
        inst.program = parse_program("R(s, t) :- E(s, e, t), P(e, \"label\", \"r\").\n"
                                     "S(s, t) :- E(s, e, t), P(e, \"label\", \"s\").\n"
                                     "T(s, t) :- E(s, e, t), P(e, \"label\", \"t\").\n"
                                     "Ans(x, y, z) :- R+(x, y), S(x, z), T(z, y).\n");
    } else if (kind == "stacked") {
        chain_edges("r");
        for (Value c = 0; c < 3; ++c) {
            b.edge(at(c, 0), at(c, length - 1), "s");
            b.edge(at(c, 0), at(c, length - 1), "t");
        }
        inst.program = parse_program("R(s, t) :- E(s, e, t), P(e, \"label\", \"r\").\n"
                                     "S(s, t) :- E(s, e, t), P(e, \"label\", \"s\").\n"
                                     "T(s, t) :- E(s, e, t), P(e, \"label\", \"t\").\n"
                                     "Ans(x, y) :- R+(x, y), S+(x, y), T+(x, y).\n");
    } else {
        throw Error("unknown instance kind '" + kind + "'");
    }
    inst.graph = b.build();
    return inst;
}

// ---------------------------------------------------------------------------------------------------------------

RunResult run_query(const Program &prog, const PropertyGraph &g, const Catalog &catalog, const RuleSet &rules,
                    const CostConfig &config, const ExecOptions &opts)
{
    CostModel cost(catalog, config);
    RunResult r{enumerate(prog, rules, cost), {}};
    r.execution = execute(r.plan.best, g, opts);
    r.execution.metrics.opt_ms = r.plan.stats.wall_ms;
    return r;
}

void exhaustive_report(BenchReport &report, const std::string &name, const Program &prog, const PropertyGraph &g,
                       const CostConfig &config, const ExecOptions &opts)
{
    auto catalog = build_catalog(g);
    CostModel cost(catalog, config);

    struct Class
    {
        std::vector<BenchRow> rows;
        const BenchRow *best_c = nullptr;
        const BenchRow *best_t = nullptr;
        const BenchRow *estimated = nullptr;
    };
    auto run_class = [&](Mode mode, bool optimized_only, const char *label) {
        Class cls;
        auto res = enumerate(prog, rules_for(mode), cost, true);
        int index = 0;
        for (auto &p : res.root_plans) {
            if (p.plan.optimized != optimized_only)
                continue;
            BenchRow row{name, label, index++, p.cost, res.stats.wall_ms};
            try {
                auto ex = execute(p.plan, g, opts);
                row.t_exec_ms = ex.metrics.exec_ms;
                row.tuples = ex.metrics.tuples_processed;
                row.results = ex.result.size();
            } catch (const Timeout &) {
                row.timed_out = true;
            }
            cls.rows.push_back(row);
        }
        for (auto &r : cls.rows) {
            if (!cls.estimated || r.cost < cls.estimated->cost)
                cls.estimated = &r;
            if (r.timed_out)
                continue;
            if (!cls.best_c || r.tuples < cls.best_c->tuples)
                cls.best_c = &r;
            if (!cls.best_t || r.t_opt_ms + r.t_exec_ms < cls.best_t->t_opt_ms + cls.best_t->t_exec_ms)
                cls.best_t = &r;
        }
        return cls;
    };
    Class u = run_class(Mode::Unopt, false, "u");
    Class o = run_class(Mode::Opt, true, "o");

    auto ratio = [](double num, double den) -> std::optional<double> {
        if (den <= 0)
            return std::nullopt;
        return num / den;
    };
    auto t = [](const BenchRow *r) { return r->t_opt_ms + r->t_exec_ms; };
    Ratios rs;
    if (u.best_c && o.best_c)
        rs.pc = ratio(double(u.best_c->tuples), double(o.best_c->tuples));
    if (u.best_t && o.best_t)
        rs.pt = ratio(t(u.best_t), t(o.best_t));
    if (u.best_c && o.estimated && !o.estimated->timed_out) {
        rs.ac = ratio(double(u.best_c->tuples), double(o.estimated->tuples));
        rs.at = ratio(t(u.best_t), t(o.estimated));
    }
    report.rows.insert(report.rows.end(), u.rows.begin(), u.rows.end());
    report.rows.insert(report.rows.end(), o.rows.begin(), o.rows.end());
    report.ratios[name] = rs;
}

namespace {

std::string show(const std::optional<double> &v)
{
    if (!v)
        return "n/a";
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << *v;
    return s.str();
}

}

void BenchReport::write_text(std::ostream &out) const
{
    out << std::left << std::setw(10) << "query" << std::setw(10) << "mode" << std::setw(6) << "plan"
        << std::setw(14) << "cost" << std::setw(11) << "t_opt_ms" << std::setw(11) << "t_exec_ms" << std::setw(12)
        << "tuples" << "results\n";
    for (auto &r : rows) {
        std::ostringstream cost, topt, texec;
        cost << std::setprecision(6) << r.cost;
        topt << std::fixed << std::setprecision(2) << r.t_opt_ms;
        texec << std::fixed << std::setprecision(2) << r.t_exec_ms;
        out << std::setw(10) << r.query << std::setw(10) << r.mode << std::setw(6)
            << (r.plan < 0 ? "-" : std::to_string(r.plan)) << std::setw(14) << cost.str() << std::setw(11)
            << topt.str() << std::setw(11) << (r.timed_out ? "timeout" : texec.str()) << std::setw(12)
            << (r.timed_out ? "-" : std::to_string(r.tuples)) << (r.timed_out ? "-" : std::to_string(r.results))
            << "\n";
    }
    for (auto &[q, rs] : ratios)
        out << q << ": PC=" << show(rs.pc) << " PT=" << show(rs.pt) << " AC=" << show(rs.ac) << " AT=" << show(rs.at)
            << "\n";
}

void BenchReport::write_csv(std::ostream &out) const
{
    out << "query,mode,plan,cost,t_opt_ms,t_exec_ms,tuples,results,timed_out\n";
    for (auto &r : rows)
        out << r.query << ',' << r.mode << ',' << r.plan << ',' << r.cost << ',' << r.t_opt_ms << ','
            << r.t_exec_ms << ',' << r.tuples << ',' << r.results << ',' << (r.timed_out ? 1 : 0) << "\n";
    if (ratios.empty())
        return;
    out << "\nquery,PC,PT,AC,AT\n";
    for (auto &[q, rs] : ratios)
        out << q << ',' << show(rs.pc) << ',' << show(rs.pt) << ',' << show(rs.ac) << ',' << show(rs.at) << "\n";
}

}

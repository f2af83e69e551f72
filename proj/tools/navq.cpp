#include "navq/bench.hpp"
#include "navq/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

using namespace navq;

namespace {

struct GraphArgs
{
    std::string edges;
    std::string props;
    std::string instance;
    std::uint64_t seed = 0;
    std::size_t vertices = 0;
    std::size_t random_edges = 200;
    std::size_t labels = 3;

    void add(CLI::App *app)
    {
        app->add_option("--edges", edges, "edge file: src, edge id, dst per TAB-separated line");
        app->add_option("--props", props, "property file: object, key, value per TAB-separated line");
        app->add_option("--instance", instance, "use a constructed instance (exterior, interior, stacked)");
        app->add_option("--seed", seed, "seed of the random graph");
        app->add_option("--random-vertices", vertices, "generate a random graph with this many vertices");
        app->add_option("--random-edges", random_edges, "edges of the random graph")->capture_default_str();
        app->add_option("--random-labels", labels, "labels l1..lk of the random graph")->capture_default_str();
    }

    PropertyGraph load(std::optional<Program> *instance_query = nullptr) const
    {
        if (!instance.empty()) {
            auto inst = selective_instance(instance);
            if (instance_query)
                *instance_query = inst.program;
            return std::move(inst.graph);
        }
        if (vertices > 0)
            return random_graph(seed, vertices, random_edges, labels);
        if (edges.empty())
            throw Error("no graph given: pass --edges (and --props), --instance or --random-vertices");
        return load_graph_files(edges, props);
    }
};

struct PlanArgs
{
    std::string query;
    std::string mode = "opt";
    std::string rules;
    std::string format = "text";
    long timeout_ms = 0;

    void add(CLI::App *app, bool formats = true)
    {
        app->add_option("--query", query, "query program file");
        app->add_option("--mode", mode, "unopt, waveguide or opt")->capture_default_str();
        app->add_option("--rules", rules, "comma-separated key=value overrides, e.g. seed=off,cost.expansion_cap=8");
        app->add_option("--timeout-ms", timeout_ms, "execution time limit per plan (0: none)");
        if (formats)
            app->add_option("--format", format, "text, csv or dot")->capture_default_str();
    }

    Program program(const std::optional<Program> &fallback) const
    {
        if (!query.empty())
            return parse_program_file(query);
        if (fallback)
            return *fallback;
        throw Error("no query given: pass --query");
    }

    void settings(RuleSet &r, CostConfig &c) const
    {
        r = rules_for(parse_mode(mode));
        apply_settings(rules, r, c);
    }

    ExecOptions exec() const
    {
        ExecOptions o;
        if (timeout_ms > 0)
            o.timeout = std::chrono::milliseconds(timeout_ms);
        return o;
    }
};

void print_stats(std::ostream &out, const EnumerationStats &s)
{
    out << "stat.leaves=" << s.leaves << "\n";
    out << "stat.memo_entries=" << s.memo_entries << "\n";
    out << "stat.memo_hits=" << s.memo_hits << "\n";
    out << "stat.peak_depth=" << s.peak_depth << "\n";
    for (auto &[rule, n] : s.rule_applications)
        out << "stat.rule." << rule << "=" << n << "\n";
}

std::vector<Domain> head_domains(const Program &prog)
{
    auto q = prog.answer_query();
    std::vector<Domain> out;
    for (auto &v : q.head)
        out.push_back(var_domain(prog, q, v));
    return out;
}

}

int main(int argc, char **argv)
{
    CLI::App app{"Regular Query optimizer and evaluator over property graphs"};
    app.require_subcommand(1);

    GraphArgs graph;
    PlanArgs plan;

    auto *run = app.add_subcommand("run", "optimize and execute a query");
    graph.add(run);
    plan.add(run);
    bool count_only = false, show_plan = false;
    run->add_flag("--count", count_only, "print only the number of results");
    run->add_flag("--show-plan", show_plan, "print the chosen plan before the results");

    auto *explain = app.add_subcommand("explain", "optimize a query and print the chosen plan");
    graph.add(explain);
    plan.format = "dot";
    plan.add(explain);

    auto *exhaustive = app.add_subcommand("exhaustive", "execute every root plan and report improvement ratios");
    graph.add(exhaustive);
    plan.add(exhaustive);
    long time_limit_ms = 30000;
    std::size_t max_plans = 512;
    exhaustive->add_option("--time-limit-ms", time_limit_ms, "per-plan execution limit")->capture_default_str();
    exhaustive->add_option("--max-plans", max_plans, "refuse queries with more root plans")->capture_default_str();

    auto *count_plans = app.add_subcommand("count-plans", "plan-space size of synthetic query shapes");
    std::string shape = "star", count_rules;
    int n_min = 2, n_max = 6;
    bool recursive = false;
    count_plans->add_option("--shape", shape, "chain, star or ccc")->capture_default_str();
    count_plans->add_option("--min", n_min, "smallest n")->capture_default_str();
    count_plans->add_option("--max", n_max, "largest n")->capture_default_str();
    count_plans->add_flag("--recursive", recursive, "mark every atom as a closure");
    count_plans->add_option("--rules", count_rules, "comma-separated key=value overrides");

    auto *templates = app.add_subcommand("templates", "run the benchmark templates in every mode");
    graph.add(templates);
    std::string bindings_path, template_rules, template_format = "text";
    long template_timeout = 0;
    bool template_exhaustive = false;
    templates->add_option("--bindings", bindings_path, "file binding l1, l2, l3 and c1")->required();
    templates->add_option("--rules", template_rules, "comma-separated key=value cost overrides");
    templates->add_option("--timeout-ms", template_timeout, "execution time limit per plan (0: none)");
    templates->add_option("--format", template_format, "text or csv")->capture_default_str();
    templates->add_flag("--exhaustive", template_exhaustive, "also execute every root plan and report ratios");

    auto *ingest = app.add_subcommand("ingest-rdf", "convert TAB-separated triples into graph files");
    std::string rdf_in, edges_out, props_out;
    ingest->add_option("--input", rdf_in, "subject, predicate, object per line")->required();
    ingest->add_option("--edges-out", edges_out, "edge file to write")->required();
    ingest->add_option("--props-out", props_out, "property file to write")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run || *explain) {
            std::optional<Program> fallback;
            auto g = graph.load(&fallback);
            auto prog = plan.program(fallback);
            RuleSet rules;
            CostConfig config;
            plan.settings(rules, config);
            auto catalog = build_catalog(g);
            CostModel cost(catalog, config);
            auto res = enumerate(prog, rules, cost);

            if (*explain) {
                if (plan.format == "dot")
                    std::cout << render_dot(res.best) << "// estimated cost " << res.cost << "\n";
                else
                    std::cout << render_text(res.best) << "estimated cost " << res.cost << "\n";
                return 0;
            }
            if (show_plan)
                std::cout << render_text(res.best) << "\n";
            auto ex = execute(res.best, g, plan.exec());
            if (count_only)
                std::cout << "count: " << count_results(ex.result) << "\n";
            else
                write_tsv(std::cout, ex.result, head_domains(prog), g);
            std::cout << std::fixed << std::setprecision(3) << "t_opt_ms=" << res.stats.wall_ms << "\n"
                      << "t_exec_ms=" << ex.metrics.exec_ms << "\n" << std::defaultfloat;
            std::cout << "tuples_processed=" << ex.metrics.tuples_processed << "\n"
                      << "estimated_cost=" << res.cost << "\n";
            print_stats(std::cout, res.stats);
            return 0;
        }

        if (*exhaustive) {
            std::optional<Program> fallback;
            auto g = graph.load(&fallback);
            auto prog = plan.program(fallback);
            RuleSet rules;
            CostConfig config;
            plan.settings(rules, config);
            auto catalog = build_catalog(g);
            auto count = enumerate(prog, rules_for(Mode::Opt), CostModel(catalog, config), true).root_plans.size();
            if (count > max_plans)
                throw Error("query has " + std::to_string(count) + " root plans, above --max-plans");
            ExecOptions opts;
            opts.timeout = std::chrono::milliseconds(time_limit_ms);
            BenchReport report;
            exhaustive_report(report, prog.answer, prog, g, config, opts);
            if (plan.format == "csv")
                report.write_csv(std::cout);
            else
                report.write_text(std::cout);
            return 0;
        }

        if (*count_plans) {
            RuleSet rules = recursive ? rules_for(Mode::Opt) : rules_for(Mode::Unopt);
            CostConfig config;
            apply_settings(count_rules, rules, config);
            auto catalog = build_catalog(PropertyGraph::build({}, {}, {}));
            CostModel cost(catalog, config);
            std::cout << "shape,n,recursive,leaves,predicted,t_opt_ms\n";
            for (int n = n_min; n <= n_max; ++n) {
                Program prog = shape == "star"    ? make_star_query(n, recursive)
                               : shape == "chain" ? make_chain_query(n, recursive)
                               : shape == "ccc"   ? make_cycle_query(n, recursive)
                                                  : throw Error("unknown shape '" + shape + "'");
                auto res = enumerate(prog, rules, cost);
                std::cout << shape << ',' << n << ',' << (recursive ? 1 : 0) << ',' << res.stats.leaves << ',';
                if (shape == "star" && n >= 2)
                    std::cout << predicted_plan_count(n, recursive);
                std::cout << ',' << res.stats.wall_ms << "\n";
            }
            return 0;
        }

        if (*templates) {
            auto g = graph.load();
            std::ifstream in(bindings_path);
            if (!in)
                throw Error("cannot open bindings file '" + bindings_path + "'");
            auto bindings = parse_bindings(in);
            CostConfig config;
            RuleSet ignored;
            apply_settings(template_rules, ignored, config);
            auto catalog = build_catalog(g);
            ExecOptions opts;
            if (template_timeout > 0)
                opts.timeout = std::chrono::milliseconds(template_timeout);
            BenchReport report;
            for (auto &name : template_names()) {
                auto prog = instantiate_template(name, bindings);
                for (Mode m : {Mode::Unopt, Mode::Waveguide, Mode::Opt}) {
                    BenchRow row{name, mode_name(m)};
                    try {
                        auto r = run_query(prog, g, catalog, rules_for(m), config, opts);
                        row.cost = r.plan.cost;
                        row.t_opt_ms = r.plan.stats.wall_ms;
                        row.t_exec_ms = r.execution.metrics.exec_ms;
                        row.tuples = r.execution.metrics.tuples_processed;
                        row.results = r.execution.result.size();
                    } catch (const Timeout &) {
                        row.timed_out = true;
                    }
                    report.rows.push_back(row);
                }
                if (template_exhaustive) {
                    BenchReport ex;
                    exhaustive_report(ex, name, prog, g, config, opts);
                    report.ratios[name] = ex.ratios[name];
                }
            }
            if (template_format == "csv")
                report.write_csv(std::cout);
            else
                report.write_text(std::cout);
            return 0;
        }

        if (*ingest) {
            std::ifstream in(rdf_in);
            if (!in)
                throw Error("cannot open '" + rdf_in + "'");
            auto g = ingest_rdf(parse_rdf(in));
            std::ofstream eo(edges_out), po(props_out);
            if (!eo || !po)
                throw Error("cannot write '" + (!eo ? edges_out : props_out) + "'");
            write_graph(g, eo, po);
            std::cout << "vertices=" << g.vertices().size() << " edges=" << g.edges().size() << "\n";
            return 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "navq: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

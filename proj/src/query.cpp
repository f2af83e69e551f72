#include "navq/query.hpp"

#include "navq/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace navq {

std::string constant_text(const Constant &c)
{
    if (auto *i = std::get_if<std::int64_t>(&c))
        return std::to_string(*i);
    return std::get<std::string>(c);
}

std::vector<std::string> Atom::vars() const
{
    std::vector<std::string> out;
    for (auto &t : terms)
        if (!t.is_const && std::find(out.begin(), out.end(), t.var) == out.end())
            out.push_back(t.var);
    return out;
}

std::vector<std::string> ConjunctiveQuery::body_vars() const
{
    std::vector<std::string> out;
    for (auto &a : body)
        for (auto &v : a.vars())
            if (std::find(out.begin(), out.end(), v) == out.end())
                out.push_back(v);
    return out;
}

const std::vector<Rule> & Program::rules_for(const std::string &pred) const
{
    auto it = rules.find(pred);
    if (it == rules.end())
        throw QueryError("predicate '" + pred + "' is not defined");
    return it->second;
}

std::size_t Program::arity(const std::string &pred) const
{
    if (pred == "E" || pred == "P")
        return 3;
    return rules_for(pred).front().head.terms.size();
}

Domain Program::column_domain(const std::string &pred, std::size_t pos) const
{
    if (pred == "E")
        return Domain::Id;
    if (pred == "P")
        return pos == 0 ? Domain::Id : Domain::Dict;
    auto &r = rules_for(pred).front();
    ConjunctiveQuery q{{}, r.body};
    return var_domain(*this, q, r.head.terms.at(pos).var);
}

ConjunctiveQuery Program::answer_query() const
{
    auto &rs = rules_for(answer);
    if (rs.size() == 1) {
        ConjunctiveQuery q;
        q.head = rs.front().head.vars();
        q.body = rs.front().body;
        return q;
    }
    ConjunctiveQuery q;
    q.head = rs.front().head.vars();
    q.body.push_back(rs.front().head);
    return q;
}

std::optional<LabelShape> label_shape(const Program &prog, const std::string &pred)
{
    auto it = prog.rules.find(pred);
    if (it == prog.rules.end() || it->second.size() != 1)
        return std::nullopt;
    auto &r = it->second.front();
    if (r.head.terms.size() != 2 || r.body.size() != 2)
        return std::nullopt;
    const Atom *e = &r.body[0], *p = &r.body[1];
    if (e->predicate != "E")
        std::swap(e, p);
    if (e->predicate != "E" || p->predicate != "P" || e->closure || p->closure)
        return std::nullopt;
    auto &et = e->terms;
    auto &pt = p->terms;
    if (et[0].is_const || et[1].is_const || et[2].is_const || pt[0].is_const || !pt[1].is_const || !pt[2].is_const)
        return std::nullopt;
    if (pt[0].var != et[1].var || constant_text(pt[1].value) != "label")
        return std::nullopt;
    auto &h0 = r.head.terms[0].var;
    auto &h1 = r.head.terms[1].var;
    if (et[0].var == et[2].var || et[1].var == et[0].var || et[1].var == et[2].var)
        return std::nullopt;
    if (h0 == et[0].var && h1 == et[2].var)
        return LabelShape{constant_text(pt[2].value), false};
    if (h0 == et[2].var && h1 == et[0].var)
        return LabelShape{constant_text(pt[2].value), true};
    return std::nullopt;
}

Domain var_domain(const Program &prog, const ConjunctiveQuery &q, const std::string &var)
{
    for (auto &a : q.body) {
        if (a.is_filter())
            continue;
        for (std::size_t i = 0; i < a.terms.size(); ++i)
            if (!a.terms[i].is_const && a.terms[i].var == var)
                return prog.column_domain(a.predicate, i);
    }
    return Domain::Id;
}

// ---------------------------------------------------------------------------------------------------------------
// Parsing

namespace {

struct Token
{
    enum Kind { Ident, Int, String, Sym, End } kind;
    std::string text;
    std::size_t line;
    std::size_t column;
};

class Lexer
{
    std::string_view src_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;

    char peek(std::size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }
    void advance()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

public:
    explicit Lexer(std::string_view src) : src_(src) { }

    Token next()
    {
        for (;;) {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(peek())))
                advance();
            if (peek() == '%' || peek() == '#') {
                while (pos_ < src_.size() && peek() != '\n')
                    advance();
                continue;
            }
            break;
        }
        Token t{Token::End, {}, line_, col_};
        if (pos_ >= src_.size())
            return t;
        char c = peek();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            t.kind = Token::Ident;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
                t.text += peek();
                advance();
            }
        } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            t.kind = Token::Int;
            do {
                t.text += peek();
                advance();
            } while (std::isdigit(static_cast<unsigned char>(peek())));
        } else if (c == '"') {
            t.kind = Token::String;
            advance();
            while (peek() != '"') {
                if (pos_ >= src_.size() || peek() == '\n')
                    throw ParseError("unterminated string", t.line, t.column);
                if (peek() == '\\') {
                    advance();
                    if (pos_ >= src_.size())
                        throw ParseError("unterminated string", t.line, t.column);
                }
                t.text += peek();
                advance();
            }
            advance();
        } else if (c == ':' && peek(1) == '-') {
            t.kind = Token::Sym;
            t.text = ":-";
            advance();
            advance();
        } else if (std::string_view("(),.+=").find(c) != std::string_view::npos) {
            t.kind = Token::Sym;
            t.text = c;
            advance();
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
        }
        return t;
    }
};

class Parser
{
    Lexer lex_;
    Token tok_;
    std::size_t fresh_ = 0;

    void shift() { tok_ = lex_.next(); }

    [[noreturn]] void fail(const std::string &what) const
    {
        std::string got = tok_.kind == Token::End ? "end of input" : "'" + tok_.text + "'";
        throw ParseError("expected " + what + ", got " + got, tok_.line, tok_.column);
    }

    void expect(std::string_view sym)
    {
        if (tok_.kind != Token::Sym || tok_.text != sym)
            fail("'" + std::string(sym) + "'");
        shift();
    }

    bool at(std::string_view sym) const { return tok_.kind == Token::Sym && tok_.text == sym; }

    Constant constant()
    {
        Constant c;
        if (tok_.kind == Token::Int) {
            try {
                c = std::stoll(tok_.text);
            } catch (const std::out_of_range &) {
                throw ParseError("integer constant out of range", tok_.line, tok_.column);
            }
        } else if (tok_.kind == Token::String) {
            c = tok_.text;
        } else {
            fail("constant");
        }
        shift();
        return c;
    }

    Term term()
    {
        if (tok_.kind == Token::Ident) {
            std::string name = tok_.text == "_" ? "$a" + std::to_string(fresh_++) : tok_.text;
            shift();
            return Term::variable(std::move(name));
        }
        return Term::constant(constant());
    }

    std::vector<Term> termlist()
    {
        std::vector<Term> terms;
        expect("(");
        terms.push_back(term());
        while (at(",")) {
            shift();
            terms.push_back(term());
        }
        expect(")");
        return terms;
    }

public:
    explicit Parser(std::string_view text) : lex_(text) { shift(); }

    std::size_t &fresh() { return fresh_; }

    struct Located
    {
        Rule rule;
        std::size_t line;
    };

    std::vector<Located> program()
    {
        std::vector<Located> out;
        do {
            if (tok_.kind != Token::Ident)
                fail("rule head");
            Located r{{}, tok_.line};
            r.rule.head.predicate = tok_.text;
            shift();
            if (at("+"))
                throw ParseError("closure marker not allowed in a rule head", tok_.line, tok_.column);
            r.rule.head.terms = termlist();
            expect(":-");
            for (;;) {
                if (tok_.kind != Token::Ident)
                    fail("body literal");
                Atom a;
                a.predicate = tok_.text;
                shift();
                if (at("=")) {
                    shift();
                    a.terms = {Term::variable(a.predicate), Term::constant(constant())};
                    a.predicate = "=";
                } else {
                    if (at("+")) {
                        a.closure = true;
                        shift();
                    }
                    a.terms = termlist();
                }
                r.rule.body.push_back(std::move(a));
                if (!at(","))
                    break;
                shift();
            }
            expect(".");
            out.push_back(std::move(r));
        } while (tok_.kind != Token::End);
        return out;
    }
};

std::string where(std::size_t line) { return " (rule at line " + std::to_string(line) + ")"; }

}

Program parse_program(std::string_view text)
{
    Parser parser(text);
    auto located = parser.program();
    Program prog;

    // First pass: heads and arities.
    std::map<std::string, std::size_t> arity;
    for (auto &[r, line] : located) {
        auto &h = r.head;
        if (h.predicate == "E" || h.predicate == "P")
            throw QueryError("cannot define extensional predicate '" + h.predicate + "'" + where(line));
        std::set<std::string> seen;
        for (auto &t : h.terms) {
            if (t.is_const)
                throw QueryError("rule head '" + h.predicate + "' must list variables only" + where(line));
            if (!seen.insert(t.var).second)
                throw QueryError("repeated variable '" + t.var + "' in head of '" + h.predicate + "'" + where(line));
        }
        auto [it, fresh] = arity.emplace(h.predicate, h.terms.size());
        if (!fresh && it->second != h.terms.size())
            throw QueryError("predicate '" + h.predicate + "' defined with different arities" + where(line));
    }

    // Second pass: body atoms, normalization, safety.
    for (auto &[r, line] : located) {
        std::vector<Atom> body;
        for (auto &a : r.body) {
            if (a.is_filter()) {
                body.push_back(a);
                continue;
            }
            std::size_t expected;
            if (a.is_edb()) {
                if (a.closure)
                    throw QueryError("closure over extensional predicate '" + a.predicate + "'" + where(line));
                expected = 3;
            } else {
                auto it = arity.find(a.predicate);
                if (it == arity.end())
                    throw QueryError("predicate '" + a.predicate + "' is not defined" + where(line));
                expected = it->second;
                if (a.closure && expected != 2)
                    throw QueryError("closure over non-binary predicate '" + a.predicate + "'" + where(line));
            }
            if (a.terms.size() != expected)
                throw QueryError("predicate '" + a.predicate + "' used with " + std::to_string(a.terms.size()) +
                                 " terms, expects " + std::to_string(expected) + where(line));
            Atom norm = a;
            std::vector<Atom> filters;
            if (!a.is_edb()) {
                for (auto &t : norm.terms) {
                    if (!t.is_const)
                        continue;
                    std::string v = "$c" + std::to_string(parser.fresh()++);
                    filters.push_back(Atom{"=", {Term::variable(v), t}, false});
                    t = Term::variable(v);
                }
            }
            std::set<std::string> seen;
            for (auto &t : norm.terms)
                if (!t.is_const && !seen.insert(t.var).second)
                    throw QueryError("variable '" + t.var + "' repeated within atom '" + a.predicate + "'" + where(line));
            body.push_back(std::move(norm));
            body.insert(body.end(), filters.begin(), filters.end());
        }
        std::set<std::string> bound;
        for (auto &a : body)
            if (!a.is_filter())
                for (auto &v : a.vars())
                    bound.insert(v);
        for (auto &v : r.head.vars())
            if (!bound.count(v))
                throw QueryError("unsafe rule: head variable '" + v + "' of '" + r.head.predicate +
                                 "' does not occur in the body" + where(line));
        for (auto &a : body)
            if (a.is_filter() && !bound.count(a.terms[0].var))
                throw QueryError("unsafe rule: filter variable '" + a.terms[0].var + "' does not occur in the body" +
                                 where(line));
        r.body = std::move(body);
        prog.rules[r.head.predicate].push_back(r);
    }

    // Recursion is only expressible through the closure marker on a separately defined predicate.
    std::map<std::string, int> state;
    std::function<void(const std::string &)> visit = [&](const std::string &p) {
        state[p] = 1;
        for (auto &r : prog.rules[p])
            for (auto &a : r.body) {
                if (a.is_filter() || a.is_edb())
                    continue;
                if (state[a.predicate] == 1)
                    throw QueryError("recursive definition through '" + a.predicate +
                                     "'; only closure over a non-recursive predicate is allowed");
                if (state[a.predicate] == 0)
                    visit(a.predicate);
            }
        state[p] = 2;
    };
    for (auto &[p, _] : prog.rules)
        if (state[p] == 0)
            visit(p);

    prog.answer = prog.defines("Ans") ? "Ans" : located.back().rule.head.predicate;
    return prog;
}

Program parse_program_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open query file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_program(ss.str());
    } catch (const ParseError &e) {
        throw Error(std::string("in '") + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------------------------------------------
// Join graphs and closure classification

bool JoinGraph::connected(std::uint64_t subset) const
{
    if (subset == 0)
        return false;
    std::uint64_t seen = subset & (~subset + 1);
    std::uint64_t frontier = seen;
    while (frontier) {
        std::uint64_t next = 0;
        for (std::size_t i = 0; i < size(); ++i)
            if (frontier >> i & 1)
                next |= adj[i];
        next &= subset & ~seen;
        seen |= next;
        frontier = next;
    }
    return seen == subset;
}

JoinGraph join_graph(const ConjunctiveQuery &q)
{
    JoinGraph g;
    for (std::size_t i = 0; i < q.body.size(); ++i)
        if (!q.body[i].is_filter())
            g.nodes.push_back(i);
    if (g.nodes.size() > 63)
        throw QueryError("query body too large (more than 63 atoms)");
    g.adj.assign(g.nodes.size(), 0);
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
        auto va = q.body[g.nodes[a]].vars();
        for (std::size_t b = a + 1; b < g.nodes.size(); ++b) {
            std::vector<std::string> shared;
            for (auto &v : q.body[g.nodes[b]].vars())
                if (std::find(va.begin(), va.end(), v) != va.end())
                    shared.push_back(v);
            if (shared.empty())
                continue;
            g.adj[a] |= 1ULL << b;
            g.adj[b] |= 1ULL << a;
            g.edges.push_back({a, b, std::move(shared)});
        }
    }
    return g;
}

ClosurePartition classify_closures(const ConjunctiveQuery &q)
{
    if (!join_graph(q).connected())
        throw QueryError("join graph of " + to_string(q) + " is disconnected");
    auto occurs_elsewhere = [&](std::size_t self, const std::string &v) {
        for (std::size_t j = 0; j < q.body.size(); ++j) {
            if (j == self)
                continue;
            auto vs = q.body[j].vars();
            if (std::find(vs.begin(), vs.end(), v) != vs.end())
                return true;
        }
        return false;
    };
    ClosurePartition part;
    for (std::size_t i = 0; i < q.body.size(); ++i) {
        auto &a = q.body[i];
        if (a.is_filter())
            continue;
        if (!a.closure) {
            part.N.push_back(i);
            continue;
        }
        bool s = occurs_elsewhere(i, a.terms[0].var);
        bool t = occurs_elsewhere(i, a.terms[1].var);
        if (s && t)
            part.I.push_back(i);
        else if (s || t)
            part.X.push_back(i);
        else
            throw QueryError("closure " + to_string(a) + " shares no variable with the rest of the body");
    }
    return part;
}

// ---------------------------------------------------------------------------------------------------------------
// Canonical signatures

namespace {

std::string encode_const(const Constant &c)
{
    if (auto *i = std::get_if<std::int64_t>(&c))
        return "i" + std::to_string(*i);
    auto &s = std::get<std::string>(c);
    return "s" + std::to_string(s.size()) + ":" + s;
}

struct Canonicalizer
{
    const ConjunctiveQuery &q;
    std::vector<std::string> vars;
    std::map<std::string, std::size_t> index;
    std::vector<std::string> labels; ///< per atom: predicate plus closure marker

    explicit Canonicalizer(const ConjunctiveQuery &q) : q(q)
    {
        vars = q.body_vars();
        for (auto &h : q.head)
            if (std::find(vars.begin(), vars.end(), h) == vars.end())
                vars.push_back(h);
        for (std::size_t i = 0; i < vars.size(); ++i)
            index[vars[i]] = i;
        for (auto &a : q.body)
            labels.push_back(encode_const(a.predicate) + (a.closure ? "+" : ""));
    }

    std::string atom_text(std::size_t a, const std::vector<int> &color) const
    {
        std::string s = labels[a] + "(";
        for (auto &t : q.body[a].terms) {
            s += t.is_const ? encode_const(t.value) : "v" + std::to_string(color[index.at(t.var)]);
            s += ',';
        }
        return s + ")";
    }

    /** Re-ranks colors until the partition is stable. */
    std::vector<int> refine(std::vector<int> color) const
    {
        std::size_t classes = std::set<int>(color.begin(), color.end()).size();
        for (;;) {
            std::vector<std::string> sig(vars.size());
            for (std::size_t v = 0; v < vars.size(); ++v) {
                std::vector<std::string> occ;
                for (std::size_t a = 0; a < q.body.size(); ++a) {
                    auto &terms = q.body[a].terms;
                    for (std::size_t p = 0; p < terms.size(); ++p)
                        if (!terms[p].is_const && terms[p].var == vars[v])
                            occ.push_back(std::to_string(p) + "@" + atom_text(a, color));
                }
                std::sort(occ.begin(), occ.end());
                sig[v] = std::to_string(color[v]) + "|";
                for (auto &o : occ)
                    sig[v] += o + ";";
            }
            std::vector<std::string> sorted = sig;
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            for (std::size_t v = 0; v < vars.size(); ++v)
                color[v] = int(std::lower_bound(sorted.begin(), sorted.end(), sig[v]) - sorted.begin());
            if (sorted.size() == classes)
                return color;
            classes = sorted.size();
        }
    }

    std::string key_of(const std::vector<int> &color) const
    {
        std::vector<int> head;
        for (auto &h : q.head)
            head.push_back(color[index.at(h)]);
        std::sort(head.begin(), head.end());
        std::vector<std::string> atoms;
        for (std::size_t a = 0; a < q.body.size(); ++a)
            atoms.push_back(atom_text(a, color));
        std::sort(atoms.begin(), atoms.end());
        std::string key = "H";
        for (int h : head)
            key += std::to_string(h) + ",";
        key += "|";
        for (auto &a : atoms)
            key += a + ";";
        return key;
    }

    void search(const std::vector<int> &color, std::string &best, std::vector<int> &best_color) const
    {
        std::map<int, std::vector<std::size_t>> cells;
        for (std::size_t v = 0; v < vars.size(); ++v)
            cells[color[v]].push_back(v);
        for (auto &[c, members] : cells) {
            if (members.size() < 2)
                continue;
            for (std::size_t v : members) {
                std::vector<int> next(color.size());
                for (std::size_t u = 0; u < color.size(); ++u)
                    next[u] = 2 * color[u] + (color[u] == c && u != v ? 1 : 0);
                search(refine(next), best, best_color);
            }
            return;
        }
        auto key = key_of(color);
        if (best_color.empty() || key < best) {
            best = std::move(key);
            best_color = color;
        }
    }
};

}

CanonicalForm canonical_signature(const ConjunctiveQuery &q)
{
    Canonicalizer c(q);
    std::vector<int> color(c.vars.size());
    for (std::size_t v = 0; v < c.vars.size(); ++v)
        color[v] = std::find(q.head.begin(), q.head.end(), c.vars[v]) != q.head.end() ? 0 : 1;
    CanonicalForm out;
    std::vector<int> best_color;
    c.search(c.refine(color), out.key, best_color);
    out.order.resize(c.vars.size());
    for (std::size_t v = 0; v < c.vars.size(); ++v)
        out.order[best_color[v]] = c.vars[v];
    return out;
}

// ---------------------------------------------------------------------------------------------------------------

std::string to_string(const Term &t)
{
    if (!t.is_const)
        return t.var;
    if (auto *s = std::get_if<std::string>(&t.value))
        return "\"" + *s + "\"";
    return std::to_string(std::get<std::int64_t>(t.value));
}

std::string to_string(const Atom &a)
{
    if (a.is_filter())
        return to_string(a.terms[0]) + " = " + to_string(a.terms[1]);
    std::string s = a.predicate + (a.closure ? "+(" : "(");
    for (std::size_t i = 0; i < a.terms.size(); ++i)
        s += (i ? "," : "") + to_string(a.terms[i]);
    return s + ")";
}

std::string to_string(const ConjunctiveQuery &q, std::string_view name)
{
    std::string s(name);
    s += "(";
    for (std::size_t i = 0; i < q.head.size(); ++i)
        s += (i ? "," : "") + q.head[i];
    s += ") :- ";
    for (std::size_t i = 0; i < q.body.size(); ++i)
        s += (i ? ", " : "") + to_string(q.body[i]);
    return s + ".";
}

}

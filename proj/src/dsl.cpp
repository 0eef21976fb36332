#include "doe/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace doe {

namespace {

enum class Tok { ident, number, lbrace, rbrace, lparen, rparen, colon, semi, comma,
                 plus, star, slash, arrow, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    long long value = 0;
    int line = 1;
    int column = 1;
};

const std::set<std::string> kKeywords = {
    "design", "treatment", "unit", "randomize", "interactions",
    "structure", "response", "fixed", "random", "in", "none", "all",
};

class Lexer {
  public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

  private:
    void advance() {
        skip_space();
        current_.line = line_;
        current_.column = column_;
        if (pos_ >= text_.size()) {
            current_.kind = Tok::end;
            current_.text = "<end of input>";
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                bump();
            current_.kind = Tok::ident;
            current_.text = std::string(text_.substr(start, pos_ - start));
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                bump();
            current_.kind = Tok::number;
            current_.text = std::string(text_.substr(start, pos_ - start));
            current_.value = std::stoll(current_.text);
            return;
        }
        if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
            bump();
            bump();
            current_.kind = Tok::arrow;
            current_.text = "->";
            return;
        }
        static const std::map<char, Tok> kSingles = {
            {'{', Tok::lbrace}, {'}', Tok::rbrace}, {'(', Tok::lparen}, {')', Tok::rparen},
            {':', Tok::colon},  {';', Tok::semi},   {',', Tok::comma},  {'+', Tok::plus},
            {'*', Tok::star},   {'/', Tok::slash},
        };
        auto it = kSingles.find(c);
        if (it == kSingles.end())
            throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
        bump();
        current_.kind = it->second;
        current_.text = std::string(1, c);
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') bump();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
    Token current_;
};

class Parser {
  public:
    explicit Parser(std::string_view text) : lex_(text) {}

    DesignSpec parse() {
        DesignSpec spec;
        expect_keyword("design");
        spec.name = expect_name("design name");
        expect(Tok::lbrace, "{");
        parse_treatment_block(spec);
        parse_unit_block(spec);
        parse_randomize_block(spec);
        if (peek_keyword("interactions")) parse_interactions(spec);
        expect(Tok::rbrace, "}");
        if (lex_.peek().kind != Tok::end)
            fail("trailing input after design", {"<end of input>"});
        resolve(spec);
        return spec;
    }

    StructureExpr parse_bare_expr() {
        StructureExpr e = parse_expr();
        if (lex_.peek().kind != Tok::end) fail("trailing input after expression", {"<end of input>"});
        return e;
    }

  private:
    void parse_treatment_block(DesignSpec& spec) {
        expect_keyword("treatment");
        expect(Tok::lbrace, "{");
        bool have_structure = false;
        while (lex_.peek().kind != Tok::rbrace) {
            if (peek_keyword("structure")) {
                lex_.take();
                expect(Tok::colon, ":");
                spec.structure = parse_expr();
                have_structure = true;
                accept(Tok::semi);
            } else {
                if (have_structure)
                    fail("factor declarations must precede structure", {"}"});
                spec.treatments.push_back(parse_decl(DeclRole::treatment));
            }
        }
        expect(Tok::rbrace, "}");
        if (!have_structure) {
            // A single declared factor is its own structure.
            if (spec.treatments.size() == 1) {
                spec.structure = StructureExpr::leaf(spec.treatments[0].name);
            } else {
                fail("missing structure expression in treatment block", {"structure"});
            }
        }
    }

    void parse_unit_block(DesignSpec& spec) {
        expect_keyword("unit");
        expect(Tok::lbrace, "{");
        bool have_response = false;
        while (lex_.peek().kind != Tok::rbrace) {
            if (peek_keyword("response")) {
                lex_.take();
                expect(Tok::colon, ":");
                spec.response = expect_name("unit factor name");
                have_response = true;
                accept(Tok::semi);
            } else {
                FactorDecl d = parse_decl(DeclRole::unit);
                spec.units.push_back(std::move(d));
            }
        }
        expect(Tok::rbrace, "}");
        if (!have_response)
            fail("missing response declaration in unit block", {"response"});
    }

    FactorDecl parse_decl(DeclRole role) {
        FactorDecl d;
        d.role = role;
        Token name = lex_.take();
        if (name.kind != Tok::ident || kKeywords.count(name.text))
            throw ParseError("expected factor name, found '" + name.text + "'",
                             name.line, name.column, {"<identifier>"});
        d.name = name.text;
        expect(Tok::colon, ":");
        Token v = lex_.take();
        if (v.kind == Tok::ident && v.text == "fixed") {
            d.variability = Variability::fixed;
        } else if (v.kind == Tok::ident && v.text == "random") {
            d.variability = Variability::random;
        } else {
            throw ParseError("expected 'fixed' or 'random', found '" + v.text + "'",
                             v.line, v.column, {"fixed", "random"});
        }
        Token n = lex_.take();
        if (n.kind != Tok::number)
            throw ParseError("expected level count, found '" + n.text + "'",
                             n.line, n.column, {"<integer>"});
        if (n.value < 1)
            throw ParseError("level count must be at least 1", n.line, n.column);
        d.levels = n.value;
        if (peek_keyword("in")) {
            Token in_tok = lex_.take();
            if (role != DeclRole::unit)
                throw ParseError("'in' nesting applies to unit factors only",
                                 in_tok.line, in_tok.column);
            d.parents.push_back(expect_name("parent unit factor"));
            while (accept(Tok::colon)) d.parents.push_back(expect_name("parent unit factor"));
        }
        expect(Tok::semi, ";");
        return d;
    }

    void parse_randomize_block(DesignSpec& spec) {
        if (!peek_keyword("randomize")) {
            const Token& t = lex_.peek();
            throw ParseError("missing randomize block", t.line, t.column, {"randomize"});
        }
        lex_.take();
        expect(Tok::lbrace, "{");
        while (lex_.peek().kind != Tok::rbrace) {
            std::string from = expect_name("treatment factor name");
            expect(Tok::arrow, "->");
            std::string to = expect_name("unit factor name");
            spec.randomize.emplace_back(std::move(from), std::move(to));
            if (!accept(Tok::semi) && lex_.peek().kind != Tok::rbrace)
                fail("expected ';' between randomize entries", {";", "}"});
        }
        expect(Tok::rbrace, "}");
    }

    void parse_interactions(DesignSpec& spec) {
        lex_.take();  // interactions
        expect(Tok::colon, ":");
        if (peek_keyword("none")) {
            lex_.take();
            spec.policy.kind = InteractionPolicy::Kind::none;
        } else if (peek_keyword("all")) {
            lex_.take();
            spec.policy.kind = InteractionPolicy::Kind::all;
        } else {
            spec.policy.kind = InteractionPolicy::Kind::explicit_list;
            do {
                std::vector<std::string> term;
                term.push_back(expect_name("factor name"));
                while (accept(Tok::colon)) term.push_back(expect_name("factor name"));
                if (term.size() < 2) {
                    const Token& t = lex_.peek();
                    throw ParseError("kept interactions need at least two factors",
                                     t.line, t.column, {":"});
                }
                spec.policy.keep.push_back(std::move(term));
            } while (accept(Tok::comma));
        }
        accept(Tok::semi);
    }

    // expr := cross {"+" cross}; cross := nest {"*" nest};
    // nest := inter {"/" inter}; inter := atom {":" atom}
    StructureExpr parse_expr() {
        StructureExpr e = parse_cross();
        while (accept(Tok::plus))
            e = StructureExpr::node(StructureExpr::Op::sum, std::move(e), parse_cross());
        return e;
    }
    StructureExpr parse_cross() {
        StructureExpr e = parse_nest();
        while (accept(Tok::star))
            e = StructureExpr::node(StructureExpr::Op::cross, std::move(e), parse_nest());
        return e;
    }
    StructureExpr parse_nest() {
        StructureExpr e = parse_interact();
        while (accept(Tok::slash))
            e = StructureExpr::node(StructureExpr::Op::nest, std::move(e), parse_interact());
        return e;
    }
    StructureExpr parse_interact() {
        StructureExpr e = parse_atom();
        while (accept(Tok::colon))
            e = StructureExpr::node(StructureExpr::Op::interact, std::move(e), parse_atom());
        return e;
    }
    StructureExpr parse_atom() {
        if (accept(Tok::lparen)) {
            StructureExpr e = parse_expr();
            expect(Tok::rparen, ")");
            return e;
        }
        return StructureExpr::leaf(expect_name("factor name"));
    }

    // Name resolution and structural checks that make the spec ill-formed.
    void resolve(const DesignSpec& spec) {
        std::set<std::string> names;
        auto declare = [&](const FactorDecl& d) {
            if (d.name == "M")
                fail_at("'M' is reserved for the general mean");
            if (!names.insert(d.name).second)
                fail_at("duplicate factor name '" + d.name + "'");
        };
        std::set<std::string> units, treatments;
        for (const auto& d : spec.treatments) {
            declare(d);
            treatments.insert(d.name);
        }
        std::set<std::string> seen_units;
        for (const auto& d : spec.units) {
            declare(d);
            for (const auto& p : d.parents)
                if (!seen_units.count(p))
                    fail_at("unknown identifier '" + p + "' (parent of '" + d.name +
                            "' must be a previously declared unit factor)");
            seen_units.insert(d.name);
            units.insert(d.name);
        }
        if (spec.treatments.empty()) fail_at("design declares no treatment factors");
        if (spec.units.empty()) fail_at("design declares no unit factors");
        if (!units.count(spec.response))
            fail_at("unknown identifier '" + spec.response + "' (response must name a unit factor)");
        for (const auto& [t, u] : spec.randomize) {
            if (!treatments.count(t))
                fail_at("unknown identifier '" + t + "' in randomize block");
            if (!units.count(u))
                fail_at("unknown identifier '" + u + "' in randomize block");
        }
        check_expr_names(spec.structure, treatments);
        if (spec.policy.kind == InteractionPolicy::Kind::explicit_list)
            for (const auto& term : spec.policy.keep)
                for (const auto& n : term)
                    if (!treatments.count(n) && !units.count(n))
                        fail_at("unknown identifier '" + n + "' in interactions list");
    }

    void check_expr_names(const StructureExpr& e, const std::set<std::string>& treatments) {
        if (e.op == StructureExpr::Op::leaf) {
            if (!treatments.count(e.name))
                fail_at("unknown identifier '" + e.name + "' in structure expression");
            return;
        }
        for (const auto& c : e.children) check_expr_names(c, treatments);
    }

    bool peek_keyword(const char* kw) const {
        return lex_.peek().kind == Tok::ident && lex_.peek().text == kw;
    }
    void expect_keyword(const char* kw) {
        if (!peek_keyword(kw)) {
            const Token& t = lex_.peek();
            throw ParseError("expected '" + std::string(kw) + "', found '" + t.text + "'",
                             t.line, t.column, {kw});
        }
        lex_.take();
    }
    std::string expect_name(const char* what) {
        Token t = lex_.take();
        if (t.kind != Tok::ident || kKeywords.count(t.text))
            throw ParseError(std::string("expected ") + what + ", found '" + t.text + "'",
                             t.line, t.column, {"<identifier>"});
        return t.text;
    }
    void expect(Tok kind, const char* what) {
        Token t = lex_.take();
        if (t.kind != kind)
            throw ParseError("expected '" + std::string(what) + "', found '" + t.text + "'",
                             t.line, t.column, {what});
    }
    bool accept(Tok kind) {
        if (lex_.peek().kind != kind) return false;
        lex_.take();
        return true;
    }
    [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) {
        const Token& t = lex_.peek();
        throw ParseError(msg + " (found '" + t.text + "')", t.line, t.column, std::move(expected));
    }
    [[noreturn]] void fail_at(const std::string& msg) {
        const Token& t = lex_.peek();
        throw ParseError(msg, t.line, t.column);
    }

    Lexer lex_;
};

int precedence(StructureExpr::Op op) {
    switch (op) {
        case StructureExpr::Op::sum: return 0;
        case StructureExpr::Op::cross: return 1;
        case StructureExpr::Op::nest: return 2;
        case StructureExpr::Op::interact: return 3;
        case StructureExpr::Op::leaf: return 4;
    }
    return 4;
}

void print_expr(std::ostream& os, const StructureExpr& e, int parent_prec) {
    if (e.op == StructureExpr::Op::leaf) {
        os << e.name;
        return;
    }
    const char* op = e.op == StructureExpr::Op::sum     ? "+"
                     : e.op == StructureExpr::Op::cross ? "*"
                     : e.op == StructureExpr::Op::nest  ? "/"
                                                        : ":";
    int prec = precedence(e.op);
    bool parens = prec < parent_prec;
    if (parens) os << "(";
    print_expr(os, e.children[0], prec);
    os << op;
    // Left-associative: the right child needs parens at equal precedence.
    print_expr(os, e.children[1], prec + 1);
    if (parens) os << ")";
}

}  // namespace

ParseError::ParseError(std::string msg, int line, int column, std::vector<std::string> expected)
    : std::runtime_error(msg + " at " + std::to_string(line) + ":" + std::to_string(column)),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

const FactorDecl* DesignSpec::find_decl(std::string_view n) const {
    for (const auto& d : treatments)
        if (d.name == n) return &d;
    for (const auto& d : units)
        if (d.name == n) return &d;
    return nullptr;
}

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
    std::size_t n = 0;
    for (const auto& e : entries)
        if (e.severity == Severity::error) ++n;
    return n;
}

DesignSpec parse_design(std::string_view text) { return Parser(text).parse(); }

StructureExpr parse_structure_expr(std::string_view text) {
    return Parser(text).parse_bare_expr();
}

std::string to_string(const StructureExpr& expr) {
    std::ostringstream os;
    print_expr(os, expr, 0);
    return os.str();
}

namespace {

void collect_leaves(const StructureExpr& e, std::set<std::string>& out) {
    if (e.op == StructureExpr::Op::leaf) {
        out.insert(e.name);
        return;
    }
    for (const auto& c : e.children) collect_leaves(c, out);
}

void push_term(std::vector<std::set<std::string>>& terms, std::set<std::string> t) {
    if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(std::move(t));
}

std::vector<std::set<std::string>> expand(const StructureExpr& e) {
    using Op = StructureExpr::Op;
    std::vector<std::set<std::string>> out;
    switch (e.op) {
        case Op::leaf:
            out.push_back({e.name});
            break;
        case Op::sum: {
            for (const auto& c : e.children)
                for (auto& t : expand(c)) push_term(out, std::move(t));
            break;
        }
        case Op::cross: {
            auto lhs = expand(e.children[0]);
            auto rhs = expand(e.children[1]);
            for (const auto& t : lhs) push_term(out, t);
            for (const auto& t : rhs) push_term(out, t);
            for (const auto& a : lhs)
                for (const auto& b : rhs) {
                    std::set<std::string> u = a;
                    u.insert(b.begin(), b.end());
                    push_term(out, std::move(u));
                }
            break;
        }
        case Op::nest: {
            // U/V = U plus each term of V joined with every base of U.
            auto lhs = expand(e.children[0]);
            std::set<std::string> lhs_bases;
            collect_leaves(e.children[0], lhs_bases);
            for (const auto& t : lhs) push_term(out, t);
            for (const auto& t : expand(e.children[1])) {
                std::set<std::string> u = t;
                u.insert(lhs_bases.begin(), lhs_bases.end());
                push_term(out, std::move(u));
            }
            break;
        }
        case Op::interact: {
            for (const auto& a : expand(e.children[0]))
                for (const auto& b : expand(e.children[1])) {
                    std::set<std::string> u = a;
                    u.insert(b.begin(), b.end());
                    push_term(out, std::move(u));
                }
            break;
        }
    }
    return out;
}

}  // namespace

std::vector<std::set<std::string>> expand_terms(const StructureExpr& expr) {
    return expand(expr);
}

std::string pretty_print(const DesignSpec& spec) {
    std::ostringstream os;
    auto variability = [](Variability v) { return v == Variability::fixed ? "fixed" : "random"; };
    os << "design " << spec.name << " {\n";
    os << "  treatment {\n";
    for (const auto& d : spec.treatments)
        os << "    " << d.name << ": " << variability(d.variability) << " " << d.levels << ";\n";
    os << "    structure: " << to_string(spec.structure) << ";\n";
    os << "  }\n";
    os << "  unit {\n";
    for (const auto& d : spec.units) {
        os << "    " << d.name << ": " << variability(d.variability) << " " << d.levels;
        if (!d.parents.empty()) {
            os << " in " << d.parents[0];
            for (std::size_t i = 1; i < d.parents.size(); ++i) os << ":" << d.parents[i];
        }
        os << ";\n";
    }
    os << "    response: " << spec.response << ";\n";
    os << "  }\n";
    os << "  randomize {\n";
    for (const auto& [t, u] : spec.randomize) os << "    " << t << " -> " << u << ";\n";
    os << "  }\n";
    switch (spec.policy.kind) {
        case InteractionPolicy::Kind::none:
            os << "  interactions: none;\n";
            break;
        case InteractionPolicy::Kind::all:
            os << "  interactions: all;\n";
            break;
        case InteractionPolicy::Kind::explicit_list: {
            os << "  interactions: ";
            for (std::size_t i = 0; i < spec.policy.keep.size(); ++i) {
                if (i) os << ", ";
                const auto& term = spec.policy.keep[i];
                for (std::size_t j = 0; j < term.size(); ++j) {
                    if (j) os << ":";
                    os << term[j];
                }
            }
            os << ";\n";
            break;
        }
    }
    os << "}\n";
    return os.str();
}

}  // namespace doe

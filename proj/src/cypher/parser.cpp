#include "ctirag/cypher/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <sstream>

#include "ctirag/common/text.hpp"

namespace ctirag::cypher {

namespace {

constexpr std::array<std::string_view, 46> kReserved = {
    "match",  "optional", "where",  "return",   "distinct", "order",  "by",       "asc",
    "ascending", "desc", "descending", "skip",  "limit",    "and",    "or",       "xor",
    "not",    "in",       "contains", "starts", "ends",     "with",   "is",       "null",
    "true",   "false",    "merge",  "create",   "set",      "on",     "as",       "delete",
    "detach", "remove",   "drop",   "call",     "unwind",   "load",   "foreach",  "union",
    "yield",  "case",     "when",   "then",     "else",     "end"};

enum class Tok { Ident, Int, Float, String, Punct, End };

struct Token {
    Tok type = Tok::End;
    std::string text;  // identifier / punct / decoded string
    bool quoted = false;
    std::int64_t ival = 0;
    double fval = 0.0;
    std::size_t pos = 0;
};

std::string describe(const Token& t) {
    switch (t.type) {
        case Tok::End: return "end of input";
        case Tok::String: return "string literal";
        case Tok::Int:
        case Tok::Float: return "number";
        default: return "'" + t.text + "'";
    }
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.pos = i_;
            if (i_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[i_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t b = i_;
                while (i_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
                    ++i_;
                t.type = Tok::Ident;
                t.text = std::string(src_.substr(b, i_ - b));
            } else if (c == '`') {
                std::size_t close = src_.find('`', i_ + 1);
                if (close == std::string_view::npos) fail(i_, {"closing '`'"});
                t.type = Tok::Ident;
                t.quoted = true;
                t.text = std::string(src_.substr(i_ + 1, close - i_ - 1));
                i_ = close + 1;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                lex_number(t);
            } else if (c == '\'' || c == '"') {
                lex_string(t, c);
            } else {
                t.type = Tok::Punct;
                static constexpr std::array<std::string_view, 5> two = {"<>", "<=", ">=", "..", "!="};
                bool matched = false;
                for (auto op : two) {
                    if (src_.substr(i_, 2) == op) {
                        t.text = std::string(op);
                        i_ += 2;
                        matched = true;
                        break;
                    }
                }
                if (!matched) {
                    static constexpr std::string_view singles = "()[]{}:,.-><=*|;+";
                    if (singles.find(c) == std::string_view::npos) fail(i_, {"token"});
                    t.text = std::string(1, c);
                    ++i_;
                }
            }
            out.push_back(std::move(t));
        }
    }

    [[noreturn]] void fail(std::size_t pos, std::vector<std::string> expected) const {
        auto [line, col] = line_col(src_, pos);
        std::string found = pos < src_.size() ? std::string("'") + src_[pos] + "'" : "end of input";
        throw SyntaxError(pos, line, col, std::move(expected), found);
    }

    static std::pair<std::size_t, std::size_t> line_col(std::string_view src, std::size_t pos) {
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k < pos && k < src.size(); ++k) {
            if (src[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return {line, col};
    }

private:
    void skip_space() {
        for (;;) {
            while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
            if (src_.substr(i_, 2) == "//") {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
                continue;
            }
            if (src_.substr(i_, 2) == "/*") {
                std::size_t close = src_.find("*/", i_ + 2);
                i_ = close == std::string_view::npos ? src_.size() : close + 2;
                continue;
            }
            return;
        }
    }

    void lex_number(Token& t) {
        std::size_t b = i_;
        while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
        bool is_float = false;
        if (i_ + 1 < src_.size() && src_[i_] == '.' &&
            std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
            is_float = true;
            ++i_;
            while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
        }
        if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
            std::size_t k = i_ + 1;
            if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
            if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                is_float = true;
                i_ = k;
                while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
            }
        }
        std::string_view digits = src_.substr(b, i_ - b);
        if (is_float) {
            t.type = Tok::Float;
            std::string tmp(digits);
            t.fval = std::strtod(tmp.c_str(), nullptr);
        } else {
            t.type = Tok::Int;
            auto res = std::from_chars(digits.data(), digits.data() + digits.size(), t.ival);
            if (res.ec != std::errc()) fail(b, {"integer within 64-bit range"});
        }
        t.text = std::string(digits);
    }

    void lex_string(Token& t, char quote) {
        std::size_t b = i_++;
        std::string out;
        while (i_ < src_.size() && src_[i_] != quote) {
            char c = src_[i_++];
            if (c == '\\' && i_ < src_.size()) {
                char e = src_[i_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    default: out += e; break;
                }
            } else {
                out += c;
            }
        }
        if (i_ >= src_.size()) fail(b, {"closing quote"});
        ++i_;
        t.type = Tok::String;
        t.text = std::move(out);
    }

    std::string_view src_;
    std::size_t i_ = 0;
};

class Parser {
public:
    Parser(std::string_view src, std::vector<Token> toks) : src_(src), toks_(std::move(toks)) {}

    CypherAst statement() {
        CypherAst ast;
        bool has_return = false;
        bool has_write = false;
        for (;;) {
            if (at_end() || is_punct(";")) break;
            if (has_return) fail({"end of statement"});
            if (accept_kw("match")) {
                ast.clauses.push_back(match_clause(ClauseKind::Match));
            } else if (is_kw("optional")) {
                advance();
                expect_kw("MATCH");
                ast.clauses.push_back(match_clause(ClauseKind::OptionalMatch));
            } else if (accept_kw("merge")) {
                ast.clauses.push_back(merge_clause());
                has_write = true;
            } else if (accept_kw("create")) {
                Clause c;
                c.kind = ClauseKind::Create;
                c.patterns = pattern_list();
                ast.clauses.push_back(std::move(c));
                has_write = true;
            } else if (accept_kw("set")) {
                Clause c;
                c.kind = ClauseKind::Set;
                c.sets = set_items(SetItem::When::Always);
                ast.clauses.push_back(std::move(c));
                has_write = true;
            } else if (accept_kw("return")) {
                if (ast.clauses.empty()) fail({"MATCH", "MERGE", "CREATE"}, prev());
                ast.clauses.push_back(return_clause());
                has_return = true;
            } else {
                if (ast.clauses.empty())
                    fail({"MATCH", "OPTIONAL MATCH", "MERGE", "CREATE"});
                fail({"MATCH", "OPTIONAL MATCH", "WHERE", "MERGE", "CREATE", "SET", "RETURN"});
            }
        }
        if (ast.clauses.empty()) fail({"MATCH", "OPTIONAL MATCH", "MERGE", "CREATE"});
        ast.kind = has_write ? StatementKind::Write : StatementKind::Read;
        if (!has_write && !has_return) fail({"RETURN"});
        return ast;
    }

    bool at_end() const { return peek().type == Tok::End; }
    bool is_punct(std::string_view p) const { return peek().type == Tok::Punct && peek().text == p; }
    void advance() { ++i_; }

    [[noreturn]] void fail(std::vector<std::string> expected) const { fail(std::move(expected), peek()); }

    [[noreturn]] void fail(std::vector<std::string> expected, const Token& at) const {
        auto [line, col] = Lexer::line_col(src_, at.pos);
        throw SyntaxError(at.pos, line, col, std::move(expected), describe(at));
    }

private:
    const Token& peek(std::size_t k = 0) const {
        return toks_[std::min(i_ + k, toks_.size() - 1)];
    }
    const Token& prev() const { return toks_[i_ == 0 ? 0 : i_ - 1]; }

    bool is_kw(std::string_view kw, std::size_t k = 0) const {
        const Token& t = peek(k);
        return t.type == Tok::Ident && !t.quoted && text::to_lower(t.text) == kw;
    }
    bool accept_kw(std::string_view kw) {
        if (!is_kw(kw)) return false;
        advance();
        return true;
    }
    void expect_kw(std::string_view upper) {
        if (!accept_kw(text::to_lower(upper))) fail({std::string(upper)});
    }
    bool accept_punct(std::string_view p) {
        if (!is_punct(p)) return false;
        advance();
        return true;
    }
    void expect_punct(std::string_view p) {
        if (!accept_punct(p)) fail({"'" + std::string(p) + "'"});
    }

    bool is_identifier() const {
        const Token& t = peek();
        return t.type == Tok::Ident && (t.quoted || !is_reserved_word(t.text));
    }
    std::string identifier(const char* what) {
        if (!is_identifier()) fail({what});
        std::string s = peek().text;
        advance();
        return s;
    }
    std::int64_t integer(const char* what) {
        if (peek().type != Tok::Int) fail({what});
        std::int64_t v = peek().ival;
        advance();
        return v;
    }

    Clause match_clause(ClauseKind kind) {
        Clause c;
        c.kind = kind;
        c.patterns = pattern_list();
        if (accept_kw("where")) c.where = expr();
        return c;
    }

    Clause merge_clause() {
        Clause c;
        c.kind = ClauseKind::Merge;
        c.patterns.push_back(path());
        while (is_kw("on")) {
            advance();
            SetItem::When when;
            if (accept_kw("create"))
                when = SetItem::When::OnCreate;
            else if (accept_kw("match"))
                when = SetItem::When::OnMatch;
            else
                fail({"CREATE", "MATCH"});
            expect_kw("SET");
            auto items = set_items(when);
            c.sets.insert(c.sets.end(), items.begin(), items.end());
        }
        return c;
    }

    std::vector<SetItem> set_items(SetItem::When when) {
        std::vector<SetItem> out;
        do {
            SetItem s;
            s.when = when;
            s.var = identifier("variable");
            expect_punct(".");
            s.key = identifier("property key");
            expect_punct("=");
            s.value = expr();
            out.push_back(std::move(s));
        } while (accept_punct(","));
        return out;
    }

    Clause return_clause() {
        Clause c;
        c.kind = ClauseKind::Return;
        c.distinct = accept_kw("distinct");
        do {
            ReturnItem item;
            item.expr = expr();
            if (accept_kw("as")) item.alias = identifier("alias");
            c.items.push_back(std::move(item));
        } while (accept_punct(","));
        if (accept_kw("order")) {
            expect_kw("BY");
            do {
                SortItem s;
                s.expr = expr();
                if (accept_kw("desc") || accept_kw("descending"))
                    s.descending = true;
                else if (accept_kw("asc") || accept_kw("ascending"))
                    s.descending = false;
                c.order_by.push_back(std::move(s));
            } while (accept_punct(","));
        }
        if (accept_kw("skip")) c.skip = integer("integer");
        if (accept_kw("limit")) c.limit = integer("integer");
        return c;
    }

    std::vector<PathPattern> pattern_list() {
        std::vector<PathPattern> out;
        do {
            out.push_back(path());
        } while (accept_punct(","));
        return out;
    }

    PathPattern path() {
        PathPattern p;
        p.nodes.push_back(node_pattern());
        while (is_punct("-") || is_punct("<")) {
            p.rels.push_back(rel_pattern());
            p.nodes.push_back(node_pattern());
        }
        return p;
    }

    NodePattern node_pattern() {
        NodePattern n;
        expect_punct("(");
        if (is_identifier()) n.var = identifier("variable");
        if (accept_punct(":")) n.label = identifier("label");
        if (is_punct("{")) n.props = property_map();
        expect_punct(")");
        return n;
    }

    RelPattern rel_pattern() {
        RelPattern r;
        bool left = accept_punct("<");
        expect_punct("-");
        if (accept_punct("[")) {
            if (is_identifier()) r.var = identifier("variable");
            if (accept_punct(":")) {
                r.types.push_back(identifier("relationship type"));
                while (accept_punct("|")) {
                    accept_punct(":");
                    r.types.push_back(identifier("relationship type"));
                }
            }
            if (accept_punct("*")) {
                r.var_length = true;
                r.min_hops = 1;
                if (peek().type == Tok::Int) {
                    r.min_hops = integer("integer");
                    if (accept_punct(".."))
                        r.max_hops = peek().type == Tok::Int ? std::optional(integer("integer")) : std::nullopt;
                    else
                        r.max_hops = r.min_hops;
                } else if (accept_punct("..")) {
                    r.max_hops = integer("integer");
                }
            }
            if (is_punct("{")) r.props = property_map();
            expect_punct("]");
        }
        expect_punct("-");
        bool right = accept_punct(">");
        if (left && right) fail({"'('"}, prev());
        r.dir = right ? Direction::Out : (left ? Direction::In : Direction::Both);
        return r;
    }

    PropertyPredicates property_map() {
        PropertyPredicates props;
        expect_punct("{");
        if (!is_punct("}")) {
            do {
                std::string key = identifier("property key");
                expect_punct(":");
                props.emplace_back(std::move(key), expr());
            } while (accept_punct(","));
        }
        expect_punct("}");
        return props;
    }

    Expr expr() { return or_expr(); }

    Expr or_expr() {
        Expr lhs = xor_expr();
        while (accept_kw("or")) lhs = Expr::binary(Expr::Kind::Or, std::move(lhs), xor_expr());
        return lhs;
    }

    Expr xor_expr() {
        Expr lhs = and_expr();
        while (accept_kw("xor")) lhs = Expr::binary(Expr::Kind::Xor, std::move(lhs), and_expr());
        return lhs;
    }

    Expr and_expr() {
        Expr lhs = not_expr();
        while (accept_kw("and")) lhs = Expr::binary(Expr::Kind::And, std::move(lhs), not_expr());
        return lhs;
    }

    Expr not_expr() {
        if (accept_kw("not")) {
            Expr e;
            e.kind = Expr::Kind::Not;
            e.args.push_back(not_expr());
            return e;
        }
        return comparison();
    }

    Expr comparison() {
        Expr lhs = additive();
        for (;;) {
            if (peek().type == Tok::Punct) {
                std::string op = peek().text;
                if (op == "!=") op = "<>";
                if (op == "=" || op == "<>" || op == "<" || op == "<=" || op == ">" || op == ">=") {
                    advance();
                    lhs = Expr::binary(Expr::Kind::Compare, std::move(lhs), additive(), op);
                    continue;
                }
                return lhs;
            }
            if (is_kw("is")) {
                advance();
                Expr e;
                e.kind = accept_kw("not") ? Expr::Kind::IsNotNull : Expr::Kind::IsNull;
                expect_kw("NULL");
                e.args.push_back(std::move(lhs));
                lhs = std::move(e);
            } else if (accept_kw("contains")) {
                lhs = Expr::binary(Expr::Kind::Contains, std::move(lhs), additive());
            } else if (is_kw("starts")) {
                advance();
                expect_kw("WITH");
                lhs = Expr::binary(Expr::Kind::StartsWith, std::move(lhs), additive());
            } else if (is_kw("ends")) {
                advance();
                expect_kw("WITH");
                lhs = Expr::binary(Expr::Kind::EndsWith, std::move(lhs), additive());
            } else if (accept_kw("in")) {
                lhs = Expr::binary(Expr::Kind::In, std::move(lhs), additive());
            } else {
                return lhs;
            }
        }
    }

    Expr additive() {
        Expr lhs = unary();
        for (;;) {
            if (accept_punct("+"))
                lhs = Expr::binary(Expr::Kind::Add, std::move(lhs), unary());
            else if (accept_punct("-"))
                lhs = Expr::binary(Expr::Kind::Sub, std::move(lhs), unary());
            else
                return lhs;
        }
    }

    Expr unary() {
        if (is_punct("-")) {
            const Token& next = peek(1);
            if (next.type == Tok::Int) {
                advance();
                std::int64_t v = -next.ival;
                advance();
                return postfix(Expr::lit(Value(v)));
            }
            if (next.type == Tok::Float) {
                advance();
                double v = -next.fval;
                advance();
                return postfix(Expr::lit(Value(v)));
            }
            advance();
            Expr e;
            e.kind = Expr::Kind::Neg;
            e.args.push_back(unary());
            return e;
        }
        return postfix(atom());
    }

    Expr postfix(Expr base) {
        while (is_punct(".")) {
            advance();
            Expr p;
            p.kind = Expr::Kind::Property;
            p.name = identifier("property key");
            p.args.push_back(std::move(base));
            base = std::move(p);
        }
        return base;
    }

    Expr atom() {
        const Token& t = peek();
        switch (t.type) {
            case Tok::Int: {
                Expr e = Expr::lit(Value(t.ival));
                advance();
                return e;
            }
            case Tok::Float: {
                Expr e = Expr::lit(Value(t.fval));
                advance();
                return e;
            }
            case Tok::String: {
                Expr e = Expr::lit(Value(t.text));
                advance();
                return e;
            }
            case Tok::Punct:
                if (t.text == "(") {
                    advance();
                    Expr e = expr();
                    expect_punct(")");
                    return e;
                }
                if (t.text == "[") {
                    advance();
                    Expr e;
                    e.kind = Expr::Kind::List;
                    if (!is_punct("]")) {
                        do {
                            e.args.push_back(expr());
                        } while (accept_punct(","));
                    }
                    expect_punct("]");
                    return e;
                }
                break;
            case Tok::Ident: {
                if (!t.quoted) {
                    if (is_kw("true")) {
                        advance();
                        return Expr::lit(Value(true));
                    }
                    if (is_kw("false")) {
                        advance();
                        return Expr::lit(Value(false));
                    }
                    if (is_kw("null")) {
                        advance();
                        return Expr::lit(Value());
                    }
                }
                if (!t.quoted && peek(1).type == Tok::Punct && peek(1).text == "(") return call();
                if (!is_identifier()) break;
                return Expr::var(identifier("variable"));
            }
            case Tok::End: break;
        }
        fail({"expression"});
    }

    Expr call() {
        std::string fn = peek().text;
        advance();
        expect_punct("(");
        if (text::to_lower(fn) == "count" && accept_punct("*")) {
            expect_punct(")");
            Expr e;
            e.kind = Expr::Kind::CountStar;
            e.name = fn;
            return e;
        }
        Expr e;
        e.kind = Expr::Kind::Call;
        e.name = fn;
        e.distinct = accept_kw("distinct");
        if (!is_punct(")")) {
            do {
                e.args.push_back(expr());
            } while (accept_punct(","));
        }
        expect_punct(")");
        return e;
    }

    std::string_view src_;
    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

std::string join_expected(const std::vector<std::string>& expected) {
    std::ostringstream os;
    for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? ", " : "") << expected[i];
    return os.str();
}

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::size_t line, std::size_t column,
                         std::vector<std::string> expected, std::string found)
    : std::runtime_error("syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": expected " +
                         (expected.size() > 1 ? "one of " : "") + join_expected(expected) +
                         " but found " + found),
      position_(position),
      line_(line),
      column_(column),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

bool is_reserved_word(std::string_view word) {
    const std::string lower = text::to_lower(word);
    return std::find(kReserved.begin(), kReserved.end(), lower) != kReserved.end();
}

CypherAst parse(std::string_view text) {
    Parser p(text, Lexer(text).run());
    CypherAst ast = p.statement();
    if (p.is_punct(";")) p.advance();
    if (!p.at_end()) p.fail({"end of input"});
    return ast;
}

std::vector<CypherAst> parse_script(std::string_view text) {
    Parser p(text, Lexer(text).run());
    std::vector<CypherAst> out;
    while (!p.at_end()) {
        if (p.is_punct(";")) {
            p.advance();
            continue;
        }
        out.push_back(p.statement());
        if (!p.at_end() && !p.is_punct(";")) p.fail({"';'", "end of input"});
    }
    return out;
}

}  // namespace ctirag::cypher

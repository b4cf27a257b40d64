#include <ssd/minilang/parser.hpp>

#include <array>
#include <cctype>

namespace ssd {

namespace {

constexpr std::size_t max_tokens = 1'000'000;
constexpr int max_depth = 200;

constexpr std::array keywords{"class", "void", "int", "bool", "true", "false",
                              "return", "if", "else", "while"};

auto is_ident_start(char c) -> bool {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
auto is_ident_char(char c) -> bool {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

struct ParseError {
    ParseDiagnostic diagnostic;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, std::size_t input_size)
        : tokens_(std::move(tokens)), input_size_(input_size) {}

    auto unit() -> Ast {
        Ast ast;
        while (!at_end()) ast.classes.push_back(class_decl());
        ast.span = {0, input_size_};
        return ast;
    }

    auto single_statement() -> Stmt {
        auto s = statement();
        expect_end("trailing input after statement");
        return s;
    }

    auto single_expression() -> Expr {
        auto e = expression();
        expect_end("trailing input after expression");
        return e;
    }

    auto param_list() -> std::vector<Param> {
        std::vector<Param> params;
        if (at_end()) return params;
        params.push_back(param());
        while (accept_punct(",")) params.push_back(param());
        expect_end("trailing input after parameter list");
        return params;
    }

private:
    auto peek(std::size_t ahead = 0) const -> const Token& {
        auto i = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[i];
    }
    auto at_end() const -> bool { return peek().kind == TokenKind::end_of_input; }
    auto is_punct(std::string_view p, std::size_t ahead = 0) const -> bool {
        return peek(ahead).kind == TokenKind::punct && peek(ahead).text == p;
    }
    auto is_keyword_tok(std::string_view k, std::size_t ahead = 0) const -> bool {
        return peek(ahead).kind == TokenKind::keyword && peek(ahead).text == k;
    }
    auto next() -> const Token& {
        const auto& t = peek();
        if (pos_ < tokens_.size() - 1) ++pos_;
        return t;
    }
    auto last_end() const -> std::size_t { return pos_ == 0 ? 0 : tokens_[pos_ - 1].span.end; }

    [[noreturn]] void fail(const Token& at, std::string code, std::string message) const {
        throw ParseError{{at.span, std::move(code), std::move(message)}};
    }

    auto describe(const Token& t) const -> std::string {
        if (t.kind == TokenKind::end_of_input) return "end of input";
        return "'" + t.text + "'";
    }

    auto accept_punct(std::string_view p) -> bool {
        if (!is_punct(p)) return false;
        next();
        return true;
    }

    void expect_punct(std::string_view p) {
        if (!accept_punct(p)) {
            fail(peek(), "unexpected-token",
                 "expected '" + std::string(p) + "' but found " + describe(peek()));
        }
    }

    void expect_keyword(std::string_view k) {
        if (!is_keyword_tok(k)) {
            fail(peek(), "unexpected-token",
                 "expected '" + std::string(k) + "' but found " + describe(peek()));
        }
        next();
    }

    void expect_end(const char* message) {
        if (!at_end()) fail(peek(), "trailing-input", message);
    }

    auto identifier(const char* what) -> const Token& {
        if (peek().kind != TokenKind::identifier) {
            fail(peek(), "unexpected-token",
                 std::string("expected ") + what + " but found " + describe(peek()));
        }
        return next();
    }

    auto starts_type(std::size_t ahead = 0) const -> bool {
        const auto& t = peek(ahead);
        if (t.kind == TokenKind::identifier) return true;
        return t.kind == TokenKind::keyword && (t.text == "int" || t.text == "bool" || t.text == "void");
    }

    auto type_ref() -> TypeRef {
        if (!starts_type()) fail(peek(), "unexpected-token", "expected type but found " + describe(peek()));
        const auto& t = next();
        return {t.text, t.span};
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p_(p) {
            if (++p_.depth_ > max_depth) p_.fail(p_.peek(), "nesting-too-deep", "nesting exceeds parser limit");
        }
        ~DepthGuard() { --p_.depth_; }
        DepthGuard(const DepthGuard&) = delete;
        auto operator=(const DepthGuard&) -> DepthGuard& = delete;
        Parser& p_;
    };

    auto class_decl() -> ClassDecl {
        ClassDecl c;
        auto begin = peek().span.begin;
        expect_keyword("class");
        const auto& name = identifier("class name");
        c.name = name.text;
        c.name_span = name.span;
        expect_punct("{");
        while (!is_punct("}")) {
            if (at_end()) fail(peek(), "unexpected-token", "expected '}' but found end of input");
            member(c);
        }
        expect_punct("}");
        c.span = {begin, last_end()};
        return c;
    }

    void member(ClassDecl& c) {
        auto begin = peek().span.begin;
        auto type = type_ref();
        const auto& name = identifier("member name");
        if (accept_punct("(")) {
            Method m;
            m.return_type = type;
            m.name = name.text;
            m.name_span = name.span;
            if (!is_punct(")")) {
                m.params.push_back(param());
                while (accept_punct(",")) m.params.push_back(param());
            }
            expect_punct(")");
            m.body = block();
            m.span = {begin, last_end()};
            c.methods.push_back(std::move(m));
            return;
        }
        Field f;
        f.type = type;
        f.name = name.text;
        f.name_span = name.span;
        if (accept_punct("=")) f.init = expression();
        expect_punct(";");
        f.span = {begin, last_end()};
        c.fields.push_back(std::move(f));
    }

    auto param() -> Param {
        Param p;
        auto begin = peek().span.begin;
        p.type = type_ref();
        const auto& name = identifier("parameter name");
        p.name = name.text;
        p.name_span = name.span;
        p.span = {begin, last_end()};
        return p;
    }

    auto block() -> std::vector<Stmt> {
        DepthGuard guard(*this);
        std::vector<Stmt> stmts;
        expect_punct("{");
        while (!is_punct("}")) {
            if (at_end()) fail(peek(), "unexpected-token", "expected '}' but found end of input");
            stmts.push_back(statement());
        }
        expect_punct("}");
        return stmts;
    }

    auto statement() -> Stmt {
        DepthGuard guard(*this);
        Stmt s;
        auto begin = peek().span.begin;
        if (is_keyword_tok("return")) {
            next();
            s.kind = StmtKind::ret;
            if (!is_punct(";")) s.value = expression();
            expect_punct(";");
        } else if (is_keyword_tok("if")) {
            next();
            s.kind = StmtKind::if_stmt;
            expect_punct("(");
            s.value = expression();
            expect_punct(")");
            s.body = block();
            if (is_keyword_tok("else")) {
                next();
                s.has_else = true;
                s.else_body = block();
            }
        } else if (is_keyword_tok("while")) {
            next();
            s.kind = StmtKind::while_stmt;
            expect_punct("(");
            s.value = expression();
            expect_punct(")");
            s.body = block();
        } else if (starts_type() && (peek().kind == TokenKind::keyword || peek(1).kind == TokenKind::identifier)) {
            s.kind = StmtKind::var_decl;
            s.type = type_ref();
            const auto& name = identifier("variable name");
            s.name = name.text;
            s.name_span = name.span;
            if (accept_punct("=")) s.value = expression();
            expect_punct(";");
        } else if (peek().kind == TokenKind::identifier && is_punct("=", 1)) {
            s.kind = StmtKind::assign;
            const auto& name = next();
            s.name = name.text;
            s.name_span = name.span;
            next();
            s.value = expression();
            expect_punct(";");
        } else {
            s.kind = StmtKind::expr;
            s.value = expression();
            expect_punct(";");
        }
        s.span = {begin, last_end()};
        return s;
    }

    auto binary_op_at() const -> std::optional<BinaryOp> {
        if (peek().kind != TokenKind::punct) return std::nullopt;
        const auto& p = peek().text;
        if (p == "+") return BinaryOp::add;
        if (p == "-") return BinaryOp::sub;
        if (p == "*") return BinaryOp::mul;
        if (p == "/") return BinaryOp::div;
        if (p == "<") return BinaryOp::less;
        if (p == "==") return BinaryOp::equal;
        if (p == "&&") return BinaryOp::logical_and;
        if (p == "||") return BinaryOp::logical_or;
        return std::nullopt;
    }

    auto expression(int min_prec = 1) -> Expr {
        DepthGuard guard(*this);
        auto lhs = primary();
        while (auto op = binary_op_at()) {
            int prec = precedence(*op);
            if (prec < min_prec) break;
            next();
            auto rhs = expression(prec + 1);
            Expr bin;
            bin.kind = ExprKind::binary;
            bin.op = *op;
            bin.span = {lhs.span.begin, rhs.span.end};
            bin.text = std::string(to_string(*op));
            bin.operands.push_back(std::move(lhs));
            bin.operands.push_back(std::move(rhs));
            lhs = std::move(bin);
        }
        return lhs;
    }

    auto primary() -> Expr {
        DepthGuard guard(*this);
        const auto& t = peek();
        Expr e;
        e.span = t.span;
        switch (t.kind) {
            case TokenKind::int_literal:
                e.kind = ExprKind::int_literal;
                e.text = next().text;
                return e;
            case TokenKind::string_literal:
                e.kind = ExprKind::string_literal;
                e.text = next().text;
                return e;
            case TokenKind::keyword:
                if (t.text == "true" || t.text == "false") {
                    e.kind = ExprKind::bool_literal;
                    e.text = next().text;
                    return e;
                }
                break;
            case TokenKind::identifier: {
                e.text = next().text;
                if (accept_punct("(")) {
                    e.kind = ExprKind::call;
                    if (!is_punct(")")) {
                        e.operands.push_back(expression());
                        while (accept_punct(",")) e.operands.push_back(expression());
                    }
                    expect_punct(")");
                    e.span.end = last_end();
                } else {
                    e.kind = ExprKind::name;
                }
                return e;
            }
            case TokenKind::punct:
                if (t.text == "(") {
                    next();
                    auto inner = expression();
                    expect_punct(")");
                    return inner;
                }
                break;
            case TokenKind::end_of_input:
                break;
        }
        fail(t, "expected-expression", "expected expression but found " + describe(t));
    }

    std::vector<Token> tokens_;
    std::size_t input_size_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

template <typename T, typename Fn>
auto run_parser(const SourceText& src, Fn fn) -> Parsed<T> {
    auto lexed = tokenize(src.text);
    if (!lexed) return {std::nullopt, std::move(lexed.diagnostics)};
    Parser parser(std::move(*lexed.value), src.text.size());
    try {
        return {fn(parser), {}};
    } catch (const ParseError& e) {
        return {std::nullopt, {e.diagnostic}};
    }
}

}  // namespace

auto is_keyword(std::string_view word) -> bool {
    for (const auto* k : keywords) {
        if (word == k) return true;
    }
    return false;
}

auto tokenize(std::string_view src) -> Parsed<std::vector<Token>> {
    std::vector<Token> out;
    auto error = [&](std::size_t at, std::size_t end, std::string code, std::string msg) {
        return Parsed<std::vector<Token>>{std::nullopt, {{{at, end}, std::move(code), std::move(msg)}}};
    };
    std::size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            auto close = src.find("*/", i + 2);
            if (close == std::string_view::npos) {
                return error(i, src.size(), "unterminated-comment", "block comment is not closed");
            }
            i = close + 2;
            continue;
        }
        if (out.size() >= max_tokens) {
            return error(i, i + 1, "input-too-large", "input exceeds the token budget");
        }
        auto begin = i;
        if (is_ident_start(c)) {
            while (i < src.size() && is_ident_char(src[i])) ++i;
            std::string word(src.substr(begin, i - begin));
            auto kind = is_keyword(word) ? TokenKind::keyword : TokenKind::identifier;
            out.push_back({kind, std::move(word), {begin, i}});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            if (i < src.size() && is_ident_start(src[i])) {
                return error(begin, i + 1, "unknown-token", "malformed number");
            }
            out.push_back({TokenKind::int_literal, std::string(src.substr(begin, i - begin)), {begin, i}});
            continue;
        }
        if (c == '"') {
            ++i;
            bool closed = false;
            while (i < src.size()) {
                if (src[i] == '\\' && i + 1 < src.size()) {
                    i += 2;
                    continue;
                }
                if (src[i] == '\n') break;
                if (src[i] == '"') {
                    ++i;
                    closed = true;
                    break;
                }
                ++i;
            }
            if (!closed) return error(begin, i, "unterminated-string", "string literal is not closed");
            out.push_back({TokenKind::string_literal, std::string(src.substr(begin, i - begin)), {begin, i}});
            continue;
        }
        auto two = src.substr(i, 2);
        if (two == "==" || two == "&&" || two == "||") {
            out.push_back({TokenKind::punct, std::string(two), {i, i + 2}});
            i += 2;
            continue;
        }
        static constexpr std::string_view singles = "{}();,=+-*/<";
        if (singles.find(c) != std::string_view::npos) {
            out.push_back({TokenKind::punct, std::string(1, c), {i, i + 1}});
            ++i;
            continue;
        }
        return error(i, i + 1, "unknown-token", "unknown character '" + std::string(1, c) + "'");
    }
    out.push_back({TokenKind::end_of_input, "", {src.size(), src.size()}});
    return {std::move(out), {}};
}

auto parse_unit(const SourceText& src) -> Parsed<Ast> {
    return run_parser<Ast>(src, [](Parser& p) { return p.unit(); });
}

auto parse_statement(const SourceText& src) -> Parsed<Stmt> {
    return run_parser<Stmt>(src, [](Parser& p) { return p.single_statement(); });
}

auto parse_expression(const SourceText& src) -> Parsed<Expr> {
    return run_parser<Expr>(src, [](Parser& p) { return p.single_expression(); });
}

auto parse_params(const SourceText& src) -> Parsed<std::vector<Param>> {
    return run_parser<std::vector<Param>>(src, [](Parser& p) { return p.param_list(); });
}

auto parse_unit(std::string_view text) -> Parsed<Ast> {
    return parse_unit(SourceText{std::string(text), "<inline>"});
}

auto parse_statement(std::string_view text) -> Parsed<Stmt> {
    return parse_statement(SourceText{std::string(text), "<inline>"});
}

auto line_col(std::string_view text, std::size_t offset) -> LineCol {
    LineCol lc;
    offset = std::min(offset, text.size());
    for (std::size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++lc.line;
            lc.column = 1;
        } else {
            ++lc.column;
        }
    }
    return lc;
}

}  // namespace ssd

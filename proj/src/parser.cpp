#include "loopforge/ast.hpp"

#include <cctype>
#include <cstring>
#include <map>

namespace loopforge::ast {

namespace {

enum class Tok {
    End, Ident, Int, KwInt, KwVoid, KwIf, KwElse, KwFor, KwWhile, KwDo, KwBreak,
    KwContinue, KwReturn, KwGoto,
    LParen, RParen, LBrace, RBrace, LBracket, RBracket, Semi, Comma, Colon,
    Assign, PlusAssign, MinusAssign, StarAssign, SlashAssign, PercentAssign,
    ShlAssign, ShrAssign, AndAssign, OrAssign, XorAssign, Inc, Dec,
    Plus, Minus, Star, Slash, Percent, Shl, Shr, Amp, Pipe, Caret, Tilde,
    Lt, Le, Gt, Ge, EqEq, Ne,
    // recognized so we can reject them by name
    AmpAmp, PipePipe, Bang, Question,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int32_t value = 0;
    SourceLoc loc;
};

// Type and statement keywords outside the subset, rejected by name.
const std::map<std::string, const char*> kUnsupportedKeywords = {
    {"float", "float"},       {"double", "double"},     {"char", "char"},
    {"short", "short"},       {"long", "long"},         {"unsigned", "unsigned"},
    {"signed", "signed"},     {"struct", "struct"},     {"union", "union"},
    {"enum", "enum"},         {"typedef", "typedef"},   {"static", "static"},
    {"extern", "extern"},     {"const", "const"},       {"volatile", "volatile"},
    {"switch", "switch"},     {"case", "case"},         {"default", "default"},
    {"sizeof", "sizeof"},     {"register", "register"}, {"auto", "auto"},
};

struct ParseAbort {};

class Lexer {
public:
    Lexer(const std::string& src, std::string file, DiagEngine& diags)
        : src_(src), file_(std::move(file)), diags_(diags) {}

    Token next() {
        skip_ws_and_comments();
        Token t;
        t.loc = loc();
        if (pos_ >= src_.size()) return t;
        char c = src_[pos_];
        if (isalpha((unsigned char)c) || c == '_') {
            size_t start = pos_;
            while (pos_ < src_.size() && (isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
                advance();
            t.text = src_.substr(start, pos_ - start);
            t.kind = keyword(t.text, t.loc);
            return t;
        }
        if (isdigit((unsigned char)c)) {
            size_t start = pos_;
            int base = 10;
            if (c == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
                base = 16;
                advance();
                advance();
            }
            while (pos_ < src_.size() && (isalnum((unsigned char)src_[pos_])))
                advance();
            t.text = src_.substr(start, pos_ - start);
            t.kind = Tok::Int;
            try {
                t.value = (int32_t)(uint32_t)std::stoull(base == 16 ? t.text.substr(2) : t.text,
                                                         nullptr, base);
            } catch (...) {
                error(t.loc, "invalid integer literal '" + t.text + "'");
            }
            return t;
        }
        auto two = [&](char a, char b) {
            return c == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
        };
        auto three = [&](const char* s) {
            return pos_ + 2 < src_.size() && src_.compare(pos_, 3, s) == 0;
        };
        struct Punct { const char* s; Tok k; };
        static const Punct puncts[] = {
            {"<<=", Tok::ShlAssign}, {">>=", Tok::ShrAssign},
            {"<<", Tok::Shl},  {">>", Tok::Shr},  {"<=", Tok::Le},  {">=", Tok::Ge},
            {"==", Tok::EqEq}, {"!=", Tok::Ne},   {"&&", Tok::AmpAmp}, {"||", Tok::PipePipe},
            {"+=", Tok::PlusAssign}, {"-=", Tok::MinusAssign}, {"*=", Tok::StarAssign},
            {"/=", Tok::SlashAssign}, {"%=", Tok::PercentAssign}, {"&=", Tok::AndAssign},
            {"|=", Tok::OrAssign}, {"^=", Tok::XorAssign}, {"++", Tok::Inc}, {"--", Tok::Dec},
            {"+", Tok::Plus}, {"-", Tok::Minus}, {"*", Tok::Star}, {"/", Tok::Slash},
            {"%", Tok::Percent}, {"&", Tok::Amp}, {"|", Tok::Pipe}, {"^", Tok::Caret},
            {"~", Tok::Tilde}, {"<", Tok::Lt}, {">", Tok::Gt}, {"!", Tok::Bang},
            {"?", Tok::Question}, {"(", Tok::LParen}, {")", Tok::RParen},
            {"{", Tok::LBrace}, {"}", Tok::RBrace}, {"[", Tok::LBracket}, {"]", Tok::RBracket},
            {";", Tok::Semi}, {",", Tok::Comma}, {":", Tok::Colon}, {"=", Tok::Assign},
        };
        (void)two;
        (void)three;
        for (const auto& p : puncts) {
            size_t len = strlen(p.s);
            if (src_.compare(pos_, len, p.s) == 0) {
                t.kind = p.k;
                t.text = p.s;
                for (size_t i = 0; i < len; ++i) advance();
                return t;
            }
        }
        if (c == '#') error(t.loc, "unsupported construct: preprocessor directive");
        error(t.loc, std::string("stray character '") + c + "' in input");
        return t; // unreachable
    }

    SourceLoc loc() const { return {file_, line_, col_}; }

    [[noreturn]] void error(SourceLoc l, const std::string& msg) {
        diags_.error(std::move(l), msg);
        throw ParseAbort{};
    }

private:
    Tok keyword(const std::string& s, const SourceLoc& at) {
        static const std::map<std::string, Tok> kw = {
            {"int", Tok::KwInt},       {"void", Tok::KwVoid}, {"if", Tok::KwIf},
            {"else", Tok::KwElse},     {"for", Tok::KwFor},   {"while", Tok::KwWhile},
            {"do", Tok::KwDo},         {"break", Tok::KwBreak},
            {"continue", Tok::KwContinue}, {"return", Tok::KwReturn}, {"goto", Tok::KwGoto},
        };
        auto it = kw.find(s);
        if (it != kw.end()) return it->second;
        auto bad = kUnsupportedKeywords.find(s);
        if (bad != kUnsupportedKeywords.end())
            error(at, std::string("unsupported construct: ") + bad->second);
        return Tok::Ident;
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws_and_comments() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (isspace((unsigned char)c)) {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
                SourceLoc start = loc();
                advance();
                advance();
                while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/'))
                    advance();
                if (pos_ + 1 >= src_.size()) error(start, "unterminated block comment");
                advance();
                advance();
            } else {
                break;
            }
        }
    }

    const std::string& src_;
    std::string file_;
    DiagEngine& diags_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    Parser(const std::string& src, std::string unit, DiagEngine& diags)
        : lex_(src, unit, diags), unit_(std::move(unit)), diags_(diags) {
        cur_ = lex_.next();
        ahead_ = lex_.next();
    }

    UnitAst parse() {
        UnitAst u;
        u.name = unit_;
        while (cur_.kind != Tok::End) parse_top_level(u);
        return u;
    }

private:
    Token cur_, ahead_;

    void bump() {
        cur_ = std::move(ahead_);
        ahead_ = lex_.next();
    }
    bool at(Tok k) const { return cur_.kind == k; }
    bool accept(Tok k) {
        if (at(k)) {
            bump();
            return true;
        }
        return false;
    }
    Token expect(Tok k, const char* what) {
        if (!at(k)) fail(std::string("expected ") + what + ", got '" + describe(cur_) + "'");
        Token t = std::move(cur_);
        bump();
        return t;
    }
    static std::string describe(const Token& t) {
        if (t.kind == Tok::End) return "end of file";
        return t.text.empty() ? "?" : t.text;
    }
    [[noreturn]] void fail(const std::string& msg) { lex_.error(cur_.loc, msg); }
    [[noreturn]] void unsupported(const std::string& what) {
        lex_.error(cur_.loc, "unsupported construct: " + what);
    }

    // ---- declarations ----------------------------------------------------

    void parse_top_level(UnitAst& u) {
        SourceLoc loc = cur_.loc;
        bool is_void = false;
        if (accept(Tok::KwVoid))
            is_void = true;
        else if (!accept(Tok::KwInt))
            fail("expected declaration");
        if (at(Tok::Star)) unsupported("pointer type");
        Token name = expect(Tok::Ident, "identifier");
        if (at(Tok::LParen)) {
            parse_function(u, name.text, is_void, loc);
            return;
        }
        if (is_void) fail("void is only valid as a function return type");
        // file-scope variables
        while (true) {
            GlobalDecl g;
            g.name = name.text;
            g.loc = loc;
            if (accept(Tok::LBracket)) {
                Token n = expect(Tok::Int, "constant array bound");
                if (n.value <= 0) lex_.error(n.loc, "array bound must be positive");
                g.array_size = n.value;
                expect(Tok::RBracket, "']'");
            }
            if (accept(Tok::Assign)) {
                if (g.array_size >= 0) {
                    expect(Tok::LBrace, "'{'");
                    while (!at(Tok::RBrace)) {
                        g.init.push_back(parse_const_int());
                        if (!accept(Tok::Comma)) break;
                    }
                    expect(Tok::RBrace, "'}'");
                    if ((int)g.init.size() > g.array_size)
                        lex_.error(loc, "too many initializers for '" + g.name + "'");
                } else {
                    g.init.push_back(parse_const_int());
                }
            }
            u.globals.push_back(std::move(g));
            if (accept(Tok::Comma)) {
                if (at(Tok::Star)) unsupported("pointer type");
                name = expect(Tok::Ident, "identifier");
                loc = name.loc;
                continue;
            }
            expect(Tok::Semi, "';'");
            return;
        }
    }

    int32_t parse_const_int() {
        bool neg = accept(Tok::Minus);
        Token t = expect(Tok::Int, "integer constant");
        return neg ? (int32_t)(0u - (uint32_t)t.value) : t.value;
    }

    void parse_function(UnitAst& u, const std::string& name, bool is_void, SourceLoc loc) {
        expect(Tok::LParen, "'('");
        std::vector<std::string> params;
        if (!at(Tok::RParen)) {
            if (at(Tok::KwVoid) && ahead_.kind == Tok::RParen) {
                bump();
            } else {
                do {
                    expect(Tok::KwInt, "'int'");
                    if (at(Tok::Star)) unsupported("pointer type");
                    Token p = expect(Tok::Ident, "parameter name");
                    if (at(Tok::LBracket)) unsupported("array parameter");
                    params.push_back(p.text);
                } while (accept(Tok::Comma));
            }
        }
        expect(Tok::RParen, "')'");
        if (accept(Tok::Semi)) {
            u.prototypes.push_back(name);
            return;
        }
        FunctionDecl f;
        f.name = name;
        f.params = std::move(params);
        f.returns_void = is_void;
        f.loc = loc;
        f.body = parse_compound();
        u.functions.push_back(std::move(f));
    }

    // ---- statements --------------------------------------------------------

    StmtPtr parse_compound() {
        expect(Tok::LBrace, "'{'");
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Compound;
        s->loc = cur_.loc;
        while (!at(Tok::RBrace)) {
            if (at(Tok::End)) fail("unexpected end of file inside block");
            s->body.push_back(parse_stmt());
        }
        bump();
        return s;
    }

    StmtPtr parse_stmt() {
        SourceLoc loc = cur_.loc;
        switch (cur_.kind) {
        case Tok::Semi: {
            bump();
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::Empty;
            s->loc = loc;
            return s;
        }
        case Tok::LBrace: return parse_compound();
        case Tok::KwInt: return parse_decl_stmt();
        case Tok::KwVoid: unsupported("void variable");
        case Tok::KwIf: {
            bump();
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::If;
            s->loc = loc;
            expect(Tok::LParen, "'('");
            s->expr = parse_expr();
            expect(Tok::RParen, "')'");
            s->then_stmt = parse_stmt();
            if (accept(Tok::KwElse)) s->else_stmt = parse_stmt();
            return s;
        }
        case Tok::KwWhile: {
            bump();
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::While;
            s->loc = loc;
            expect(Tok::LParen, "'('");
            s->expr = parse_expr();
            expect(Tok::RParen, "')'");
            s->loop_body = parse_stmt();
            return s;
        }
        case Tok::KwDo: {
            bump();
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::DoWhile;
            s->loc = loc;
            s->loop_body = parse_stmt();
            expect(Tok::KwWhile, "'while'");
            expect(Tok::LParen, "'('");
            s->expr = parse_expr();
            expect(Tok::RParen, "')'");
            expect(Tok::Semi, "';'");
            return s;
        }
        case Tok::KwFor: {
            bump();
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::For;
            s->loc = loc;
            expect(Tok::LParen, "'('");
            if (!at(Tok::Semi)) {
                if (at(Tok::KwInt))
                    s->for_init = parse_decl_stmt(); // consumes ';'
                else {
                    s->for_init = parse_assign_or_call(loc);
                    expect(Tok::Semi, "';'");
                }
            } else {
                bump();
            }
            if (!at(Tok::Semi)) s->expr = parse_expr();
            expect(Tok::Semi, "';'");
            if (!at(Tok::RParen)) s->for_step = parse_assign_or_call(cur_.loc);
            expect(Tok::RParen, "')'");
            s->loop_body = parse_stmt();
            return s;
        }
        case Tok::KwBreak: {
            bump();
            expect(Tok::Semi, "';'");
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::Break;
            s->loc = loc;
            return s;
        }
        case Tok::KwContinue: {
            bump();
            expect(Tok::Semi, "';'");
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::Continue;
            s->loc = loc;
            return s;
        }
        case Tok::KwReturn: {
            bump();
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::Return;
            s->loc = loc;
            if (!at(Tok::Semi)) s->expr = parse_expr();
            expect(Tok::Semi, "';'");
            return s;
        }
        case Tok::KwGoto: {
            bump();
            Token l = expect(Tok::Ident, "label");
            expect(Tok::Semi, "';'");
            auto s = std::make_unique<Stmt>();
            s->kind = Stmt::Kind::Goto;
            s->loc = loc;
            s->label = l.text;
            return s;
        }
        case Tok::Ident:
            if (ahead_.kind == Tok::Colon) {
                Token l = cur_;
                bump();
                bump();
                auto s = std::make_unique<Stmt>();
                s->kind = Stmt::Kind::Label;
                s->loc = loc;
                s->label = l.text;
                s->then_stmt = parse_stmt();
                return s;
            }
            [[fallthrough]];
        case Tok::Inc:
        case Tok::Dec: {
            auto s = parse_assign_or_call(loc);
            expect(Tok::Semi, "';'");
            return s;
        }
        default:
            fail("expected statement, got '" + describe(cur_) + "'");
        }
    }

    StmtPtr parse_decl_stmt() {
        SourceLoc loc = cur_.loc;
        expect(Tok::KwInt, "'int'");
        auto s = std::make_unique<Stmt>();
        s->kind = Stmt::Kind::Decl;
        s->loc = loc;
        do {
            if (at(Tok::Star)) unsupported("pointer type");
            Token name = expect(Tok::Ident, "identifier");
            Stmt::Declarator d;
            d.name = name.text;
            d.loc = name.loc;
            if (accept(Tok::LBracket)) {
                Token n = expect(Tok::Int, "constant array bound");
                if (n.value <= 0) lex_.error(n.loc, "array bound must be positive");
                d.array_size = n.value;
                expect(Tok::RBracket, "']'");
            }
            if (accept(Tok::Assign)) {
                if (d.array_size >= 0) {
                    expect(Tok::LBrace, "'{'");
                    d.has_array_init = true;
                    while (!at(Tok::RBrace)) {
                        d.array_init.push_back(parse_const_int());
                        if (!accept(Tok::Comma)) break;
                    }
                    expect(Tok::RBrace, "'}'");
                    if ((int)d.array_init.size() > d.array_size)
                        lex_.error(d.loc, "too many initializers for '" + d.name + "'");
                } else {
                    d.init = parse_expr();
                }
            }
            s->decls.push_back(std::move(d));
        } while (accept(Tok::Comma));
        expect(Tok::Semi, "';'");
        return s;
    }

    // assignment, ++/--, or a bare call
    StmtPtr parse_assign_or_call(SourceLoc loc) {
        auto s = std::make_unique<Stmt>();
        s->loc = loc;
        if (at(Tok::Inc) || at(Tok::Dec)) { // prefix form
            bool inc = at(Tok::Inc);
            bump();
            Token name = expect(Tok::Ident, "identifier");
            s->kind = Stmt::Kind::Assign;
            s->target = make_var(name);
            s->compound_op = inc ? mir::BinOp::Add : mir::BinOp::Sub;
            s->value = make_int(1, name.loc);
            return s;
        }
        Token name = expect(Tok::Ident, "identifier");
        if (at(Tok::LParen)) {
            s->kind = Stmt::Kind::ExprStmt;
            s->expr = parse_call(name);
            return s;
        }
        ExprPtr target = make_var(name);
        if (accept(Tok::LBracket)) {
            auto idx = parse_expr();
            expect(Tok::RBracket, "']'");
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Index;
            e->loc = name.loc;
            e->name = name.text;
            e->lhs = std::move(idx);
            target = std::move(e);
        }
        s->kind = Stmt::Kind::Assign;
        s->target = std::move(target);
        switch (cur_.kind) {
        case Tok::Assign: bump(); break;
        case Tok::PlusAssign: s->compound_op = mir::BinOp::Add; bump(); break;
        case Tok::MinusAssign: s->compound_op = mir::BinOp::Sub; bump(); break;
        case Tok::StarAssign: s->compound_op = mir::BinOp::Mul; bump(); break;
        case Tok::SlashAssign: s->compound_op = mir::BinOp::Div; bump(); break;
        case Tok::PercentAssign: s->compound_op = mir::BinOp::Rem; bump(); break;
        case Tok::ShlAssign: s->compound_op = mir::BinOp::Shl; bump(); break;
        case Tok::ShrAssign: s->compound_op = mir::BinOp::Shr; bump(); break;
        case Tok::AndAssign: s->compound_op = mir::BinOp::And; bump(); break;
        case Tok::OrAssign: s->compound_op = mir::BinOp::Or; bump(); break;
        case Tok::XorAssign: s->compound_op = mir::BinOp::Xor; bump(); break;
        case Tok::Inc:
        case Tok::Dec:
            s->compound_op = at(Tok::Inc) ? mir::BinOp::Add : mir::BinOp::Sub;
            s->value = make_int(1, cur_.loc);
            bump();
            return s;
        default:
            fail("expected assignment operator, got '" + describe(cur_) + "'");
        }
        s->value = parse_expr();
        return s;
    }

    // ---- expressions -----------------------------------------------------
    // C precedence, minus the constructs outside the subset.

    ExprPtr parse_expr() { return parse_bor(); }

    ExprPtr parse_bor() {
        auto e = parse_bxor();
        while (at(Tok::Pipe)) {
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(mir::BinOp::Or, std::move(e), parse_bxor(), loc);
        }
        check_rejected();
        return e;
    }
    ExprPtr parse_bxor() {
        auto e = parse_band();
        while (at(Tok::Caret)) {
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(mir::BinOp::Xor, std::move(e), parse_band(), loc);
        }
        return e;
    }
    ExprPtr parse_band() {
        auto e = parse_eq();
        while (at(Tok::Amp)) {
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(mir::BinOp::And, std::move(e), parse_eq(), loc);
        }
        return e;
    }
    ExprPtr parse_eq() {
        auto e = parse_rel();
        while (at(Tok::EqEq) || at(Tok::Ne)) {
            mir::BinOp op = at(Tok::EqEq) ? mir::BinOp::CmpEq : mir::BinOp::CmpNe;
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(op, std::move(e), parse_rel(), loc);
        }
        return e;
    }
    ExprPtr parse_rel() {
        auto e = parse_shift();
        while (at(Tok::Lt) || at(Tok::Le) || at(Tok::Gt) || at(Tok::Ge)) {
            mir::BinOp op = at(Tok::Lt)   ? mir::BinOp::CmpLt
                            : at(Tok::Le) ? mir::BinOp::CmpLe
                            : at(Tok::Gt) ? mir::BinOp::CmpGt
                                          : mir::BinOp::CmpGe;
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(op, std::move(e), parse_shift(), loc);
        }
        return e;
    }
    ExprPtr parse_shift() {
        auto e = parse_add();
        while (at(Tok::Shl) || at(Tok::Shr)) {
            mir::BinOp op = at(Tok::Shl) ? mir::BinOp::Shl : mir::BinOp::Shr;
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(op, std::move(e), parse_add(), loc);
        }
        return e;
    }
    ExprPtr parse_add() {
        auto e = parse_mul();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            mir::BinOp op = at(Tok::Plus) ? mir::BinOp::Add : mir::BinOp::Sub;
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(op, std::move(e), parse_mul(), loc);
        }
        return e;
    }
    ExprPtr parse_mul() {
        auto e = parse_unary();
        while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
            mir::BinOp op = at(Tok::Star)    ? mir::BinOp::Mul
                            : at(Tok::Slash) ? mir::BinOp::Div
                                             : mir::BinOp::Rem;
            SourceLoc loc = cur_.loc;
            bump();
            e = make_bin(op, std::move(e), parse_unary(), loc);
        }
        return e;
    }
    ExprPtr parse_unary() {
        SourceLoc loc = cur_.loc;
        if (accept(Tok::Minus)) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Unary;
            e->un_op = mir::UnOp::Neg;
            e->loc = loc;
            e->lhs = parse_unary();
            return e;
        }
        if (accept(Tok::Tilde)) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::Unary;
            e->un_op = mir::UnOp::BitNot;
            e->loc = loc;
            e->lhs = parse_unary();
            return e;
        }
        if (accept(Tok::Plus)) return parse_unary();
        if (at(Tok::Bang)) unsupported("logical operator !");
        if (at(Tok::Star)) unsupported("pointer dereference");
        if (at(Tok::Amp)) unsupported("address-of operator"); // Amp handled above binds tighter here
        if (at(Tok::Inc) || at(Tok::Dec)) unsupported("increment/decrement inside expressions");
        return parse_postfix();
    }
    ExprPtr parse_postfix() {
        SourceLoc loc = cur_.loc;
        if (accept(Tok::LParen)) {
            auto e = parse_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (at(Tok::Int)) {
            Token t = cur_;
            bump();
            return make_int(t.value, t.loc);
        }
        if (at(Tok::Ident)) {
            Token name = cur_;
            bump();
            if (at(Tok::LParen)) return parse_call(name);
            if (accept(Tok::LBracket)) {
                auto e = std::make_unique<Expr>();
                e->kind = Expr::Kind::Index;
                e->loc = name.loc;
                e->name = name.text;
                e->lhs = parse_expr();
                expect(Tok::RBracket, "']'");
                return e;
            }
            if (at(Tok::Inc) || at(Tok::Dec)) unsupported("increment/decrement inside expressions");
            return make_var(name);
        }
        fail("expected expression, got '" + describe(cur_) + "'");
        (void)loc;
    }

    ExprPtr parse_call(const Token& name) {
        expect(Tok::LParen, "'('");
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::Call;
        e->loc = name.loc;
        e->name = name.text;
        if (!at(Tok::RParen)) {
            do {
                e->args.push_back(parse_expr());
            } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "')'");
        return e;
    }

    void check_rejected() {
        if (at(Tok::AmpAmp)) unsupported("logical operator &&");
        if (at(Tok::PipePipe)) unsupported("logical operator ||");
        if (at(Tok::Question)) unsupported("conditional operator");
    }

    static ExprPtr make_var(const Token& t) {
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::VarRef;
        e->loc = t.loc;
        e->name = t.text;
        return e;
    }
    static ExprPtr make_int(int32_t v, SourceLoc loc) {
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::IntLit;
        e->loc = std::move(loc);
        e->value = v;
        return e;
    }
    static ExprPtr make_bin(mir::BinOp op, ExprPtr a, ExprPtr b, SourceLoc loc) {
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::Binary;
        e->bin_op = op;
        e->loc = std::move(loc);
        e->lhs = std::move(a);
        e->rhs = std::move(b);
        return e;
    }

    Lexer lex_;
    std::string unit_;
    DiagEngine& diags_;
};

} // namespace

std::optional<UnitAst> parse_unit(const std::string& source, const std::string& unit_name,
                                  DiagEngine& diags) {
    try {
        Parser p(source, unit_name, diags);
        return p.parse();
    } catch (ParseAbort&) {
        return std::nullopt;
    }
}

} // namespace loopforge::ast

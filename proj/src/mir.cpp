#include "loopforge/mir.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

namespace loopforge::mir {

const char* bin_op_name(BinOp op) {
    switch (op) {
    case BinOp::Add: return "add";
    case BinOp::Sub: return "sub";
    case BinOp::Mul: return "mul";
    case BinOp::Div: return "div";
    case BinOp::Rem: return "rem";
    case BinOp::Shl: return "shl";
    case BinOp::Shr: return "shr";
    case BinOp::And: return "and";
    case BinOp::Or: return "or";
    case BinOp::Xor: return "xor";
    case BinOp::CmpEq: return "cmpeq";
    case BinOp::CmpNe: return "cmpne";
    case BinOp::CmpLt: return "cmplt";
    case BinOp::CmpLe: return "cmple";
    case BinOp::CmpGt: return "cmpgt";
    case BinOp::CmpGe: return "cmpge";
    }
    return "?";
}

const char* un_op_name(UnOp op) {
    switch (op) {
    case UnOp::Neg: return "neg";
    case UnOp::BitNot: return "bitnot";
    }
    return "?";
}

bool is_compare(BinOp op) {
    switch (op) {
    case BinOp::CmpEq:
    case BinOp::CmpNe:
    case BinOp::CmpLt:
    case BinOp::CmpLe:
    case BinOp::CmpGt:
    case BinOp::CmpGe: return true;
    default: return false;
    }
}

std::vector<BlockId> BasicBlock::successors() const {
    switch (term.kind) {
    case TermKind::Goto: return {term.then_target};
    case TermKind::Branch: return {term.then_target, term.else_target};
    case TermKind::Return: return {};
    }
    return {};
}

const MemObject* MirFunction::find_local(const std::string& n) const {
    for (const auto& l : locals)
        if (l.name == n) return &l;
    return nullptr;
}

void MirFunction::recompute_cfg_edges() {
    for (auto& b : blocks) b.preds.clear();
    for (auto& b : blocks)
        for (BlockId s : b.successors()) blocks[s].preds.push_back(b.id);
}

MirFunction* MirProgram::find_function(const std::string& name) {
    for (auto& u : units)
        for (auto& f : u.functions)
            if (f.name == name) return &f;
    return nullptr;
}

const MirFunction* MirProgram::find_function(const std::string& name) const {
    return const_cast<MirProgram*>(this)->find_function(name);
}

const MemObject* MirProgram::find_global(const std::string& name) const {
    for (const auto& g : globals)
        if (g.name == name) return &g;
    return nullptr;
}

bool MirProgram::is_declared(const std::string& name) const {
    if (find_function(name)) return true;
    for (const auto& u : units)
        for (const auto& d : u.declared)
            if (d == name) return true;
    return false;
}

// ---- text form --------------------------------------------------------------

namespace {

void print_operand(std::ostream& os, const Operand& o) {
    if (o.is_const)
        os << o.imm;
    else
        os << "%" << o.value;
}

void print_memref(std::ostream& os, const MemRef& m) {
    if (m.is_global) os << "@";
    os << m.name;
}

void print_stmt(std::ostream& os, const Stmt& s) {
    os << "  ";
    switch (s.kind) {
    case StmtKind::Const:
        os << "%" << s.dest << " = const " << s.imm;
        break;
    case StmtKind::Copy:
        os << "%" << s.dest << " = copy ";
        print_operand(os, s.lhs);
        break;
    case StmtKind::Unary:
        os << "%" << s.dest << " = " << un_op_name(s.un_op) << " ";
        print_operand(os, s.lhs);
        break;
    case StmtKind::Binary:
        os << "%" << s.dest << " = " << bin_op_name(s.bin_op) << " ";
        print_operand(os, s.lhs);
        os << ", ";
        print_operand(os, s.rhs);
        break;
    case StmtKind::Load:
        os << "%" << s.dest << " = load ";
        print_memref(os, s.mem);
        os << "[";
        print_operand(os, s.lhs);
        os << "]";
        break;
    case StmtKind::Store:
        os << "store ";
        print_memref(os, s.mem);
        os << "[";
        print_operand(os, s.lhs);
        os << "] = ";
        print_operand(os, s.rhs);
        break;
    case StmtKind::Call:
        if (s.dest != kNoValue) os << "%" << s.dest << " = ";
        os << "call " << s.callee << "(";
        for (size_t i = 0; i < s.args.size(); ++i) {
            if (i) os << ", ";
            print_operand(os, s.args[i]);
        }
        os << ")";
        break;
    case StmtKind::Phi:
        os << "%" << s.dest << " = phi";
        for (size_t i = 0; i < s.phi_args.size(); ++i) {
            os << (i ? ", [" : " [");
            print_operand(os, s.phi_args[i]);
            os << "]";
        }
        break;
    }
    os << "\n";
}

void print_function(std::ostream& os, const MirFunction& f) {
    os << "func " << f.name << "\n";
    os << "entry bb" << f.entry << "\n";
    for (size_t i = 0; i < f.values.size(); ++i)
        os << "value %" << i << " " << (f.values[i].name.empty() ? "-" : f.values[i].name) << "\n";
    for (ValueId p : f.params) os << "param %" << p << "\n";
    for (const auto& l : f.locals) os << "local " << l.name << " " << l.size << "\n";
    for (const auto& b : f.blocks) {
        os << "block bb" << b.id << "\n";
        for (const auto& s : b.stmts) print_stmt(os, s);
        os << "  ";
        switch (b.term.kind) {
        case TermKind::Goto:
            os << "goto bb" << b.term.then_target;
            break;
        case TermKind::Branch:
            os << "br ";
            print_operand(os, b.term.cond);
            os << " ? bb" << b.term.then_target << " : bb" << b.term.else_target;
            break;
        case TermKind::Return:
            os << "ret";
            if (b.term.has_value) {
                os << " ";
                print_operand(os, b.term.value);
            }
            break;
        }
        os << "\n";
    }
    os << "endfunc\n";
}

} // namespace

std::string print_text(const MirFunction& f) {
    std::ostringstream os;
    print_function(os, f);
    return os.str();
}

std::string print_text(const MirProgram& p) {
    std::ostringstream os;
    os << "program\n";
    if (p.entry) os << "entry " << *p.entry << "\n";
    for (const auto& g : p.globals) {
        os << "global " << g.name << " " << g.size;
        if (g.declared_scalar) os << " scalar";
        if (!g.init.empty()) {
            os << " init";
            for (int32_t v : g.init) os << " " << v;
        }
        os << "\n";
    }
    for (const auto& u : p.units) {
        os << "unit " << u.name << "\n";
        for (const auto& d : u.declared) os << "declare " << d << "\n";
        for (const auto& f : u.functions) print_function(os, f);
    }
    return os.str();
}

// Line/token based reader for the canonical text form.
namespace {

struct Cursor {
    std::string s;
    size_t pos = 0;
    int line = 1;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool eol() {
        skip_ws();
        return pos >= s.size() || s[pos] == '\n';
    }
    void next_line() {
        while (pos < s.size() && s[pos] != '\n') ++pos;
        if (pos < s.size()) {
            ++pos;
            ++line;
        }
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("ir text line " + std::to_string(line) + ": " + msg);
    }
    bool at_end() {
        while (true) {
            skip_ws();
            if (pos >= s.size()) return true;
            if (s[pos] == '\n') {
                next_line();
                continue;
            }
            return false;
        }
    }
    std::string word() {
        skip_ws();
        size_t start = pos;
        while (pos < s.size() && !isspace((unsigned char)s[pos]) && s[pos] != ',' && s[pos] != '(' &&
               s[pos] != ')' && s[pos] != '[' && s[pos] != ']' && s[pos] != '?' && s[pos] != ':' &&
               s[pos] != '=')
            ++pos;
        if (start == pos) fail("expected token");
        return s.substr(start, pos - start);
    }
    bool try_char(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect_char(char c) {
        if (!try_char(c)) fail(std::string("expected '") + c + "'");
    }
    std::string peek_word() {
        size_t save = pos;
        int sl = line;
        if (at_end()) return "";
        std::string w = word();
        pos = save;
        line = sl;
        return w;
    }
};

ValueId parse_value_ref(Cursor& c) {
    c.expect_char('%');
    return (ValueId)std::stol(c.word());
}

BlockId parse_block_ref(Cursor& c) {
    std::string w = c.word();
    if (w.rfind("bb", 0) != 0) c.fail("expected block reference, got '" + w + "'");
    return (BlockId)std::stol(w.substr(2));
}

Operand parse_operand(Cursor& c) {
    c.skip_ws();
    if (c.pos < c.s.size() && c.s[c.pos] == '%') return Operand::val(parse_value_ref(c));
    return Operand::con((int32_t)std::stol(c.word()));
}

std::optional<BinOp> bin_op_from_name(const std::string& n) {
    static const std::pair<const char*, BinOp> table[] = {
        {"add", BinOp::Add},     {"sub", BinOp::Sub},     {"mul", BinOp::Mul},
        {"div", BinOp::Div},     {"rem", BinOp::Rem},     {"shl", BinOp::Shl},
        {"shr", BinOp::Shr},     {"and", BinOp::And},     {"or", BinOp::Or},
        {"xor", BinOp::Xor},     {"cmpeq", BinOp::CmpEq}, {"cmpne", BinOp::CmpNe},
        {"cmplt", BinOp::CmpLt}, {"cmple", BinOp::CmpLe}, {"cmpgt", BinOp::CmpGt},
        {"cmpge", BinOp::CmpGe},
    };
    for (auto& [name, op] : table)
        if (n == name) return op;
    return std::nullopt;
}

MemRef parse_memref_name(Cursor& c) {
    MemRef m;
    c.skip_ws();
    if (c.pos < c.s.size() && c.s[c.pos] == '@') {
        ++c.pos;
        m.is_global = true;
    }
    m.name = c.word();
    return m;
}

MirFunction parse_func(Cursor& c) {
    MirFunction f;
    f.name = c.word();
    c.next_line();
    BasicBlock* cur = nullptr;
    while (!c.at_end()) {
        std::string w = c.peek_word();
        if (w == "endfunc") {
            c.word();
            c.next_line();
            f.recompute_cfg_edges();
            return f;
        }
        if (w == "entry") {
            c.word();
            f.entry = parse_block_ref(c);
        } else if (w == "value") {
            c.word();
            ValueId id = parse_value_ref(c);
            std::string name = c.word();
            if ((size_t)id != f.values.size()) c.fail("non-sequential value id");
            f.values.push_back({name == "-" ? "" : name});
        } else if (w == "param") {
            c.word();
            f.params.push_back(parse_value_ref(c));
        } else if (w == "local") {
            c.word();
            MemObject l;
            l.name = c.word();
            l.size = (int)std::stol(c.word());
            f.locals.push_back(std::move(l));
        } else if (w == "block") {
            c.word();
            BlockId id = parse_block_ref(c);
            if ((size_t)id != f.blocks.size()) c.fail("non-sequential block id");
            f.add_block();
            cur = &f.blocks.back();
        } else if (w == "goto") {
            if (!cur) c.fail("terminator outside block");
            c.word();
            cur->term.kind = TermKind::Goto;
            cur->term.then_target = parse_block_ref(c);
        } else if (w == "br") {
            if (!cur) c.fail("terminator outside block");
            c.word();
            cur->term.kind = TermKind::Branch;
            cur->term.cond = parse_operand(c);
            c.expect_char('?');
            cur->term.then_target = parse_block_ref(c);
            c.expect_char(':');
            cur->term.else_target = parse_block_ref(c);
        } else if (w == "ret") {
            if (!cur) c.fail("terminator outside block");
            c.word();
            cur->term.kind = TermKind::Return;
            if (!c.eol()) {
                cur->term.has_value = true;
                cur->term.value = parse_operand(c);
            }
        } else if (w == "store") {
            if (!cur) c.fail("statement outside block");
            c.word();
            Stmt s;
            s.kind = StmtKind::Store;
            s.mem = parse_memref_name(c);
            c.expect_char('[');
            s.lhs = parse_operand(c);
            c.expect_char(']');
            c.expect_char('=');
            s.rhs = parse_operand(c);
            cur->stmts.push_back(std::move(s));
        } else if (!w.empty() && w[0] == '%') {
            if (!cur) c.fail("statement outside block");
            Stmt s;
            s.dest = parse_value_ref(c);
            c.expect_char('=');
            std::string op = c.word();
            if (op == "const") {
                s.kind = StmtKind::Const;
                s.imm = (int32_t)std::stol(c.word());
            } else if (op == "copy") {
                s.kind = StmtKind::Copy;
                s.lhs = parse_operand(c);
            } else if (op == "neg" || op == "bitnot") {
                s.kind = StmtKind::Unary;
                s.un_op = op == "neg" ? UnOp::Neg : UnOp::BitNot;
                s.lhs = parse_operand(c);
            } else if (op == "load") {
                s.kind = StmtKind::Load;
                s.mem = parse_memref_name(c);
                c.expect_char('[');
                s.lhs = parse_operand(c);
                c.expect_char(']');
            } else if (op == "call") {
                s.kind = StmtKind::Call;
                s.callee = c.word();
                c.expect_char('(');
                if (!c.try_char(')')) {
                    do {
                        s.args.push_back(parse_operand(c));
                    } while (c.try_char(','));
                    c.expect_char(')');
                }
            } else if (op == "phi") {
                s.kind = StmtKind::Phi;
                while (c.try_char('[')) {
                    s.phi_args.push_back(parse_operand(c));
                    c.expect_char(']');
                    if (!c.try_char(',')) break;
                }
            } else if (auto bop = bin_op_from_name(op)) {
                s.kind = StmtKind::Binary;
                s.bin_op = *bop;
                s.lhs = parse_operand(c);
                c.expect_char(',');
                s.rhs = parse_operand(c);
            } else {
                c.fail("unknown statement opcode '" + op + "'");
            }
            cur->stmts.push_back(std::move(s));
        } else if (w == "call") {
            if (!cur) c.fail("statement outside block");
            c.word();
            Stmt s;
            s.kind = StmtKind::Call;
            s.dest = kNoValue;
            s.callee = c.word();
            c.expect_char('(');
            if (!c.try_char(')')) {
                do {
                    s.args.push_back(parse_operand(c));
                } while (c.try_char(','));
                c.expect_char(')');
            }
            cur->stmts.push_back(std::move(s));
        } else {
            c.fail("unexpected '" + w + "' in function body");
        }
        c.next_line();
    }
    c.fail("unexpected end of input inside func");
}

} // namespace

MirProgram parse_text(const std::string& text) {
    Cursor c{text};
    MirProgram p;
    if (c.at_end() || c.word() != "program") c.fail("expected 'program' header");
    c.next_line();
    TranslationUnit* cur_unit = nullptr;
    while (!c.at_end()) {
        std::string w = c.word();
        if (w == "entry") {
            p.entry = c.word();
        } else if (w == "global") {
            MemObject g;
            g.name = c.word();
            g.size = (int)std::stol(c.word());
            while (!c.eol()) {
                std::string k = c.word();
                if (k == "scalar") {
                    g.declared_scalar = true;
                } else if (k == "init") {
                    while (!c.eol()) g.init.push_back((int32_t)std::stol(c.word()));
                } else {
                    c.fail("unknown global attribute '" + k + "'");
                }
            }
            p.globals.push_back(std::move(g));
        } else if (w == "unit") {
            p.units.push_back({});
            cur_unit = &p.units.back();
            cur_unit->name = c.word();
        } else if (w == "declare") {
            if (!cur_unit) c.fail("declare outside unit");
            cur_unit->declared.push_back(c.word());
        } else if (w == "func") {
            if (!cur_unit) c.fail("func outside unit");
            cur_unit->functions.push_back(parse_func(c));
            continue; // parse_func consumed its trailing line
        } else {
            c.fail("unexpected top-level '" + w + "'");
        }
        c.next_line();
    }
    return p;
}

// ---- validation --------------------------------------------------------------

namespace {

struct DefSite {
    BlockId block = -1;
    int stmt_index = -1; // -1 for params
};

void check_operand_use(const MirFunction& f, const DomTree& dt,
                       const std::map<ValueId, DefSite>& defs, const Operand& o, BlockId use_block,
                       int use_index, std::vector<std::string>& out) {
    if (o.is_const) return;
    if (o.value < 0 || (size_t)o.value >= f.values.size()) {
        out.push_back(f.name + ": use of unknown value %" + std::to_string(o.value));
        return;
    }
    auto it = defs.find(o.value);
    if (it == defs.end()) {
        out.push_back(f.name + ": %" + std::to_string(o.value) + " used but never defined");
        return;
    }
    const DefSite& d = it->second;
    if (d.stmt_index == -1) return; // param, defined at entry
    if (d.block == use_block) {
        if (use_index >= 0 && d.stmt_index >= use_index)
            out.push_back(f.name + ": %" + std::to_string(o.value) + " used before its definition in bb" +
                          std::to_string(use_block));
    } else if (!dt.dominates(d.block, use_block)) {
        out.push_back(f.name + ": definition of %" + std::to_string(o.value) + " (bb" +
                      std::to_string(d.block) + ") does not dominate use in bb" +
                      std::to_string(use_block));
    }
}

} // namespace

std::vector<std::string> validate_function(const MirProgram& p, const MirFunction& f) {
    std::vector<std::string> out;
    if (f.blocks.empty()) {
        out.push_back(f.name + ": function has no blocks");
        return out;
    }
    for (size_t i = 0; i < f.blocks.size(); ++i)
        if (f.blocks[i].id != (BlockId)i)
            out.push_back(f.name + ": block id mismatch at index " + std::to_string(i));

    for (const auto& b : f.blocks)
        for (BlockId s : b.successors())
            if (s < 0 || (size_t)s >= f.blocks.size()) {
                out.push_back(f.name + ": bb" + std::to_string(b.id) + " targets unknown block");
                return out;
            }

    MirFunction g = f; // recompute edges on a copy so validation is non-mutating
    g.recompute_cfg_edges();

    if (!g.blocks[f.entry].preds.empty())
        out.push_back(f.name + ": entry block has predecessors");
    int exit_count = 0;
    for (const auto& b : g.blocks)
        if (b.successors().empty()) ++exit_count;
    if (exit_count != 1)
        out.push_back(f.name + ": expected exactly one exit block, found " + std::to_string(exit_count));

    DomTree dt = compute_dominators(g);
    for (const auto& b : g.blocks)
        if (!dt.reachable(b.id))
            out.push_back(f.name + ": bb" + std::to_string(b.id) + " unreachable from entry");

    std::map<ValueId, DefSite> defs;
    for (ValueId v : f.params) {
        if (v < 0 || (size_t)v >= f.values.size())
            out.push_back(f.name + ": param references unknown value");
        else
            defs[v] = DefSite{f.entry, -1};
    }
    for (const auto& b : g.blocks) {
        for (size_t i = 0; i < b.stmts.size(); ++i) {
            const Stmt& s = b.stmts[i];
            if (s.dest != kNoValue) {
                if (s.dest < 0 || (size_t)s.dest >= f.values.size()) {
                    out.push_back(f.name + ": definition of unknown value id");
                    continue;
                }
                if (defs.count(s.dest))
                    out.push_back(f.name + ": %" + std::to_string(s.dest) + " defined more than once");
                defs[s.dest] = DefSite{b.id, (int)i};
            }
        }
    }
    for (size_t v = 0; v < f.values.size(); ++v)
        if (!defs.count((ValueId)v))
            out.push_back(f.name + ": value %" + std::to_string(v) + " has no definition");

    for (const auto& b : g.blocks) {
        bool seen_non_phi = false;
        for (size_t i = 0; i < b.stmts.size(); ++i) {
            const Stmt& s = b.stmts[i];
            if (s.kind == StmtKind::Phi) {
                if (seen_non_phi)
                    out.push_back(f.name + ": phi after non-phi in bb" + std::to_string(b.id));
                if (s.phi_args.size() != b.preds.size())
                    out.push_back(f.name + ": phi arity " + std::to_string(s.phi_args.size()) +
                                  " != pred count " + std::to_string(b.preds.size()) + " in bb" +
                                  std::to_string(b.id));
                for (size_t k = 0; k < s.phi_args.size() && k < b.preds.size(); ++k)
                    check_operand_use(g, dt, defs, s.phi_args[k], b.preds[k],
                                      (int)g.blocks[b.preds[k]].stmts.size(), out);
            } else {
                seen_non_phi = true;
                switch (s.kind) {
                case StmtKind::Copy:
                case StmtKind::Unary:
                    check_operand_use(g, dt, defs, s.lhs, b.id, (int)i, out);
                    break;
                case StmtKind::Binary:
                    check_operand_use(g, dt, defs, s.lhs, b.id, (int)i, out);
                    check_operand_use(g, dt, defs, s.rhs, b.id, (int)i, out);
                    break;
                case StmtKind::Load:
                    check_operand_use(g, dt, defs, s.lhs, b.id, (int)i, out);
                    break;
                case StmtKind::Store:
                    check_operand_use(g, dt, defs, s.lhs, b.id, (int)i, out);
                    check_operand_use(g, dt, defs, s.rhs, b.id, (int)i, out);
                    break;
                case StmtKind::Call:
                    for (const auto& a : s.args) check_operand_use(g, dt, defs, a, b.id, (int)i, out);
                    if (!p.is_declared(s.callee))
                        out.push_back(f.name + ": call to undeclared function '" + s.callee + "'");
                    break;
                default: break;
                }
                if (s.kind == StmtKind::Load || s.kind == StmtKind::Store) {
                    bool known = s.mem.is_global ? p.find_global(s.mem.name) != nullptr
                                                 : f.find_local(s.mem.name) != nullptr;
                    if (!known)
                        out.push_back(f.name + ": reference to unknown memory object '" + s.mem.name + "'");
                }
            }
        }
        if (b.term.kind == TermKind::Branch)
            check_operand_use(g, dt, defs, b.term.cond, b.id, (int)b.stmts.size(), out);
        if (b.term.kind == TermKind::Return && b.term.has_value)
            check_operand_use(g, dt, defs, b.term.value, b.id, (int)b.stmts.size(), out);
    }
    return out;
}

std::vector<std::string> validate(const MirProgram& p) {
    std::vector<std::string> out;
    std::set<std::string> names;
    for (const auto& u : p.units)
        for (const auto& f : u.functions)
            if (!names.insert(f.name).second)
                out.push_back("duplicate function name '" + f.name + "'");
    std::set<std::string> gnames;
    for (const auto& g : p.globals)
        if (!gnames.insert(g.name).second) out.push_back("duplicate global name '" + g.name + "'");
    for (const auto& u : p.units)
        for (const auto& f : u.functions) {
            auto v = validate_function(p, f);
            out.insert(out.end(), v.begin(), v.end());
        }
    return out;
}

// ---- dominators ---------------------------------------------------------------

bool DomTree::dominates(BlockId a, BlockId b) const {
    if (!reachable(a) || !reachable(b)) return false;
    while (rpo_index[b] > rpo_index[a]) b = idom[b];
    return a == b;
}

DomTree compute_dominators(const MirFunction& f) {
    const size_t n = f.blocks.size();
    DomTree dt;
    dt.idom.assign(n, -1);
    dt.rpo_index.assign(n, -1);
    dt.children.assign(n, {});

    // Postorder DFS from entry.
    std::vector<BlockId> postorder;
    std::vector<int> state(n, 0);
    std::vector<std::pair<BlockId, size_t>> stack{{f.entry, 0}};
    state[f.entry] = 1;
    while (!stack.empty()) {
        auto& [b, i] = stack.back();
        auto succs = f.blocks[b].successors();
        if (i < succs.size()) {
            BlockId s = succs[i++];
            if (state[s] == 0) {
                state[s] = 1;
                stack.push_back({s, 0});
            }
        } else {
            postorder.push_back(b);
            stack.pop_back();
        }
    }
    std::vector<BlockId> rpo(postorder.rbegin(), postorder.rend());
    for (size_t i = 0; i < rpo.size(); ++i) dt.rpo_index[rpo[i]] = (int)i;

    auto intersect = [&](BlockId a, BlockId b) {
        while (a != b) {
            while (dt.rpo_index[a] > dt.rpo_index[b]) a = dt.idom[a];
            while (dt.rpo_index[b] > dt.rpo_index[a]) b = dt.idom[b];
        }
        return a;
    };

    dt.idom[f.entry] = f.entry;
    bool changed = true;
    while (changed) {
        changed = false;
        for (BlockId b : rpo) {
            if (b == f.entry) continue;
            BlockId new_idom = -1;
            for (BlockId pred : f.blocks[b].preds) {
                if (dt.rpo_index[pred] < 0 || dt.idom[pred] == -1) continue;
                new_idom = new_idom == -1 ? pred : intersect(pred, new_idom);
            }
            if (new_idom != -1 && dt.idom[b] != new_idom) {
                dt.idom[b] = new_idom;
                changed = true;
            }
        }
    }
    for (BlockId b = 0; b < (BlockId)n; ++b)
        if (dt.reachable(b) && b != f.entry) dt.children[dt.idom[b]].push_back(b);
    return dt;
}

bool dominates_bruteforce(const MirFunction& f, BlockId a, BlockId b) {
    // b reachable from entry without passing through a?
    if (a == b) return true;
    std::vector<bool> seen(f.blocks.size(), false);
    std::vector<BlockId> stack;
    if (f.entry != a) {
        stack.push_back(f.entry);
        seen[f.entry] = true;
    }
    while (!stack.empty()) {
        BlockId cur = stack.back();
        stack.pop_back();
        if (cur == b) return false;
        for (BlockId s : f.blocks[cur].successors())
            if (s != a && !seen[s]) {
                seen[s] = true;
                stack.push_back(s);
            }
    }
    // b unreachable when avoiding a; dominance holds iff b reachable at all.
    std::vector<bool> seen2(f.blocks.size(), false);
    stack.push_back(f.entry);
    seen2[f.entry] = true;
    while (!stack.empty()) {
        BlockId cur = stack.back();
        stack.pop_back();
        if (cur == b) return true;
        for (BlockId s : f.blocks[cur].successors())
            if (!seen2[s]) {
                seen2[s] = true;
                stack.push_back(s);
            }
    }
    return false;
}

// ---- natural loops ---------------------------------------------------------------

bool LoopNode::contains(BlockId b) const {
    return std::binary_search(body.begin(), body.end(), b);
}

const LoopNode* LoopForest::loop_with_header(BlockId h) const {
    for (const auto& l : loops)
        if (l.header == h) return &l;
    return nullptr;
}

namespace {

// Resolve an operand to a constant through Copy/Const chains.
std::optional<int32_t> resolve_const(const MirFunction& f, const Operand& o) {
    if (o.is_const) return o.imm;
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts)
            if (s.dest == o.value) {
                if (s.kind == StmtKind::Const) return s.imm;
                if (s.kind == StmtKind::Copy) return resolve_const(f, s.lhs);
                return std::nullopt;
            }
    return std::nullopt;
}

const Stmt* find_def(const MirFunction& f, ValueId v) {
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts)
            if (s.dest == v) return &s;
    return nullptr;
}

BlockId def_block(const MirFunction& f, ValueId v) {
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts)
            if (s.dest == v) return b.id;
    return -1;
}

// Number of leading terms of the arithmetic sequence first, first+step, ...
// that satisfy (x OP bound). Sequences moving away from the bound forever
// report no answer.
std::optional<long long> passing_prefix(BinOp op, long long first, long long step,
                                        long long bound) {
    auto holds = [&](long long x) {
        switch (op) {
        case BinOp::CmpLt: return x < bound;
        case BinOp::CmpLe: return x <= bound;
        case BinOp::CmpGt: return x > bound;
        case BinOp::CmpGe: return x >= bound;
        case BinOp::CmpNe: return x != bound;
        case BinOp::CmpEq: return x == bound;
        default: return false;
        }
    };
    if (!holds(first)) return 0;
    if (step == 0) return std::nullopt; // never fails
    switch (op) {
    case BinOp::CmpLt:
    case BinOp::CmpLe: {
        if (step < 0) return std::nullopt;
        long long limit = op == BinOp::CmpLt ? bound - 1 : bound; // last passing value
        return (limit - first) / step + 1;
    }
    case BinOp::CmpGt:
    case BinOp::CmpGe: {
        if (step > 0) return std::nullopt;
        long long limit = op == BinOp::CmpGt ? bound + 1 : bound;
        return (first - limit) / (-step) + 1;
    }
    case BinOp::CmpNe: {
        long long diff = bound - first;
        if (diff % step != 0) return std::nullopt; // steps over the bound, wraps
        long long k = diff / step;
        if (k < 0) return std::nullopt;
        return k;
    }
    case BinOp::CmpEq:
        return 1; // held at first and any step moves off the bound
    default: return std::nullopt;
    }
}

// Match the counted form around one exiting branch and return estimated trips.
std::optional<long long> counted_trips(const MirFunction& f, const LoopNode& loop,
                                       const BasicBlock& exiting, bool exit_on_true) {
    if (exiting.term.kind != TermKind::Branch || exiting.term.cond.is_const) return std::nullopt;
    const Stmt* cmp = find_def(f, exiting.term.cond.value);
    if (!cmp || cmp->kind != StmtKind::Binary || !is_compare(cmp->bin_op)) return std::nullopt;

    // Normalize to a continue-condition "v OP bound".
    BinOp op = cmp->bin_op;
    Operand v = cmp->lhs, bound = cmp->rhs;
    auto swap_sides = [](BinOp o) {
        switch (o) {
        case BinOp::CmpLt: return BinOp::CmpGt;
        case BinOp::CmpLe: return BinOp::CmpGe;
        case BinOp::CmpGt: return BinOp::CmpLt;
        case BinOp::CmpGe: return BinOp::CmpLe;
        default: return o;
        }
    };
    auto negate = [](BinOp o) {
        switch (o) {
        case BinOp::CmpLt: return BinOp::CmpGe;
        case BinOp::CmpLe: return BinOp::CmpGt;
        case BinOp::CmpGt: return BinOp::CmpLe;
        case BinOp::CmpGe: return BinOp::CmpLt;
        case BinOp::CmpEq: return BinOp::CmpNe;
        case BinOp::CmpNe: return BinOp::CmpEq;
        default: return o;
        }
    };
    if (resolve_const(f, v) && !resolve_const(f, bound)) {
        std::swap(v, bound);
        op = swap_sides(op);
    }
    auto bound_c = resolve_const(f, bound);
    if (v.is_const || !bound_c) return std::nullopt;
    if (exit_on_true) op = negate(op);

    // The compared value: a header phi (pre-tested) or phi+step (post-tested).
    const BasicBlock& header = f.blocks[loop.header];
    const Stmt* phi = nullptr;
    long long offset = 0; // v == phi + offset at test time
    const Stmt* vdef = find_def(f, v.value);
    if (!vdef) return std::nullopt;
    if (vdef->kind == StmtKind::Phi && def_block(f, vdef->dest) == loop.header) {
        phi = vdef;
    } else if (vdef->kind == StmtKind::Binary &&
               (vdef->bin_op == BinOp::Add || vdef->bin_op == BinOp::Sub)) {
        if (!vdef->lhs.is_const) {
            const Stmt* base = find_def(f, vdef->lhs.value);
            auto c = resolve_const(f, vdef->rhs);
            if (base && base->kind == StmtKind::Phi && def_block(f, base->dest) == loop.header && c) {
                phi = base;
                offset = vdef->bin_op == BinOp::Add ? *c : -(long long)*c;
            }
        }
    }
    if (!phi) return std::nullopt;

    // Phi operands: constant init from outside, phi+step from each latch.
    std::optional<long long> init, step;
    for (size_t i = 0; i < phi->phi_args.size() && i < header.preds.size(); ++i) {
        BlockId pred = header.preds[i];
        const Operand& a = phi->phi_args[i];
        if (!loop.contains(pred)) {
            auto c = resolve_const(f, a);
            if (!c || (init && *init != *c)) return std::nullopt;
            init = *c;
        } else {
            if (a.is_const) return std::nullopt;
            const Stmt* upd = find_def(f, a.value);
            if (!upd || upd->kind != StmtKind::Binary ||
                (upd->bin_op != BinOp::Add && upd->bin_op != BinOp::Sub))
                return std::nullopt;
            if (upd->lhs.is_const || upd->lhs.value != phi->dest) return std::nullopt;
            auto c = resolve_const(f, upd->rhs);
            if (!c) return std::nullopt;
            long long st = upd->bin_op == BinOp::Add ? *c : -(long long)*c;
            if (step && *step != st) return std::nullopt;
            step = st;
        }
    }
    if (!init || !step) return std::nullopt;

    bool pre_tested = exiting.id == loop.header;
    long long first = *init + offset;
    auto passes = passing_prefix(op, first, *step, *bound_c);
    if (!passes) return std::nullopt;
    long long trips = pre_tested ? *passes : *passes + 1;
    if (trips < 0 || trips > INT32_MAX) return std::nullopt;
    return trips;
}

void estimate_count(const MirFunction& f, LoopNode& loop, long long default_count) {
    // Prefer the header exit, then any other exiting branch.
    std::vector<BlockId> order;
    for (const auto& [src, dst] : loop.exit_edges)
        if (src == loop.header) order.push_back(src);
    for (const auto& [src, dst] : loop.exit_edges)
        if (src != loop.header) order.push_back(src);
    std::set<BlockId> tried;
    for (BlockId src : order) {
        if (!tried.insert(src).second) continue;
        const BasicBlock& b = f.blocks[src];
        if (b.term.kind != TermKind::Branch) continue;
        bool exit_on_true = !loop.contains(b.term.then_target);
        bool exit_on_false = !loop.contains(b.term.else_target);
        if (exit_on_true == exit_on_false) continue; // both or neither leave
        if (auto trips = counted_trips(f, loop, b, exit_on_true)) {
            loop.local_count = std::max(0LL, *trips - 1);
            loop.count_is_heuristic = false;
            return;
        }
    }
    loop.local_count = default_count;
    loop.count_is_heuristic = true;
}

} // namespace

LoopForest find_loops(const MirFunction& fin, DiagEngine& diags, long long default_count) {
    LoopForest forest;
    MirFunction f = fin; // pred edges must be fresh
    f.recompute_cfg_edges();
    DomTree dt = compute_dominators(f);

    // Back edges grouped by header; retreating non-back edges flag irreducibility.
    std::map<BlockId, std::vector<BlockId>> latches_by_header;
    {
        std::vector<int> state(f.blocks.size(), 0); // 0 new, 1 on stack, 2 done
        std::vector<std::pair<BlockId, size_t>> stack{{f.entry, 0}};
        state[f.entry] = 1;
        while (!stack.empty()) {
            auto& [b, i] = stack.back();
            auto succs = f.blocks[b].successors();
            if (i < succs.size()) {
                BlockId s = succs[i++];
                if (state[s] == 1) {
                    if (dt.dominates(s, b))
                        latches_by_header[s].push_back(b);
                    else
                        diags.warning("irreducible control flow involving bb" + std::to_string(s) +
                                      " in function '" + f.name + "'; region not considered a loop");
                } else if (state[s] == 0) {
                    state[s] = 1;
                    stack.push_back({s, 0});
                }
            } else {
                state[b] = 2;
                stack.pop_back();
            }
        }
    }

    struct Raw {
        BlockId header;
        std::vector<BlockId> latches;
        std::set<BlockId> body;
    };
    std::vector<Raw> raw;
    for (auto& [header, latches] : latches_by_header) {
        Raw r;
        r.header = header;
        std::sort(latches.begin(), latches.end());
        latches.erase(std::unique(latches.begin(), latches.end()), latches.end());
        r.latches = latches;
        r.body.insert(header);
        std::vector<BlockId> work;
        for (BlockId l : latches)
            if (r.body.insert(l).second) work.push_back(l);
        while (!work.empty()) {
            BlockId b = work.back();
            work.pop_back();
            for (BlockId pred : f.blocks[b].preds)
                if (!r.body.count(pred)) {
                    r.body.insert(pred);
                    work.push_back(pred);
                }
        }
        raw.push_back(std::move(r));
    }

    // Nest: smallest containing loop becomes the parent.
    std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
        if (a.body.size() != b.body.size()) return a.body.size() < b.body.size();
        return a.header < b.header;
    });
    std::vector<int> parent(raw.size(), -1);
    for (size_t i = 0; i < raw.size(); ++i)
        for (size_t j = i + 1; j < raw.size(); ++j)
            if (raw[j].body.count(raw[i].header) && raw[j].header != raw[i].header) {
                parent[i] = (int)j;
                break;
            }

    // Emit preorder with siblings ordered by header id.
    std::vector<std::vector<int>> kids(raw.size());
    std::vector<int> root_idx;
    for (size_t i = 0; i < raw.size(); ++i)
        (parent[i] == -1 ? root_idx : kids[parent[i]]).push_back((int)i);
    auto by_header = [&](int a, int b) { return raw[a].header < raw[b].header; };
    std::sort(root_idx.begin(), root_idx.end(), by_header);
    for (auto& k : kids) std::sort(k.begin(), k.end(), by_header);

    std::vector<int> emitted(raw.size(), -1);
    std::function<void(int, int)> emit = [&](int ri, int parent_out) {
        LoopNode node;
        const Raw& r = raw[ri];
        node.header = r.header;
        node.latches = r.latches;
        node.body.assign(r.body.begin(), r.body.end());
        node.parent = parent_out;
        // exit edges in DFS discovery order from the header, successor order
        {
            std::set<BlockId> seen;
            std::function<void(BlockId)> walk = [&](BlockId b) {
                if (!seen.insert(b).second) return;
                for (BlockId s : f.blocks[b].successors()) {
                    if (!r.body.count(s))
                        node.exit_edges.push_back({b, s});
                    else
                        walk(s);
                }
            };
            walk(r.header);
        }
        int out_idx = (int)forest.loops.size();
        emitted[ri] = out_idx;
        forest.loops.push_back(std::move(node));
        if (parent_out == -1) forest.roots.push_back(out_idx);
        else forest.loops[parent_out].children.push_back(out_idx);
        for (int k : kids[ri]) emit(k, out_idx);
    };
    for (int r : root_idx) emit(r, -1);

    for (auto& loop : forest.loops) estimate_count(f, loop, default_count);
    return forest;
}

} // namespace loopforge::mir

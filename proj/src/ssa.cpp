#include "loopforge/frontend.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <set>

#include "loopforge/int32ops.hpp"

namespace loopforge::frontend {

using namespace mir;

namespace {

// During lowering, named scalar variables are "slots" encoded as value ids
// above kSlotBase. Reads go through copy statements, writes are copies to the
// encoded id; the renamer replaces both with SSA values and phis.
constexpr ValueId kSlotBase = 1 << 24;
inline bool is_slot(ValueId v) { return v >= kSlotBase; }
inline int slot_of(ValueId v) { return v - kSlotBase; }

struct LowerAbort {};

class Lowerer {
public:
    Lowerer(const ast::UnitAst& unit, MirProgram& prog, DiagEngine& diags)
        : unit_(unit), prog_(prog), diags_(diags) {}

    bool run() {
        TranslationUnit tu;
        tu.name = unit_.name;
        tu.declared = unit_.prototypes;
        for (const auto& g : unit_.globals) {
            if (prog_.find_global(g.name)) continue; // pre-registered by compile_units
            MemObject m;
            m.name = g.name;
            m.size = g.array_size < 0 ? 1 : g.array_size;
            m.declared_scalar = g.array_size < 0;
            m.init = g.init;
            prog_.globals.push_back(std::move(m));
        }
        bool ok = true;
        for (const auto& fd : unit_.functions) {
            try {
                tu.functions.push_back(lower_function(fd));
            } catch (LowerAbort&) {
                ok = false;
            }
        }
        prog_.units.push_back(std::move(tu));
        return ok;
    }

private:
    struct Binding {
        enum class Kind { Slot, Array, Global } kind;
        int slot = -1;
        std::string mem_name;
    };

    const ast::UnitAst& unit_;
    MirProgram& prog_;
    DiagEngine& diags_;

    MirFunction f_;
    BlockId cur_ = 0;
    bool open_ = true; // current block has no terminator yet
    std::vector<std::map<std::string, Binding>> scopes_;
    int next_slot_ = 0;
    std::map<int, std::string> slot_name_;
    std::vector<std::pair<BlockId, BlockId>> loop_stack_; // (break, continue)
    std::map<std::string, BlockId> label_blocks_;
    std::set<std::string> labels_defined_, labels_used_;
    int retval_slot_ = -1;
    BlockId epilogue_ = -1;
    bool returns_void_ = false;

    [[noreturn]] void error(const SourceLoc& loc, const std::string& msg) {
        diags_.error(loc, msg);
        throw LowerAbort{};
    }

    // ---- block plumbing ---------------------------------------------------

    BlockId new_block() { return f_.add_block(); }

    void switch_to(BlockId b) {
        cur_ = b;
        open_ = true;
    }

    void emit(Stmt s) {
        if (open_) f_.block(cur_).stmts.push_back(std::move(s));
    }

    void seal_goto(BlockId target) {
        if (!open_) return;
        f_.block(cur_).term = Terminator{TermKind::Goto, {}, target, -1, false, {}};
        open_ = false;
    }

    void seal_branch(Operand cond, BlockId then_b, BlockId else_b) {
        if (!open_) return;
        if (then_b == else_b) {
            seal_goto(then_b);
            return;
        }
        f_.block(cur_).term = Terminator{TermKind::Branch, cond, then_b, else_b, false, {}};
        open_ = false;
    }

    void seal_return(std::optional<Operand> v) {
        if (!open_) return;
        Terminator t;
        t.kind = TermKind::Return;
        if (v) {
            t.has_value = true;
            t.value = *v;
        }
        f_.block(cur_).term = t;
        open_ = false;
    }

    // ---- scopes ------------------------------------------------------------

    Binding* lookup(const std::string& name) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end()) return &found->second;
        }
        return nullptr;
    }

    int new_slot(const std::string& name) {
        int s = next_slot_++;
        slot_name_[s] = name;
        return s;
    }

    Operand read_slot(int slot, const std::string& hint) {
        ValueId t = f_.add_value(hint);
        Stmt s;
        s.kind = StmtKind::Copy;
        s.dest = t;
        s.lhs = Operand::val(kSlotBase + slot);
        emit(std::move(s));
        return Operand::val(t);
    }

    void write_slot(int slot, Operand v) {
        Stmt s;
        s.kind = StmtKind::Copy;
        s.dest = kSlotBase + slot;
        s.lhs = v;
        emit(std::move(s));
    }

    // ---- expressions -------------------------------------------------------

    Operand lower_expr(const ast::Expr& e) {
        switch (e.kind) {
        case ast::Expr::Kind::IntLit: return Operand::con(e.value);
        case ast::Expr::Kind::VarRef: {
            Binding* b = lookup(e.name);
            if (!b) error(e.loc, "use of undeclared identifier '" + e.name + "'");
            if (b->kind == Binding::Kind::Slot) return read_slot(b->slot, e.name);
            if (b->kind == Binding::Kind::Global) {
                const MemObject* g = prog_.find_global(b->mem_name);
                if (g && g->declared_scalar) return emit_load({true, b->mem_name}, Operand::con(0), e.name);
                error(e.loc, "array '" + e.name + "' used without an index");
            }
            error(e.loc, "array '" + e.name + "' used without an index");
        }
        case ast::Expr::Kind::Index: {
            Binding* b = lookup(e.name);
            if (!b) error(e.loc, "use of undeclared identifier '" + e.name + "'");
            Operand idx = lower_expr(*e.lhs);
            if (b->kind == Binding::Kind::Array) return emit_load({false, b->mem_name}, idx, e.name);
            if (b->kind == Binding::Kind::Global) {
                const MemObject* g = prog_.find_global(b->mem_name);
                if (g && !g->declared_scalar) return emit_load({true, b->mem_name}, idx, e.name);
            }
            error(e.loc, "'" + e.name + "' is not an array");
        }
        case ast::Expr::Kind::Unary: {
            Operand a = lower_expr(*e.lhs);
            ValueId t = f_.add_value("");
            Stmt s;
            s.kind = StmtKind::Unary;
            s.dest = t;
            s.un_op = e.un_op;
            s.lhs = a;
            emit(std::move(s));
            return Operand::val(t);
        }
        case ast::Expr::Kind::Binary: {
            Operand a = lower_expr(*e.lhs);
            Operand b = lower_expr(*e.rhs);
            ValueId t = f_.add_value("");
            Stmt s;
            s.kind = StmtKind::Binary;
            s.dest = t;
            s.bin_op = e.bin_op;
            s.lhs = a;
            s.rhs = b;
            emit(std::move(s));
            return Operand::val(t);
        }
        case ast::Expr::Kind::Call: {
            Stmt s;
            s.kind = StmtKind::Call;
            s.callee = e.name;
            for (const auto& a : e.args) s.args.push_back(lower_expr(*a));
            ValueId t = f_.add_value("");
            s.dest = t;
            emit(std::move(s));
            return Operand::val(t);
        }
        }
        error(e.loc, "internal: unhandled expression");
    }

    Operand emit_load(MemRef mem, Operand idx, const std::string& hint) {
        ValueId t = f_.add_value(hint);
        Stmt s;
        s.kind = StmtKind::Load;
        s.dest = t;
        s.mem = std::move(mem);
        s.lhs = idx;
        emit(std::move(s));
        return Operand::val(t);
    }

    void emit_store(MemRef mem, Operand idx, Operand v) {
        Stmt s;
        s.kind = StmtKind::Store;
        s.mem = std::move(mem);
        s.lhs = idx;
        s.rhs = v;
        emit(std::move(s));
    }

    // ---- statements ----------------------------------------------------------

    void lower_stmt(const ast::Stmt& s) {
        switch (s.kind) {
        case ast::Stmt::Kind::Empty: return;
        case ast::Stmt::Kind::Compound: {
            scopes_.emplace_back();
            for (const auto& c : s.body) lower_stmt(*c);
            scopes_.pop_back();
            return;
        }
        case ast::Stmt::Kind::Decl: {
            for (const auto& d : s.decls) lower_decl(d);
            return;
        }
        case ast::Stmt::Kind::Assign: return lower_assign(s);
        case ast::Stmt::Kind::ExprStmt: {
            // Bare call for side effects; drop the unused result value.
            if (s.expr->kind == ast::Expr::Kind::Call) {
                Stmt c;
                c.kind = StmtKind::Call;
                c.dest = kNoValue;
                c.callee = s.expr->name;
                for (const auto& a : s.expr->args) c.args.push_back(lower_expr(*a));
                emit(std::move(c));
            } else {
                lower_expr(*s.expr);
            }
            return;
        }
        case ast::Stmt::Kind::If: {
            Operand cond = lower_expr(*s.expr);
            BlockId then_b = new_block();
            BlockId join = new_block();
            BlockId else_b = s.else_stmt ? new_block() : join;
            seal_branch(cond, then_b, else_b);
            switch_to(then_b);
            lower_stmt(*s.then_stmt);
            seal_goto(join);
            if (s.else_stmt) {
                switch_to(else_b);
                lower_stmt(*s.else_stmt);
                seal_goto(join);
            }
            switch_to(join);
            return;
        }
        case ast::Stmt::Kind::While: {
            BlockId header = new_block();
            BlockId body = new_block();
            BlockId after = new_block();
            seal_goto(header);
            switch_to(header);
            Operand cond = lower_expr(*s.expr);
            seal_branch(cond, body, after);
            loop_stack_.push_back({after, header});
            switch_to(body);
            lower_stmt(*s.loop_body);
            seal_goto(header);
            loop_stack_.pop_back();
            switch_to(after);
            return;
        }
        case ast::Stmt::Kind::DoWhile: {
            BlockId body = new_block();
            BlockId latch = new_block();
            BlockId after = new_block();
            seal_goto(body);
            loop_stack_.push_back({after, latch});
            switch_to(body);
            lower_stmt(*s.loop_body);
            seal_goto(latch);
            loop_stack_.pop_back();
            switch_to(latch);
            Operand cond = lower_expr(*s.expr);
            seal_branch(cond, body, after);
            switch_to(after);
            return;
        }
        case ast::Stmt::Kind::For: {
            scopes_.emplace_back(); // for-init declarations scope to the loop
            if (s.for_init) lower_stmt(*s.for_init);
            BlockId header = new_block();
            BlockId body = new_block();
            BlockId step = new_block();
            BlockId after = new_block();
            seal_goto(header);
            switch_to(header);
            if (s.expr) {
                Operand cond = lower_expr(*s.expr);
                seal_branch(cond, body, after);
            } else {
                seal_goto(body);
            }
            loop_stack_.push_back({after, step});
            switch_to(body);
            lower_stmt(*s.loop_body);
            seal_goto(step);
            loop_stack_.pop_back();
            switch_to(step);
            if (s.for_step) lower_stmt(*s.for_step);
            seal_goto(header);
            switch_to(after);
            scopes_.pop_back();
            return;
        }
        case ast::Stmt::Kind::Break:
            if (loop_stack_.empty()) error(s.loc, "'break' outside of a loop");
            seal_goto(loop_stack_.back().first);
            switch_to(new_block());
            return;
        case ast::Stmt::Kind::Continue:
            if (loop_stack_.empty()) error(s.loc, "'continue' outside of a loop");
            seal_goto(loop_stack_.back().second);
            switch_to(new_block());
            return;
        case ast::Stmt::Kind::Return: {
            if (s.expr) {
                if (returns_void_) error(s.loc, "void function returns a value");
                Operand v = lower_expr(*s.expr);
                write_slot(retval_slot_, v);
            } else if (!returns_void_) {
                error(s.loc, "non-void function returns without a value");
            }
            seal_goto(epilogue_);
            switch_to(new_block());
            return;
        }
        case ast::Stmt::Kind::Goto: {
            labels_used_.insert(s.label);
            seal_goto(label_block(s.label));
            switch_to(new_block());
            return;
        }
        case ast::Stmt::Kind::Label: {
            if (!labels_defined_.insert(s.label).second)
                error(s.loc, "duplicate label '" + s.label + "'");
            BlockId b = label_block(s.label);
            seal_goto(b);
            switch_to(b);
            lower_stmt(*s.then_stmt);
            return;
        }
        }
    }

    BlockId label_block(const std::string& name) {
        auto it = label_blocks_.find(name);
        if (it != label_blocks_.end()) return it->second;
        BlockId b = new_block();
        label_blocks_[name] = b;
        return b;
    }

    void lower_decl(const ast::Stmt::Declarator& d) {
        if (scopes_.back().count(d.name))
            error(d.loc, "redeclaration of '" + d.name + "' in the same scope");
        if (d.array_size >= 0) {
            std::string mem_name = d.name;
            int suffix = 1;
            while (f_.find_local(mem_name)) mem_name = d.name + "." + std::to_string(suffix++);
            f_.locals.push_back(MemObject{mem_name, d.array_size, false, {}});
            scopes_.back()[d.name] = Binding{Binding::Kind::Array, -1, mem_name};
            if (d.has_array_init)
                for (int i = 0; i < d.array_size; ++i) {
                    int32_t v = i < (int)d.array_init.size() ? d.array_init[i] : 0;
                    emit_store({false, mem_name}, Operand::con(i), Operand::con(v));
                }
            return;
        }
        int slot = new_slot(d.name);
        scopes_.back()[d.name] = Binding{Binding::Kind::Slot, slot, ""};
        if (d.init) write_slot(slot, lower_expr(*d.init));
    }

    void lower_assign(const ast::Stmt& s) {
        const ast::Expr& t = *s.target;
        if (t.kind == ast::Expr::Kind::VarRef) {
            Binding* b = lookup(t.name);
            if (!b) error(t.loc, "use of undeclared identifier '" + t.name + "'");
            if (b->kind == Binding::Kind::Slot) {
                Operand v;
                if (s.compound_op) {
                    Operand curv = read_slot(b->slot, t.name);
                    Operand rhs = lower_expr(*s.value);
                    ValueId tmp = f_.add_value(t.name);
                    Stmt bs;
                    bs.kind = StmtKind::Binary;
                    bs.dest = tmp;
                    bs.bin_op = *s.compound_op;
                    bs.lhs = curv;
                    bs.rhs = rhs;
                    emit(std::move(bs));
                    v = Operand::val(tmp);
                } else {
                    v = lower_expr(*s.value);
                }
                write_slot(b->slot, v);
                return;
            }
            if (b->kind == Binding::Kind::Global) {
                const MemObject* g = prog_.find_global(b->mem_name);
                if (!g || !g->declared_scalar)
                    error(t.loc, "cannot assign to array '" + t.name + "' without an index");
                store_mem({true, b->mem_name}, Operand::con(0), s);
                return;
            }
            error(t.loc, "cannot assign to array '" + t.name + "' without an index");
        }
        // array element
        Binding* b = lookup(t.name);
        if (!b) error(t.loc, "use of undeclared identifier '" + t.name + "'");
        MemRef mem;
        if (b->kind == Binding::Kind::Array) {
            mem = {false, b->mem_name};
        } else if (b->kind == Binding::Kind::Global) {
            const MemObject* g = prog_.find_global(b->mem_name);
            if (!g || g->declared_scalar) error(t.loc, "'" + t.name + "' is not an array");
            mem = {true, b->mem_name};
        } else {
            error(t.loc, "'" + t.name + "' is not an array");
        }
        Operand idx = lower_expr(*t.lhs);
        store_mem_idx(mem, idx, s);
    }

    void store_mem(const MemRef& mem, Operand idx, const ast::Stmt& s) { store_mem_idx(mem, idx, s); }

    void store_mem_idx(const MemRef& mem, Operand idx, const ast::Stmt& s) {
        Operand v;
        if (s.compound_op) {
            Operand curv = emit_load(mem, idx, "");
            Operand rhs = lower_expr(*s.value);
            ValueId tmp = f_.add_value("");
            Stmt bs;
            bs.kind = StmtKind::Binary;
            bs.dest = tmp;
            bs.bin_op = *s.compound_op;
            bs.lhs = curv;
            bs.rhs = rhs;
            emit(std::move(bs));
            v = Operand::val(tmp);
        } else {
            v = lower_expr(*s.value);
        }
        emit_store(mem, idx, v);
    }

    // ---- function -------------------------------------------------------------

    MirFunction lower_function(const ast::FunctionDecl& fd) {
        f_ = MirFunction{};
        f_.name = fd.name;
        returns_void_ = fd.returns_void;
        scopes_.clear();
        scopes_.emplace_back();
        next_slot_ = 0;
        slot_name_.clear();
        loop_stack_.clear();
        label_blocks_.clear();
        labels_defined_.clear();
        labels_used_.clear();

        BlockId entry = new_block();
        f_.entry = entry;
        switch_to(entry);
        for (const auto& p : fd.params) {
            if (scopes_.back().count(p)) error(fd.loc, "duplicate parameter '" + p + "'");
            ValueId pv = f_.add_value(p);
            f_.params.push_back(pv);
            int slot = new_slot(p);
            scopes_.back()[p] = Binding{Binding::Kind::Slot, slot, ""};
            write_slot(slot, Operand::val(pv));
        }
        // globals are the outermost scope
        std::map<std::string, Binding> gscope;
        for (const auto& g : prog_.globals) gscope[g.name] = Binding{Binding::Kind::Global, -1, g.name};
        for (const auto& g : unit_.globals)
            gscope[g.name] = Binding{Binding::Kind::Global, -1, g.name};
        scopes_.insert(scopes_.begin(), std::move(gscope));

        retval_slot_ = new_slot("__ret");
        epilogue_ = new_block();

        lower_stmt(*fd.body);
        seal_goto(epilogue_); // fall off the end

        switch_to(epilogue_);
        if (returns_void_) {
            seal_return(std::nullopt);
        } else {
            Operand rv = read_slot(retval_slot_, "__ret");
            seal_return(rv);
        }

        for (const auto& l : labels_used_)
            if (!labels_defined_.count(l)) error(fd.loc, "label '" + l + "' used but not defined");

        f_.recompute_cfg_edges();
        remove_unreachable_blocks(f_);
        into_ssa(fd);
        simplify_function(f_);

        if (f_.blocks.empty() || std::count_if(f_.blocks.begin(), f_.blocks.end(), [](const BasicBlock& b) {
                return b.successors().empty();
            }) != 1)
            error(fd.loc, "function '" + fd.name + "' never returns");
        return std::move(f_);
    }

    // ---- SSA construction -------------------------------------------------------

    void into_ssa(const ast::FunctionDecl& fd) {
        f_.recompute_cfg_edges();
        DomTree dt = compute_dominators(f_);

        // dominance frontiers
        std::vector<std::set<BlockId>> df(f_.blocks.size());
        for (const auto& b : f_.blocks) {
            if (b.preds.size() < 2) continue;
            for (BlockId p : b.preds) {
                BlockId runner = p;
                while (runner != dt.idom[b.id]) {
                    df[runner].insert(b.id);
                    runner = dt.idom[runner];
                }
            }
        }

        // phi placement at iterated frontiers of each slot's definition blocks
        std::map<int, std::set<BlockId>> defblocks;
        for (const auto& b : f_.blocks)
            for (const auto& s : b.stmts)
                if (s.dest != kNoValue && is_slot(s.dest)) defblocks[slot_of(s.dest)].insert(b.id);

        std::map<ValueId, int> phi_slot;
        for (auto& [slot, defs] : defblocks) {
            std::vector<BlockId> work(defs.begin(), defs.end());
            std::set<BlockId> has_phi;
            while (!work.empty()) {
                BlockId d = work.back();
                work.pop_back();
                for (BlockId frontier : df[d]) {
                    if (!has_phi.insert(frontier).second) continue;
                    Stmt phi;
                    phi.kind = StmtKind::Phi;
                    phi.dest = f_.add_value(slot_name_[slot]);
                    phi.phi_args.assign(f_.block(frontier).preds.size(), Operand::con(0));
                    phi_slot[phi.dest] = slot;
                    auto& stmts = f_.block(frontier).stmts;
                    stmts.insert(stmts.begin(), std::move(phi));
                    if (!defblocks[slot].count(frontier)) work.push_back(frontier);
                }
            }
        }

        // rename along the dominator tree
        std::set<int> warned;
        auto warn_uninit = [&](int slot) {
            if (!warned.insert(slot).second) return;
            const std::string& n = slot_name_[slot];
            if (n == "__ret")
                diags_.warning(SourceLoc{unit_.name, fd.loc.line, fd.loc.col},
                               "control reaches end of non-void function '" + fd.name +
                                   "'; 0 is returned");
            else
                diags_.warning(SourceLoc{unit_.name, fd.loc.line, fd.loc.col},
                               "variable '" + n + "' in '" + fd.name +
                                   "' may be used uninitialized; treated as 0");
        };

        std::function<void(BlockId, std::map<int, Operand>)> visit =
            [&](BlockId bid, std::map<int, Operand> cur) {
                BasicBlock& b = f_.block(bid);
                std::vector<Stmt> kept;
                kept.reserve(b.stmts.size());
                for (auto& s : b.stmts) {
                    if (s.kind == StmtKind::Phi && phi_slot.count(s.dest)) {
                        cur[phi_slot[s.dest]] = Operand::val(s.dest);
                        kept.push_back(std::move(s));
                        continue;
                    }
                    if (s.kind == StmtKind::Copy && s.dest != kNoValue && is_slot(s.dest)) {
                        cur[slot_of(s.dest)] = s.lhs; // slot write, dissolved
                        continue;
                    }
                    if (s.kind == StmtKind::Copy && !s.lhs.is_const && is_slot(s.lhs.value)) {
                        int slot = slot_of(s.lhs.value);
                        auto it = cur.find(slot);
                        if (it == cur.end()) {
                            warn_uninit(slot);
                            s.lhs = Operand::con(0);
                        } else {
                            s.lhs = it->second;
                        }
                        kept.push_back(std::move(s));
                        continue;
                    }
                    kept.push_back(std::move(s));
                }
                b.stmts = std::move(kept);

                for (BlockId succ : b.successors()) {
                    BasicBlock& sb = f_.block(succ);
                    size_t pred_idx = 0;
                    for (; pred_idx < sb.preds.size(); ++pred_idx)
                        if (sb.preds[pred_idx] == bid) break;
                    for (auto& s : sb.stmts) {
                        if (s.kind != StmtKind::Phi || !phi_slot.count(s.dest)) continue;
                        int slot = phi_slot[s.dest];
                        auto it = cur.find(slot);
                        if (it == cur.end()) {
                            warn_uninit(slot);
                            s.phi_args[pred_idx] = Operand::con(0);
                        } else {
                            s.phi_args[pred_idx] = it->second;
                        }
                    }
                }
                for (BlockId child : dt.children[bid]) visit(child, cur);
            };
        visit(f_.entry, {});
    }
};

} // namespace

// ---- cleanup passes --------------------------------------------------------------

void remove_unreachable_blocks(MirFunction& f) {
    f.recompute_cfg_edges();
    std::vector<bool> reach(f.blocks.size(), false);
    std::vector<BlockId> stack{f.entry};
    reach[f.entry] = true;
    while (!stack.empty()) {
        BlockId b = stack.back();
        stack.pop_back();
        for (BlockId s : f.blocks[b].successors())
            if (!reach[s]) {
                reach[s] = true;
                stack.push_back(s);
            }
    }
    bool all = std::all_of(reach.begin(), reach.end(), [](bool r) { return r; });
    if (all) return;

    // remember phi alignment before renumbering
    std::map<BlockId, std::vector<BlockId>> old_preds;
    for (const auto& b : f.blocks) old_preds[b.id] = b.preds;

    std::vector<BlockId> remap(f.blocks.size(), -1);
    std::vector<BasicBlock> kept;
    for (const auto& b : f.blocks)
        if (reach[b.id]) {
            remap[b.id] = (BlockId)kept.size();
            kept.push_back(b);
        }
    for (auto& b : kept) {
        BlockId old_id = b.id;
        b.id = remap[old_id];
        if (b.term.kind != TermKind::Return) {
            b.term.then_target = remap[b.term.then_target];
            if (b.term.kind == TermKind::Branch) b.term.else_target = remap[b.term.else_target];
        }
        // drop phi operands of removed predecessors, preserving order
        std::vector<size_t> kept_idx;
        const auto& prev = old_preds[old_id];
        for (size_t i = 0; i < prev.size(); ++i)
            if (reach[prev[i]]) kept_idx.push_back(i);
        for (auto& s : b.stmts) {
            if (s.kind != StmtKind::Phi) break;
            std::vector<Operand> args;
            for (size_t i : kept_idx)
                if (i < s.phi_args.size()) args.push_back(s.phi_args[i]);
            s.phi_args = std::move(args);
        }
    }
    f.blocks = std::move(kept);
    f.entry = remap[f.entry];
    f.recompute_cfg_edges();
}

namespace {

// Single-operand phis and phis whose operands are all the same value collapse
// to copies so downstream passes see through them.
bool collapse_trivial_phis(MirFunction& f) {
    bool changed = false;
    for (auto& b : f.blocks)
        for (auto& s : b.stmts) {
            if (s.kind != StmtKind::Phi || s.phi_args.empty()) continue;
            std::optional<Operand> unique;
            bool trivial = true;
            for (const auto& a : s.phi_args) {
                if (!a.is_const && a.value == s.dest) continue; // self reference
                if (!unique)
                    unique = a;
                else if (!(*unique == a)) {
                    trivial = false;
                    break;
                }
            }
            if (trivial && unique) {
                Stmt c;
                c.kind = StmtKind::Copy;
                c.dest = s.dest;
                c.lhs = *unique;
                s = std::move(c);
                changed = true;
            }
        }
    return changed;
}

} // namespace

void simplify_function(MirFunction& f) {
    bool outer_changed = true;
    while (outer_changed) {
        outer_changed = false;
        f.recompute_cfg_edges();

        collapse_trivial_phis(f);

        // copy propagation
        std::map<ValueId, Operand> copy_of;
        for (const auto& b : f.blocks)
            for (const auto& s : b.stmts)
                if (s.kind == StmtKind::Copy && s.dest != kNoValue) copy_of[s.dest] = s.lhs;
        std::function<Operand(Operand)> resolve = [&](Operand o) {
            while (!o.is_const) {
                auto it = copy_of.find(o.value);
                if (it == copy_of.end()) break;
                o = it->second;
            }
            return o;
        };
        auto subst = [&](Operand& o) {
            Operand r = resolve(o);
            if (!(r == o)) {
                o = r;
                outer_changed = true;
            }
        };
        for (auto& b : f.blocks) {
            for (auto& s : b.stmts) {
                switch (s.kind) {
                case StmtKind::Copy:
                case StmtKind::Unary:
                case StmtKind::Load: subst(s.lhs); break;
                case StmtKind::Binary:
                    subst(s.lhs);
                    subst(s.rhs);
                    break;
                case StmtKind::Store:
                    subst(s.lhs);
                    subst(s.rhs);
                    break;
                case StmtKind::Call:
                    for (auto& a : s.args) subst(a);
                    break;
                case StmtKind::Phi:
                    for (auto& a : s.phi_args) subst(a);
                    break;
                default: break;
                }
            }
            if (b.term.kind == TermKind::Branch) subst(b.term.cond);
            if (b.term.kind == TermKind::Return && b.term.has_value) subst(b.term.value);
        }

        // constant folding (traps stay unfolded)
        for (auto& b : f.blocks)
            for (auto& s : b.stmts) {
                if (s.kind == StmtKind::Binary && s.lhs.is_const && s.rhs.is_const) {
                    if (auto v = eval_bin(s.bin_op, s.lhs.imm, s.rhs.imm)) {
                        Stmt c;
                        c.kind = StmtKind::Const;
                        c.dest = s.dest;
                        c.imm = *v;
                        s = std::move(c);
                        outer_changed = true;
                    }
                } else if (s.kind == StmtKind::Unary && s.lhs.is_const) {
                    Stmt c;
                    c.kind = StmtKind::Const;
                    c.dest = s.dest;
                    c.imm = eval_un(s.un_op, s.lhs.imm);
                    s = std::move(c);
                    outer_changed = true;
                }
            }
        // const statements feed operands directly
        std::map<ValueId, int32_t> const_of;
        for (const auto& b : f.blocks)
            for (const auto& s : b.stmts)
                if (s.kind == StmtKind::Const) const_of[s.dest] = s.imm;
        auto subst_const = [&](Operand& o) {
            if (!o.is_const && const_of.count(o.value)) {
                o = Operand::con(const_of[o.value]);
                outer_changed = true;
            }
        };
        for (auto& b : f.blocks) {
            for (auto& s : b.stmts) {
                switch (s.kind) {
                case StmtKind::Copy:
                case StmtKind::Unary:
                case StmtKind::Load: subst_const(s.lhs); break;
                case StmtKind::Binary:
                    subst_const(s.lhs);
                    subst_const(s.rhs);
                    break;
                case StmtKind::Store:
                    subst_const(s.lhs);
                    subst_const(s.rhs);
                    break;
                case StmtKind::Call:
                    for (auto& a : s.args) subst_const(a);
                    break;
                case StmtKind::Phi:
                    for (auto& a : s.phi_args) subst_const(a);
                    break;
                default: break;
                }
            }
            if (b.term.kind == TermKind::Branch) subst_const(b.term.cond);
            if (b.term.kind == TermKind::Return && b.term.has_value) subst_const(b.term.value);
        }

        // fold constant branches
        bool cfg_changed = false;
        for (auto& b : f.blocks)
            if (b.term.kind == TermKind::Branch && b.term.cond.is_const) {
                BlockId target = b.term.cond.imm != 0 ? b.term.then_target : b.term.else_target;
                BlockId dropped = b.term.cond.imm != 0 ? b.term.else_target : b.term.then_target;
                if (dropped != target) {
                    // drop this block's operand from the abandoned edge's phis
                    BasicBlock& db = f.block(dropped);
                    size_t idx = 0;
                    for (; idx < db.preds.size(); ++idx)
                        if (db.preds[idx] == b.id) break;
                    if (idx < db.preds.size())
                        for (auto& s : db.stmts) {
                            if (s.kind != StmtKind::Phi) break;
                            if (idx < s.phi_args.size()) s.phi_args.erase(s.phi_args.begin() + idx);
                        }
                }
                b.term = Terminator{TermKind::Goto, {}, target, -1, false, {}};
                cfg_changed = true;
                f.recompute_cfg_edges();
            }
        if (cfg_changed) {
            remove_unreachable_blocks(f);
            outer_changed = true;
        }

        // dead code elimination over pure statements
        std::map<ValueId, int> uses;
        auto count_use = [&](const Operand& o) {
            if (!o.is_const && o.value != kNoValue) uses[o.value]++;
        };
        for (const auto& b : f.blocks) {
            for (const auto& s : b.stmts) {
                switch (s.kind) {
                case StmtKind::Copy:
                case StmtKind::Unary:
                case StmtKind::Load: count_use(s.lhs); break;
                case StmtKind::Binary:
                case StmtKind::Store:
                    count_use(s.lhs);
                    count_use(s.rhs);
                    break;
                case StmtKind::Call:
                    for (const auto& a : s.args) count_use(a);
                    break;
                case StmtKind::Phi:
                    for (const auto& a : s.phi_args) count_use(a);
                    break;
                default: break;
                }
            }
            if (b.term.kind == TermKind::Branch) count_use(b.term.cond);
            if (b.term.kind == TermKind::Return && b.term.has_value) count_use(b.term.value);
        }
        for (auto& b : f.blocks) {
            auto is_dead = [&](const Stmt& s) {
                if (s.dest == kNoValue || uses.count(s.dest)) return false;
                switch (s.kind) {
                case StmtKind::Const:
                case StmtKind::Copy:
                case StmtKind::Unary:
                case StmtKind::Binary:
                case StmtKind::Load:
                case StmtKind::Phi: return true;
                default: return false; // calls and stores stay
                }
            };
            size_t before = b.stmts.size();
            b.stmts.erase(std::remove_if(b.stmts.begin(), b.stmts.end(), is_dead), b.stmts.end());
            if (b.stmts.size() != before) outer_changed = true;
        }
    }

    // compact the value table
    std::vector<ValueId> remap(f.values.size(), kNoValue);
    std::vector<ValueInfo> new_values;
    auto keep = [&](ValueId v) {
        if (v == kNoValue || remap[v] != kNoValue) return;
        remap[v] = (ValueId)new_values.size();
        new_values.push_back(f.values[v]);
    };
    for (ValueId p : f.params) keep(p);
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts) keep(s.dest);
    auto fix = [&](Operand& o) {
        if (!o.is_const && o.value != kNoValue) o.value = remap[o.value];
    };
    for (auto& b : f.blocks) {
        for (auto& s : b.stmts) {
            if (s.dest != kNoValue) s.dest = remap[s.dest];
            fix(s.lhs);
            fix(s.rhs);
            for (auto& a : s.args) fix(a);
            for (auto& a : s.phi_args) fix(a);
        }
        fix(b.term.cond);
        fix(b.term.value);
    }
    for (auto& p : f.params) p = remap[p];
    f.values = std::move(new_values);
    f.recompute_cfg_edges();
}

bool build_ssa_cfg(const ast::UnitAst& unit, MirProgram& program, DiagEngine& diags) {
    Lowerer l(unit, program, diags);
    return l.run();
}

std::optional<MirProgram> compile_units(
    const std::vector<std::pair<std::string, std::string>>& name_and_source, DiagEngine& diags) {
    std::vector<ast::UnitAst> asts;
    bool ok = true;
    for (const auto& [name, source] : name_and_source) {
        auto u = ast::parse_unit(source, name, diags);
        if (!u) {
            ok = false;
            continue;
        }
        asts.push_back(std::move(*u));
    }
    if (!ok) return std::nullopt;

    MirProgram p;
    for (const auto& u : asts)
        for (const auto& g : u.globals) {
            if (p.find_global(g.name)) {
                diags.error(g.loc, "duplicate global '" + g.name + "' (first declared in another unit)");
                ok = false;
                continue;
            }
            MemObject m;
            m.name = g.name;
            m.size = g.array_size < 0 ? 1 : g.array_size;
            m.declared_scalar = g.array_size < 0;
            m.init = g.init;
            p.globals.push_back(std::move(m));
        }
    for (const auto& u : asts)
        if (!build_ssa_cfg(u, p, diags)) ok = false;
    if (!ok) return std::nullopt;

    if (p.find_function("main")) p.entry = "main";
    auto violations = validate(p);
    for (const auto& v : violations) diags.error("invalid program: " + v);
    if (!violations.empty()) return std::nullopt;
    return p;
}

} // namespace loopforge::frontend

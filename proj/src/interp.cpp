#include "loopforge/interp.hpp"

#include <algorithm>
#include <set>

#include "loopforge/int32ops.hpp"

namespace loopforge::interp {

using namespace mir;

struct Machine::Frame {
    const MirFunction& f;
    std::map<ValueId, int32_t> env;
    MemImage locals;
    BlockId block;
    BlockId came_from = -1;
};

Machine::Machine(const MirProgram& p, Limits limits) : prog_(p), limits_(limits) {
    reset_globals();
}

void Machine::reset_globals() {
    globals_.clear();
    for (const auto& g : prog_.globals) {
        std::vector<int32_t> image(g.size, 0);
        for (size_t i = 0; i < g.init.size() && i < image.size(); ++i) image[i] = g.init[i];
        globals_[g.name] = std::move(image);
    }
}

void Machine::register_builtin(const std::string& name, Builtin fn) {
    builtins_[name] = std::move(fn);
}

RunResult Machine::run(const std::string& entry, const std::vector<int32_t>& args) {
    const MirFunction* f = prog_.find_function(entry);
    if (!f) throw ExecError("entry function '" + entry + "' not found");
    if (args.size() != f->params.size())
        throw ExecError("entry '" + entry + "' expects " + std::to_string(f->params.size()) +
                        " arguments, got " + std::to_string(args.size()));
    steps_ = 0;
    calls_.clear();
    stores_.clear();
    RunResult r;
    r.ret = exec_function(*f, args, 0);
    r.steps = steps_;
    r.calls = std::move(calls_);
    r.stores = std::move(stores_);
    return r;
}

namespace {

int32_t operand_value(const std::map<ValueId, int32_t>& env, const Operand& o) {
    if (o.is_const) return o.imm;
    auto it = env.find(o.value);
    if (it == env.end()) throw ExecError("use of value %" + std::to_string(o.value) + " before definition");
    return it->second;
}

} // namespace

void Machine::exec_stmt(Frame& fr, const Stmt& s, int depth) {
    auto& env = fr.env;
    switch (s.kind) {
    case StmtKind::Const: env[s.dest] = s.imm; break;
    case StmtKind::Copy: env[s.dest] = operand_value(env, s.lhs); break;
    case StmtKind::Unary: env[s.dest] = eval_un(s.un_op, operand_value(env, s.lhs)); break;
    case StmtKind::Binary: {
        auto v = eval_bin(s.bin_op, operand_value(env, s.lhs), operand_value(env, s.rhs));
        if (!v)
            throw ExecError("division by zero in '" + fr.f.name + "' (bb" + std::to_string(fr.block) +
                            ")");
        env[s.dest] = *v;
        break;
    }
    case StmtKind::Load: {
        MemImage& image = s.mem.is_global ? globals_ : fr.locals;
        auto it = image.find(s.mem.name);
        if (it == image.end()) throw ExecError("unknown memory object '" + s.mem.name + "'");
        int32_t idx = operand_value(env, s.lhs);
        if (idx < 0 || (size_t)idx >= it->second.size())
            throw ExecError("index " + std::to_string(idx) + " out of range for '" + s.mem.name +
                            "' (size " + std::to_string(it->second.size()) + ") in '" + fr.f.name + "'");
        env[s.dest] = it->second[idx];
        break;
    }
    case StmtKind::Store: {
        MemImage& image = s.mem.is_global ? globals_ : fr.locals;
        auto it = image.find(s.mem.name);
        if (it == image.end()) throw ExecError("unknown memory object '" + s.mem.name + "'");
        int32_t idx = operand_value(env, s.lhs);
        if (idx < 0 || (size_t)idx >= it->second.size())
            throw ExecError("index " + std::to_string(idx) + " out of range for '" + s.mem.name +
                            "' (size " + std::to_string(it->second.size()) + ") in '" + fr.f.name + "'");
        int32_t v = operand_value(env, s.rhs);
        it->second[idx] = v;
        if (trace_) stores_.push_back({s.mem.is_global, s.mem.name, idx, v});
        break;
    }
    case StmtKind::Call: {
        std::vector<int32_t> args;
        args.reserve(s.args.size());
        for (const auto& a : s.args) args.push_back(operand_value(env, a));
        if (trace_) calls_.push_back({s.callee, args});
        int32_t result;
        if (const MirFunction* callee = prog_.find_function(s.callee)) {
            if (args.size() != callee->params.size())
                throw ExecError("call to '" + s.callee + "' with " + std::to_string(args.size()) +
                                " arguments, expected " + std::to_string(callee->params.size()));
            result = exec_function(*callee, args, depth + 1);
        } else {
            auto it = builtins_.find(s.callee);
            if (it == builtins_.end())
                throw ExecError("call to undefined function '" + s.callee + "'");
            result = it->second(args);
        }
        if (s.dest != kNoValue) env[s.dest] = result;
        break;
    }
    case StmtKind::Phi: break; // handled on block entry
    }
}

int32_t Machine::exec_function(const MirFunction& f, const std::vector<int32_t>& args, int depth) {
    if (depth > limits_.max_call_depth) throw ExecError("call depth limit exceeded in '" + f.name + "'");
    Frame fr{f, {}, {}, f.entry, -1};
    for (size_t i = 0; i < f.params.size(); ++i) fr.env[f.params[i]] = args[i];
    for (const auto& l : f.locals) fr.locals[l.name] = std::vector<int32_t>(l.size, 0);

    while (true) {
        const BasicBlock& b = f.block(fr.block);
        // phis evaluate in parallel against the predecessor environment
        if (fr.came_from >= 0) {
            size_t pred_idx = 0;
            const auto& preds = b.preds;
            for (; pred_idx < preds.size(); ++pred_idx)
                if (preds[pred_idx] == fr.came_from) break;
            std::vector<std::pair<ValueId, int32_t>> incoming;
            for (const auto& s : b.stmts) {
                if (s.kind != StmtKind::Phi) break;
                if (pred_idx >= s.phi_args.size())
                    throw ExecError("phi operand missing for predecessor in '" + f.name + "'");
                incoming.push_back({s.dest, operand_value(fr.env, s.phi_args[pred_idx])});
                ++steps_;
            }
            for (auto& [v, val] : incoming) fr.env[v] = val;
        }
        for (const auto& s : b.stmts) {
            if (s.kind == StmtKind::Phi) continue;
            if (++steps_ > limits_.max_steps) throw ExecError("step limit exceeded in '" + f.name + "'");
            exec_stmt(fr, s, depth);
        }
        ++steps_;
        switch (b.term.kind) {
        case TermKind::Goto:
            fr.came_from = fr.block;
            fr.block = b.term.then_target;
            break;
        case TermKind::Branch: {
            int32_t c = operand_value(fr.env, b.term.cond);
            fr.came_from = fr.block;
            fr.block = c != 0 ? b.term.then_target : b.term.else_target;
            break;
        }
        case TermKind::Return:
            return b.term.has_value ? operand_value(fr.env, b.term.value) : 0;
        }
        if (steps_ > limits_.max_steps) throw ExecError("step limit exceeded in '" + f.name + "'");
    }
}

RegionResult Machine::run_region(const MirFunction& f, const LoopNode& loop,
                                 const std::map<ValueId, int32_t>& live_in, MemImage& locals) {
    steps_ = 0;
    stores_.clear();
    calls_.clear();

    // unique outside predecessor supplies the phi entry operands
    BlockId outside_pred = -1;
    {
        MirFunction g = f;
        g.recompute_cfg_edges();
        for (BlockId p : g.block(loop.header).preds)
            if (!loop.contains(p)) {
                if (outside_pred != -1) throw ExecError("loop header has multiple entries");
                outside_pred = p;
            }
    }
    if (outside_pred == -1) throw ExecError("loop header has no outside predecessor");

    RegionResult out;
    Frame fr{f, {}, {}, loop.header, outside_pred};
    fr.env = live_in;
    std::swap(fr.locals, locals);
    bool trace_was = trace_;
    trace_ = true;

    try {
        while (true) {
            const BasicBlock& b = f.block(fr.block);
            if (fr.block == loop.header) ++out.iterations;
            {
                size_t pred_idx = 0;
                for (; pred_idx < b.preds.size(); ++pred_idx)
                    if (b.preds[pred_idx] == fr.came_from) break;
                std::vector<std::pair<ValueId, int32_t>> incoming;
                for (const auto& s : b.stmts) {
                    if (s.kind != StmtKind::Phi) break;
                    if (pred_idx >= s.phi_args.size() || pred_idx >= b.preds.size())
                        throw ExecError("phi operand missing in region execution");
                    incoming.push_back({s.dest, operand_value(fr.env, s.phi_args[pred_idx])});
                    ++steps_;
                }
                for (auto& [v, val] : incoming) fr.env[v] = val;
            }
            for (const auto& s : b.stmts) {
                if (s.kind == StmtKind::Phi) continue;
                if (s.kind == StmtKind::Call) throw ExecError("call inside a synthesized region");
                if (++steps_ > limits_.max_steps)
                    throw ExecError("step limit exceeded in region of '" + f.name + "'");
                exec_stmt(fr, s, 0);
            }
            ++steps_;
            BlockId next;
            if (b.term.kind == TermKind::Goto) {
                next = b.term.then_target;
            } else if (b.term.kind == TermKind::Branch) {
                next = operand_value(fr.env, b.term.cond) != 0 ? b.term.then_target : b.term.else_target;
            } else {
                throw ExecError("return inside a loop body block"); // exits leave via edges
            }
            if (!loop.contains(next)) {
                int exit_id = 0;
                for (size_t i = 0; i < loop.exit_edges.size(); ++i)
                    if (loop.exit_edges[i].first == fr.block && loop.exit_edges[i].second == next)
                        exit_id = (int)i + 1;
                if (exit_id == 0) throw ExecError("untracked exit edge in region execution");
                out.exit_id = exit_id;
                break;
            }
            fr.came_from = fr.block;
            fr.block = next;
            if (steps_ > limits_.max_steps)
                throw ExecError("step limit exceeded in region of '" + f.name + "'");
        }
    } catch (...) {
        std::swap(fr.locals, locals);
        trace_ = trace_was;
        throw;
    }
    std::swap(fr.locals, locals);
    trace_ = trace_was;
    out.values = std::move(fr.env);
    out.steps = steps_;
    out.stores = std::move(stores_);
    return out;
}

// ---- live sets -----------------------------------------------------------------

namespace {

void for_each_use(const Stmt& s, const std::function<void(const Operand&)>& fn) {
    switch (s.kind) {
    case StmtKind::Copy:
    case StmtKind::Unary:
    case StmtKind::Load: fn(s.lhs); break;
    case StmtKind::Binary:
    case StmtKind::Store:
        fn(s.lhs);
        fn(s.rhs);
        break;
    case StmtKind::Call:
        for (const auto& a : s.args) fn(a);
        break;
    case StmtKind::Phi: break; // edge-sensitive, handled by callers
    default: break;
    }
}

std::set<ValueId> defined_in_loop(const MirFunction& f, const LoopNode& loop) {
    std::set<ValueId> defs;
    for (BlockId b : loop.body)
        for (const auto& s : f.block(b).stmts)
            if (s.dest != kNoValue) defs.insert(s.dest);
    return defs;
}

} // namespace

std::vector<ValueId> region_live_ins(const MirFunction& f, const LoopNode& loop) {
    MirFunction g = f;
    g.recompute_cfg_edges();
    std::set<ValueId> defs = defined_in_loop(g, loop);
    std::vector<ValueId> out;
    std::set<ValueId> seen;
    auto note = [&](const Operand& o) {
        if (o.is_const || defs.count(o.value)) return;
        if (seen.insert(o.value).second) out.push_back(o.value);
    };
    for (BlockId bid : loop.body) {
        const BasicBlock& b = g.block(bid);
        for (const auto& s : b.stmts) {
            if (s.kind == StmtKind::Phi) {
                for (size_t i = 0; i < s.phi_args.size() && i < b.preds.size(); ++i)
                    note(s.phi_args[i]); // entry operands are live-in, latch ones are defs
                continue;
            }
            for_each_use(s, note);
        }
        if (b.term.kind == TermKind::Branch) note(b.term.cond);
        if (b.term.kind == TermKind::Return && b.term.has_value) note(b.term.value);
    }
    return out;
}

} // namespace loopforge::interp

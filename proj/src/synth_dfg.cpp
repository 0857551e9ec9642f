#include <algorithm>
#include <cassert>
#include <functional>

#include "loopforge/int32ops.hpp"
#include "loopforge/interp.hpp"
#include "loopforge/synth.hpp"

namespace loopforge::synth {

using namespace mir;

// ---- cost model ---------------------------------------------------------------

long long CostModel::delay_of(const std::string& op) const {
    auto it = op_delay.find(op);
    return it != op_delay.end() ? it->second : 1;
}

long long CostModel::sw_cycles_of(const std::string& op) const {
    auto it = sw_cycles.find(op);
    return it != sw_cycles.end() ? it->second : 1;
}

CostModel default_cost_model() {
    CostModel m;
    m.op_delay = {
        {"add", 2}, {"sub", 2}, {"and", 2}, {"or", 2},  {"xor", 2},   {"cmp", 2},
        {"shl", 1}, {"shr", 1}, {"mul", 6}, {"div", 20}, {"rem", 20}, {"neg", 2},
        {"bitnot", 1}, {"select", 1}, {"const", 0}, {"regread", 0}, {"regwrite", 0},
        {"exit", 0},
    };
    m.sw_cycles = {
        {"simple", 1}, {"mul", 3}, {"div", 20}, {"rem", 20}, {"branch", 2},
        {"load", 1}, {"store", 1}, {"goto", 1}, {"return", 1},
    };
    return m;
}

namespace {

const char* bin_delay_key(BinOp op) {
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
    default: return "cmp";
    }
}

} // namespace

long long node_delay(const DfgNode& n, const CostModel& m) {
    switch (n.kind) {
    case NodeKind::Const: return m.delay_of("const");
    case NodeKind::RegRead: return m.delay_of("regread");
    case NodeKind::BinOp: return m.delay_of(bin_delay_key(n.bin_op));
    case NodeKind::UnOp: return m.delay_of(n.un_op == UnOp::Neg ? "neg" : "bitnot");
    case NodeKind::Select: return m.delay_of("select");
    case NodeKind::RegWrite: return m.delay_of("regwrite");
    case NodeKind::ExitCond: return m.delay_of("exit");
    case NodeKind::Load:
    case NodeKind::Store: return m.clock_budget; // alone in their state
    }
    return 1;
}

// ---- boundary analysis ------------------------------------------------------------

Boundary analyze_boundary(const MirFunction& fin, const LoopNode& loop) {
    MirFunction f = fin;
    f.recompute_cfg_edges();

    Boundary out;
    out.live_ins = interp::region_live_ins(f, loop);

    std::set<ValueId> defs;
    for (BlockId b : loop.body)
        for (const auto& s : f.block(b).stmts)
            if (s.dest != kNoValue) defs.insert(s.dest);

    auto loop_defined = [&](const Operand& o) { return !o.is_const && defs.count(o.value); };

    // exit-target phis reached by exit edges
    std::set<std::pair<BlockId, int>> phi_seen;
    std::set<ValueId> covered_by_phi;
    for (size_t k = 0; k < loop.exit_edges.size(); ++k) {
        auto [src, tgt] = loop.exit_edges[k];
        const BasicBlock& t = f.block(tgt);
        size_t pred_idx = 0;
        for (; pred_idx < t.preds.size(); ++pred_idx)
            if (t.preds[pred_idx] == src) break;
        int pos = 0;
        for (const auto& s : t.stmts) {
            if (s.kind != StmtKind::Phi) break;
            const Operand& arg = s.phi_args[pred_idx];
            bool fsm_provides = arg.is_const || loop_defined(arg);
            if (loop_defined(arg)) covered_by_phi.insert(arg.value);
            if (phi_seen.insert({tgt, pos}).second) {
                OutputSpec o;
                o.is_phi = true;
                o.phi_block = tgt;
                o.phi_pos = pos;
                o.per_exit.assign(loop.exit_edges.size(), std::nullopt);
                o.name = f.values[s.dest].name;
                out.outputs.push_back(std::move(o));
            }
            for (auto& o : out.outputs)
                if (o.is_phi && o.phi_block == tgt && o.phi_pos == pos && fsm_provides)
                    o.per_exit[k] = arg;
            ++pos;
        }
    }
    // drop phi outputs the FSM never provides a value for
    out.outputs.erase(std::remove_if(out.outputs.begin(), out.outputs.end(),
                                     [](const OutputSpec& o) {
                                         for (const auto& e : o.per_exit)
                                             if (e) return false;
                                         return true;
                                     }),
                      out.outputs.end());

    // plain live-outs: loop-defined values used outside the loop other than
    // through an exit-target phi on the exit edge
    std::set<ValueId> plain;
    auto note_plain = [&](const Operand& o) {
        if (loop_defined(o)) plain.insert(o.value);
    };
    for (const auto& b : f.blocks) {
        if (loop.contains(b.id)) continue;
        for (const auto& s : b.stmts) {
            if (s.kind == StmtKind::Phi) {
                for (size_t i = 0; i < s.phi_args.size() && i < b.preds.size(); ++i) {
                    BlockId p = b.preds[i];
                    bool is_exit_edge = false;
                    for (const auto& [es, et] : loop.exit_edges)
                        if (es == p && et == b.id) is_exit_edge = true;
                    if (!is_exit_edge) note_plain(s.phi_args[i]);
                }
                continue;
            }
            switch (s.kind) {
            case StmtKind::Copy:
            case StmtKind::Unary:
            case StmtKind::Load: note_plain(s.lhs); break;
            case StmtKind::Binary:
            case StmtKind::Store:
                note_plain(s.lhs);
                note_plain(s.rhs);
                break;
            case StmtKind::Call:
                for (const auto& a : s.args) note_plain(a);
                break;
            default: break;
            }
        }
        if (b.term.kind == TermKind::Branch) note_plain(b.term.cond);
        if (b.term.kind == TermKind::Return && b.term.has_value) note_plain(b.term.value);
    }
    for (ValueId v : plain) {
        OutputSpec o;
        o.is_phi = false;
        o.plain_value = v;
        o.name = f.values[v].name;
        out.outputs.push_back(std::move(o));
    }
    return out;
}

// ---- if-conversion ---------------------------------------------------------------

int Dfg::input_reg(int io_index) const { return io_index; }
int Dfg::output_reg(int io_index) const { return (int)input_names.size() + io_index; }

namespace {

std::string sanitize(const std::string& hint, const std::string& fallback,
                     std::set<std::string>& used) {
    std::string base;
    for (char c : hint)
        if (isalnum((unsigned char)c) || c == '_') base.push_back(c);
    if (base.empty() || isdigit((unsigned char)base[0])) base = fallback;
    std::string name = base;
    int suffix = 2;
    while (!used.insert(name).second) name = base + "_" + std::to_string(suffix++);
    return name;
}

struct Builder {
    const MirProgram& prog;
    const MirFunction& f; // with fresh pred edges
    const LoopForest& forest;
    int root_index;
    DiagEngine& diags;

    Builder(const MirProgram& p, const MirFunction& fn, const LoopForest& fo, int idx,
            DiagEngine& dg)
        : prog(p), f(fn), forest(fo), root_index(idx), diags(dg) {}

    Dfg d;
    const LoopNode* root = nullptr;
    std::map<BlockId, int> level_of_block; // own blocks only
    std::map<int, int> level_of_loop;      // forest index -> level id
    std::map<BlockId, int> hb_of_block;
    std::map<BlockId, int> hb_of_entry;
    std::map<ValueId, int> reg_of_value;
    std::map<std::pair<BlockId, int>, int> phi_reg; // (block, phi pos) -> reg
    std::map<int, std::set<int>> value_use_hbs;     // value -> hyperblocks using it
    std::map<ValueId, int> def_hb;
    std::map<std::pair<int, int32_t>, NodeId> const_cache;  // (hb, imm)
    std::map<std::pair<int, int>, NodeId> regread_cache;    // (hb, reg)
    std::map<std::pair<int, BlockId>, NodeId> block_pred;   // (hb, block)
    std::map<ValueId, NodeId> val_node;                     // per current hb
    std::map<std::string, int> mem_index;

    bool reject(const std::string& why) {
        diags.warning("loop candidate '" + d.loop_name + "' in '" + f.name + "' rejected: " + why);
        return false;
    }

    NodeId add_node(DfgNode n, int hb) {
        n.id = (NodeId)d.nodes.size();
        n.hyperblock = hb;
        d.nodes.push_back(n);
        d.hyperblocks[hb].nodes.push_back(n.id);
        return n.id;
    }

    NodeId const_node(int hb, int32_t imm) {
        auto key = std::make_pair(hb, imm);
        auto it = const_cache.find(key);
        if (it != const_cache.end()) return it->second;
        DfgNode n;
        n.kind = NodeKind::Const;
        n.imm = imm;
        NodeId id = add_node(n, hb);
        const_cache[key] = id;
        return id;
    }

    NodeId regread_node(int hb, int reg) {
        auto key = std::make_pair(hb, reg);
        auto it = regread_cache.find(key);
        if (it != regread_cache.end()) return it->second;
        DfgNode n;
        n.kind = NodeKind::RegRead;
        n.reg = reg;
        NodeId id = add_node(n, hb);
        regread_cache[key] = id;
        return id;
    }

    NodeId bin_node(int hb, BinOp op, NodeId a, NodeId b) {
        DfgNode n;
        n.kind = NodeKind::BinOp;
        n.bin_op = op;
        n.operands = {a, b};
        return add_node(n, hb);
    }

    NodeId and_node(int hb, NodeId a, NodeId b) {
        if (a == kNoNode) return b;
        if (b == kNoNode) return a;
        return bin_node(hb, BinOp::And, a, b);
    }
    NodeId or_node(int hb, NodeId a, NodeId b) {
        if (a == kNoNode || b == kNoNode) return kNoNode; // true
        return bin_node(hb, BinOp::Or, a, b);
    }
    NodeId not_node(int hb, NodeId a) {
        if (a == kNoNode) return const_node(hb, 0);
        return bin_node(hb, BinOp::Xor, a, const_node(hb, 1));
    }

    int reg_for_value(ValueId v) {
        auto it = reg_of_value.find(v);
        if (it != reg_of_value.end()) return it->second;
        std::set<std::string> used;
        for (const auto& r : d.regs) used.insert(r.name);
        std::string hint = f.values[v].name;
        FsmReg r{sanitize(hint, "v" + std::to_string(v), used), RegRole::Internal, -1};
        d.regs.push_back(r);
        int idx = (int)d.regs.size() - 1;
        reg_of_value[v] = idx;
        return idx;
    }

    // operand inside hyperblock hb: wire when defined here, register otherwise
    NodeId operand_node(int hb, const Operand& o) {
        if (o.is_const) return const_node(hb, o.imm);
        ValueId v = o.value;
        auto dh = def_hb.find(v);
        if (dh != def_hb.end() && dh->second == hb) {
            auto vn = val_node.find(v);
            if (vn == val_node.end())
                throw std::logic_error("dfg construction: value used before definition");
            return vn->second;
        }
        // live-in or cross-hyperblock value
        auto li = std::find(d.live_ins.begin(), d.live_ins.end(), v);
        if (li != d.live_ins.end())
            return regread_node(hb, d.input_reg((int)(li - d.live_ins.begin())));
        return regread_node(hb, reg_for_value(v));
    }

    // ---------------- construction ----------------

    bool run() {
        root = &forest.loops[root_index];

        // structural prerequisites
        int outside_preds = 0;
        for (BlockId p : f.block(root->header).preds)
            if (!root->contains(p)) ++outside_preds;
        if (outside_preds != 1) return reject("loop header has multiple entries");
        for (BlockId b : root->body)
            for (const auto& s : f.block(b).stmts)
                if (s.kind == StmtKind::Call) return reject("contains a call");

        build_levels(root_index, -1);
        for (auto& [li, lvl] : level_of_loop) {
            const LoopNode& loop = forest.loops[li];
            for (BlockId latch : loop.latches)
                if (level_of_block.count(latch) == 0 || level_of_block[latch] != lvl)
                    return reject("latch outside its own loop level");
        }
        if (!build_hyperblocks()) return false;

        // boundary and registers
        Boundary boundary = analyze_boundary(f, *root);
        d.live_ins = boundary.live_ins;
        d.outputs = boundary.outputs;
        std::set<std::string> used_names{"bb_idx", "clk", "rst", "start", "done", "busy"};
        for (size_t i = 0; i < d.live_ins.size(); ++i) {
            std::string n = sanitize(f.values[d.live_ins[i]].name, "in" + std::to_string(i), used_names);
            d.input_names.push_back(n);
            d.regs.push_back({n, RegRole::Input, (int)i});
        }
        for (size_t i = 0; i < d.outputs.size(); ++i) {
            std::string base = d.outputs[i].name.empty() ? "out" + std::to_string(i) : d.outputs[i].name;
            std::string n = sanitize(base + "_out", "out" + std::to_string(i), used_names);
            d.outputs[i].name = n;
            d.regs.push_back({n, RegRole::Output, (int)i});
        }
        d.regs.push_back({"bb_idx", RegRole::BbIdx, -1});
        d.bb_idx_reg = (int)d.regs.size() - 1;
        for (size_t i = 0; i < d.live_ins.size(); ++i)
            reg_of_value[d.live_ins[i]] = d.input_reg((int)i);
        for (size_t i = 0; i < d.outputs.size(); ++i)
            if (!d.outputs[i].is_phi) reg_of_value[d.outputs[i].plain_value] = d.output_reg((int)i);

        // memory channels in first-access order
        for (BlockId b : ordered_body())
            for (const auto& s : f.block(b).stmts)
                if (s.kind == StmtKind::Load || s.kind == StmtKind::Store) {
                    std::string key = (s.mem.is_global ? "@" : "") + s.mem.name;
                    if (!mem_index.count(key)) {
                        mem_index[key] = (int)d.mems.size();
                        d.mems.push_back(s.mem);
                    }
                }

        // exit table
        for (size_t k = 0; k < root->exit_edges.size(); ++k)
            d.exits.push_back({(int)k + 1, root->exit_edges[k].first});

        compute_phi_regs();
        compute_value_uses();
        compute_def_hbs();

        build_prologue();
        for (size_t h = 1; h < d.hyperblocks.size(); ++h)
            if (!build_hyperblock((int)h)) return false;
        return true;
    }

    std::vector<BlockId> ordered_body() {
        std::vector<BlockId> all(root->body.begin(), root->body.end());
        return all;
    }

    void build_levels(int loop_idx, int parent_level) {
        const LoopNode& loop = forest.loops[loop_idx];
        LevelInfo info;
        info.id = (int)d.levels.size();
        info.parent = parent_level;
        info.header = loop.header;
        info.est_trips = loop.local_count + 1;
        info.trips_heuristic = loop.count_is_heuristic;
        d.levels.push_back(info);
        int level = info.id;
        level_of_loop[loop_idx] = level;

        std::set<BlockId> own(loop.body.begin(), loop.body.end());
        for (int c : loop.children)
            for (BlockId b : forest.loops[c].body) own.erase(b);
        for (BlockId b : own) level_of_block[b] = level;
        for (int c : loop.children) build_levels(c, level);
    }

    bool build_hyperblocks() {
        d.hyperblocks.push_back({}); // prologue
        d.hyperblocks[0].id = 0;
        d.hyperblocks[0].level = -1;

        for (size_t lvl = 0; lvl < d.levels.size(); ++lvl) {
            std::set<BlockId> own;
            for (auto& [b, l] : level_of_block)
                if (l == (int)lvl) own.insert(b);
            std::set<BlockId> child_headers;
            for (auto& [li, l] : level_of_loop)
                if (d.levels[l].parent == (int)lvl) child_headers.insert(forest.loops[li].header);

            std::set<BlockId> entries{d.levels[lvl].header};
            for (auto& [li, l] : level_of_loop)
                if (d.levels[l].parent == (int)lvl)
                    for (auto& [src, tgt] : forest.loops[li].exit_edges)
                        if (own.count(tgt)) entries.insert(tgt);

            // grow entries until ownership is unambiguous
            std::map<BlockId, BlockId> owner;
            while (true) {
                owner.clear();
                bool conflict = false;
                for (BlockId e : entries) {
                    std::vector<BlockId> stack{e};
                    std::set<BlockId> seen{e};
                    while (!stack.empty() && !conflict) {
                        BlockId b = stack.back();
                        stack.pop_back();
                        for (BlockId s : f.block(b).successors()) {
                            if (!own.count(s) || entries.count(s) || child_headers.count(s))
                                continue;
                            auto it = owner.find(s);
                            if (it != owner.end() && it->second != e) {
                                entries.insert(s);
                                conflict = true;
                                break;
                            }
                            owner[s] = e;
                            if (seen.insert(s).second) stack.push_back(s);
                        }
                    }
                    if (conflict) break;
                }
                if (!conflict) break;
            }

            std::vector<BlockId> entry_order(entries.begin(), entries.end());
            std::sort(entry_order.begin(), entry_order.end());
            // header hyperblock first
            auto hpos = std::find(entry_order.begin(), entry_order.end(), d.levels[lvl].header);
            std::rotate(entry_order.begin(), hpos, hpos + 1);

            for (BlockId e : entry_order) {
                Hyperblock hb;
                hb.id = (int)d.hyperblocks.size();
                hb.level = (int)lvl;
                hb.entry = e;
                hb.blocks.push_back(e);
                for (auto& [b, o] : owner)
                    if (o == e) hb.blocks.push_back(b);
                std::sort(hb.blocks.begin(), hb.blocks.end());
                hb.blocks.erase(std::unique(hb.blocks.begin(), hb.blocks.end()), hb.blocks.end());
                for (BlockId b : hb.blocks) hb_of_block[b] = hb.id;
                hb_of_entry[e] = hb.id;
                if (e == d.levels[lvl].header) d.levels[lvl].header_hb = hb.id;
                d.hyperblocks.push_back(std::move(hb));
            }
        }
        return true;
    }

    // phi registers for every hyperblock entry block
    void compute_phi_regs() {
        for (size_t h = 1; h < d.hyperblocks.size(); ++h) {
            BlockId e = d.hyperblocks[h].entry;
            const BasicBlock& b = f.block(e);
            int pos = 0;
            for (const auto& s : b.stmts) {
                if (s.kind != StmtKind::Phi) break;
                phi_reg[{e, pos}] = reg_for_value(s.dest);
                ++pos;
            }
        }
    }

    // which hyperblocks consume each value (registers needed across)
    void compute_value_uses() {
        auto note = [&](const Operand& o, int hb) {
            if (!o.is_const) value_use_hbs[o.value].insert(hb);
        };
        for (size_t h = 1; h < d.hyperblocks.size(); ++h) {
            for (BlockId bid : d.hyperblocks[h].blocks) {
                const BasicBlock& b = f.block(bid);
                bool is_entry = bid == d.hyperblocks[h].entry;
                for (const auto& s : b.stmts) {
                    if (s.kind == StmtKind::Phi) {
                        // operand used where the incoming edge originates
                        for (size_t i = 0; i < s.phi_args.size() && i < b.preds.size(); ++i) {
                            BlockId p = b.preds[i];
                            if (!root->contains(p)) continue; // prologue provides it
                            auto it = hb_of_block.find(p);
                            if (it != hb_of_block.end()) note(s.phi_args[i], it->second);
                        }
                        (void)is_entry;
                        continue;
                    }
                    switch (s.kind) {
                    case StmtKind::Copy:
                    case StmtKind::Unary:
                    case StmtKind::Load: note(s.lhs, (int)h); break;
                    case StmtKind::Binary:
                    case StmtKind::Store:
                        note(s.lhs, (int)h);
                        note(s.rhs, (int)h);
                        break;
                    default: break;
                    }
                }
                if (b.term.kind == TermKind::Branch) note(b.term.cond, (int)h);
            }
        }
        // exit-phi output sources are used by the exit-owning hyperblock
        for (const auto& o : d.outputs) {
            if (!o.is_phi) continue;
            for (size_t k = 0; k < o.per_exit.size(); ++k)
                if (o.per_exit[k] && !o.per_exit[k]->is_const) {
                    BlockId src = root->exit_edges[k].first;
                    value_use_hbs[o.per_exit[k]->value].insert(hb_of_block.at(src));
                }
        }
        // prologue uses the header phis' entry operands
        const BasicBlock& hdr = f.block(root->header);
        for (const auto& s : hdr.stmts) {
            if (s.kind != StmtKind::Phi) break;
            for (size_t i = 0; i < s.phi_args.size() && i < hdr.preds.size(); ++i)
                if (!root->contains(hdr.preds[i])) note(s.phi_args[i], 0);
        }
    }

    void compute_def_hbs() {
        for (size_t h = 1; h < d.hyperblocks.size(); ++h)
            for (BlockId bid : d.hyperblocks[h].blocks)
                for (const auto& s : f.block(bid).stmts)
                    if (s.dest != kNoValue) def_hb[s.dest] = (int)h;
    }

    bool value_needs_reg(ValueId v) {
        auto uses = value_use_hbs.find(v);
        int dh = def_hb.count(v) ? def_hb[v] : -1;
        if (uses != value_use_hbs.end())
            for (int h : uses->second)
                if (h != dh) return true;
        return reg_of_value.count(v) && d.regs[reg_of_value[v]].role == RegRole::Output;
    }

    void build_prologue() {
        const BasicBlock& hdr = f.block(root->header);
        int pos = 0;
        for (const auto& s : hdr.stmts) {
            if (s.kind != StmtKind::Phi) break;
            for (size_t i = 0; i < s.phi_args.size() && i < hdr.preds.size(); ++i) {
                if (root->contains(hdr.preds[i])) continue;
                DfgNode w;
                w.kind = NodeKind::RegWrite;
                w.reg = phi_reg.at({root->header, pos});
                w.operands = {operand_node(0, s.phi_args[i])};
                add_node(w, 0);
            }
            ++pos;
        }
        d.hyperblocks[0].transitions.push_back({kNoNode, d.levels[0].header_hb, false});
    }

    // topological order of a hyperblock's blocks (acyclic by construction)
    std::vector<BlockId> hb_block_order(const Hyperblock& hb) {
        std::set<BlockId> inside(hb.blocks.begin(), hb.blocks.end());
        std::vector<BlockId> order;
        std::set<BlockId> done;
        std::function<void(BlockId)> visit = [&](BlockId b) {
            if (!done.insert(b).second) return;
            for (BlockId s : f.block(b).successors())
                if (inside.count(s) && s != hb.entry) visit(s);
            order.push_back(b);
        };
        visit(hb.entry);
        std::reverse(order.begin(), order.end());
        return order;
    }

    NodeId edge_term(int h, BlockId src, BlockId dst, std::map<std::pair<BlockId, BlockId>, NodeId>& cache) {
        auto key = std::make_pair(src, dst);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const BasicBlock& b = f.block(src);
        NodeId base = block_pred.count({h, src}) ? block_pred[{h, src}] : kNoNode;
        NodeId cond = kNoNode;
        if (b.term.kind == TermKind::Branch) {
            NodeId c = operand_node(h, b.term.cond);
            if (b.term.then_target == dst && b.term.else_target == dst) {
                cond = kNoNode;
            } else if (b.term.then_target == dst) {
                cond = c;
            } else {
                cond = not_node(h, c);
            }
        }
        NodeId term = and_node(h, base, cond);
        cache[key] = term;
        return term;
    }

    bool build_hyperblock(int h) {
        Hyperblock& hb = d.hyperblocks[h];
        val_node.clear();
        std::set<BlockId> inside(hb.blocks.begin(), hb.blocks.end());
        std::vector<BlockId> order = hb_block_order(hb);
        std::map<std::pair<BlockId, BlockId>, NodeId> terms;

        // entry phis read their registers
        {
            const BasicBlock& e = f.block(hb.entry);
            int pos = 0;
            for (const auto& s : e.stmts) {
                if (s.kind != StmtKind::Phi) break;
                val_node[s.dest] = regread_node(h, phi_reg.at({hb.entry, pos}));
                ++pos;
            }
        }

        // block predicates in topological order
        for (BlockId bid : order) {
            if (bid == hb.entry) continue;
            NodeId p = kNoNode;
            bool first = true;
            bool always = false;
            for (BlockId pr : f.block(bid).preds) {
                if (!inside.count(pr)) continue;
                NodeId t = edge_term(h, pr, bid, terms);
                if (t == kNoNode) always = true;
                p = first ? t : (always ? kNoNode : or_node(h, p, t));
                first = false;
                if (always) {
                    p = kNoNode;
                    break;
                }
            }
            block_pred[{h, bid}] = p;
        }

        // statements
        for (BlockId bid : order) {
            const BasicBlock& b = f.block(bid);
            NodeId bp = bid == hb.entry ? kNoNode
                                        : block_pred.count({h, bid}) ? block_pred[{h, bid}] : kNoNode;
            int phi_pos = 0;
            for (const auto& s : b.stmts) {
                switch (s.kind) {
                case StmtKind::Phi: {
                    if (bid == hb.entry) {
                        ++phi_pos;
                        continue; // register handled above
                    }
                    // if-converted join: select over incoming edges
                    NodeId acc = kNoNode;
                    bool first = true;
                    for (size_t i = 0; i < s.phi_args.size() && i < b.preds.size(); ++i) {
                        BlockId p = b.preds[i];
                        if (!inside.count(p)) return reject("join entered from outside its hyperblock");
                        NodeId arg = operand_node(h, s.phi_args[i]);
                        if (first) {
                            acc = arg;
                            first = false;
                            continue;
                        }
                        NodeId t = edge_term(h, p, bid, terms);
                        DfgNode sel;
                        sel.kind = NodeKind::Select;
                        sel.operands = {t == kNoNode ? const_node(h, 1) : t, arg, acc};
                        acc = add_node(sel, h);
                    }
                    val_node[s.dest] = acc;
                    ++phi_pos;
                    break;
                }
                case StmtKind::Const: val_node[s.dest] = const_node(h, s.imm); break;
                case StmtKind::Copy: val_node[s.dest] = operand_node(h, s.lhs); break;
                case StmtKind::Unary: {
                    DfgNode n;
                    n.kind = NodeKind::UnOp;
                    n.un_op = s.un_op;
                    n.operands = {operand_node(h, s.lhs)};
                    val_node[s.dest] = add_node(n, h);
                    break;
                }
                case StmtKind::Binary: {
                    DfgNode n;
                    n.kind = NodeKind::BinOp;
                    n.bin_op = s.bin_op;
                    n.operands = {operand_node(h, s.lhs), operand_node(h, s.rhs)};
                    val_node[s.dest] = add_node(n, h);
                    break;
                }
                case StmtKind::Load: {
                    DfgNode n;
                    n.kind = NodeKind::Load;
                    n.mem = mem_index.at((s.mem.is_global ? "@" : "") + s.mem.name);
                    n.operands = {operand_node(h, s.lhs)};
                    n.pred = bp;
                    val_node[s.dest] = add_node(n, h);
                    break;
                }
                case StmtKind::Store: {
                    DfgNode n;
                    n.kind = NodeKind::Store;
                    n.mem = mem_index.at((s.mem.is_global ? "@" : "") + s.mem.name);
                    n.operands = {operand_node(h, s.lhs), operand_node(h, s.rhs)};
                    n.pred = bp;
                    add_node(n, h);
                    break;
                }
                case StmtKind::Call: return reject("contains a call");
                }
                // register the defined value if other hyperblocks need it
                if (s.dest != kNoValue && s.kind != StmtKind::Phi && value_needs_reg(s.dest)) {
                    DfgNode w;
                    w.kind = NodeKind::RegWrite;
                    w.reg = reg_for_value(s.dest);
                    w.operands = {val_node[s.dest]};
                    w.pred = bp;
                    add_node(w, h);
                }
                if (s.dest != kNoValue && s.kind == StmtKind::Phi && bid != hb.entry &&
                    value_needs_reg(s.dest)) {
                    DfgNode w;
                    w.kind = NodeKind::RegWrite;
                    w.reg = reg_for_value(s.dest);
                    w.operands = {val_node[s.dest]};
                    w.pred = bp;
                    add_node(w, h);
                }
            }
        }

        // boundary edges: exits, transitions, phi writes
        struct Bound {
            BlockId src, dst;
            NodeId term;
        };
        std::vector<Bound> bounds;
        for (BlockId bid : order)
            for (BlockId s : f.block(bid).successors())
                if (!inside.count(s) || s == hb.entry) bounds.push_back({bid, s, kNoNode});
        for (auto& e : bounds) e.term = edge_term(h, e.src, e.dst, terms);

        // exit conditions of the candidate loop
        for (const auto& e : bounds) {
            if (root->contains(e.dst)) continue;
            int exit_id = 0;
            for (size_t k = 0; k < root->exit_edges.size(); ++k)
                if (root->exit_edges[k].first == e.src && root->exit_edges[k].second == e.dst)
                    exit_id = (int)k + 1;
            if (exit_id == 0) return reject("unmapped exit edge");
            DfgNode x;
            x.kind = NodeKind::ExitCond;
            x.exit_id = exit_id;
            x.operands = {e.term == kNoNode ? const_node(h, 1) : e.term};
            add_node(x, h);
            DfgNode w;
            w.kind = NodeKind::RegWrite;
            w.reg = d.bb_idx_reg;
            w.operands = {const_node(h, exit_id)};
            w.pred = e.term;
            add_node(w, h);
            for (size_t oi = 0; oi < d.outputs.size(); ++oi) {
                const auto& o = d.outputs[oi];
                if (!o.is_phi || !o.per_exit[exit_id - 1]) continue;
                DfgNode ow;
                ow.kind = NodeKind::RegWrite;
                ow.reg = d.output_reg((int)oi);
                ow.operands = {operand_node(h, *o.per_exit[exit_id - 1])};
                ow.pred = e.term;
                add_node(ow, h);
            }
        }

        // phi updates for in-region targets
        for (const auto& e : bounds) {
            if (!root->contains(e.dst)) continue;
            const BasicBlock& t = f.block(e.dst);
            size_t pred_idx = 0;
            for (; pred_idx < t.preds.size(); ++pred_idx)
                if (t.preds[pred_idx] == e.src) break;
            int pos = 0;
            for (const auto& s : t.stmts) {
                if (s.kind != StmtKind::Phi) break;
                DfgNode w;
                w.kind = NodeKind::RegWrite;
                w.reg = phi_reg.at({e.dst, pos});
                w.operands = {operand_node(h, s.phi_args[pred_idx])};
                w.pred = e.term;
                add_node(w, h);
                ++pos;
            }
        }

        // transitions: exits first (in exit id order), then in-region targets
        std::vector<std::pair<int, NodeId>> exit_guards; // (exit id, term)
        std::map<BlockId, NodeId> target_guard;
        std::vector<BlockId> target_order;
        for (const auto& e : bounds) {
            if (!root->contains(e.dst)) {
                int exit_id = 0;
                for (size_t k = 0; k < root->exit_edges.size(); ++k)
                    if (root->exit_edges[k].first == e.src && root->exit_edges[k].second == e.dst)
                        exit_id = (int)k + 1;
                exit_guards.push_back({exit_id, e.term});
                continue;
            }
            if (!target_guard.count(e.dst)) {
                target_guard[e.dst] = e.term;
                target_order.push_back(e.dst);
            } else {
                target_guard[e.dst] = or_node(h, target_guard[e.dst], e.term);
            }
        }
        std::sort(exit_guards.begin(), exit_guards.end(),
                  [](auto& a, auto& b) { return a.first < b.first; });
        for (auto& [exit_id, g] : exit_guards) hb.transitions.push_back({g, -1, true});
        for (size_t i = 0; i < target_order.size(); ++i) {
            BlockId t = target_order[i];
            auto it = hb_of_entry.find(t);
            if (it == hb_of_entry.end()) return reject("transition to a non-entry block");
            NodeId g = i + 1 == target_order.size() ? kNoNode : target_guard[t];
            hb.transitions.push_back({g, it->second, false});
        }
        if (hb.transitions.empty()) return reject("hyperblock with no outgoing control flow");
        // final transition acts as the else case
        hb.transitions.back().guard = kNoNode;
        return true;
    }
};

} // namespace

std::optional<Dfg> if_convert(const MirProgram& p, const MirFunction& fin, const LoopForest& forest,
                              int loop_index, const std::string& loop_name, DiagEngine& diags) {
    if (loop_index < 0 || loop_index >= (int)forest.loops.size()) {
        diags.error("loop candidate '" + loop_name + "' no longer present in '" + fin.name + "'");
        return std::nullopt;
    }
    MirFunction f = fin;
    f.recompute_cfg_edges();
    Builder b(p, f, forest, loop_index, diags);
    b.d.loop_name = loop_name;
    b.d.function = f.name;
    b.d.header = forest.loops[loop_index].header;
    if (!b.run()) return std::nullopt;
    return std::move(b.d);
}

// ---- reference evaluation ------------------------------------------------------------

DfgEvalResult eval_dfg(const Dfg& d, const std::vector<int32_t>& inputs,
                       std::map<std::string, std::vector<int32_t>>& mem, long long max_hyperblocks) {
    if (inputs.size() != d.live_ins.size())
        throw std::runtime_error("eval_dfg: input arity mismatch");
    std::vector<int32_t> regs(d.regs.size(), 0);
    for (size_t i = 0; i < inputs.size(); ++i) regs[d.input_reg((int)i)] = inputs[i];

    std::vector<std::vector<int32_t>*> chan;
    for (const auto& m : d.mems) {
        std::string key = (m.is_global ? "@" : "") + m.name;
        auto it = mem.find(key);
        if (it == mem.end()) throw std::runtime_error("eval_dfg: missing memory image " + key);
        chan.push_back(&it->second);
    }

    DfgEvalResult out;
    std::vector<int32_t> wire(d.nodes.size(), 0);
    int hb = 0;
    long long executed = 0;
    while (true) {
        if (++executed > max_hyperblocks) throw std::runtime_error("eval_dfg: hyperblock limit exceeded");
        out.hyperblocks_run = executed;
        const Hyperblock& H = d.hyperblocks[hb];
        std::vector<std::pair<int, int32_t>> reg_commits;
        for (NodeId id : H.nodes) {
            const DfgNode& n = d.nodes[id];
            auto val = [&](NodeId x) { return wire[x]; };
            bool fire = n.pred == kNoNode || wire[n.pred] != 0;
            switch (n.kind) {
            case NodeKind::Const: wire[id] = n.imm; break;
            case NodeKind::RegRead: wire[id] = regs[n.reg]; break;
            case NodeKind::BinOp: {
                auto v = eval_bin(n.bin_op, val(n.operands[0]), val(n.operands[1]));
                wire[id] = v ? *v : 0; // speculative lanes never trap
                break;
            }
            case NodeKind::UnOp: wire[id] = eval_un(n.un_op, val(n.operands[0])); break;
            case NodeKind::Select:
                wire[id] = val(n.operands[0]) != 0 ? val(n.operands[1]) : val(n.operands[2]);
                break;
            case NodeKind::Load: {
                if (!fire) {
                    wire[id] = 0;
                    break;
                }
                int32_t idx = val(n.operands[0]);
                auto& image = *chan[n.mem];
                if (idx < 0 || (size_t)idx >= image.size())
                    throw std::runtime_error("eval_dfg: index " + std::to_string(idx) +
                                             " out of range on channel " + std::to_string(n.mem));
                wire[id] = image[idx];
                break;
            }
            case NodeKind::Store: {
                if (!fire) break;
                int32_t idx = val(n.operands[0]);
                auto& image = *chan[n.mem];
                if (idx < 0 || (size_t)idx >= image.size())
                    throw std::runtime_error("eval_dfg: index " + std::to_string(idx) +
                                             " out of range on channel " + std::to_string(n.mem));
                image[idx] = val(n.operands[1]);
                out.stores.push_back({n.mem, idx, val(n.operands[1])});
                break;
            }
            case NodeKind::RegWrite:
                if (fire) reg_commits.push_back({n.reg, val(n.operands[0])});
                break;
            case NodeKind::ExitCond: wire[id] = val(n.operands[0]); break;
            }
        }
        std::set<int> written;
        for (auto& [r, v] : reg_commits) {
            if (!written.insert(r).second)
                throw std::runtime_error("eval_dfg: conflicting writes to register " +
                                         std::to_string(r));
            regs[r] = v;
        }
        // take the first transition whose guard holds
        int next = -2;
        bool done = false;
        for (const auto& t : H.transitions) {
            if (t.guard != kNoNode && wire[t.guard] == 0) continue;
            next = t.target_hb;
            done = t.to_done;
            break;
        }
        if (next == -2) throw std::runtime_error("eval_dfg: no transition taken");
        if (done) break;
        hb = next;
    }

    out.bb_idx = regs[d.bb_idx_reg];
    for (size_t i = 0; i < d.outputs.size(); ++i)
        out.outputs[d.outputs[i].name] = regs[d.output_reg((int)i)];
    return out;
}

} // namespace loopforge::synth

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "loopforge/synth.hpp"

namespace loopforge::synth {

int FsmSpec::input_reg(int io_index) const { return io_index; }
int FsmSpec::output_reg(int io_index) const { return (int)input_names.size() + io_index; }

namespace {

// Flow analysis over hyperblocks of one level: every hyperblock is a point,
// every direct child loop is one opaque point. Paths run from the level header
// to either CONTINUE (a latch transition) or EXIT (leaving the level).
struct LevelFlow {
    struct Point {
        bool is_child = false;
        int hb = -1;    // for hyperblock points
        int child = -1; // level id for child points
        long long cost_min = 0, cost_max = 0;
        std::vector<int> succs; // indices into points; -1 continue, -2 exit encoded separately
        bool to_continue = false, to_exit = false;
    };
    std::vector<Point> points;
    int header_point = -1;
};

struct FlowContext {
    const std::vector<Hyperblock>* hbs = nullptr;            // from Dfg
    const std::vector<int>* hb_level = nullptr;              // from FsmSpec path
    std::vector<std::vector<Transition>> hb_transitions;     // per hb
    std::vector<long long> hb_cost;
    std::vector<int> level_parent;
    std::vector<int> level_header_hb;

    int hb_count() const { return (int)hb_transitions.size(); }
    int level_of(int hb) const {
        return hbs ? (*hbs)[hb].level : (*hb_level)[hb];
    }
    bool level_in_subtree(int lvl, int root) const {
        while (lvl != -1) {
            if (lvl == root) return true;
            lvl = level_parent[lvl];
        }
        return false;
    }
};

LevelFlow build_level_flow(const FlowContext& ctx, int level,
                           const std::vector<long long>& child_cost_min,
                           const std::vector<long long>& child_cost_max) {
    LevelFlow flow;
    std::map<int, int> hb_point, child_point;
    for (int h = 0; h < ctx.hb_count(); ++h)
        if (ctx.level_of(h) == level) {
            LevelFlow::Point p;
            p.hb = h;
            p.cost_min = p.cost_max = ctx.hb_cost[h];
            hb_point[h] = (int)flow.points.size();
            flow.points.push_back(p);
        }
    for (size_t l = 0; l < ctx.level_parent.size(); ++l)
        if (ctx.level_parent[l] == level) {
            LevelFlow::Point p;
            p.is_child = true;
            p.child = (int)l;
            p.cost_min = child_cost_min.empty() ? 0 : child_cost_min[l];
            p.cost_max = child_cost_max.empty() ? 0 : child_cost_max[l];
            child_point[(int)l] = (int)flow.points.size();
            flow.points.push_back(p);
        }
    flow.header_point = hb_point.at(ctx.level_header_hb[level]);

    auto classify_target = [&](int target_hb, bool done, LevelFlow::Point& p) {
        if (done) {
            p.to_exit = true;
            return;
        }
        int tl = ctx.level_of(target_hb);
        if (tl == level) {
            if (target_hb == ctx.level_header_hb[level])
                p.to_continue = true;
            else
                p.succs.push_back(hb_point.at(target_hb));
            return;
        }
        if (ctx.level_in_subtree(tl, level)) {
            // entering some direct child's subtree
            int walk = tl;
            while (ctx.level_parent[walk] != level) walk = ctx.level_parent[walk];
            p.succs.push_back(child_point.at(walk));
            return;
        }
        p.to_exit = true; // leaves this level entirely
    };

    for (auto& p : flow.points) {
        if (!p.is_child) {
            for (const auto& t : ctx.hb_transitions[p.hb]) classify_target(t.target_hb, t.to_done, p);
            continue;
        }
        // child supernode: transitions leaving the child's subtree
        for (int h = 0; h < ctx.hb_count(); ++h) {
            int hl = ctx.level_of(h);
            if (hl == -1 || !ctx.level_in_subtree(hl, p.child)) continue;
            for (const auto& t : ctx.hb_transitions[h]) {
                if (t.to_done) {
                    p.to_exit = true;
                    continue;
                }
                int tl = ctx.level_of(t.target_hb);
                if (ctx.level_in_subtree(tl, p.child)) continue; // internal to the child
                classify_target(t.target_hb, false, p);
            }
        }
    }
    // dedupe successor lists for determinism
    for (auto& p : flow.points) {
        std::sort(p.succs.begin(), p.succs.end());
        p.succs.erase(std::unique(p.succs.begin(), p.succs.end()), p.succs.end());
    }
    return flow;
}

// min/max path cost from the header point to a terminal (continue or exit)
std::pair<long long, long long> flow_path_bounds(const LevelFlow& flow) {
    std::vector<int> state(flow.points.size(), 0);
    std::vector<std::pair<long long, long long>> memo(flow.points.size());
    std::function<std::pair<long long, long long>(int)> visit =
        [&](int i) -> std::pair<long long, long long> {
        if (state[i] == 2) return memo[i];
        if (state[i] == 1) throw std::runtime_error("cyclic level flow graph");
        state[i] = 1;
        const auto& p = flow.points[i];
        long long best = -1, worst = -1;
        if (p.to_continue || p.to_exit) {
            best = 0;
            worst = 0;
        }
        for (int s : p.succs) {
            auto [b, w] = visit(s);
            best = best < 0 ? b : std::min(best, b);
            worst = std::max(worst, w);
        }
        if (best < 0) { best = 0; worst = 0; } // defensive: dead-end point
        state[i] = 2;
        memo[i] = {p.cost_min + best, p.cost_max + worst};
        return memo[i];
    };
    return visit(flow.header_point);
}

} // namespace

FsmSpec build_fsm(const Dfg& d, const Schedule& s) {
    FsmSpec f;
    f.name = d.loop_name;
    f.function = d.function;
    f.header = d.header;
    f.nodes = d.nodes;
    f.regs = d.regs;
    f.mems = d.mems;
    f.exits = d.exits;
    f.input_names = d.input_names;
    f.live_ins = d.live_ins;
    f.outputs = d.outputs;
    f.bb_idx_reg = d.bb_idx_reg;

    f.hb_level.resize(d.hyperblocks.size());
    for (const auto& hb : d.hyperblocks) f.hb_level[hb.id] = hb.level;
    f.hb_first_state = s.first_state_of_hb;

    for (size_t st = 0; st < s.states.size(); ++st) {
        const auto& src = s.states[st];
        FsmState out;
        out.hyperblock = src.hyperblock;
        out.level = d.hyperblocks[src.hyperblock].level;
        out.cycles = src.cycles;
        out.nodes = src.chain;
        if ((int)st == s.last_state_of_hb[src.hyperblock]) {
            for (const auto& t : d.hyperblocks[src.hyperblock].transitions) {
                Transition r = t;
                if (!t.to_done) r.target_hb = s.first_state_of_hb[t.target_hb]; // now a state id
                out.transitions.push_back(r);
            }
            out.fallthrough = -1;
        } else {
            out.fallthrough = (int)st + 1;
        }
        f.states.push_back(std::move(out));
    }

    // per-level own-cycle bounds and full bounds with children folded
    FlowContext ctx;
    ctx.hbs = &d.hyperblocks;
    ctx.hb_transitions.resize(d.hyperblocks.size());
    for (const auto& hb : d.hyperblocks) ctx.hb_transitions[hb.id] = hb.transitions;
    ctx.hb_cost.assign(d.hyperblocks.size(), 0);
    for (size_t st = 0; st < s.states.size(); ++st)
        ctx.hb_cost[s.states[st].hyperblock] += s.states[st].cycles;
    ctx.level_parent.resize(d.levels.size());
    ctx.level_header_hb.resize(d.levels.size());
    for (const auto& l : d.levels) {
        ctx.level_parent[l.id] = l.parent;
        ctx.level_header_hb[l.id] = l.header_hb;
    }

    f.levels.resize(d.levels.size());
    for (const auto& l : d.levels) {
        LevelFlow flow = build_level_flow(ctx, l.id, {}, {});
        auto [best, worst] = flow_path_bounds(flow);
        f.levels[l.id] = {best, worst, l.est_trips, l.trips_heuristic};
    }

    // candidate-iteration bounds with child loops folded in, deepest first
    std::vector<long long> total_min(d.levels.size(), 0), total_max(d.levels.size(), 0);
    std::vector<long long> iter_min(d.levels.size(), 0), iter_max(d.levels.size(), 0);
    for (int l = (int)d.levels.size() - 1; l >= 0; --l) {
        LevelFlow flow = build_level_flow(ctx, l, total_min, total_max);
        auto [best, worst] = flow_path_bounds(flow);
        iter_min[l] = best;
        iter_max[l] = worst;
        long long trips = std::max(1LL, d.levels[l].est_trips);
        total_min[l] = best;          // enter once, leave as soon as possible
        total_max[l] = worst * trips; // every estimated iteration at the worst path
    }
    f.iter_best_cycles = iter_min.empty() ? 0 : iter_min[0];
    f.iter_worst_cycles = iter_max.empty() ? 0 : iter_max[0];
    return f;
}

// ---- estimation ----------------------------------------------------------------

Rational sw_cycles_per_iteration(const mir::MirFunction& f, const mir::LoopForest& forest,
                                 int loop_index, const CostModel& m) {
    const mir::LoopNode& loop = forest.loops[loop_index];
    std::set<mir::BlockId> own(loop.body.begin(), loop.body.end());
    for (int c : loop.children)
        for (mir::BlockId b : forest.loops[c].body) own.erase(b);

    Rational total(0);
    for (mir::BlockId bid : own) {
        const mir::BasicBlock& b = f.block(bid);
        for (const auto& s : b.stmts) {
            switch (s.kind) {
            case mir::StmtKind::Phi: break; // no code
            case mir::StmtKind::Binary:
                if (s.bin_op == mir::BinOp::Mul)
                    total += Rational(m.sw_cycles_of("mul"));
                else if (s.bin_op == mir::BinOp::Div)
                    total += Rational(m.sw_cycles_of("div"));
                else if (s.bin_op == mir::BinOp::Rem)
                    total += Rational(m.sw_cycles_of("rem"));
                else
                    total += Rational(m.sw_cycles_of("simple"));
                break;
            case mir::StmtKind::Load: total += Rational(m.sw_cycles_of("load")); break;
            case mir::StmtKind::Store: total += Rational(m.sw_cycles_of("store")); break;
            default: total += Rational(m.sw_cycles_of("simple")); break;
            }
        }
        if (b.term.kind == mir::TermKind::Branch)
            total += Rational(m.sw_cycles_of("branch"));
        else if (b.term.kind == mir::TermKind::Goto)
            total += Rational(m.sw_cycles_of("goto"));
    }
    for (int c : loop.children) {
        Rational inner = sw_cycles_per_iteration(f, forest, c, m);
        total += inner * Rational(std::max(1LL, forest.loops[c].local_count + 1));
    }
    return total;
}

CycleEstimate estimate_and_filter(const FsmSpec& f, long long est_iterations,
                                  Rational sw_cycles_per_iter, const CostModel& m) {
    CycleEstimate e;
    e.best_cycles_per_iter = f.iter_best_cycles;
    e.worst_cycles_per_iter = f.iter_worst_cycles;
    e.est_iterations = est_iterations;

    Rational hw_cycles = Rational(m.invocation_overhead_cycles) +
                         Rational(m.reg_access_cycles) *
                             Rational((long long)f.num_inputs() + (long long)f.num_outputs()) +
                         Rational(f.iter_worst_cycles) * Rational(est_iterations);
    e.hw_time_s = hw_cycles / Rational(m.f_accel_hz);
    e.sw_time_s = sw_cycles_per_iter * Rational(est_iterations) / Rational(m.f_cpu_hz);
    e.speedup = e.hw_time_s.num() == 0 ? Rational(0) : e.sw_time_s / e.hw_time_s;
    e.accepted = e.speedup >= m.min_speedup;
    if (!e.accepted) {
        std::ostringstream os;
        os << "estimated speedup " << e.speedup.str() << " below threshold " << m.min_speedup.str();
        e.reject_reason = os.str();
    }
    return e;
}

std::string render_estimate(const CycleEstimate& e, const FsmSpec& f) {
    std::ostringstream os;
    os << "accelerator " << f.name << " (" << f.function << ")\n";
    os << "states " << f.states.size() << "\n";
    os << "inputs " << f.num_inputs() << " outputs " << f.num_outputs()
       << " (incl. bb_idx)\n";
    os << "cycles_per_iter best " << e.best_cycles_per_iter << " worst " << e.worst_cycles_per_iter
       << "\n";
    os << "est_iterations " << e.est_iterations << "\n";
    os << "hw_time_s " << e.hw_time_s.str() << "\n";
    os << "sw_time_s " << e.sw_time_s.str() << "\n";
    os << "speedup " << e.speedup.str() << " (~" << e.speedup.to_double() << ")\n";
    os << "accepted " << (e.accepted ? 1 : 0) << "\n";
    if (!e.reject_reason.empty()) os << "reject_reason " << e.reject_reason << "\n";
    return os.str();
}

std::optional<SynthesisResult> synthesize_loop(const mir::MirProgram& p, const mir::MirFunction& f,
                                               const mir::LoopForest& forest, int loop_index,
                                               const std::string& loop_name,
                                               long long est_iterations, const CostModel& m,
                                               DiagEngine& diags) {
    auto dfg = if_convert(p, f, forest, loop_index, loop_name, diags);
    if (!dfg) return std::nullopt;
    SynthesisResult r;
    r.dfg = std::move(*dfg);
    r.schedule = schedule_dfg(r.dfg, m);
    auto violations = validate_schedule(r.dfg, r.schedule, m);
    if (!violations.empty()) {
        for (const auto& v : violations)
            diags.error("schedule for '" + loop_name + "': " + v);
        return std::nullopt;
    }
    r.fsm = build_fsm(r.dfg, r.schedule);
    Rational sw = sw_cycles_per_iteration(f, forest, loop_index, m);
    r.estimate = estimate_and_filter(r.fsm, est_iterations, sw, m);
    return r;
}

// ---- serialization ----------------------------------------------------------------

namespace {

const char* kind_name(NodeKind k) {
    switch (k) {
    case NodeKind::Const: return "const";
    case NodeKind::RegRead: return "regread";
    case NodeKind::BinOp: return "bin";
    case NodeKind::UnOp: return "un";
    case NodeKind::Select: return "select";
    case NodeKind::Load: return "load";
    case NodeKind::Store: return "store";
    case NodeKind::RegWrite: return "regwrite";
    case NodeKind::ExitCond: return "exit";
    }
    return "?";
}

std::optional<NodeKind> kind_from(const std::string& s) {
    static const std::map<std::string, NodeKind> table = {
        {"const", NodeKind::Const},   {"regread", NodeKind::RegRead},
        {"bin", NodeKind::BinOp},     {"un", NodeKind::UnOp},
        {"select", NodeKind::Select}, {"load", NodeKind::Load},
        {"store", NodeKind::Store},   {"regwrite", NodeKind::RegWrite},
        {"exit", NodeKind::ExitCond},
    };
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

std::string operand_str(const std::optional<mir::Operand>& o) {
    if (!o) return "-";
    if (o->is_const) return "#" + std::to_string(o->imm);
    return "%" + std::to_string(o->value);
}

std::optional<mir::Operand> operand_from(const std::string& s) {
    if (s == "-") return std::nullopt;
    if (s[0] == '#') return mir::Operand::con((int32_t)std::stol(s.substr(1)));
    if (s[0] == '%') return mir::Operand::val((mir::ValueId)std::stol(s.substr(1)));
    throw ParseError("fsm: bad operand '" + s + "'");
}

} // namespace

std::string serialize_fsm(const FsmSpec& f) {
    std::ostringstream os;
    os << "fsm " << f.name << "\n";
    os << "function " << f.function << "\n";
    os << "header " << f.header << "\n";
    os << "iter_cycles best " << f.iter_best_cycles << " worst " << f.iter_worst_cycles << "\n";
    os << "inputs " << f.input_names.size() << "\n";
    for (size_t i = 0; i < f.input_names.size(); ++i)
        os << "input " << i << " name " << f.input_names[i] << " value %" << f.live_ins[i] << "\n";
    os << "outputs " << f.outputs.size() << "\n";
    for (size_t i = 0; i < f.outputs.size(); ++i) {
        const auto& o = f.outputs[i];
        os << "output " << i << " name " << o.name;
        if (o.is_phi) {
            os << " kind phi block " << o.phi_block << " pos " << o.phi_pos << " per_exit ";
            for (size_t k = 0; k < o.per_exit.size(); ++k)
                os << (k ? "," : "") << operand_str(o.per_exit[k]);
        } else {
            os << " kind plain value %" << o.plain_value;
        }
        os << "\n";
    }
    os << "regs " << f.regs.size() << "\n";
    for (size_t i = 0; i < f.regs.size(); ++i) {
        const auto& r = f.regs[i];
        const char* role = r.role == RegRole::Input     ? "input"
                           : r.role == RegRole::Output  ? "output"
                           : r.role == RegRole::BbIdx   ? "bbidx"
                                                        : "internal";
        os << "reg " << i << " role " << role << " io " << r.io_index << " name " << r.name << "\n";
    }
    os << "mems " << f.mems.size() << "\n";
    for (size_t i = 0; i < f.mems.size(); ++i)
        os << "mem " << i << " global " << (f.mems[i].is_global ? 1 : 0) << " name "
           << f.mems[i].name << "\n";
    os << "exits " << f.exits.size() << "\n";
    for (const auto& [id, src] : f.exits) os << "exit " << id << " src " << src << "\n";
    os << "levels " << f.levels.size() << "\n";
    for (size_t i = 0; i < f.levels.size(); ++i)
        os << "level " << i << " best " << f.levels[i].best_cycles << " worst "
           << f.levels[i].worst_cycles << " trips " << f.levels[i].est_trips << " heuristic "
           << (f.levels[i].trips_heuristic ? 1 : 0) << "\n";
    os << "hbs " << f.hb_level.size() << "\n";
    for (size_t i = 0; i < f.hb_level.size(); ++i)
        os << "hb " << i << " level " << f.hb_level[i] << " first_state " << f.hb_first_state[i]
           << "\n";
    os << "nodes " << f.nodes.size() << "\n";
    for (const auto& n : f.nodes) {
        os << "node " << n.id << " " << kind_name(n.kind);
        if (n.kind == NodeKind::BinOp) os << " " << mir::bin_op_name(n.bin_op);
        if (n.kind == NodeKind::UnOp) os << " " << mir::un_op_name(n.un_op);
        os << " imm " << n.imm << " reg " << n.reg << " mem " << n.mem << " exit " << n.exit_id
           << " hb " << n.hyperblock << " pred " << n.pred << " ops";
        for (NodeId o : n.operands) os << " " << o;
        os << "\n";
    }
    os << "states " << f.states.size() << "\n";
    for (size_t i = 0; i < f.states.size(); ++i) {
        const auto& st = f.states[i];
        os << "state " << i << " hb " << st.hyperblock << " level " << st.level << " cycles "
           << st.cycles << " fall " << st.fallthrough << " nodes";
        for (NodeId nd : st.nodes) os << " " << nd;
        os << "\n";
        for (const auto& t : st.transitions)
            os << "trans " << i << " guard " << t.guard << " target "
               << (t.to_done ? -1 : t.target_hb) << " done " << (t.to_done ? 1 : 0) << "\n";
    }
    return os.str();
}

FsmSpec parse_fsm(const std::string& text) {
    FsmSpec f;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& m) -> void {
        throw ParseError("fsm line " + std::to_string(line_no) + ": " + m);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "fsm") {
            ls >> f.name;
        } else if (kw == "function") {
            ls >> f.function;
        } else if (kw == "header") {
            ls >> f.header;
        } else if (kw == "iter_cycles") {
            std::string a, b;
            ls >> a >> f.iter_best_cycles >> b >> f.iter_worst_cycles;
        } else if (kw == "inputs" || kw == "outputs" || kw == "regs" || kw == "mems" ||
                   kw == "exits" || kw == "levels" || kw == "hbs" || kw == "nodes" ||
                   kw == "states") {
            // count headers are advisory
        } else if (kw == "input") {
            int idx;
            std::string tag, name, vtag, val;
            ls >> idx >> tag >> name >> vtag >> val;
            if ((int)f.input_names.size() != idx) fail("input index out of order");
            f.input_names.push_back(name);
            f.live_ins.push_back((mir::ValueId)std::stol(val.substr(1)));
        } else if (kw == "output") {
            int idx;
            std::string tag, name, ktag, kindv;
            ls >> idx >> tag >> name >> ktag >> kindv;
            OutputSpec o;
            o.name = name;
            if (kindv == "phi") {
                std::string btag, ptag, petag, pe;
                o.is_phi = true;
                ls >> btag >> o.phi_block >> ptag >> o.phi_pos >> petag >> pe;
                std::istringstream pes(pe);
                std::string one;
                while (std::getline(pes, one, ',')) o.per_exit.push_back(operand_from(one));
            } else {
                std::string vtag, val;
                ls >> vtag >> val;
                o.is_phi = false;
                o.plain_value = (mir::ValueId)std::stol(val.substr(1));
            }
            f.outputs.push_back(std::move(o));
        } else if (kw == "reg") {
            int idx;
            std::string rtag, role, iotag, ntag, name;
            int io;
            ls >> idx >> rtag >> role >> iotag >> io >> ntag >> name;
            FsmReg r;
            r.name = name;
            r.io_index = io;
            r.role = role == "input"    ? RegRole::Input
                     : role == "output" ? RegRole::Output
                     : role == "bbidx"  ? RegRole::BbIdx
                                        : RegRole::Internal;
            if (r.role == RegRole::BbIdx) f.bb_idx_reg = idx;
            f.regs.push_back(std::move(r));
        } else if (kw == "mem") {
            int idx, g;
            std::string gtag, ntag, name;
            ls >> idx >> gtag >> g >> ntag >> name;
            f.mems.push_back({g != 0, name});
        } else if (kw == "exit") {
            int id;
            std::string stag;
            mir::BlockId src;
            ls >> id >> stag >> src;
            f.exits.push_back({id, src});
        } else if (kw == "level") {
            int idx;
            std::string t1, t2, t3, t4;
            LevelTiming lt;
            int heur;
            ls >> idx >> t1 >> lt.best_cycles >> t2 >> lt.worst_cycles >> t3 >> lt.est_trips >>
                t4 >> heur;
            lt.trips_heuristic = heur != 0;
            f.levels.push_back(lt);
        } else if (kw == "hb") {
            int idx, level, first;
            std::string t1, t2;
            ls >> idx >> t1 >> level >> t2 >> first;
            f.hb_level.push_back(level);
            f.hb_first_state.push_back(first);
        } else if (kw == "node") {
            DfgNode n;
            std::string kindv;
            ls >> n.id >> kindv;
            auto k = kind_from(kindv);
            if (!k) fail("unknown node kind '" + kindv + "'");
            n.kind = *k;
            if (n.kind == NodeKind::BinOp) {
                std::string opn;
                ls >> opn;
                bool found = false;
                for (int i = 0; i <= (int)mir::BinOp::CmpGe; ++i)
                    if (opn == mir::bin_op_name((mir::BinOp)i)) {
                        n.bin_op = (mir::BinOp)i;
                        found = true;
                    }
                if (!found) fail("unknown binop '" + opn + "'");
            }
            if (n.kind == NodeKind::UnOp) {
                std::string opn;
                ls >> opn;
                n.un_op = opn == "neg" ? mir::UnOp::Neg : mir::UnOp::BitNot;
            }
            std::string tag;
            ls >> tag >> n.imm >> tag >> n.reg >> tag >> n.mem >> tag >> n.exit_id >> tag >>
                n.hyperblock >> tag >> n.pred >> tag;
            NodeId o;
            while (ls >> o) n.operands.push_back(o);
            if ((int)f.nodes.size() != n.id) fail("node ids out of order");
            f.nodes.push_back(std::move(n));
        } else if (kw == "state") {
            int idx;
            std::string t1, t2, t3, t4, t5;
            FsmState st;
            ls >> idx >> t1 >> st.hyperblock >> t2 >> st.level >> t3 >> st.cycles >> t4 >>
                st.fallthrough >> t5;
            NodeId nd;
            while (ls >> nd) st.nodes.push_back(nd);
            if ((int)f.states.size() != idx) fail("state ids out of order");
            f.states.push_back(std::move(st));
        } else if (kw == "trans") {
            int state_idx, done;
            std::string t1, t2, t3;
            Transition t;
            ls >> state_idx >> t1 >> t.guard >> t2 >> t.target_hb >> t3 >> done;
            t.to_done = done != 0;
            if (state_idx < 0 || state_idx >= (int)f.states.size()) fail("trans references bad state");
            f.states[state_idx].transitions.push_back(t);
        } else {
            fail("unknown directive '" + kw + "'");
        }
    }
    if (f.name.empty()) throw ParseError("fsm: missing header line");
    return f;
}

} // namespace loopforge::synth

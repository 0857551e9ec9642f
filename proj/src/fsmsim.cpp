#include "loopforge/fsmsim.hpp"

#include <set>

#include "loopforge/int32ops.hpp"

namespace loopforge::fsmsim {

using synth::DfgNode;
using synth::FsmSpec;
using synth::NodeKind;
using synth::kNoNode;

SimResult simulate_fsm(const FsmSpec& f, const std::vector<int32_t>& inputs,
                       std::map<std::string, std::vector<int32_t>>& mem, SimLimits limits) {
    if (inputs.size() != f.input_names.size())
        throw SimError("fsm '" + f.name + "': input arity mismatch");
    if (f.states.empty()) throw SimError("fsm '" + f.name + "': no states");

    std::vector<int32_t> regs(f.regs.size(), 0);
    for (size_t i = 0; i < inputs.size(); ++i) regs[f.input_reg((int)i)] = inputs[i];

    std::vector<std::vector<int32_t>*> chan;
    for (const auto& m : f.mems) {
        std::string key = (m.is_global ? "@" : "") + m.name;
        auto it = mem.find(key);
        if (it == mem.end()) throw SimError("fsm '" + f.name + "': missing memory image " + key);
        chan.push_back(&it->second);
    }

    // the header hyperblock of each level is the first hyperblock of the level
    std::vector<int> level_header_hb(f.levels.size(), -1);
    for (size_t h = 0; h < f.hb_level.size(); ++h) {
        int l = f.hb_level[h];
        if (l >= 0 && level_header_hb[l] == -1) level_header_hb[l] = (int)h;
    }

    SimResult out;
    std::vector<int32_t> wire(f.nodes.size(), 0);
    int state_idx = 0;

    while (true) {
        const auto& st = f.states[state_idx];
        out.cycles += st.cycles;
        if (st.level >= 0) out.level_cycles[st.level] += st.cycles;
        if (out.cycles > limits.max_cycles)
            throw SimError("fsm '" + f.name + "': cycle limit exceeded (schedule or exit bug?)");

        std::vector<std::pair<int, int32_t>> reg_commits;
        std::vector<std::tuple<int, int32_t, int32_t>> store_commits;
        for (synth::NodeId id : st.nodes) {
            const DfgNode& n = f.nodes[id];
            auto val = [&](synth::NodeId x) { return wire[x]; };
            bool fire = n.pred == kNoNode || wire[n.pred] != 0;
            switch (n.kind) {
            case NodeKind::Const: wire[id] = n.imm; break;
            case NodeKind::RegRead: wire[id] = regs[n.reg]; break;
            case NodeKind::BinOp: {
                auto v = eval_bin(n.bin_op, val(n.operands[0]), val(n.operands[1]));
                wire[id] = v ? *v : 0;
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
                    throw SimError("fsm '" + f.name + "': load index " + std::to_string(idx) +
                                   " out of range on channel " + std::to_string(n.mem));
                wire[id] = image[idx];
                break;
            }
            case NodeKind::Store: {
                if (!fire) break;
                int32_t idx = val(n.operands[0]);
                auto& image = *chan[n.mem];
                if (idx < 0 || (size_t)idx >= image.size())
                    throw SimError("fsm '" + f.name + "': store index " + std::to_string(idx) +
                                   " out of range on channel " + std::to_string(n.mem));
                store_commits.push_back({n.mem, idx, val(n.operands[1])});
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
                throw SimError("fsm '" + f.name + "': conflicting writes to register '" +
                               f.regs[r].name + "'");
            regs[r] = v;
        }
        for (auto& [c, i, v] : store_commits) {
            (*chan[c])[i] = v;
            out.stores.push_back({c, i, v});
        }

        if (st.transitions.empty()) {
            if (st.fallthrough < 0)
                throw SimError("fsm '" + f.name + "': state without continuation");
            state_idx = st.fallthrough;
            continue;
        }
        int next = -2;
        bool done = false;
        for (const auto& t : st.transitions) {
            if (t.guard != kNoNode && wire[t.guard] == 0) continue;
            next = t.target_hb; // a state index after FSM assembly
            done = t.to_done;
            break;
        }
        if (next == -2 && !done) throw SimError("fsm '" + f.name + "': no transition fired");
        if (done) break;
        state_idx = next;
        // entering a level's header hyperblock counts as one iteration there
        const auto& nst = f.states[state_idx];
        if (nst.level >= 0 && level_header_hb[nst.level] == nst.hyperblock &&
            f.hb_first_state[nst.hyperblock] == state_idx)
            out.level_entries[nst.level]++;
    }

    out.bb_idx = regs[f.bb_idx_reg];
    for (size_t i = 0; i < f.outputs.size(); ++i)
        out.outputs[f.outputs[i].name] = regs[f.output_reg((int)i)];
    out.transfers = (long long)f.input_names.size() + (long long)f.outputs.size() + 1 + 2;
    return out;
}

} // namespace loopforge::fsmsim

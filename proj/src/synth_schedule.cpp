#include <algorithm>
#include <map>
#include <set>

#include "loopforge/synth.hpp"

namespace loopforge::synth {

long long node_delay(const DfgNode& n, const CostModel& m); // synth_dfg.cpp

namespace {

bool is_mem(const DfgNode& n) { return n.kind == NodeKind::Load || n.kind == NodeKind::Store; }

long long node_cycles(const DfgNode& n, const CostModel& m) {
    if (is_mem(n)) return std::max(1LL, m.mem_penalty_cycles);
    long long d = node_delay(n, m);
    if (d > m.clock_budget) return (d + m.clock_budget - 1) / m.clock_budget;
    return 1;
}

bool is_multicycle(const DfgNode& n, const CostModel& m) {
    return !is_mem(n) && node_delay(n, m) > m.clock_budget;
}

struct Edges {
    std::vector<std::vector<NodeId>> data_preds;  // operands and predicates
    std::vector<std::vector<NodeId>> order_preds; // memory ordering, strict
    std::vector<std::vector<NodeId>> anti_preds;  // reg read-before-write, non-strict
    std::vector<std::vector<NodeId>> data_succs;
};

Edges build_edges(const Dfg& d) {
    Edges e;
    size_t n = d.nodes.size();
    e.data_preds.resize(n);
    e.order_preds.resize(n);
    e.anti_preds.resize(n);
    e.data_succs.resize(n);
    for (const auto& node : d.nodes) {
        for (NodeId u : node.operands) e.data_preds[node.id].push_back(u);
        if (node.pred != kNoNode) e.data_preds[node.id].push_back(node.pred);
    }
    for (const auto& hb : d.hyperblocks) {
        // memory order: program order between same-channel accesses when a
        // store is involved
        std::map<int, std::vector<NodeId>> chan_ops;
        for (NodeId id : hb.nodes)
            if (is_mem(d.nodes[id])) chan_ops[d.nodes[id].mem].push_back(id);
        for (auto& [chan, ops] : chan_ops)
            for (size_t i = 0; i + 1 < ops.size(); ++i)
                for (size_t j = i + 1; j < ops.size(); ++j)
                    if (d.nodes[ops[i]].kind == NodeKind::Store ||
                        d.nodes[ops[j]].kind == NodeKind::Store)
                        e.order_preds[ops[j]].push_back(ops[i]);
        // register anti-dependences within the hyperblock
        std::map<int, std::vector<NodeId>> reads;
        for (NodeId id : hb.nodes)
            if (d.nodes[id].kind == NodeKind::RegRead) reads[d.nodes[id].reg].push_back(id);
        for (NodeId id : hb.nodes)
            if (d.nodes[id].kind == NodeKind::RegWrite) {
                auto it = reads.find(d.nodes[id].reg);
                if (it != reads.end())
                    for (NodeId r : it->second) e.anti_preds[id].push_back(r);
            }
    }
    for (size_t v = 0; v < n; ++v)
        for (NodeId u : e.data_preds[v]) e.data_succs[u].push_back((NodeId)v);
    return e;
}

} // namespace

Schedule schedule_dfg(const Dfg& d, const CostModel& m) {
    if (m.clock_budget <= 0) throw std::runtime_error("unschedulable operation: clock budget is zero");
    Edges edges = build_edges(d);

    // priority: longest downstream delay over data edges (node ids ascend
    // within a hyperblock, so a reverse sweep is a reverse topological order)
    std::vector<long long> priority(d.nodes.size(), 0);
    for (int v = (int)d.nodes.size() - 1; v >= 0; --v) {
        long long down = 0;
        for (NodeId s : edges.data_succs[v]) down = std::max(down, priority[s]);
        priority[v] = node_delay(d.nodes[v], m) + down;
    }

    Schedule out;
    out.state_of.assign(d.nodes.size(), -1);
    out.chain_pos.assign(d.nodes.size(), -1);
    out.first_state_of_hb.assign(d.hyperblocks.size(), -1);
    out.last_state_of_hb.assign(d.hyperblocks.size(), -1);

    std::vector<long long> acc(d.nodes.size(), 0); // chained delay within the state

    for (const auto& hb : d.hyperblocks) {
        std::set<NodeId> pending(hb.nodes.begin(), hb.nodes.end());
        int local_first = (int)out.states.size();

        while (!pending.empty() || (int)out.states.size() == local_first) {
            int s = (int)out.states.size();
            out.states.push_back({hb.id, 1, {}});
            std::set<int> chan_used;
            bool state_has_mem_or_multi = false;
            (void)state_has_mem_or_multi;

            while (true) {
                NodeId best = kNoNode;
                long long best_acc = 0;
                for (NodeId v : pending) {
                    const DfgNode& node = d.nodes[v];
                    bool mem = is_mem(node);
                    bool multi = is_multicycle(node, m);
                    bool ready = true;
                    long long in_state_delay = 0;
                    for (NodeId u : edges.data_preds[v]) {
                        if (out.state_of[u] == -1) {
                            ready = false;
                            break;
                        }
                        if (out.state_of[u] == s) {
                            if (mem || multi || is_mem(d.nodes[u]) || is_multicycle(d.nodes[u], m)) {
                                ready = false; // no chaining through memory or long ops
                                break;
                            }
                            in_state_delay = std::max(in_state_delay, acc[u]);
                        } else if (out.state_of[u] > s) {
                            ready = false;
                            break;
                        }
                    }
                    if (!ready) continue;
                    for (NodeId u : edges.order_preds[v])
                        if (out.state_of[u] == -1 || out.state_of[u] >= s) {
                            ready = false;
                            break;
                        }
                    if (!ready) continue;
                    for (NodeId u : edges.anti_preds[v])
                        if (out.state_of[u] == -1 || out.state_of[u] > s) {
                            ready = false;
                            break;
                        }
                    if (!ready) continue;
                    if (mem && chan_used.count(node.mem)) continue; // one access per channel
                    long long chained = in_state_delay + node_delay(node, m);
                    if (!mem && !multi && chained > m.clock_budget) continue;
                    if (best == kNoNode || priority[v] > priority[best] ||
                        (priority[v] == priority[best] && v < best)) {
                        best = v;
                        best_acc = mem || multi ? 0 : chained;
                    }
                }
                if (best == kNoNode) break;
                const DfgNode& node = d.nodes[best];
                out.state_of[best] = s;
                out.chain_pos[best] = (int)out.states[s].chain.size();
                out.states[s].chain.push_back(best);
                acc[best] = best_acc;
                out.states[s].cycles = std::max(out.states[s].cycles, node_cycles(node, m));
                if (is_mem(node)) chan_used.insert(node.mem);
                pending.erase(best);
            }
            if (out.first_state_of_hb[hb.id] == -1) out.first_state_of_hb[hb.id] = s;
            out.last_state_of_hb[hb.id] = s;
            if (pending.empty()) break;
        }
    }
    return out;
}

std::vector<std::string> validate_schedule(const Dfg& d, const Schedule& s, const CostModel& m) {
    std::vector<std::string> out;
    Edges edges = build_edges(d);

    for (const auto& n : d.nodes) {
        if (s.state_of.size() <= (size_t)n.id || s.state_of[n.id] < 0) {
            out.push_back("node " + std::to_string(n.id) + " unscheduled");
            continue;
        }
        int st = s.state_of[n.id];
        if (st >= (int)s.states.size() || s.states[st].hyperblock != n.hyperblock)
            out.push_back("node " + std::to_string(n.id) + " scheduled outside its hyperblock");
    }
    if (!out.empty()) return out;

    for (const auto& n : d.nodes) {
        for (NodeId u : edges.data_preds[n.id]) {
            int su = s.state_of[u], sv = s.state_of[n.id];
            if (su > sv ||
                (su == sv && s.chain_pos[u] >= s.chain_pos[n.id]))
                out.push_back("data dependence " + std::to_string(u) + " -> " +
                              std::to_string(n.id) + " violated");
            if (su == sv && (is_mem(d.nodes[u]) || is_mem(n) || is_multicycle(d.nodes[u], m) ||
                             is_multicycle(n, m)))
                out.push_back("illegal chaining through node " + std::to_string(u) + " -> " +
                              std::to_string(n.id));
        }
        for (NodeId u : edges.order_preds[n.id])
            if (s.state_of[u] >= s.state_of[n.id])
                out.push_back("memory order " + std::to_string(u) + " -> " + std::to_string(n.id) +
                              " violated");
        for (NodeId u : edges.anti_preds[n.id])
            if (s.state_of[u] > s.state_of[n.id])
                out.push_back("register anti-dependence " + std::to_string(u) + " -> " +
                              std::to_string(n.id) + " violated");
    }

    // per-state chain delays, memory exclusivity, cycle counts
    for (size_t st = 0; st < s.states.size(); ++st) {
        const auto& state = s.states[st];
        std::map<int, int> chan_count;
        long long need_cycles = 1;
        std::map<NodeId, long long> acc;
        for (NodeId v : state.chain) {
            const DfgNode& n = d.nodes[v];
            if (is_mem(n)) chan_count[n.mem]++;
            need_cycles = std::max(need_cycles, node_cycles(n, m));
            long long in_state = 0;
            for (NodeId u : edges.data_preds[v])
                if (s.state_of[u] == (int)st) in_state = std::max(in_state, acc[u]);
            acc[v] = in_state + node_delay(n, m);
            if (!is_mem(n) && !is_multicycle(n, m) && acc[v] > m.clock_budget)
                out.push_back("state " + std::to_string(st) + " chain exceeds clock budget at node " +
                              std::to_string(v));
        }
        for (auto& [chan, count] : chan_count)
            if (count > 1)
                out.push_back("state " + std::to_string(st) + " uses memory channel " +
                              std::to_string(chan) + " more than once");
        if (state.cycles < need_cycles)
            out.push_back("state " + std::to_string(st) + " cycle count too small");
    }
    return out;
}

} // namespace loopforge::synth

#include "loopforge/analyzer.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <sstream>

namespace loopforge::analyzer {

using transcript::LoopRecord;
using transcript::Transcript;

namespace {

// Product of (count+1) along the loop chain from this record up through its
// ancestors (parent_id links within the same function group).
Rational chain_weight(const Transcript& t, const LoopRecord& l) {
    Rational w(1);
    const LoopRecord* cur = &l;
    while (cur) {
        w *= Rational(cur->local_count + 1);
        cur = cur->parent_id > 0 ? t.find_loop(cur->parent_id) : nullptr;
    }
    return w;
}

struct TarjanScc {
    const std::vector<std::string>& nodes;
    const std::map<std::string, std::vector<std::pair<std::string, Rational>>>& succ;
    std::map<std::string, int> index, low, comp;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    int next_index = 0, next_comp = 0;
    std::vector<std::vector<std::string>> components; // reverse topological order

    void run() {
        for (const auto& n : nodes)
            if (!index.count(n)) strong_connect(n);
    }
    void strong_connect(const std::string& v) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack.insert(v);
        auto it = succ.find(v);
        if (it != succ.end())
            for (const auto& [w, weight] : it->second) {
                (void)weight;
                if (!index.count(w)) {
                    strong_connect(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack.count(w)) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
        if (low[v] == index[v]) {
            std::vector<std::string> comp_nodes;
            while (true) {
                std::string w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                comp[w] = next_comp;
                comp_nodes.push_back(w);
                if (w == v) break;
            }
            std::sort(comp_nodes.begin(), comp_nodes.end());
            components.push_back(std::move(comp_nodes));
            ++next_comp;
        }
    }
};

} // namespace

AnalysisResult analyze_frequencies(const Transcript& t, DiagEngine& diags) {
    AnalysisResult out;
    std::set<std::string> group_functions;
    for (const auto& u : t.units)
        for (const auto& g : u.groups) group_functions.insert(g.function);

    // aggregate edges: (caller, callee) -> summed site weight
    std::map<std::pair<std::string, std::string>, Rational> weights;
    std::set<std::string> node_set = group_functions;
    for (const auto& u : t.units)
        for (const auto& g : u.groups) {
            for (const auto& callee : g.outside_callees) {
                auto key = std::make_pair(g.function, callee);
                weights[key] = (weights.count(key) ? weights[key] : Rational(0)) + Rational(1);
                node_set.insert(callee);
            }
            for (const auto& l : g.loops) {
                Rational w = chain_weight(t, l);
                for (const auto& callee : l.callees) {
                    auto key = std::make_pair(g.function, callee);
                    weights[key] = (weights.count(key) ? weights[key] : Rational(0)) + w;
                    node_set.insert(callee);
                }
            }
        }

    out.graph.nodes.assign(node_set.begin(), node_set.end());
    for (const auto& [key, w] : weights) out.graph.edges.push_back({key.first, key.second, w});
    for (const auto& n : out.graph.nodes)
        if (!group_functions.count(n)) {
            out.graph.externals.insert(n);
            diags.warning("call graph: no analysis facts for '" + n +
                          "'; treated as an external leaf");
        }

    std::map<std::string, std::vector<std::pair<std::string, Rational>>> succ;
    std::map<std::string, std::vector<std::pair<std::string, Rational>>> pred;
    for (const auto& e : out.graph.edges) {
        succ[e.caller].push_back({e.callee, e.site_weight});
        pred[e.callee].push_back({e.caller, e.site_weight});
    }

    TarjanScc scc{out.graph.nodes, succ, {}, {}, {}, {}, {}, 0, 0, {}};
    scc.run();

    // components come out in reverse topological order; callers appear in
    // later components than their callees, so walk back to front
    for (auto it = scc.components.rbegin(); it != scc.components.rend(); ++it) {
        const auto& members = *it;
        bool cyclic = members.size() > 1;
        if (!cyclic) // self-recursion counts as a cycle too
            for (const auto& [callee, w] : succ[members[0]])
                if (callee == members[0]) cyclic = true;

        Rational inflow(0);
        bool has_external_inflow = false;
        bool has_any_inflow = false;
        std::set<std::string> member_set(members.begin(), members.end());
        for (const auto& m : members)
            for (const auto& [caller, w] : pred[m]) {
                has_any_inflow = true;
                if (!member_set.count(caller)) {
                    inflow += out.freq.at(caller) * w;
                    has_external_inflow = true;
                }
            }

        Rational freq = has_external_inflow ? inflow : Rational(1);
        for (const auto& m : members) out.freq[m] = freq;

        if (cyclic) {
            std::string names;
            for (size_t i = 0; i < members.size(); ++i) names += (i ? "," : "") + members[i];
            out.notices.push_back("recursive cycle {" + names + "} collapsed; one traversal assumed");
            if (!has_external_inflow && has_any_inflow)
                out.notices.push_back("functions {" + names + "} unreachable from any root; frequency 1");
        }
    }
    return out;
}

SelectionReport rank_and_select(const Transcript& t, const FrequencyMap& fm, int n, RankKey key) {
    SelectionReport r;
    for (const auto* l : t.all_loops()) {
        SelectionEntry e;
        e.loop_id = l->loop_id;
        e.unit = l->unit;
        e.function = l->function;
        auto it = fm.find(l->function);
        Rational freq = it != fm.end() ? it->second : Rational(1);
        e.total_iterations = freq * chain_weight(t, *l);
        e.rank_key = key == RankKey::TotalIterations
                         ? e.total_iterations
                         : e.total_iterations * Rational(std::max(1LL, l->stmt_count));
        if (l->has_call) {
            e.eligible = false;
            e.reason = "contains call";
        } else if (!l->well_nested) {
            e.eligible = false;
            e.reason = "not well nested";
        } else {
            e.eligible = true;
        }
        r.entries.push_back(std::move(e));
    }
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const SelectionEntry& a, const SelectionEntry& b) {
                         if (a.rank_key != b.rank_key) return b.rank_key < a.rank_key;
                         if (a.unit != b.unit) return a.unit < b.unit;
                         return a.loop_id < b.loop_id;
                     });
    for (auto& e : r.entries) {
        if (!e.eligible || (int)r.chosen.size() >= n) continue;
        e.chosen = true;
        r.chosen.push_back(e.loop_id);
    }
    if ((int)r.chosen.size() < n)
        r.notices.push_back("only " + std::to_string(r.chosen.size()) +
                            " eligible loop(s) available, requested " + std::to_string(n));
    return r;
}

std::string render_selection_table(const SelectionReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(8) << "loop" << std::setw(14) << "unit" << std::setw(12)
       << "function" << std::setw(16) << "total" << std::setw(9) << "eligible" << std::setw(8)
       << "chosen" << "reason" << "\n";
    for (const auto& e : r.entries) {
        os << std::left << std::setw(8) << ("loop" + std::to_string(e.loop_id)) << std::setw(14)
           << e.unit << std::setw(12) << e.function << std::setw(16) << e.total_iterations.str()
           << std::setw(9) << (e.eligible ? "yes" : "no") << std::setw(8)
           << (e.chosen ? "yes" : "-") << (e.reason.empty() ? "-" : e.reason) << "\n";
    }
    for (const auto& n : r.notices) os << "notice: " << n << "\n";
    return os.str();
}

std::string render_selection_lines(const SelectionReport& r) {
    std::ostringstream os;
    for (const auto& e : r.entries)
        os << "loop" << e.loop_id << " total=" << e.total_iterations.str()
           << " eligible=" << (e.eligible ? 1 : 0) << " chosen=" << (e.chosen ? 1 : 0)
           << " reason=" << (e.reason.empty() ? "-" : e.reason) << "\n";
    return os.str();
}

} // namespace loopforge::analyzer

#include "loopforge/collector.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace loopforge::collector {

using namespace mir;
using transcript::FunctionGroup;
using transcript::FunctionRecord;
using transcript::LoopRecord;

namespace {

std::vector<std::string> callee_list(const MirFunction& f) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts)
            if (s.kind == StmtKind::Call && seen.insert(s.callee).second) out.push_back(s.callee);
    return out;
}

// Callee-before-caller over the unit-local call graph, ties by source order.
std::vector<const MirFunction*> emission_order(const TranslationUnit& unit) {
    std::map<std::string, const MirFunction*> local;
    for (const auto& f : unit.functions) local[f.name] = &f;
    std::vector<const MirFunction*> order;
    std::set<std::string> visited;
    std::function<void(const MirFunction&)> visit = [&](const MirFunction& f) {
        if (!visited.insert(f.name).second) return;
        for (const auto& c : callee_list(f)) {
            auto it = local.find(c);
            if (it != local.end()) visit(*it->second);
        }
        order.push_back(&f);
    };
    for (const auto& f : unit.functions) visit(f);
    return order;
}

// Blocks belonging to the loop but to none of its children.
std::set<BlockId> direct_blocks(const LoopForest& forest, int idx) {
    const LoopNode& loop = forest.loops[idx];
    std::set<BlockId> blocks(loop.body.begin(), loop.body.end());
    for (int c : loop.children)
        for (BlockId b : forest.loops[c].body) blocks.erase(b);
    return blocks;
}

// The level graph of a loop must be acyclic once child bodies are contracted
// and back edges to the header are cut; leftover cycles mean irreducible
// structure the FSM translation cannot express.
bool level_acyclic(const MirFunction& f, const LoopForest& forest, int idx) {
    const LoopNode& loop = forest.loops[idx];
    // map block -> representative (child index+1, or 0 for direct blocks)
    std::map<BlockId, int> rep;
    for (BlockId b : loop.body) rep[b] = 0;
    for (size_t k = 0; k < loop.children.size(); ++k)
        for (BlockId b : forest.loops[loop.children[k]].body) rep[b] = (int)k + 1;

    // nodes: direct blocks by id, children as negative ids
    std::map<long long, std::vector<long long>> adj;
    auto node_of = [&](BlockId b) -> long long {
        int r = rep[b];
        return r == 0 ? (long long)b : -(long long)r;
    };
    for (BlockId b : loop.body) {
        for (BlockId s : f.blocks[b].successors()) {
            if (!rep.count(s)) continue;     // exit edge
            if (s == loop.header) continue;  // back edge
            long long u = node_of(b), v = node_of(s);
            if (u == v && u < 0) continue; // edge within one child
            adj[u].push_back(v);
        }
    }
    std::map<long long, int> state;
    bool cyclic = false;
    std::function<void(long long)> dfs = [&](long long n) {
        state[n] = 1;
        for (long long m : adj[n]) {
            if (state[m] == 1) {
                cyclic = true;
                return;
            }
            if (state[m] == 0) dfs(m);
            if (cyclic) return;
        }
        state[n] = 2;
    };
    for (const auto& [n, _] : adj) {
        if (state[n] == 0) dfs(n);
        if (cyclic) return false;
    }
    return true;
}

bool nest_has_call(const MirFunction& f, const LoopNode& loop) {
    for (BlockId b : loop.body)
        for (const auto& s : f.blocks[b].stmts)
            if (s.kind == StmtKind::Call) return true;
    return false;
}

bool structurally_sound(const MirFunction& f, const LoopForest& forest, int idx) {
    if (!level_acyclic(f, forest, idx)) return false;
    for (int c : forest.loops[idx].children)
        if (!structurally_sound(f, forest, c)) return false;
    return true;
}

} // namespace

std::vector<FunctionRecord> collect_functions(const TranslationUnit& unit) {
    std::vector<FunctionRecord> out;
    for (const MirFunction* f : emission_order(unit))
        out.push_back({unit.name, f->name, callee_list(*f)});
    return out;
}

std::vector<LoopRecord> collect_loops(const MirFunction& f, const LoopForest& forest,
                                      const std::string& unit_name) {
    std::vector<LoopRecord> out;
    for (size_t i = 0; i < forest.loops.size(); ++i) {
        const LoopNode& loop = forest.loops[i];
        LoopRecord r;
        r.unit = unit_name;
        r.function = f.name;
        r.local_count = loop.local_count;
        r.count_is_heuristic = loop.count_is_heuristic;
        r.parent_index = loop.parent;

        std::set<BlockId> direct = direct_blocks(forest, (int)i);
        std::set<std::string> seen_callees, seen_arrays;
        for (BlockId b : loop.body) { // body is ascending, stable order
            bool is_direct = direct.count(b) != 0;
            for (const auto& s : f.blocks[b].stmts) {
                if (s.kind != StmtKind::Phi) r.stmt_count++;
                if (!is_direct) continue;
                if (s.kind == StmtKind::Call && seen_callees.insert(s.callee).second)
                    r.callees.push_back(s.callee);
                if (s.kind == StmtKind::Load || s.kind == StmtKind::Store) {
                    r.mem_accesses++;
                    if (seen_arrays.insert(s.mem.name).second) r.array_names.push_back(s.mem.name);
                }
            }
        }
        r.has_call = !r.callees.empty();
        r.well_nested = !nest_has_call(f, loop) && structurally_sound(f, forest, (int)i);
        out.push_back(std::move(r));
    }
    return out;
}

UnitCollection collect_unit(const MirProgram& program, const TranslationUnit& unit,
                            DiagEngine& diags, long long default_count) {
    (void)program;
    UnitCollection out;
    out.function_records = collect_functions(unit);
    for (const MirFunction* f : emission_order(unit)) {
        auto forest = find_loops(*f, diags, default_count);
        auto loops = collect_loops(*f, forest, unit.name);

        // calls outside every loop
        std::set<BlockId> in_loop;
        for (const auto& l : forest.loops) in_loop.insert(l.body.begin(), l.body.end());
        std::vector<std::string> outside;
        std::set<std::string> seen;
        for (const auto& b : f->blocks) {
            if (in_loop.count(b.id)) continue;
            for (const auto& s : b.stmts)
                if (s.kind == StmtKind::Call && seen.insert(s.callee).second)
                    outside.push_back(s.callee);
        }
        if (loops.empty() && outside.empty()) continue;
        out.groups.push_back({f->name, std::move(outside), std::move(loops)});
    }
    return out;
}

void append_transcript(const std::string& path, const std::string& unit_name,
                       std::vector<FunctionGroup> groups, const std::string& source_sha256) {
    transcript::Transcript t;
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::ostringstream os;
            os << in.rdbuf();
            t = transcript::parse(os.str());
        }
    }

    // assign fresh ids in append order; parent_index points into the same
    // group's forest-preorder records
    for (auto& g : groups) {
        std::vector<long long> ids;
        for (auto& l : g.loops) {
            l.loop_id = t.next_loop_id++;
            ids.push_back(l.loop_id);
        }
        for (auto& l : g.loops) {
            if (l.parent_index >= 0) l.parent_id = ids[l.parent_index];
            l.parent_index = -1;
        }
    }

    transcript::UnitSection section{unit_name, source_sha256, std::move(groups)};
    bool replaced = false;
    for (auto& u : t.units)
        if (u.name == unit_name) {
            u = section;
            replaced = true;
            break;
        }
    if (!replaced) t.units.push_back(std::move(section));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write transcript '" + path + "'");
    out << transcript::serialize(t);
    if (!out) throw std::runtime_error("write failure on transcript '" + path + "'");
}

} // namespace loopforge::collector

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopforge/diag.hpp"
#include "loopforge/mir.hpp"
#include "loopforge/rational.hpp"

namespace loopforge::synth {

// ---- cost model -------------------------------------------------------------

struct CostModel {
    long long f_cpu_hz = 666'000'000;
    long long f_accel_hz = 333'000'000;
    long long invocation_overhead_cycles = 50;
    long long reg_access_cycles = 14;
    long long mem_penalty_cycles = 4;
    long long clock_budget = 10; // combinational delay units per state
    Rational min_speedup = Rational(1);
    std::map<std::string, long long> op_delay; // delay units by op name
    std::map<std::string, long long> sw_cycles;

    long long delay_of(const std::string& op) const;
    long long sw_cycles_of(const std::string& op) const;
};

CostModel default_cost_model();

// ---- datapath graph -----------------------------------------------------------

enum class NodeKind { Const, RegRead, BinOp, UnOp, Select, Load, Store, RegWrite, ExitCond };

using NodeId = int;
constexpr NodeId kNoNode = -1;

struct DfgNode {
    NodeId id = kNoNode;
    NodeKind kind = NodeKind::Const;
    int hyperblock = -1;
    mir::BinOp bin_op = mir::BinOp::Add;
    mir::UnOp un_op = mir::UnOp::Neg;
    int32_t imm = 0;                // Const
    int reg = -1;                   // RegRead / RegWrite
    int mem = -1;                   // Load / Store channel index
    int exit_id = 0;                // ExitCond
    std::vector<NodeId> operands;   // BinOp: a,b; UnOp: a; Select: c,t,f;
                                    // Load: idx; Store: idx,val; RegWrite: val;
                                    // ExitCond: cond
    NodeId pred = kNoNode;          // commit/execute predicate (Load/Store/RegWrite)
};

enum class RegRole { Input, Internal, Output, BbIdx };

struct FsmReg {
    std::string name;
    RegRole role = RegRole::Internal;
    int io_index = -1; // position among inputs/outputs for Input/Output roles
};

// Transition out of a hyperblock, priority ordered; target -1 is DONE.
struct Transition {
    NodeId guard = kNoNode; // kNoNode: unconditional (must be last)
    int target_hb = -1;
    bool to_done = false;
};

struct Hyperblock {
    int id = -1;
    int level = -1;              // -1: prologue
    mir::BlockId entry = -1;     // -1 for the prologue
    std::vector<mir::BlockId> blocks;
    std::vector<NodeId> nodes;   // construction order
    std::vector<Transition> transitions;
};

struct LevelInfo {
    int id = 0;
    int parent = -1;
    mir::BlockId header = -1;
    int header_hb = -1;
    long long est_trips = 1;
    bool trips_heuristic = false;
};

// Output port: either the merge of an exit-target phi (written per exit under
// that exit's condition) or a plain loop-defined value (written at its
// definition).
struct OutputSpec {
    std::string name;
    bool is_phi = false;
    mir::BlockId phi_block = -1;
    int phi_pos = -1;
    std::vector<std::optional<mir::Operand>> per_exit; // 1-based exits at [id-1]
    mir::ValueId plain_value = mir::kNoValue;
};

struct Boundary {
    std::vector<mir::ValueId> live_ins;
    std::vector<OutputSpec> outputs;
};

Boundary analyze_boundary(const mir::MirFunction& f, const mir::LoopNode& loop);

// The if-converted, level-structured datapath of one candidate loop nest.
struct Dfg {
    std::string loop_name;     // "loop<id>"
    std::string function;
    mir::BlockId header = -1;
    std::vector<DfgNode> nodes;
    std::vector<Hyperblock> hyperblocks; // [0] is the prologue
    std::vector<LevelInfo> levels;       // [0] is the candidate loop
    std::vector<FsmReg> regs;
    std::vector<mir::MemRef> mems;
    std::vector<std::pair<int, mir::BlockId>> exits; // (exit id, source block)
    std::vector<std::string> input_names;            // port names, live-in order
    std::vector<mir::ValueId> live_ins;
    std::vector<OutputSpec> outputs;
    int bb_idx_reg = -1;

    int input_reg(int io_index) const;
    int output_reg(int io_index) const;
};

// if-conversion of the selected loop nest: speculative arithmetic, predicated
// stores and loads, phi selects, exit-condition nodes. Returns nullopt after a
// rejection warning (multi-entry header, call in region, irreducible level).
std::optional<Dfg> if_convert(const mir::MirProgram& p, const mir::MirFunction& f,
                              const mir::LoopForest& forest, int loop_index,
                              const std::string& loop_name, DiagEngine& diags);

// ---- scheduling -----------------------------------------------------------------

struct ScheduledState {
    int hyperblock = -1;
    long long cycles = 1;
    std::vector<NodeId> chain; // chain order inside the state
};

struct Schedule {
    std::vector<ScheduledState> states;   // global state order
    std::vector<int> state_of;            // node -> state index (-1 unscheduled)
    std::vector<int> chain_pos;           // node -> position in state
    std::vector<int> first_state_of_hb;   // hyperblock -> first state
    std::vector<int> last_state_of_hb;
};

// List scheduling with operation chaining: priority is the longest downstream
// delay, resource limit of one access per memory channel per state, memory
// nodes never chain, long operations become multi-cycle states.
Schedule schedule_dfg(const Dfg& d, const CostModel& m); // throws on unschedulable

// Machine-checkable legality: dependence ordering, chain delays within the
// clock budget, memory exclusivity, register read/write ordering.
std::vector<std::string> validate_schedule(const Dfg& d, const Schedule& s, const CostModel& m);

// ---- FSM ------------------------------------------------------------------------

struct FsmState {
    int hyperblock = -1;
    int level = -1;
    long long cycles = 1;
    std::vector<NodeId> nodes;
    std::vector<Transition> transitions; // only on the last state of a hyperblock
    int fallthrough = -1;                // next state when transitions are empty
};

struct LevelTiming {
    long long best_cycles = 0;  // per header entry, this level's own states
    long long worst_cycles = 0;
    long long est_trips = 1;
    bool trips_heuristic = false;
};

struct FsmSpec {
    std::string name;     // loop<id>
    std::string function;
    mir::BlockId header = -1;
    std::vector<DfgNode> nodes;
    std::vector<FsmReg> regs;
    std::vector<mir::MemRef> mems;
    std::vector<std::pair<int, mir::BlockId>> exits;
    std::vector<std::string> input_names;
    std::vector<mir::ValueId> live_ins;
    std::vector<OutputSpec> outputs;
    int bb_idx_reg = -1;
    std::vector<FsmState> states;
    std::vector<LevelTiming> levels; // [0]: candidate loop
    std::vector<int> hb_level;       // hyperblock -> level (-1 prologue)
    std::vector<int> hb_first_state;
    long long iter_best_cycles = 0;  // one candidate iteration, children folded in
    long long iter_worst_cycles = 0;

    int num_inputs() const { return (int)input_names.size(); }
    int num_outputs() const { return (int)outputs.size() + 1; } // + bb_idx
    int input_reg(int io_index) const;
    int output_reg(int io_index) const;
};

FsmSpec build_fsm(const Dfg& d, const Schedule& s);

// Diagnostic text form; parse(serialize(f)) reproduces the spec exactly.
std::string serialize_fsm(const FsmSpec& f);
FsmSpec parse_fsm(const std::string& text); // throws ParseError

// ---- estimation -------------------------------------------------------------------

struct CycleEstimate {
    long long best_cycles_per_iter = 0;  // candidate-level iteration, children folded in
    long long worst_cycles_per_iter = 0;
    long long est_iterations = 1;
    Rational hw_time_s;
    Rational sw_time_s;
    Rational speedup;
    bool accepted = false;
    std::string reject_reason;
};

// Static software cost of one candidate-loop iteration under the cost model,
// nested loops weighted by their estimated trip counts.
Rational sw_cycles_per_iteration(const mir::MirFunction& f, const mir::LoopForest& forest,
                                 int loop_index, const CostModel& m);

CycleEstimate estimate_and_filter(const FsmSpec& f, long long est_iterations,
                                  Rational sw_cycles_per_iter, const CostModel& m);

std::string render_estimate(const CycleEstimate& e, const FsmSpec& f);

// ---- whole-candidate pipeline --------------------------------------------------------

struct SynthesisResult {
    Dfg dfg;
    Schedule schedule;
    FsmSpec fsm;
    CycleEstimate estimate;
};

// if_convert + schedule + build_fsm + estimate for one selected loop.
// est_iterations is the loop's expected trip count per invocation.
std::optional<SynthesisResult> synthesize_loop(const mir::MirProgram& p, const mir::MirFunction& f,
                                               const mir::LoopForest& forest, int loop_index,
                                               const std::string& loop_name,
                                               long long est_iterations, const CostModel& m,
                                               DiagEngine& diags);

// ---- datapath reference evaluation --------------------------------------------------

// Schedule-independent execution of the Dfg/FsmSpec node graph, hyperblock by
// hyperblock. The FSM simulator must agree with this on every input.
struct DfgEvalResult {
    std::map<std::string, int32_t> outputs; // port name -> value
    int bb_idx = 0;
    long long hyperblocks_run = 0;
    std::vector<std::tuple<int, int32_t, int32_t>> stores; // (mem, index, value)
};

DfgEvalResult eval_dfg(const Dfg& d, const std::vector<int32_t>& inputs,
                       std::map<std::string, std::vector<int32_t>>& mem,
                       long long max_hyperblocks = 2'000'000);

} // namespace loopforge::synth

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopforge/mir.hpp"

namespace loopforge::interp {

struct ExecError : std::runtime_error {
    explicit ExecError(const std::string& what) : std::runtime_error(what) {}
};

struct Limits {
    long long max_steps = 50'000'000;
    int max_call_depth = 8000;
};

struct CallEvent {
    std::string callee;
    std::vector<int32_t> args;
    friend bool operator==(const CallEvent&, const CallEvent&) = default;
};

struct StoreEvent {
    bool is_global = false;
    std::string object;
    int32_t index = 0;
    int32_t value = 0;
    friend bool operator==(const StoreEvent&, const StoreEvent&) = default;
};

struct RunResult {
    int32_t ret = 0; // 0 for void entries
    long long steps = 0;
    std::vector<CallEvent> calls;
    std::vector<StoreEvent> stores;
};

struct RegionResult {
    std::map<mir::ValueId, int32_t> values; // SSA environment at the taken exit
    int exit_id = 0;                        // 1-based index into loop.exit_edges
    long long iterations = 0;               // header entries
    long long steps = 0;
    std::vector<StoreEvent> stores;
};

using Builtin = std::function<int32_t(const std::vector<int32_t>&)>;
using MemImage = std::map<std::string, std::vector<int32_t>>;

// Big-step IR interpreter with wraparound 32-bit arithmetic. Division by
// zero and out-of-range indices trap; step and call-depth limits guard
// non-termination. Calls resolve to program functions first, then to
// registered builtins (the verification hooks).
class Machine {
public:
    explicit Machine(const mir::MirProgram& p, Limits limits = {});

    void register_builtin(const std::string& name, Builtin fn);
    void set_trace(bool on) { trace_ = on; }

    MemImage& globals() { return globals_; }
    const MemImage& globals() const { return globals_; }
    void reset_globals();

    RunResult run(const std::string& entry, const std::vector<int32_t>& args);

    // Execute one loop region: starts at the header as if entered from the
    // unique outside predecessor, runs until an exit edge is traversed.
    // live_in seeds the SSA environment; locals holds the owning function's
    // arrays (shared with the caller, like globals).
    RegionResult run_region(const mir::MirFunction& f, const mir::LoopNode& loop,
                            const std::map<mir::ValueId, int32_t>& live_in, MemImage& locals);

private:
    struct Frame;
    int32_t exec_function(const mir::MirFunction& f, const std::vector<int32_t>& args, int depth);
    void exec_stmt(Frame& fr, const mir::Stmt& s, int depth);

    const mir::MirProgram& prog_;
    Limits limits_;
    MemImage globals_;
    std::map<std::string, Builtin> builtins_;
    bool trace_ = false;
    long long steps_ = 0;
    std::vector<CallEvent> calls_;
    std::vector<StoreEvent> stores_;
};

// Values defined outside the loop but used inside (including phi operands on
// the entry edge), in first-use order; these are the accelerator inputs.
std::vector<mir::ValueId> region_live_ins(const mir::MirFunction& f, const mir::LoopNode& loop);

} // namespace loopforge::interp

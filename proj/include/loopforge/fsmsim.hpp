#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopforge/synth.hpp"

namespace loopforge::fsmsim {

struct SimError : std::runtime_error {
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

struct SimLimits {
    long long max_cycles = 100'000'000;
};

struct SimResult {
    std::map<std::string, int32_t> outputs; // port name -> final register value
    int32_t bb_idx = 0;
    long long cycles = 0;    // body cycles including the prologue state
    long long transfers = 0; // inputs + outputs + bb_idx + start + done
    std::map<int, long long> level_cycles;  // own cycles per loop level
    std::map<int, long long> level_entries; // header entries per loop level
    std::vector<std::tuple<int, int32_t, int32_t>> stores; // (channel, index, value)
};

// Cycle-accurate execution: one state per clock step (multi-cycle states
// consume their cycle count), register and store commits at state end,
// hyperblock wires live until the hyperblock is re-entered. Memory images are
// keyed "name" for locals and "@name" for globals.
SimResult simulate_fsm(const synth::FsmSpec& f, const std::vector<int32_t>& inputs,
                       std::map<std::string, std::vector<int32_t>>& mem, SimLimits limits = {});

} // namespace loopforge::fsmsim

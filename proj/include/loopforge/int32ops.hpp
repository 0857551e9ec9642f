#pragma once

#include <cstdint>
#include <optional>

#include "loopforge/mir.hpp"

namespace loopforge {

// Evaluation semantics shared by the constant folder, the IR interpreter,
// the datapath evaluator and the FSM simulator: wraparound 32-bit signed
// arithmetic, shift amounts masked to 5 bits, arithmetic right shift.
// Division and remainder by zero have no defined result (nullopt -> trap);
// INT32_MIN / -1 wraps to INT32_MIN, INT32_MIN % -1 is 0.

inline std::optional<int32_t> eval_bin(mir::BinOp op, int32_t a, int32_t b) {
    uint32_t ua = (uint32_t)a, ub = (uint32_t)b;
    switch (op) {
    case mir::BinOp::Add: return (int32_t)(ua + ub);
    case mir::BinOp::Sub: return (int32_t)(ua - ub);
    case mir::BinOp::Mul: return (int32_t)(ua * ub);
    case mir::BinOp::Div:
        if (b == 0) return std::nullopt;
        if (a == INT32_MIN && b == -1) return INT32_MIN;
        return a / b;
    case mir::BinOp::Rem:
        if (b == 0) return std::nullopt;
        if (a == INT32_MIN && b == -1) return 0;
        return a % b;
    case mir::BinOp::Shl: return (int32_t)(ua << (ub & 31u));
    case mir::BinOp::Shr: return (int32_t)(a >> (int32_t)(ub & 31u));
    case mir::BinOp::And: return (int32_t)(ua & ub);
    case mir::BinOp::Or: return (int32_t)(ua | ub);
    case mir::BinOp::Xor: return (int32_t)(ua ^ ub);
    case mir::BinOp::CmpEq: return a == b ? 1 : 0;
    case mir::BinOp::CmpNe: return a != b ? 1 : 0;
    case mir::BinOp::CmpLt: return a < b ? 1 : 0;
    case mir::BinOp::CmpLe: return a <= b ? 1 : 0;
    case mir::BinOp::CmpGt: return a > b ? 1 : 0;
    case mir::BinOp::CmpGe: return a >= b ? 1 : 0;
    }
    return std::nullopt;
}

inline int32_t eval_un(mir::UnOp op, int32_t a) {
    switch (op) {
    case mir::UnOp::Neg: return (int32_t)(0u - (uint32_t)a);
    case mir::UnOp::BitNot: return (int32_t)~(uint32_t)a;
    }
    return 0;
}

} // namespace loopforge

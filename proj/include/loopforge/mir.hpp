#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopforge/diag.hpp"

namespace loopforge::mir {

using ValueId = int;
using BlockId = int;
constexpr ValueId kNoValue = -1;

enum class BinOp {
    Add, Sub, Mul, Div, Rem, Shl, Shr, And, Or, Xor,
    CmpEq, CmpNe, CmpLt, CmpLe, CmpGt, CmpGe,
};
enum class UnOp { Neg, BitNot };

const char* bin_op_name(BinOp op);
const char* un_op_name(UnOp op);
bool is_compare(BinOp op);

// Operand: either an SSA value or an immediate 32-bit constant.
struct Operand {
    bool is_const = false;
    ValueId value = kNoValue;
    int32_t imm = 0;

    static Operand val(ValueId v) { return Operand{false, v, 0}; }
    static Operand con(int32_t c) { return Operand{true, kNoValue, c}; }
    friend bool operator==(const Operand&, const Operand&) = default;
};

// Reference to a memory object: a function-local array or a program global.
struct MemRef {
    bool is_global = false;
    std::string name;
    friend bool operator==(const MemRef&, const MemRef&) = default;
};

enum class StmtKind { Const, Copy, Unary, Binary, Load, Store, Call, Phi };

struct Stmt {
    StmtKind kind = StmtKind::Const;
    ValueId dest = kNoValue; // kNoValue for Store and result-less Call
    // Const
    int32_t imm = 0;
    // Unary / Binary
    UnOp un_op = UnOp::Neg;
    BinOp bin_op = BinOp::Add;
    Operand lhs, rhs; // Copy/Unary use lhs; Load uses lhs as index; Store: lhs index, rhs value
    // Load / Store
    MemRef mem;
    // Call
    std::string callee;
    std::vector<Operand> args;
    // Phi: one operand per predecessor, in predecessor order
    std::vector<Operand> phi_args;

    friend bool operator==(const Stmt&, const Stmt&) = default;
};

enum class TermKind { Goto, Branch, Return };

struct Terminator {
    TermKind kind = TermKind::Return;
    Operand cond;               // Branch
    BlockId then_target = -1;   // Goto/Branch
    BlockId else_target = -1;   // Branch
    bool has_value = false;     // Return
    Operand value;              // Return
    friend bool operator==(const Terminator&, const Terminator&) = default;
};

struct BasicBlock {
    BlockId id = -1;
    std::vector<Stmt> stmts;
    Terminator term;
    // Derived, rebuilt by recompute_cfg_edges(); excluded from equality.
    std::vector<BlockId> preds;

    std::vector<BlockId> successors() const;
    friend bool operator==(const BasicBlock& a, const BasicBlock& b) {
        return a.id == b.id && a.stmts == b.stmts && a.term == b.term;
    }
};

struct ValueInfo {
    std::string name; // hint for printing, HDL ports and wrappers
    friend bool operator==(const ValueInfo&, const ValueInfo&) = default;
};

struct MemObject {
    std::string name;
    int size = 0;                 // elements
    bool declared_scalar = false; // re-emit as "int g;" instead of "int g[1];"
    std::vector<int32_t> init;    // globals only; empty means zero-filled
    friend bool operator==(const MemObject&, const MemObject&) = default;
};

struct MirFunction {
    std::string name;
    std::vector<ValueId> params; // int32 scalars
    std::vector<MemObject> locals;
    std::vector<BasicBlock> blocks; // blocks[i].id == i
    std::vector<ValueInfo> values;  // value table, indexed by ValueId
    BlockId entry = 0;

    BasicBlock& block(BlockId id) { return blocks[id]; }
    const BasicBlock& block(BlockId id) const { return blocks[id]; }
    ValueId add_value(std::string name_hint) {
        values.push_back({std::move(name_hint)});
        return (ValueId)values.size() - 1;
    }
    BlockId add_block() {
        BasicBlock b;
        b.id = (BlockId)blocks.size();
        blocks.push_back(std::move(b));
        return blocks.back().id;
    }
    const MemObject* find_local(const std::string& n) const;
    void recompute_cfg_edges();

    friend bool operator==(const MirFunction& a, const MirFunction& b) {
        return a.name == b.name && a.params == b.params && a.locals == b.locals &&
               a.blocks == b.blocks && a.values == b.values && a.entry == b.entry;
    }
};

struct TranslationUnit {
    std::string name;
    std::vector<MirFunction> functions;
    // Prototypes seen in this unit (bodies may live elsewhere).
    std::vector<std::string> declared;
    friend bool operator==(const TranslationUnit&, const TranslationUnit&) = default;
};

struct MirProgram {
    std::vector<TranslationUnit> units;
    std::vector<MemObject> globals;
    std::optional<std::string> entry;

    MirFunction* find_function(const std::string& name);
    const MirFunction* find_function(const std::string& name) const;
    const MemObject* find_global(const std::string& name) const;
    bool is_declared(const std::string& name) const;

    friend bool operator==(const MirProgram&, const MirProgram&) = default;
};

// ---- text form ------------------------------------------------------------
// Canonical, lossless: parse_text(print_text(p)) == p.

std::string print_text(const MirProgram& p);
std::string print_text(const MirFunction& f);
MirProgram parse_text(const std::string& text); // throws ParseError

// ---- validation ------------------------------------------------------------
// Shared IR validator: CFG shape, SSA single-definition, phi arity/order,
// def-dominates-use, resolvable calls and memory references. Returns the
// list of violations (empty when valid).

std::vector<std::string> validate(const MirProgram& p);
std::vector<std::string> validate_function(const MirProgram& p, const MirFunction& f);

// ---- dominators -------------------------------------------------------------

struct DomTree {
    std::vector<BlockId> idom;        // idom[entry] == entry; -1 for unreachable
    std::vector<std::vector<BlockId>> children;
    std::vector<int> rpo_index;       // reverse-postorder position; -1 unreachable

    bool dominates(BlockId a, BlockId b) const;
    bool reachable(BlockId b) const { return rpo_index[b] >= 0; }
};

// Iterative data-flow dominator computation (Cooper/Harvey/Kennedy).
DomTree compute_dominators(const MirFunction& f);

// Exhaustive oracle: a dominates b iff every entry->b path passes a.
// Exponential; only for cross-checking small graphs in tests.
bool dominates_bruteforce(const MirFunction& f, BlockId a, BlockId b);

// ---- natural loops -----------------------------------------------------------

struct LoopNode {
    BlockId header = -1;
    std::vector<BlockId> body;    // includes header and all nested bodies, ascending
    std::vector<BlockId> latches; // back-edge sources, ascending
    std::vector<std::pair<BlockId, BlockId>> exit_edges; // (source, target), discovery order
    std::vector<int> children;    // indices into LoopForest::loops
    int parent = -1;              // index into LoopForest::loops, -1 for roots
    long long local_count = 0;    // estimated latch executions
    bool count_is_heuristic = false;

    bool contains(BlockId b) const;
};

struct LoopForest {
    std::vector<LoopNode> loops; // preorder: parents before children
    std::vector<int> roots;      // indices of top-level loops

    const LoopNode* loop_with_header(BlockId h) const;
};

// Dominator-based back-edge detection. Irreducible regions (retreating edges
// whose target does not dominate the source) produce warnings instead of
// loop nodes. Counted-form loops get local_count = trips - 1; everything else
// falls back to `default_count` with count_is_heuristic set.
LoopForest find_loops(const MirFunction& f, DiagEngine& diags, long long default_count = 1000);

} // namespace loopforge::mir

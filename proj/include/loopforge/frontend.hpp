#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loopforge/ast.hpp"
#include "loopforge/mir.hpp"

namespace loopforge::frontend {

// Lower one parsed unit into SSA form and append it to the program.
// Standard construction: iterative data-flow dominators, phi placement on
// dominance frontiers, then rename. Returns false after error diagnostics.
bool build_ssa_cfg(const ast::UnitAst& unit, mir::MirProgram& program, DiagEngine& diags);

// Copy propagation, constant folding, dead code elimination and value/block
// renumbering. The only optimizations in the pipeline.
void simplify_function(mir::MirFunction& f);

// Drop blocks unreachable from entry, renumber, and keep phi operands
// aligned with the recomputed predecessor lists.
void remove_unreachable_blocks(mir::MirFunction& f);

// Parse + lower + validate a whole program. Globals from every unit are
// visible program-wide; the entry is "main" when a main function exists.
std::optional<mir::MirProgram> compile_units(
    const std::vector<std::pair<std::string, std::string>>& name_and_source, DiagEngine& diags);

} // namespace loopforge::frontend

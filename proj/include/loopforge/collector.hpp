#pragma once

#include <string>
#include <vector>

#include "loopforge/diag.hpp"
#include "loopforge/mir.hpp"
#include "loopforge/transcript.hpp"

namespace loopforge::collector {

// CF pass: one record per defined function, callees in first-call order,
// duplicates removed. Cross-unit callees included.
std::vector<transcript::FunctionRecord> collect_functions(const mir::TranslationUnit& unit);

// CL pass for one function: records in forest preorder with parent_index
// linking nested records. loop_id stays 0 until transcript append.
std::vector<transcript::LoopRecord> collect_loops(const mir::MirFunction& f,
                                                  const mir::LoopForest& forest,
                                                  const std::string& unit_name);

// Both passes over one unit, functions emitted callee-before-caller.
struct UnitCollection {
    std::vector<transcript::FunctionRecord> function_records;
    std::vector<transcript::FunctionGroup> groups;
};
UnitCollection collect_unit(const mir::MirProgram& program, const mir::TranslationUnit& unit,
                            DiagEngine& diags, long long default_count = 1000);

// Parse-merge-rewrite: replaces the unit's section when present, appends
// otherwise, assigns loop ids from the persisted monotone counter.
void append_transcript(const std::string& path, const std::string& unit_name,
                       std::vector<transcript::FunctionGroup> groups,
                       const std::string& source_sha256 = "");

} // namespace loopforge::collector

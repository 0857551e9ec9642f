#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loopforge/diag.hpp"

namespace loopforge::transcript {

// Whole-function fact from the CF pass: every called function, first-call
// order, duplicates removed.
struct FunctionRecord {
    std::string unit;
    std::string name;
    std::vector<std::string> callees;
    friend bool operator==(const FunctionRecord&, const FunctionRecord&) = default;
};

struct LoopRecord {
    long long loop_id = 0; // assigned at transcript append time
    std::string unit;
    std::string function;
    long long local_count = 0;
    bool has_call = false;
    bool well_nested = false;
    bool count_is_heuristic = false;
    std::vector<std::string> callees; // calls whose innermost loop is this one
    long long mem_accesses = 0;       // array/global accesses, innermost
    long long parent_id = 0;          // 0: top level
    int parent_index = -1;            // pre-assignment linkage, not serialized
    long long stmt_count = 0;         // non-phi statements in the nest
    std::vector<std::string> array_names;
    friend bool operator==(const LoopRecord&, const LoopRecord&) = default;
};

// One "function=" group: the function's loop records plus its calls that sit
// outside every loop (in-loop calls live in the loop records).
struct FunctionGroup {
    std::string function;
    std::vector<std::string> outside_callees;
    std::vector<LoopRecord> loops;
    friend bool operator==(const FunctionGroup&, const FunctionGroup&) = default;
};

struct UnitSection {
    std::string name;
    std::string source_sha256; // hex; empty when unknown
    std::vector<FunctionGroup> groups;
    friend bool operator==(const UnitSection&, const UnitSection&) = default;
};

struct Transcript {
    long long next_loop_id = 1;
    std::vector<UnitSection> units;

    const UnitSection* find_unit(const std::string& name) const;
    std::vector<const LoopRecord*> all_loops() const; // file order
    const LoopRecord* find_loop(long long id) const;
    friend bool operator==(const Transcript&, const Transcript&) = default;
};

// Bit-exact serialization: LF endings, no trailing spaces, blank line between
// unit sections. Analysis metadata (counter, checksums, per-loop statement
// counts) rides in '#' header comments the record grammar ignores.
std::string serialize(const Transcript& t);

// Throws ParseError naming the offending line.
Transcript parse(const std::string& text);

std::string sha256_hex(const std::string& data);

} // namespace loopforge::transcript

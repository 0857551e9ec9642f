#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "loopforge/diag.hpp"
#include "loopforge/rational.hpp"
#include "loopforge/transcript.hpp"

namespace loopforge::analyzer {

// One aggregated edge per (caller, callee): site_weight sums, over every
// recorded call site, the product of (count+1) along the site's enclosing
// loop chain (1 for sites outside loops).
struct CallEdge {
    std::string caller;
    std::string callee;
    Rational site_weight;
};

struct CallGraph {
    std::vector<std::string> nodes; // sorted
    std::vector<CallEdge> edges;    // sorted by (caller, callee)
    std::set<std::string> externals;
};

using FrequencyMap = std::map<std::string, Rational>;

struct AnalysisResult {
    CallGraph graph;
    FrequencyMap freq;
    std::vector<std::string> notices;
};

// freq(root) = 1; freq(f) = sum over edges g->f of freq(g) * site_weight.
// Call-graph cycles collapse to one traversal: members of a strongly
// connected component share the component's external inflow.
AnalysisResult analyze_frequencies(const transcript::Transcript& t, DiagEngine& diags);

enum class RankKey { TotalIterations, TotalTimesStatements };

struct SelectionEntry {
    long long loop_id = 0;
    std::string unit;
    std::string function;
    Rational total_iterations;
    Rational rank_key;
    bool eligible = false;
    std::string reason; // empty when eligible
    bool chosen = false;
};

struct SelectionReport {
    std::vector<SelectionEntry> entries; // ranked descending, ties by (unit, loop_id)
    std::vector<long long> chosen;
    std::vector<std::string> notices;
};

SelectionReport rank_and_select(const transcript::Transcript& t, const FrequencyMap& fm, int n,
                                RankKey key = RankKey::TotalIterations);

std::string render_selection_table(const SelectionReport& r);
std::string render_selection_lines(const SelectionReport& r);

} // namespace loopforge::analyzer

#include "doctest.h"

#include <functional>
#include <random>

#include "../test_util.hpp"
#include "loopforge/analyzer.hpp"
#include "loopforge/collector.hpp"

using namespace loopforge;
using namespace loopforge::analyzer;
using transcript::FunctionGroup;
using transcript::LoopRecord;
using transcript::Transcript;
using transcript::UnitSection;

namespace {

Transcript listings_transcript() {
    auto p = lftest::compile({{"unit1.c", lftest::read_file(lftest::corpus_file("listings/unit1.c"))},
                              {"unit2.c", lftest::read_file(lftest::corpus_file("listings/unit2.c"))}});
    DiagEngine diags;
    Transcript t;
    for (const auto& u : p.units) {
        auto col = collector::collect_unit(p, u, diags);
        UnitSection sec{u.name, "", col.groups};
        for (auto& g : sec.groups)
            for (auto& l : g.loops) {
                l.loop_id = t.next_loop_id++;
                l.parent_index = -1;
            }
        t.units.push_back(std::move(sec));
    }
    return t;
}

LoopRecord make_loop(long long id, const std::string& unit, const std::string& fn, long long count,
                     std::vector<std::string> callees, bool well_nested) {
    LoopRecord l;
    l.loop_id = id;
    l.unit = unit;
    l.function = fn;
    l.local_count = count;
    l.callees = std::move(callees);
    l.has_call = !l.callees.empty();
    l.well_nested = well_nested;
    l.stmt_count = 3;
    return l;
}

// Exhaustive path-enumeration oracle for acyclic call graphs: freq(f) equals
// the sum over all root-to-f paths of the product of edge weights.
long long freq_oracle(const std::vector<std::string>& nodes,
                      const std::vector<std::tuple<std::string, std::string, long long>>& edges,
                      const std::string& target) {
    std::set<std::string> has_incoming;
    for (const auto& [g, f, w] : edges) has_incoming.insert(f);
    long long acc = 0;
    std::function<void(const std::string&, long long)> walk = [&](const std::string& v, long long prod) {
        if (v == target) acc += prod;
        for (const auto& [g, f, w] : edges)
            if (g == v) walk(f, prod * w);
    };
    for (const auto& n : nodes)
        if (!has_incoming.count(n)) walk(n, 1);
    return acc;
}

} // namespace

TEST_CASE("frequencies for the listings example") {
    auto t = listings_transcript();
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    CHECK(res.freq.at("fun1") == Rational(1));
    CHECK(res.freq.at("fun2") == Rational(10));
    CHECK(res.freq.at("fun3") == Rational(300));
}

TEST_CASE("single call-free function has frequency one") {
    Transcript t;
    t.units.push_back({"u.c", "", {{"f", {}, {make_loop(1, "u.c", "f", 5, {}, true)}}}});
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    CHECK(res.freq.at("f") == Rational(1));
}

TEST_CASE("two roots calling the same function add up") {
    Transcript t;
    t.units.push_back({"u.c", "",
                       {{"r1", {"f"}, {}},
                        {"r2", {"f"}, {}},
                        {"f", {}, {make_loop(1, "u.c", "f", 4, {}, true)}}}});
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    CHECK(res.freq.at("f") == Rational(2));
}

TEST_CASE("frequencies match the path-enumeration oracle on random dags") {
    std::mt19937 rng(777);
    for (int trial = 0; trial < 150; ++trial) {
        int n = 2 + (int)(rng() % 6);
        std::vector<std::string> names;
        for (int i = 0; i < n; ++i) names.push_back("f" + std::to_string(i));

        Transcript t;
        UnitSection sec{"u.c", "", {}};
        std::vector<std::tuple<std::string, std::string, long long>> oracle_edges;
        long long next_loop = 1;
        for (int i = 0; i < n; ++i) {
            FunctionGroup g{names[i], {}, {}};
            for (int j = i + 1; j < n; ++j) {
                int kind = (int)(rng() % 4);
                if (kind == 0) continue;
                if (kind & 1) { // call outside loops
                    g.outside_callees.push_back(names[j]);
                    oracle_edges.push_back({names[i], names[j], 1});
                }
                if (kind & 2) { // call inside a fresh loop
                    long long count = (long long)(rng() % 5);
                    g.loops.push_back(make_loop(next_loop++, "u.c", names[i], count, {names[j]}, false));
                    oracle_edges.push_back({names[i], names[j], count + 1});
                }
            }
            if (!g.outside_callees.empty() || !g.loops.empty()) sec.groups.push_back(std::move(g));
        }
        // every function needs a group so none look external
        for (int i = 0; i < n; ++i) {
            bool present = false;
            for (const auto& g : sec.groups) present |= g.function == names[i];
            if (!present) sec.groups.push_back({names[i], {}, {make_loop(next_loop++, "u.c", names[i], 0, {}, true)}});
        }
        t.units.push_back(std::move(sec));
        t.next_loop_id = next_loop;

        DiagEngine diags;
        auto res = analyze_frequencies(t, diags);
        for (const auto& name : names) {
            long long expect = freq_oracle(names, oracle_edges, name);
            CAPTURE(trial);
            CAPTURE(name);
            CHECK(res.freq.at(name) == Rational(expect));
        }
    }
}

TEST_CASE("nested loops multiply the site weight along the chain") {
    Transcript t;
    auto outer = make_loop(1, "u.c", "f", 4, {}, false);  // weight 5
    auto inner = make_loop(2, "u.c", "f", 9, {"g"}, false); // chain weight 5*10
    inner.parent_id = 1;
    t.units.push_back({"u.c", "",
                       {{"f", {}, {outer, inner}},
                        {"g", {}, {make_loop(3, "u.c", "g", 2, {}, true)}}}});
    t.next_loop_id = 4;
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    CHECK(res.freq.at("g") == Rational(50));
}

TEST_CASE("recursive cycles collapse to one traversal") {
    Transcript t;
    t.units.push_back({"u.c", "",
                       {{"root", {}, {make_loop(1, "u.c", "root", 7, {"f"}, false)}},
                        {"f", {"g"}, {}},
                        {"g", {"f"}, {}}}});
    t.next_loop_id = 2;
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    CHECK(res.freq.at("f") == Rational(8)); // inflow 1 * (7+1)
    CHECK(res.freq.at("g") == Rational(8)); // shared component frequency
    bool noticed = false;
    for (const auto& n : res.notices) noticed |= n.find("recursive cycle") != std::string::npos;
    CHECK(noticed);
}

TEST_CASE("unknown callees become external nodes with a warning") {
    Transcript t;
    t.units.push_back({"u.c", "", {{"f", {"mystery"}, {}}}});
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    CHECK(res.graph.externals.count("mystery") == 1);
    CHECK(diags.str().find("mystery") != std::string::npos);
}

TEST_CASE("selection on the listings picks loop3 only") {
    auto t = listings_transcript();
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    auto report = rank_and_select(t, res.freq, 1);
    REQUIRE(report.chosen == std::vector<long long>{3});
    REQUIRE(report.entries.size() == 3);
    CHECK(report.entries[0].loop_id == 3);
    CHECK(report.entries[0].total_iterations == Rational(30000)); // 300 * (99+1)
    for (const auto& e : report.entries)
        if (e.loop_id != 3) {
            CHECK(!e.eligible);
            CHECK(e.reason == "contains call");
        }
    auto lines = render_selection_lines(report);
    CHECK(lines.find("loop3 total=30000 eligible=1 chosen=1 reason=-") != std::string::npos);
    CHECK(lines.find("reason=contains call") != std::string::npos);
}

TEST_CASE("no eligible loops yields an empty choice plus a notice") {
    Transcript t;
    t.units.push_back({"u.c", "", {{"f", {}, {make_loop(1, "u.c", "f", 5, {"g"}, false)}}}});
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    auto report = rank_and_select(t, res.freq, 2);
    CHECK(report.chosen.empty());
    REQUIRE(!report.notices.empty());
    CHECK(report.notices[0].find("0 eligible") != std::string::npos);
}

TEST_CASE("equal totals break ties by unit then loop id") {
    Transcript t;
    t.units.push_back({"b.c", "", {{"f", {}, {make_loop(1, "b.c", "f", 5, {}, true)}}}});
    t.units.push_back({"a.c", "", {{"g", {}, {make_loop(2, "a.c", "g", 5, {}, true)}}}});
    t.next_loop_id = 3;
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    auto report = rank_and_select(t, res.freq, 2);
    REQUIRE(report.entries.size() == 2);
    CHECK(report.entries[0].unit == "a.c");
    CHECK(report.entries[1].unit == "b.c");
}

TEST_CASE("ranking is invariant under frequency scaling") {
    auto t = listings_transcript();
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    auto base = rank_and_select(t, res.freq, 1);
    FrequencyMap scaled = res.freq;
    for (auto& [k, v] : scaled) v *= Rational(17);
    auto after = rank_and_select(t, scaled, 1);
    REQUIRE(base.entries.size() == after.entries.size());
    for (size_t i = 0; i < base.entries.size(); ++i)
        CHECK(base.entries[i].loop_id == after.entries[i].loop_id);
}

TEST_CASE("raising a loop count never lowers its rank") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        Transcript t;
        UnitSection sec{"u.c", "", {}};
        int nloops = 3 + (int)(rng() % 4);
        for (int i = 0; i < nloops; ++i)
            sec.groups.push_back({"f" + std::to_string(i), {},
                                  {make_loop(i + 1, "u.c", "f" + std::to_string(i),
                                             (long long)(rng() % 50), {}, true)}});
        t.units.push_back(sec);
        t.next_loop_id = nloops + 1;
        DiagEngine diags;
        auto res = analyze_frequencies(t, diags);
        auto before = rank_and_select(t, res.freq, 1);
        int bump = (int)(rng() % nloops);
        t.units[0].groups[bump].loops[0].local_count += 1 + (long long)(rng() % 100);
        auto after = rank_and_select(t, res.freq, 1);
        auto pos = [&](const SelectionReport& r, long long id) {
            for (size_t i = 0; i < r.entries.size(); ++i)
                if (r.entries[i].loop_id == id) return (int)i;
            return -1;
        };
        CHECK(pos(after, bump + 1) <= pos(before, bump + 1));
    }
}

TEST_CASE("no chosen loop ever has a call or broken nest") {
    auto t = listings_transcript();
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    auto report = rank_and_select(t, res.freq, 3);
    for (long long id : report.chosen) {
        const auto* l = t.find_loop(id);
        REQUIRE(l);
        CHECK(!l->has_call);
        CHECK(l->well_nested);
    }
}

TEST_CASE("statement-count ranking key can reorder loops") {
    Transcript t;
    auto small = make_loop(1, "u.c", "f", 9, {}, true); // total 10
    small.stmt_count = 2;
    auto big = make_loop(2, "u.c", "g", 7, {}, true); // total 8 but 20 weighted
    big.stmt_count = 40;
    t.units.push_back({"u.c", "", {{"f", {}, {small}}, {"g", {}, {big}}}});
    t.next_loop_id = 3;
    DiagEngine diags;
    auto res = analyze_frequencies(t, diags);
    auto by_total = rank_and_select(t, res.freq, 1, RankKey::TotalIterations);
    CHECK(by_total.chosen == std::vector<long long>{1});
    auto by_weighted = rank_and_select(t, res.freq, 1, RankKey::TotalTimesStatements);
    CHECK(by_weighted.chosen == std::vector<long long>{2});
}

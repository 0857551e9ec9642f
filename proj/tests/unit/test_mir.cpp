#include "doctest.h"

#include <random>

#include "../test_util.hpp"
#include "loopforge/mir.hpp"

using namespace loopforge;
using namespace loopforge::mir;

TEST_CASE("ir text round trip is the identity") {
    auto p = lftest::compile({{"u1.c", lftest::read_file(lftest::corpus_file("listings/unit1.c"))},
                              {"u2.c", lftest::read_file(lftest::corpus_file("listings/unit2.c"))}});
    std::string text = print_text(p);
    MirProgram q = parse_text(text);
    CHECK(q == p);
    CHECK(print_text(q) == text);
}

TEST_CASE("ir parse errors carry a line number") {
    CHECK_THROWS_WITH_AS(parse_text("program\nunit u\nfunc f\nbogus\n"),
                         doctest::Contains("line 4"), ParseError);
}

TEST_CASE("validator accepts frontend output and flags corruption") {
    auto p = lftest::compile_one("int f(int a) { int s = 0; for (int i = 0; i < a; i++) s += i; return s; }");
    CHECK(validate(p).empty());

    SUBCASE("double definition") {
        auto bad = p;
        auto& f = bad.units[0].functions[0];
        for (auto& b : f.blocks)
            for (auto& s : b.stmts)
                if (s.kind == StmtKind::Binary) {
                    s.dest = f.params[0];
                    goto done;
                }
    done:
        CHECK(!validate(bad).empty());
    }
    SUBCASE("dangling branch target") {
        auto bad = p;
        auto& f = bad.units[0].functions[0];
        f.blocks[0].term.then_target = 99;
        CHECK(!validate(bad).empty());
    }
    SUBCASE("call to undeclared function") {
        auto bad = p;
        auto& f = bad.units[0].functions[0];
        Stmt s;
        s.kind = StmtKind::Call;
        s.dest = kNoValue;
        s.callee = "nope";
        f.blocks[0].stmts.push_back(s);
        CHECK(!validate(bad).empty());
    }
}

namespace {

// Random single-exit CFGs for the dominance cross-check.
MirFunction random_cfg(std::mt19937& rng, int nblocks) {
    MirFunction f;
    f.name = "g";
    ValueId c = f.add_value("c");
    f.params.push_back(c);
    for (int i = 0; i < nblocks; ++i) f.add_block();
    std::uniform_int_distribution<int> pick(0, nblocks - 1);
    for (int i = 0; i < nblocks; ++i) {
        auto& b = f.blocks[i];
        if (i == nblocks - 1) {
            b.term = Terminator{TermKind::Return, {}, -1, -1, true, Operand::con(0)};
            continue;
        }
        if (rng() % 3 == 0) {
            b.term = Terminator{TermKind::Goto, {}, pick(rng), -1, false, {}};
        } else {
            BlockId t = pick(rng), e = pick(rng);
            if (t == e)
                b.term = Terminator{TermKind::Goto, {}, t, -1, false, {}};
            else
                b.term = Terminator{TermKind::Branch, Operand::val(c), t, e, false, {}};
        }
    }
    f.recompute_cfg_edges();
    return f;
}

} // namespace

TEST_CASE("iterative dominators match the brute-force oracle") {
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + (int)(rng() % 7);
        MirFunction f = random_cfg(rng, n);
        DomTree dt = compute_dominators(f);
        for (BlockId a = 0; a < n; ++a)
            for (BlockId b = 0; b < n; ++b) {
                if (!dt.reachable(a) || !dt.reachable(b)) continue;
                CAPTURE(trial);
                CAPTURE(a);
                CAPTURE(b);
                CHECK(dt.dominates(a, b) == dominates_bruteforce(f, a, b));
            }
    }
}

TEST_CASE("loop detection on the listings") {
    auto p = lftest::compile({{"unit1.c", lftest::read_file(lftest::corpus_file("listings/unit1.c"))},
                              {"unit2.c", lftest::read_file(lftest::corpus_file("listings/unit2.c"))}});
    DiagEngine diags;

    auto* fun1 = p.find_function("fun1");
    auto* fun2 = p.find_function("fun2");
    auto* fun3 = p.find_function("fun3");
    REQUIRE(fun1);
    REQUIRE(fun2);
    REQUIRE(fun3);

    auto forest1 = find_loops(*fun1, diags);
    REQUIRE(forest1.loops.size() == 1);
    CHECK(forest1.loops[0].local_count == 9);
    CHECK(!forest1.loops[0].count_is_heuristic);

    auto forest2 = find_loops(*fun2, diags);
    REQUIRE(forest2.loops.size() == 1);
    CHECK(forest2.loops[0].local_count == 29);

    auto forest3 = find_loops(*fun3, diags);
    REQUIRE(forest3.loops.size() == 1);
    CHECK(forest3.loops[0].local_count == 99);
    CHECK(forest3.loops[0].exit_edges.size() == 2); // break plus the counted exit

    // header dominates every body block
    DomTree dt = compute_dominators(*fun3);
    for (BlockId b : forest3.loops[0].body) CHECK(dt.dominates(forest3.loops[0].header, b));
}

TEST_CASE("loop count estimation over the counted forms") {
    DiagEngine diags;
    struct Case {
        const char* src;
        long long count;
        bool heuristic;
    };
    const Case cases[] = {
        {"int f() { int s = 0; for (int i = 0; i < 10; i++) s += i; return s; }", 9, false},
        {"int f() { int s = 0; for (int i = 0; i <= 10; i++) s += i; return s; }", 10, false},
        {"int f() { int s = 0; for (int i = 10; i > 0; i--) s += i; return s; }", 9, false},
        {"int f() { int s = 0; for (int i = 0; i != 12; i += 3) s += i; return s; }", 3, false},
        {"int f() { int s = 0; for (int i = 0; i < 7; i += 2) s += i; return s; }", 3, false},
        {"int f() { int i = 0; do { i++; } while (i < 3); return i; }", 2, false},
        {"int f(int n) { int s = 0; for (int i = 0; i < n; i++) s += i; return s; }", 1000, true},
        {"int f() { int s = 0; for (int i = 0; i < 10; i *= 2) s += i; return s; }", 1000, true},
    };
    for (const auto& c : cases) {
        CAPTURE(c.src);
        auto p = lftest::compile_one(c.src);
        auto forest = find_loops(*p.find_function("f"), diags);
        REQUIRE(forest.loops.size() == 1);
        CHECK(forest.loops[0].local_count == c.count);
        CHECK(forest.loops[0].count_is_heuristic == c.heuristic);
    }
}

TEST_CASE("function without back edges has an empty forest") {
    auto p = lftest::compile_one("int f(int a) { if (a > 0) return 1; return 2; }");
    DiagEngine diags;
    auto forest = find_loops(*p.find_function("f"), diags);
    CHECK(forest.loops.empty());
}

TEST_CASE("irreducible regions warn and produce no loop node") {
    // two mutually-reachable blocks entered from two sides
    const char* text =
        "program\n"
        "unit u\n"
        "func f\n"
        "entry bb0\n"
        "value %0 a\n"
        "param %0\n"
        "block bb0\n"
        "  br %0 ? bb1 : bb2\n"
        "block bb1\n"
        "  br %0 ? bb2 : bb3\n"
        "block bb2\n"
        "  br %0 ? bb1 : bb3\n"
        "block bb3\n"
        "  ret %0\n"
        "endfunc\n";
    MirProgram p = parse_text(text);
    DiagEngine diags;
    auto forest = find_loops(p.units[0].functions[0], diags);
    CHECK(forest.loops.empty());
    bool warned = false;
    for (const auto& d : diags.all())
        if (d.severity == Severity::Warning && d.message.find("irreducible") != std::string::npos)
            warned = true;
    CHECK(warned);
}

TEST_CASE("nested loops form a forest with body containment") {
    auto p = lftest::compile_one(
        "int f() { int s = 0;"
        " for (int i = 0; i < 4; i++) { for (int j = 0; j < 6; j++) { s += j; } s += i; }"
        " return s; }");
    DiagEngine diags;
    auto forest = find_loops(*p.find_function("f"), diags);
    REQUIRE(forest.loops.size() == 2);
    REQUIRE(forest.roots.size() == 1);
    const LoopNode& outer = forest.loops[forest.roots[0]];
    REQUIRE(outer.children.size() == 1);
    const LoopNode& inner = forest.loops[outer.children[0]];
    CHECK(outer.local_count == 3);
    CHECK(inner.local_count == 5);
    CHECK(inner.parent == forest.roots[0]);
    for (BlockId b : inner.body) CHECK(outer.contains(b));
}

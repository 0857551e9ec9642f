#include "doctest.h"

#include "../test_util.hpp"
#include "loopforge/interp.hpp"

using namespace loopforge;
using namespace loopforge::interp;

namespace {

mir::MirProgram listings() {
    return lftest::compile({{"unit1.c", lftest::read_file(lftest::corpus_file("listings/unit1.c"))},
                            {"unit2.c", lftest::read_file(lftest::corpus_file("listings/unit2.c"))}});
}

} // namespace

TEST_CASE("trivial function returns zero") {
    auto p = lftest::compile_one("int f(){return 0;}");
    Machine m(p);
    CHECK(m.run("f", {}).ret == 0);
}

TEST_CASE("listing functions against independently computed values") {
    auto p = listings();
    Machine m(p);
    // frozen from a hand-written simulation of listings 1 and 2
    CHECK(m.run("fun3", {0, 1}).ret == -4850);
    CHECK(m.run("fun3", {201, 0}).ret == 201); // immediate break path
    CHECK(m.run("fun3", {5, 7}).ret == -4245);
    CHECK(m.run("fun2", {1, 2}).ret == 616095769);
    CHECK(m.run("fun1", {1, 2}).ret == -919619888);
    CHECK(m.run("fun1", {0, 0}).ret == -1492645554);
}

TEST_CASE("division by zero traps with context") {
    auto p = lftest::compile_one("int f(int a) { return 10 / a; }");
    Machine m(p);
    CHECK(m.run("f", {5}).ret == 2);
    CHECK_THROWS_WITH_AS(m.run("f", {0}), doctest::Contains("division by zero"), ExecError);
}

TEST_CASE("wraparound and shift semantics") {
    auto p = lftest::compile_one(
        "int f(int a, int b) { return a + b; }"
        "int g(int a, int b) { return a * b; }"
        "int h(int a, int b) { return a >> b; }"
        "int r(int a, int b) { return a % b; }");
    Machine m(p);
    CHECK(m.run("f", {INT32_MAX, 1}).ret == INT32_MIN);
    CHECK(m.run("g", {123456789, 987654321}).ret == (int32_t)(123456789u * 987654321u));
    CHECK(m.run("h", {-8, 1}).ret == -4);     // arithmetic shift
    CHECK(m.run("h", {1, 33}).ret == 0);      // amount masked to 5 bits: 1 >> 1
    CHECK(m.run("r", {INT32_MIN, -1}).ret == 0);
}

TEST_CASE("out-of-range array access traps") {
    auto p = lftest::compile_one("int f(int i) { int a[4]; a[0] = 7; return a[i]; }");
    Machine m(p);
    CHECK(m.run("f", {0}).ret == 7);
    CHECK_THROWS_WITH_AS(m.run("f", {4}), doctest::Contains("out of range"), ExecError);
    CHECK_THROWS_WITH_AS(m.run("f", {-1}), doctest::Contains("out of range"), ExecError);
}

TEST_CASE("step limit guards non-termination") {
    auto p = lftest::compile_one("int f(int n) { while (n != 0) { n -= 3; } return n; }");
    Limits lim;
    lim.max_steps = 10000;
    Machine m(p, lim);
    CHECK(m.run("f", {9}).ret == 0);
    CHECK_THROWS_WITH_AS(m.run("f", {1}), doctest::Contains("step limit"), ExecError);
}

TEST_CASE("direct recursion works up to the depth limit") {
    auto p = lftest::compile_one("int fact(int n) { if (n < 2) return 1; return n * fact(n - 1); }");
    Machine m(p);
    CHECK(m.run("fact", {5}).ret == 120);
    CHECK(m.run("fact", {12}).ret == 479001600);
    Limits lim;
    lim.max_call_depth = 10;
    Machine shallow(p, lim);
    CHECK_THROWS_WITH_AS(shallow.run("fact", {100}), doctest::Contains("call depth"), ExecError);
}

TEST_CASE("globals initialize and persist across calls") {
    auto q = lftest::compile({{"a.c", "int counter = 5; int tab[3] = {10, 20, 30};"
                                      "int bump() { counter += 1; return counter; }"
                                      "int read(int i) { return tab[i]; }"}});
    Machine m(q);
    CHECK(m.run("read", {2}).ret == 30);
    CHECK(m.run("bump", {}).ret == 6);
    CHECK(m.run("bump", {}).ret == 7); // same machine, state persists
    m.reset_globals();
    CHECK(m.run("bump", {}).ret == 6);
}

TEST_CASE("call and store traces are ordered") {
    auto p = lftest::compile({{"t.c", "int g(int x) { return x + 1; }"
                                      "int buf[4];"
                                      "int f() { buf[0] = g(1); buf[1] = g(2); return buf[1]; }"}});
    Machine m(p);
    m.set_trace(true);
    auto r = m.run("f", {});
    CHECK(r.ret == 3);
    REQUIRE(r.calls.size() == 2);
    CHECK(r.calls[0].args == std::vector<int32_t>{1});
    CHECK(r.calls[1].args == std::vector<int32_t>{2});
    REQUIRE(r.stores.size() == 2);
    CHECK(r.stores[0].index == 0);
    CHECK(r.stores[0].value == 2);
    CHECK(r.stores[1].index == 1);
    CHECK(r.stores[1].value == 3);
}

TEST_CASE("builtins service calls without bodies") {
    auto p = lftest::compile({{"t.c", "int probe(int x); int f() { return probe(41) + 1; }"}});
    Machine m(p);
    m.register_builtin("probe", [](const std::vector<int32_t>& a) { return a[0] + 1; });
    CHECK(m.run("f", {}).ret == 43);
    Machine bare(p);
    CHECK_THROWS_WITH_AS(bare.run("f", {}), doctest::Contains("undefined function"), ExecError);
}

TEST_CASE("region execution matches the full run on fun3") {
    auto p = listings();
    const auto& f = *p.find_function("fun3");
    DiagEngine diags;
    auto forest = mir::find_loops(f, diags);
    REQUIRE(forest.loops.size() == 1);
    const auto& loop = forest.loops[0];

    auto live_ins = region_live_ins(f, loop);
    REQUIRE(live_ins.size() == 2); // a and b

    Machine m(p);
    MemImage locals;

    std::map<mir::ValueId, int32_t> in;
    in[live_ins[0]] = 0;
    in[live_ins[1]] = 1;
    auto r = m.run_region(f, loop, in, locals);
    CHECK(r.exit_id == 2); // counted exit
    CHECK(r.iterations == 101);

    in[live_ins[0]] = 201;
    in[live_ins[1]] = 0;
    auto r2 = m.run_region(f, loop, in, locals);
    CHECK(r2.exit_id == 1); // break exit
}

TEST_CASE("region live-ins of a loop using outer locals") {
    auto p = lftest::compile_one(
        "int f(int n, int k) { int s = 0;"
        " for (int i = 0; i < n; i++) s += i * k;"
        " return s; }");
    const auto& f = *p.find_function("f");
    DiagEngine diags;
    auto forest = mir::find_loops(f, diags);
    REQUIRE(forest.loops.size() == 1);
    auto ins = region_live_ins(f, forest.loops[0]);
    CHECK(ins.size() == 2); // n and k; i and s start from constants
}

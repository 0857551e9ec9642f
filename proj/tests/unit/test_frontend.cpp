#include "doctest.h"

#include "../test_util.hpp"
#include "loopforge/ast.hpp"
#include "loopforge/mir.hpp"

using namespace loopforge;
using namespace loopforge::mir;

TEST_CASE("parse_unit accepts listing 2 and reports two params") {
    DiagEngine diags;
    auto u = ast::parse_unit(lftest::read_file(lftest::corpus_file("listings/unit2.c")), "unit2.c",
                             diags);
    REQUIRE(u.has_value());
    REQUIRE(u->functions.size() == 1);
    CHECK(u->functions[0].name == "fun3");
    CHECK(u->functions[0].params == std::vector<std::string>{"a", "b"});
}

TEST_CASE("trivial function parses with no loops") {
    auto p = lftest::compile_one("int f(){return 0;}");
    DiagEngine diags;
    auto forest = find_loops(*p.find_function("f"), diags);
    CHECK(forest.loops.empty());
    const auto& f = *p.find_function("f");
    // straight line: entry and exit, no phis
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts) CHECK(s.kind != StmtKind::Phi);
}

TEST_CASE("unsupported constructs are rejected by name") {
    struct Case {
        const char* src;
        const char* needle;
    };
    const Case cases[] = {
        {"int f() { float x; return 0; }", "unsupported construct: float"},
        {"float g;", "unsupported construct: float"},
        {"int f(int *p) { return 0; }", "unsupported construct: pointer type"},
        {"int f() { int a = 1 && 0; return a; }", "unsupported construct: logical operator &&"},
        {"int f(int a) { return a ? 1 : 2; }", "unsupported construct: conditional operator"},
        {"int f() { switch (1) { } return 0; }", "unsupported construct: switch"},
        {"struct S { int x; };", "unsupported construct: struct"},
        {"#include <stdio.h>\nint f() { return 0; }", "unsupported construct: preprocessor directive"},
    };
    for (const auto& c : cases) {
        CAPTURE(c.src);
        DiagEngine diags;
        auto u = ast::parse_unit(c.src, "t.c", diags);
        CHECK(!u.has_value());
        CHECK(diags.str().find(c.needle) != std::string::npos);
    }
}

TEST_CASE("diagnostics carry file, line and column") {
    DiagEngine diags;
    auto u = ast::parse_unit("int f() {\n  float x;\n  return 0;\n}\n", "box.c", diags);
    CHECK(!u.has_value());
    CHECK(diags.str().find("box.c:2:3: error:") != std::string::npos);
}

TEST_CASE("listing 2 lowers to a loop with two exit edges") {
    auto p = lftest::compile({{"unit2.c", lftest::read_file(lftest::corpus_file("listings/unit2.c"))}});
    const auto& f = *p.find_function("fun3");
    DiagEngine diags;
    auto forest = find_loops(f, diags);
    REQUIRE(forest.loops.size() == 1);
    CHECK(forest.loops[0].exit_edges.size() == 2);
    CHECK(validate(p).empty());
}

TEST_CASE("counted loop header carries exactly the live phis") {
    auto p = lftest::compile_one("int f() { int c = 0; for (int i = 0; i < 10; i++) c += i; return c; }");
    const auto& f = *p.find_function("f");
    DiagEngine diags;
    auto forest = find_loops(f, diags);
    REQUIRE(forest.loops.size() == 1);
    const auto& header = f.block(forest.loops[0].header);
    int phis = 0;
    for (const auto& s : header.stmts)
        if (s.kind == StmtKind::Phi) ++phis;
    CHECK(phis == 2); // i and c
}

TEST_CASE("uninitialized reads warn and become zero") {
    DiagEngine diags;
    auto p = lftest::compile_one("int f() { int c; for (int i = 0; i < 10; i++) c += i; return c; }",
                                 &diags);
    bool warned = false;
    for (const auto& d : diags.all())
        if (d.severity == Severity::Warning && d.message.find("uninitialized") != std::string::npos)
            warned = true;
    CHECK(warned);
    CHECK(validate(p).empty());
}

TEST_CASE("goto and labels round through the frontend") {
    auto p = lftest::compile_one(
        "int f(int a) {"
        "  int r = 0;"
        "  if (a > 3) goto out;"
        "  r = a * 2;"
        "out:"
        "  return r;"
        "}");
    CHECK(validate(p).empty());
}

TEST_CASE("break and continue outside loops are errors") {
    DiagEngine diags;
    auto u = ast::parse_unit("int f() { break; return 0; }", "t.c", diags);
    REQUIRE(u.has_value()); // parses, fails in lowering
    mir::MirProgram p;
    CHECK(!frontend::build_ssa_cfg(*u, p, diags));
    CHECK(diags.str().find("'break' outside of a loop") != std::string::npos);
}

TEST_CASE("local arrays with initializers lower to stores") {
    auto p = lftest::compile_one(
        "int f() { int a[4] = {1, 2, 3}; int s = 0;"
        " for (int i = 0; i < 4; i++) s += a[i]; return s; }");
    CHECK(validate(p).empty());
    const auto& f = *p.find_function("f");
    REQUIRE(f.locals.size() == 1);
    CHECK(f.locals[0].size == 4);
    int stores = 0;
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts)
            if (s.kind == StmtKind::Store) ++stores;
    CHECK(stores == 4); // trailing element zero-filled
}

TEST_CASE("globals are visible across units and collide loudly") {
    auto p = lftest::compile({{"a.c", "int table[8]; int put(int i, int v) { table[i] = v; return v; }"},
                              {"b.c", "int get(int i) { return table[i]; }"}});
    CHECK(validate(p).empty());

    DiagEngine diags;
    auto bad = frontend::compile_units({{"a.c", "int g;"}, {"b.c", "int g;"}}, diags);
    CHECK(!bad.has_value());
    CHECK(diags.str().find("duplicate global 'g'") != std::string::npos);
}

TEST_CASE("calls must be declared in the calling unit") {
    DiagEngine diags;
    auto p = frontend::compile_units({{"a.c", "int f() { return g(); }"}}, diags);
    CHECK(!p.has_value());
    CHECK(diags.str().find("undeclared function 'g'") != std::string::npos);
}

TEST_CASE("constant folding is applied") {
    auto p = lftest::compile_one("int f() { return 2 * 3 + 4; }");
    const auto& f = *p.find_function("f");
    // folded to a single return of the constant
    bool found_const_ret = false;
    for (const auto& b : f.blocks)
        if (b.term.kind == TermKind::Return && b.term.has_value && b.term.value.is_const &&
            b.term.value.imm == 10)
            found_const_ret = true;
    CHECK(found_const_ret);
}

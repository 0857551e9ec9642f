#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "../test_util.hpp"
#include "loopforge/collector.hpp"

using namespace loopforge;
using namespace loopforge::collector;

namespace {

const char* kListing3 =
    "unit1.c\n"
    "function=fun2\n"
    "loop1\n"
    "count=29\n"
    "call=1\n"
    "well_nested=0\n"
    "-fun3\n"
    "function=fun1\n"
    "loop2\n"
    "count=9\n"
    "call=1\n"
    "well_nested=0\n"
    "-fun2\n"
    "\n"
    "unit2.c\n"
    "function=fun3\n"
    "loop3\n"
    "count=99\n"
    "call=0\n"
    "well_nested=1\n";

std::string strip_comments(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out << line << "\n";
    return out.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/lf_test_" + name) { std::remove(path.c_str()); }
    ~TempFile() { std::remove(path.c_str()); }
};

std::string collect_listings_to(const std::string& path) {
    auto p = lftest::compile({{"unit1.c", lftest::read_file(lftest::corpus_file("listings/unit1.c"))},
                              {"unit2.c", lftest::read_file(lftest::corpus_file("listings/unit2.c"))}});
    DiagEngine diags;
    for (const auto& u : p.units) {
        auto col = collect_unit(p, u, diags);
        append_transcript(path, u.name, col.groups);
    }
    return lftest::read_file(path);
}

} // namespace

TEST_CASE("listings 1 and 2 reproduce the transcript byte-exactly") {
    TempFile tf("transcript_listing.txt");
    std::string text = collect_listings_to(tf.path);
    CHECK(strip_comments(text) == kListing3);
}

TEST_CASE("collect_functions reports callee lists in first-call order") {
    auto p = lftest::compile({{"unit1.c", lftest::read_file(lftest::corpus_file("listings/unit1.c"))}});
    auto records = collect_functions(p.units[0]);
    REQUIRE(records.size() == 2);
    // emission order: callee before caller
    CHECK(records[0].name == "fun2");
    CHECK(records[0].callees == std::vector<std::string>{"fun3"});
    CHECK(records[1].name == "fun1");
    CHECK(records[1].callees == std::vector<std::string>{"fun2"});
}

TEST_CASE("duplicate call sites collapse to one callee entry") {
    auto p = lftest::compile(
        {{"t.c", "int g(int a); int f(int a) { int x = g(a); int y = g(x); return x + y; }"}});
    auto records = collect_functions(p.units[0]);
    REQUIRE(records.size() == 1);
    CHECK(records[0].callees == std::vector<std::string>{"g"});
}

TEST_CASE("call-free function yields an empty callee list") {
    auto p = lftest::compile({{"t.c", "int f(int a) { return a + 1; }"}});
    auto records = collect_functions(p.units[0]);
    REQUIRE(records.size() == 1);
    CHECK(records[0].callees.empty());
}

TEST_CASE("loop with an array store is well nested with one access") {
    auto p = lftest::compile(
        {{"t.c", "int buf[16]; int f() { for (int i = 0; i < 16; i++) buf[i] = i; return 0; }"}});
    DiagEngine diags;
    auto col = collect_unit(p, p.units[0], diags);
    REQUIRE(col.groups.size() == 1);
    REQUIRE(col.groups[0].loops.size() == 1);
    const auto& l = col.groups[0].loops[0];
    CHECK(!l.has_call);
    CHECK(l.well_nested);
    CHECK(l.mem_accesses == 1);
    CHECK(l.array_names == std::vector<std::string>{"buf"});
}

TEST_CASE("calls inside a nested loop spoil the nest but not the inner record") {
    auto p = lftest::compile({{"t.c",
                               "int g(int a);"
                               "int f() { int s = 0;"
                               "  for (int i = 0; i < 4; i++) {"
                               "    for (int j = 0; j < 5; j++) s += g(j);"
                               "    s += i;"
                               "  }"
                               "  return s; }"}});
    DiagEngine diags;
    auto col = collect_unit(p, p.units[0], diags);
    REQUIRE(col.groups.size() == 1);
    REQUIRE(col.groups[0].loops.size() == 2);
    const auto& outer = col.groups[0].loops[0];
    const auto& inner = col.groups[0].loops[1];
    CHECK(outer.parent_index == -1);
    CHECK(inner.parent_index == 0);
    CHECK(!outer.has_call); // the call site's innermost loop is the inner one
    CHECK(!outer.well_nested);
    CHECK(inner.has_call);
    CHECK(inner.callees == std::vector<std::string>{"g"});
    CHECK(!inner.well_nested);
}

TEST_CASE("call-free nest is well nested at every level") {
    auto p = lftest::compile({{"t.c",
                               "int f() { int s = 0;"
                               "  for (int i = 0; i < 4; i++)"
                               "    for (int j = 0; j < 5; j++) s += i * j;"
                               "  return s; }"}});
    DiagEngine diags;
    auto col = collect_unit(p, p.units[0], diags);
    REQUIRE(col.groups[0].loops.size() == 2);
    CHECK(col.groups[0].loops[0].well_nested);
    CHECK(col.groups[0].loops[1].well_nested);
}

TEST_CASE("transcript parses back to the same value") {
    TempFile tf("transcript_roundtrip.txt");
    std::string text = collect_listings_to(tf.path);
    auto t = transcript::parse(text);
    CHECK(transcript::serialize(t) == text);
    auto again = transcript::parse(transcript::serialize(t));
    CHECK(again == t);
    CHECK(t.all_loops().size() == 3);
    CHECK(t.units.size() == 2);
    int groups = 0;
    for (const auto& u : t.units) groups += (int)u.groups.size();
    CHECK(groups == 3);
}

TEST_CASE("identical sources produce byte-identical transcripts") {
    TempFile a("transcript_det_a.txt"), b("transcript_det_b.txt");
    CHECK(collect_listings_to(a.path) == collect_listings_to(b.path));
}

TEST_CASE("recompiling one unit replaces its section and keeps ids monotone") {
    TempFile tf("transcript_replace.txt");
    collect_listings_to(tf.path);

    // unit1 edited: fun1's loop now runs 20 times
    auto edited = lftest::compile(
        {{"unit1.c", "int fun3(int a, int b);"
                     "int fun1(int a, int b) { int c = 0;"
                     "  for (int i = 0; i < 20; i++) c += fun2(b + a, a - b);"
                     "  return c; }"
                     "int fun2(int a, int b) {"
                     "  for (int i = 0; i < 30; i++) { a += fun3(a, b); b -= a; }"
                     "  return a + b; }"}});
    DiagEngine diags;
    auto col = collect_unit(edited, edited.units[0], diags);
    append_transcript(tf.path, "unit1.c", col.groups);

    auto t = transcript::parse(lftest::read_file(tf.path));
    REQUIRE(t.units.size() == 2);
    CHECK(t.units[0].name == "unit1.c"); // position preserved
    CHECK(t.units[1].name == "unit2.c");
    REQUIRE(t.units[0].groups.size() == 2);
    CHECK(t.units[0].groups[1].loops[0].local_count == 19);
    // unit2 untouched, ids fresh and unique
    CHECK(t.units[1].groups[0].loops[0].loop_id == 3);
    CHECK(t.units[0].groups[0].loops[0].loop_id == 4);
    CHECK(t.units[0].groups[1].loops[0].loop_id == 5);
    CHECK(t.next_loop_id == 6);
}

TEST_CASE("unit with zero loops keeps only its name line") {
    TempFile tf("transcript_empty.txt");
    auto p = lftest::compile({{"solo.c", "int f(int a) { return a * 2; }"}});
    DiagEngine diags;
    auto col = collect_unit(p, p.units[0], diags);
    append_transcript(tf.path, "solo.c", col.groups);
    CHECK(strip_comments(lftest::read_file(tf.path)) == "solo.c\n");
}

TEST_CASE("malformed transcripts report the line") {
    CHECK_THROWS_WITH_AS(transcript::parse("u.c\nfunction=f\nloop1\ncount=abc\n"),
                         doctest::Contains("line 4"), ParseError);
    CHECK_THROWS_WITH_AS(transcript::parse("u.c\nfunction=f\nloop1\ncount=1\nloop1\ncount=2\n"),
                         doctest::Contains("duplicate loop id"), ParseError);
}

TEST_CASE("outside-loop calls serialize on the function group") {
    TempFile tf("transcript_outside.txt");
    auto p = lftest::compile({{"t.c",
                               "int g(int a);"
                               "int f(int a) { int r = g(a);"
                               "  for (int i = 0; i < 3; i++) r += i;"
                               "  return r; }"}});
    DiagEngine diags;
    auto col = collect_unit(p, p.units[0], diags);
    append_transcript(tf.path, "t.c", col.groups);
    CHECK(strip_comments(lftest::read_file(tf.path)) ==
          "t.c\n"
          "function=f\n"
          "-g\n"
          "loop1\n"
          "count=2\n"
          "call=0\n"
          "well_nested=1\n");
}

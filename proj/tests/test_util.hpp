#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "loopforge/frontend.hpp"

namespace lftest {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string corpus_file(const std::string& rel) {
    return std::string(LF_CORPUS_DIR) + "/" + rel;
}

// Compile in-memory sources; fails the test on any frontend error.
inline loopforge::mir::MirProgram compile(
    const std::vector<std::pair<std::string, std::string>>& units,
    loopforge::DiagEngine* diags_out = nullptr) {
    loopforge::DiagEngine diags;
    auto p = loopforge::frontend::compile_units(units, diags);
    if (diags_out) *diags_out = diags;
    if (!p) throw std::runtime_error("frontend failed:\n" + diags.str());
    return std::move(*p);
}

inline loopforge::mir::MirProgram compile_one(const std::string& source,
                                              loopforge::DiagEngine* diags_out = nullptr) {
    return compile({{"test.c", source}}, diags_out);
}

} // namespace lftest

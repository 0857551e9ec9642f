#pragma once

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace loopforge {

struct SourceLoc {
    std::string file;
    int line = 0;
    int col = 0;
};

enum class Severity { Note, Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Error;
    SourceLoc loc;
    std::string message;

    std::string str() const {
        const char* sev = severity == Severity::Error     ? "error"
                          : severity == Severity::Warning ? "warning"
                                                          : "note";
        std::ostringstream os;
        if (!loc.file.empty()) os << loc.file << ":" << loc.line << ":" << loc.col << ": ";
        os << sev << ": " << message;
        return os.str();
    }
};

// Collects diagnostics for one pipeline run. Messages render as
// "file:line:col: severity: message"; diagnostics without a location
// render as "severity: message".
class DiagEngine {
public:
    void report(Severity sev, SourceLoc loc, std::string msg) {
        diags_.push_back({sev, std::move(loc), std::move(msg)});
    }
    void error(SourceLoc loc, std::string msg) { report(Severity::Error, std::move(loc), std::move(msg)); }
    void warning(SourceLoc loc, std::string msg) { report(Severity::Warning, std::move(loc), std::move(msg)); }
    void note(SourceLoc loc, std::string msg) { report(Severity::Note, std::move(loc), std::move(msg)); }
    void error(std::string msg) { error(SourceLoc{}, std::move(msg)); }
    void warning(std::string msg) { warning(SourceLoc{}, std::move(msg)); }

    bool has_errors() const {
        for (const auto& d : diags_)
            if (d.severity == Severity::Error) return true;
        return false;
    }
    const std::vector<Diagnostic>& all() const { return diags_; }

    void print(std::ostream& os) const {
        for (const auto& d : diags_) os << d.str() << "\n";
    }
    std::string str() const {
        std::ostringstream os;
        print(os);
        return os.str();
    }

private:
    std::vector<Diagnostic> diags_;
};

// Thrown for malformed inputs where a partial result is useless
// (IR text parser, transcript parser, FSM spec loader).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace loopforge

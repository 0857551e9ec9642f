#include "loopforge/transcript.hpp"

#include <openssl/evp.h>

#include <map>
#include <sstream>

namespace loopforge::transcript {

const UnitSection* Transcript::find_unit(const std::string& name) const {
    for (const auto& u : units)
        if (u.name == name) return &u;
    return nullptr;
}

std::vector<const LoopRecord*> Transcript::all_loops() const {
    std::vector<const LoopRecord*> out;
    for (const auto& u : units)
        for (const auto& g : u.groups)
            for (const auto& l : g.loops) out.push_back(&l);
    return out;
}

const LoopRecord* Transcript::find_loop(long long id) const {
    for (const auto* l : all_loops())
        if (l->loop_id == id) return l;
    return nullptr;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string serialize(const Transcript& t) {
    std::ostringstream os;
    os << "# loopforge transcript v1\n";
    os << "# next-loop-id " << t.next_loop_id << "\n";
    for (const auto& u : t.units)
        if (!u.source_sha256.empty()) os << "# unit " << u.name << " sha256 " << u.source_sha256 << "\n";
    for (const auto& u : t.units)
        for (const auto& g : u.groups)
            for (const auto& l : g.loops) {
                os << "# loop " << l.loop_id << " stmts " << l.stmt_count;
                if (!l.array_names.empty()) {
                    os << " arrays ";
                    for (size_t i = 0; i < l.array_names.size(); ++i)
                        os << (i ? "," : "") << l.array_names[i];
                }
                os << "\n";
            }
    bool first = true;
    for (const auto& u : t.units) {
        if (!first) os << "\n";
        first = false;
        os << u.name << "\n";
        for (const auto& g : u.groups) {
            os << "function=" << g.function << "\n";
            for (const auto& c : g.outside_callees) os << "-" << c << "\n";
            for (const auto& l : g.loops) {
                os << "loop" << l.loop_id << "\n";
                os << "count=" << l.local_count << "\n";
                os << "call=" << (l.has_call ? 1 : 0) << "\n";
                os << "well_nested=" << (l.well_nested ? 1 : 0) << "\n";
                for (const auto& c : l.callees) os << "-" << c << "\n";
                if (l.mem_accesses > 0) os << "mem=" << l.mem_accesses << "\n";
                if (l.parent_id > 0) os << "parent=" << l.parent_id << "\n";
                if (l.count_is_heuristic) os << "heuristic=1\n";
            }
        }
    }
    return os.str();
}

namespace {

struct LineReader {
    std::istringstream in;
    int line_no = 0;
    explicit LineReader(const std::string& s) : in(s) {}
    std::optional<std::string> next() {
        std::string line;
        if (!std::getline(in, line)) return std::nullopt;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("transcript line " + std::to_string(line_no) + ": " + msg);
    }
};

long long parse_ll(LineReader& r, const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        r.fail("malformed " + what + " '" + s + "'");
    }
}

} // namespace

Transcript parse(const std::string& text) {
    Transcript t;
    LineReader r(text);
    UnitSection* unit = nullptr;
    FunctionGroup* group = nullptr;
    LoopRecord* loop = nullptr;
    std::map<long long, std::pair<long long, std::vector<std::string>>> loop_meta;
    std::map<std::string, std::string> unit_hashes;
    bool expect_unit_name = true;
    std::map<long long, bool> seen_ids;

    while (auto line_opt = r.next()) {
        const std::string& line = *line_opt;
        if (line.empty()) {
            expect_unit_name = true;
            continue;
        }
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string kw;
            hs >> kw;
            if (kw == "next-loop-id") {
                std::string v;
                hs >> v;
                t.next_loop_id = parse_ll(r, v, "next-loop-id");
            } else if (kw == "unit") {
                std::string name, tag, hash;
                hs >> name >> tag >> hash;
                if (tag == "sha256") unit_hashes[name] = hash;
            } else if (kw == "loop") {
                std::string id, tag, n;
                hs >> id >> tag >> n;
                long long lid = parse_ll(r, id, "loop metadata id");
                if (tag == "stmts") {
                    loop_meta[lid].first = parse_ll(r, n, "stmts");
                    std::string atag, names;
                    if (hs >> atag >> names && atag == "arrays") {
                        std::istringstream ns(names);
                        std::string one;
                        while (std::getline(ns, one, ',')) loop_meta[lid].second.push_back(one);
                    }
                }
            }
            continue;
        }
        if (line.rfind("function=", 0) == 0) {
            if (!unit) r.fail("function group before any unit name");
            unit->groups.push_back({line.substr(9), {}, {}});
            group = &unit->groups.back();
            loop = nullptr;
            continue;
        }
        if (line.rfind("loop", 0) == 0 && line.size() > 4 && isdigit((unsigned char)line[4])) {
            if (!group) r.fail("loop record outside a function group");
            LoopRecord l;
            l.loop_id = parse_ll(r, line.substr(4), "loop id");
            if (seen_ids[l.loop_id]) r.fail("duplicate loop id " + std::to_string(l.loop_id));
            seen_ids[l.loop_id] = true;
            l.unit = unit->name;
            l.function = group->function;
            group->loops.push_back(std::move(l));
            loop = &group->loops.back();
            continue;
        }
        if (line[0] == '-') {
            if (loop)
                loop->callees.push_back(line.substr(1));
            else if (group)
                group->outside_callees.push_back(line.substr(1));
            else
                r.fail("callee line outside a function group");
            continue;
        }
        auto eq = line.find('=');
        if (eq != std::string::npos && loop) {
            std::string key = line.substr(0, eq), val = line.substr(eq + 1);
            if (key == "count")
                loop->local_count = parse_ll(r, val, "count");
            else if (key == "call")
                loop->has_call = parse_ll(r, val, "call flag") != 0;
            else if (key == "well_nested")
                loop->well_nested = parse_ll(r, val, "well_nested flag") != 0;
            else if (key == "mem")
                loop->mem_accesses = parse_ll(r, val, "mem count");
            else if (key == "parent")
                loop->parent_id = parse_ll(r, val, "parent id");
            else if (key == "heuristic")
                loop->count_is_heuristic = parse_ll(r, val, "heuristic flag") != 0;
            else
                r.fail("unknown record line '" + line + "'");
            continue;
        }
        // a unit name line
        if (!expect_unit_name && unit) r.fail("unexpected line '" + line + "'");
        t.units.push_back({});
        unit = &t.units.back();
        unit->name = line;
        group = nullptr;
        loop = nullptr;
        expect_unit_name = false;
    }

    for (auto& u : t.units) {
        auto it = unit_hashes.find(u.name);
        if (it != unit_hashes.end()) u.source_sha256 = it->second;
        for (auto& g : u.groups)
            for (auto& l : g.loops) {
                auto m = loop_meta.find(l.loop_id);
                if (m != loop_meta.end()) {
                    l.stmt_count = m->second.first;
                    l.array_names = m->second.second;
                }
            }
    }
    return t;
}

} // namespace loopforge::transcript

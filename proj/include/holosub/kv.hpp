#pragma once

// Plain-text key=value formats used by configs, dataset manifests, run
// manifests and reports. A document is a sequence of [section] headers
// and key=value lines; a record table is one line per record holding
// space-separated key=value pairs. Values containing spaces are not
// supported by design (file names here never contain them).

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "holosub/errors.hpp"

namespace holosub::kv {

struct Document {
    // section -> ordered key/value pairs; "" is the headerless section.
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
        sections;

    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const {
        for (const auto& [name, entries] : sections) {
            if (name != section) continue;
            for (const auto& [k, v] : entries)
                if (k == key) return v;
        }
        return fallback;
    }

    bool has(const std::string& section, const std::string& key) const {
        for (const auto& [name, entries] : sections)
            if (name == section)
                for (const auto& [k, v] : entries)
                    if (k == key) return true;
        return false;
    }

    void set(const std::string& section, const std::string& key,
             const std::string& value) {
        for (auto& [name, entries] : sections) {
            if (name != section) continue;
            for (auto& [k, v] : entries) {
                if (k == key) {
                    v = value;
                    return;
                }
            }
            entries.emplace_back(key, value);
            return;
        }
        sections.push_back({section, {{key, value}}});
    }
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline Document parse(const std::string& text) {
    Document doc;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("kv parse: missing '=' at line " +
                                  std::to_string(lineno));
        doc.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return doc;
}

inline std::string serialize(const Document& doc) {
    std::ostringstream out;
    for (const auto& [name, entries] : doc.sections) {
        if (!name.empty()) out << '[' << name << "]\n";
        for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
    }
    return out.str();
}

// One record: ordered key=value pairs on a single line.
using Record = std::vector<std::pair<std::string, std::string>>;

inline std::string serialize_record(const Record& rec) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [k, v] : rec) {
        if (!first) out << ' ';
        out << k << '=' << v;
        first = false;
    }
    return out.str();
}

inline Record parse_record(const std::string& line) {
    Record rec;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ValidationError("kv record: token without '=': " + tok);
        rec.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return rec;
}

inline std::string record_get(const Record& rec, const std::string& key) {
    for (const auto& [k, v] : rec)
        if (k == key) return v;
    throw ValidationError("kv record: missing key " + key);
}

inline Document load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

inline void save_file(const std::string& path, const Document& doc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << serialize(doc);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace holosub::kv

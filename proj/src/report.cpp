#include "mpcr/report.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mpcr/errors.hpp"

namespace mpcr {

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

Json make_envelope(const std::string& command,
                   const std::map<std::string, std::string>& input_paths, Json config,
                   Json result) {
    Json report;
    report["tool"] = kToolName;
    report["version"] = kToolVersion;
    report["command"] = command;
    Json inputs = Json::object();
    for (const auto& [name, path] : input_paths) {
        Json entry;
        entry["path"] = path;
        entry["fnv1a64"] = file_digest(path);
        inputs[name] = entry;
    }
    report["inputs"] = inputs;
    report["config"] = std::move(config);
    report["result"] = std::move(result);
    return report;
}

namespace {

void flatten(const Json& value, const std::string& prefix, std::ostream& out) {
    if (value.is_object()) {
        for (const auto& [key, child] : value.items())
            flatten(child, prefix.empty() ? key : prefix + "." + key, out);
    } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i)
            flatten(value[i], prefix + "." + std::to_string(i), out);
    } else {
        out << prefix << '\t' << value.dump() << '\n';
    }
}

}  // namespace

std::string to_tsv(const Json& report) {
    std::ostringstream os;
    flatten(report, "", os);
    return os.str();
}

void emit_report(const Json& report, const std::string& path, const std::string& format) {
    std::string payload;
    if (format == "json")
        payload = report.dump(2) + "\n";
    else if (format == "tsv")
        payload = to_tsv(report);
    else
        throw ValidationError("unknown output format '" + format + "' (expected json|tsv)");
    if (path.empty()) {
        std::cout << payload;
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + path);
        out << payload;
    }
}

}  // namespace mpcr

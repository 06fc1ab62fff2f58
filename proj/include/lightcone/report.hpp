#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace lightcone {

// CLI report envelope. Key set is fixed: command, params, results,
// quadrature, tolerances, pass; meta (wall time) is present unless the
// caller asked for reproducible byte-identical output.
struct Report {
    std::string command;
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json results = nlohmann::json::object();
    nlohmann::json quadrature = nlohmann::json::object();
    nlohmann::json tolerances = nlohmann::json::object();
    bool pass = true;
    std::optional<nlohmann::json> meta;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["params"] = params;
        j["results"] = results;
        j["quadrature"] = quadrature;
        j["tolerances"] = tolerances;
        j["pass"] = pass;
        if (meta) j["meta"] = *meta;
        return j;
    }
};

namespace report_detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix,
                    std::string& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        int idx = 0;
        for (const auto& v : j) flatten(v, prefix + "[" + std::to_string(idx++) + "]", out);
    } else {
        out += prefix;
        out += ",";
        out += j.dump();
        out += "\n";
    }
}

}  // namespace report_detail

inline std::string to_csv(const Report& r) {
    std::string out = "key,value\n";
    out += "command," + r.command + "\n";
    report_detail::flatten(r.results, "results", out);
    out += std::string("pass,") + (r.pass ? "true" : "false") + "\n";
    return out;
}

}  // namespace lightcone

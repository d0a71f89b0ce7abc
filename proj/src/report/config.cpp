#include "alignaudit/report/config.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"

#include <cstdlib>
#include <filesystem>

namespace alignaudit::report {

std::string interpolate_env(const std::string& text) {
    std::string out;
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '$') {
            out.push_back('$');
            ++i;
        } else if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
            auto close = text.find('}', i + 2);
            if (close == std::string::npos) throw ConfigError("config: unterminated ${ at offset " + std::to_string(i));
            const std::string name = text.substr(i + 2, close - i - 2);
            if (name.empty()) throw ConfigError("config: empty ${} at offset " + std::to_string(i));
            if (const char* v = std::getenv(name.c_str())) {
                out += v;
            } else {
                missing.push_back(name);
            }
            i = close;
        } else {
            out.push_back(text[i]);
        }
    }
    if (!missing.empty()) throw ConfigError("config: unset environment variable(s): " + join(missing, ", "));
    return out;
}

std::uint64_t RunConfig::seed() const {
    if (!doc.contains("seed")) return 0;
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("config: seed must be a non-negative integer");
    return doc["seed"].get<std::uint64_t>();
}

const nlohmann::json& RunConfig::section(const std::string& name) const {
    static const nlohmann::json empty = nlohmann::json::object();
    auto it = doc.find(name);
    if (it == doc.end()) return empty;
    if (!it->is_object()) throw ConfigError("config: section '" + name + "' must be an object");
    return *it;
}

std::string RunConfig::resolve(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_absolute()) return p.string();
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

std::string RunConfig::digest() const {
    nlohmann::json canonical = doc;
    canonical.erase("output_dir");
    return sha256_hex(canonical.dump());
}

nlohmann::json parse_backend_spec(const std::string& spec, const nlohmann::json& current) {
    auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
    if (kind == "toy") {
        nlohmann::json j = {{"kind", "toy"}};
        if (!arg.empty()) j["model"] = arg;
        return j;
    }
    if (kind == "human-mirror" && arg.empty()) return {{"kind", "human-mirror"}};
    if (kind == "scripted" && !arg.empty()) return {{"kind", "scripted"}, {"script", arg}};
    if (kind == "remote") {
        nlohmann::json j = current.is_object() ? current : nlohmann::json::object();
        j["kind"] = "remote";
        if (!arg.empty()) j["model"] = arg;
        return j;
    }
    throw ConfigError("unknown backend spec '" + spec +
                      "' (expected toy[:model.json], human-mirror, scripted:<behaviour>, remote[:model])");
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir, const ConfigOverrides& overrides) {
    RunConfig cfg;
    cfg.base_dir = base_dir;
    try {
        cfg.doc = nlohmann::json::parse(interpolate_env(text));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!cfg.doc.is_object()) throw ConfigError("config: top level must be an object");
    if (overrides.seed) cfg.doc["seed"] = *overrides.seed;
    if (overrides.backend) {
        cfg.doc["backend"] = parse_backend_spec(*overrides.backend, cfg.doc.value("backend", nlohmann::json::object()));
    }
    if (!cfg.doc.contains("backend")) cfg.doc["backend"] = {{"kind", "toy"}};
    cfg.seed();
    return cfg;
}

RunConfig load_run_config(const std::string& path, const ConfigOverrides& overrides) {
    auto dir = std::filesystem::path(path).parent_path();
    return parse_run_config(read_file(path), dir.empty() ? "." : dir.string(), overrides);
}

template <typename T>
T get_or(const nlohmann::json& section, const std::string& key, T fallback) {
    auto it = section.find(key);
    if (it == section.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: key '" + key + "' has the wrong type");
    }
}

template bool get_or<bool>(const nlohmann::json&, const std::string&, bool);
template int get_or<int>(const nlohmann::json&, const std::string&, int);
template double get_or<double>(const nlohmann::json&, const std::string&, double);
template std::size_t get_or<std::size_t>(const nlohmann::json&, const std::string&, std::size_t);
template std::string get_or<std::string>(const nlohmann::json&, const std::string&, std::string);
template std::vector<std::string> get_or<std::vector<std::string>>(const nlohmann::json&, const std::string&,
                                                                   std::vector<std::string>);
template std::vector<double> get_or<std::vector<double>>(const nlohmann::json&, const std::string&,
                                                         std::vector<double>);

}  // namespace alignaudit::report

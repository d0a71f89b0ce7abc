#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace alignaudit::report {

/// Replaces ${NAME} with the environment variable NAME ("$$" escapes a
/// dollar sign). Every unset variable is listed in one ConfigError.
std::string interpolate_env(const std::string& text);

/// A run configuration: one JSON document with backend selection, seeds,
/// input paths and per-command sections. Relative paths resolve against the
/// directory of the config file.
struct RunConfig {
    nlohmann::json doc = nlohmann::json::object();
    std::string base_dir = ".";

    std::uint64_t seed() const;
    const nlohmann::json& section(const std::string& name) const;  // empty object when absent
    std::string resolve(const std::string& path) const;
    /// SHA-256 of the canonical serialization. Independent of where the
    /// config lives and of the output directory.
    std::string digest() const;
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;  // see parse_backend_spec
};

/// "toy", "toy:<model.json>", "human-mirror", "scripted:<behaviour>",
/// "remote" (keeps the config's remote fields) as a backend JSON section.
nlohmann::json parse_backend_spec(const std::string& spec, const nlohmann::json& current = nlohmann::json::object());

RunConfig parse_run_config(const std::string& text, const std::string& base_dir, const ConfigOverrides& overrides = {});
RunConfig load_run_config(const std::string& path, const ConfigOverrides& overrides = {});

/// Typed accessors that report the offending key on a type mismatch.
template <typename T>
T get_or(const nlohmann::json& section, const std::string& key, T fallback);

}  // namespace alignaudit::report

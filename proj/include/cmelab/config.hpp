#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cmelab {

/// Flat text configuration: `[section]` headers and `key = value` lines.
/// Outputs are a pure function of the parsed content; the canonical dump
/// (sorted keys) is what gets hashed into report provenance.
class ExperimentConfig {
public:
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const;
    double get_num(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;
    void set(const std::string& section, const std::string& key, const std::string& value);

    /// Environment overrides: CMELAB_<SECTION>_<KEY>=value.
    void apply_env_overrides();

    std::string canonical_dump() const;
    std::uint64_t hash() const;

private:
    std::map<std::string, std::map<std::string, std::string>> kv_;
};

}  // namespace cmelab

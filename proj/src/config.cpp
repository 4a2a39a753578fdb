#include "cmelab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cmelab/rng.hpp"

extern "C" char** environ;

namespace cmelab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line, section = "global";
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv_[section][key] = value;
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse(os.str());
}

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
    auto s = kv_.find(section);
    return s != kv_.end() && s->second.count(key) > 0;
}

std::string ExperimentConfig::get(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    auto s = kv_.find(section);
    if (s == kv_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double ExperimentConfig::get_num(const std::string& section, const std::string& key,
                                 double fallback) const {
    std::string v = get(section, key);
    if (v.empty()) return fallback;
    try {
        return std::stod(v);
    } catch (...) {
        throw std::invalid_argument("config [" + section + "] " + key + ": not a number: " + v);
    }
}

std::int64_t ExperimentConfig::get_int(const std::string& section, const std::string& key,
                                       std::int64_t fallback) const {
    std::string v = get(section, key);
    if (v.empty()) return fallback;
    try {
        return std::stoll(v);
    } catch (...) {
        throw std::invalid_argument("config [" + section + "] " + key + ": not an integer: " + v);
    }
}

std::vector<double> ExperimentConfig::get_list(const std::string& section,
                                               const std::string& key) const {
    std::vector<double> out;
    std::istringstream is(get(section, key));
    double v;
    while (is >> v) out.push_back(v);
    return out;
}

void ExperimentConfig::set(const std::string& section, const std::string& key,
                           const std::string& value) {
    kv_[section][key] = value;
}

void ExperimentConfig::apply_env_overrides() {
    for (char** e = environ; *e != nullptr; ++e) {
        std::string entry(*e);
        if (entry.rfind("CMELAB_", 0) != 0) continue;
        std::size_t eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(7, eq - 7);
        std::size_t us = name.find('_');
        if (us == std::string::npos) continue;
        std::string section = name.substr(0, us);
        std::string key = name.substr(us + 1);
        std::transform(section.begin(), section.end(), section.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        kv_[section][key] = entry.substr(eq + 1);
    }
}

std::string ExperimentConfig::canonical_dump() const {
    std::ostringstream os;
    for (const auto& [section, entries] : kv_) {
        os << "[" << section << "]\n";
        for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
    }
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
    std::string d = canonical_dump();
    return fnv1a(d.data(), d.size());
}

}  // namespace cmelab

#include "cmelab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cmelab {

void ExperimentReport::set_provenance(std::uint64_t config_hash, std::uint64_t geometry_hash,
                                      std::uint64_t seed) {
    config_hash_ = config_hash;
    geometry_hash_ = geometry_hash;
    seed_ = seed;
}

void ExperimentReport::add(const std::string& name, double value) {
    scalars_.push_back({name, value});
}

void ExperimentReport::add_verdict(const std::string& name, bool pass) {
    verdicts_.push_back({name, pass});
}

bool ExperimentReport::all_pass() const {
    for (const auto& [name, ok] : verdicts_)
        if (!ok) return false;
    return true;
}

double ExperimentReport::value(const std::string& name) const {
    for (const auto& [n, v] : scalars_)
        if (n == name) return v;
    throw std::out_of_range("report: no scalar named " + name);
}

std::string ExperimentReport::to_csv() const {
    std::ostringstream os;
    char buf[320];
    os << "name,value,config_hash,geometry_hash,seed\n";
    for (const auto& [name, v] : scalars_) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%016llx,%016llx,%llu\n", name.c_str(), v,
                      static_cast<unsigned long long>(config_hash_),
                      static_cast<unsigned long long>(geometry_hash_),
                      static_cast<unsigned long long>(seed_));
        os << buf;
    }
    for (const auto& [name, ok] : verdicts_) {
        std::snprintf(buf, sizeof buf, "verdict:%s,%d,%016llx,%016llx,%llu\n", name.c_str(),
                      ok ? 1 : 0, static_cast<unsigned long long>(config_hash_),
                      static_cast<unsigned long long>(geometry_hash_),
                      static_cast<unsigned long long>(seed_));
        os << buf;
    }
    return os.str();
}

std::string ExperimentReport::to_json() const {
    std::ostringstream os;
    char buf[128];
    os << "{\n";
    std::snprintf(buf, sizeof buf, "  \"config_hash\": \"%016llx\",\n",
                  static_cast<unsigned long long>(config_hash_));
    os << buf;
    std::snprintf(buf, sizeof buf, "  \"geometry_hash\": \"%016llx\",\n",
                  static_cast<unsigned long long>(geometry_hash_));
    os << buf;
    std::snprintf(buf, sizeof buf, "  \"seed\": %llu,\n", static_cast<unsigned long long>(seed_));
    os << buf;
    os << "  \"scalars\": {";
    for (std::size_t i = 0; i < scalars_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s\n    \"%s\": %.17g", i ? "," : "",
                      scalars_[i].first.c_str(), scalars_[i].second);
        os << buf;
    }
    os << "\n  },\n  \"verdicts\": {";
    for (std::size_t i = 0; i < verdicts_.size(); ++i) {
        os << (i ? "," : "") << "\n    \"" << verdicts_[i].first
           << "\": " << (verdicts_[i].second ? "true" : "false");
    }
    os << "\n  }\n}\n";
    return os.str();
}

void ExperimentReport::write(const std::string& out_dir, const std::string& basename) const {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out_dir + "/" + basename + ".csv", std::ios::binary);
        f << to_csv();
    }
    {
        std::ofstream f(out_dir + "/" + basename + ".json", std::ios::binary);
        f << to_json();
    }
}

int ExperimentReport::diff_files(const std::string& old_path, const std::string& new_path,
                                 double rel_tol, std::string* summary) {
    auto read_rows = [](const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::invalid_argument("report_diff: cannot open " + path);
        std::map<std::string, std::string> rows;
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            std::size_t c = line.find(',');
            if (c == std::string::npos) continue;
            std::size_t c2 = line.find(',', c + 1);
            rows[line.substr(0, c)] = line.substr(c + 1, c2 - c - 1);
        }
        return rows;
    };
    auto a = read_rows(old_path);
    auto b = read_rows(new_path);
    int diffs = 0;
    std::ostringstream os;
    for (const auto& [name, va] : a) {
        auto it = b.find(name);
        if (it == b.end()) {
            os << "missing in new: " << name << "\n";
            ++diffs;
            continue;
        }
        if (va == it->second) continue;
        double x = std::strtod(va.c_str(), nullptr);
        double y = std::strtod(it->second.c_str(), nullptr);
        double denom = std::max(std::abs(x), std::abs(y));
        if (denom > 0 && std::abs(x - y) / denom <= rel_tol) continue;
        os << "changed: " << name << " " << va << " -> " << it->second << "\n";
        ++diffs;
    }
    for (const auto& [name, vb] : b)
        if (!a.count(name)) {
            os << "new row: " << name << "\n";
            ++diffs;
        }
    if (summary) *summary = os.str();
    return diffs;
}

}  // namespace cmelab

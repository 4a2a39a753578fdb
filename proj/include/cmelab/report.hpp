#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cmelab {

/// Named scalar results with provenance; serialization is byte-deterministic
/// for a fixed config (%.17g doubles, insertion order). Runtime stats go to a
/// side file that is excluded from regression comparison.
class ExperimentReport {
public:
    void set_provenance(std::uint64_t config_hash, std::uint64_t geometry_hash, std::uint64_t seed);
    void add(const std::string& name, double value);
    void add_verdict(const std::string& name, bool pass);

    bool all_pass() const;
    double value(const std::string& name) const;

    std::string to_csv() const;
    std::string to_json() const;
    void write(const std::string& out_dir, const std::string& basename) const;

    /// Compare two report CSVs; returns the number of differing rows.
    static int diff_files(const std::string& old_path, const std::string& new_path,
                          double rel_tol, std::string* summary);

private:
    std::uint64_t config_hash_ = 0, geometry_hash_ = 0, seed_ = 0;
    std::vector<std::pair<std::string, double>> scalars_;
    std::vector<std::pair<std::string, bool>> verdicts_;
};

}  // namespace cmelab

#pragma once

#include <string>
#include <vector>

namespace vsl {

struct Check {
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

struct VerificationReport {
    std::string suite;
    std::vector<Check> checks;
    double wall_time_s = 0.0;

    void add(std::string name, double residual, double threshold, std::string note = {}) {
        checks.push_back({std::move(name), residual, threshold, residual <= threshold, std::move(note)});
    }
    void add_flag(std::string name, bool pass, std::string note = {}) {
        checks.push_back({std::move(name), pass ? 0.0 : 1.0, 0.5, pass, std::move(note)});
    }
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

} // namespace vsl

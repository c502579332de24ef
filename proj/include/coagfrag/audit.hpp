#pragma once

#include <string>
#include <vector>

namespace coagfrag {

/// One audited inequality or identity. `margin` is the slack left in the
/// constraint (negative when violated); `pass` is the verdict after any
/// stated tolerance has been applied.
struct AuditCheck {
    std::string name;
    std::string params;
    double margin = 0.0;
    bool pass = true;
};

struct AuditReport {
    std::vector<AuditCheck> checks;

    void add(std::string name, std::string params, double margin, bool pass) {
        checks.push_back({std::move(name), std::move(params), margin, pass});
    }
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    /// Smallest margin over all checks (0 for an empty report).
    double worst_margin() const;
    /// Serialized as a JSON array of {check, params, margin, pass}.
    std::string to_json(int indent = 2) const;
};

}

#include "coagfrag/audit.hpp"

#include <algorithm>

#include <json.hpp>

namespace coagfrag {

double AuditReport::worst_margin() const {
    double w = 0.0;
    bool first = true;
    for (const auto& c : checks) {
        if (first || c.margin < w) w = c.margin;
        first = false;
    }
    return w;
}

std::string AuditReport::to_json(int indent) const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
        arr.push_back({{"check", c.name}, {"params", c.params}, {"margin", c.margin}, {"pass", c.pass}});
    }
    return arr.dump(indent);
}

}

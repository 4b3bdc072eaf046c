#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "model.hpp"

namespace prte {

// One row of `bounds` output.
struct BoundsRecord {
    std::string method;
    std::string target;
    double sigma = 0.0;
    int v_dim = 1;
    std::string restrictions = "none";
    BoundsResult result;
};

inline nlohmann::json to_json(const BoundsRecord& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["target"] = r.target;
    j["sigma"] = r.sigma;
    j["v_dim"] = r.v_dim;
    j["restrictions"] = r.restrictions;
    j["status"] = status_name(r.result.status);
    // NaN is not JSON; empty and unbounded sides become null
    const bool ok = r.result.bounded();
    j["lower"] = ok && std::isfinite(r.result.lower) ? nlohmann::json(r.result.lower) : nlohmann::json(nullptr);
    j["upper"] = ok && std::isfinite(r.result.upper) ? nlohmann::json(r.result.upper) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const std::vector<BoundsRecord>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(to_json(r));
    return arr;
}

}  // namespace prte

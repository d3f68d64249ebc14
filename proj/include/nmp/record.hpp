#pragma once

// One inequality check: what was compared, how much slack, pass/fail.
// pass is always equivalent to lhs <= rhs + tol for the check's tolerance.

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

namespace nmp {

// RHS / max(LHS, eps), clamped to [0, 1e300]; equals 1 when both sides are
// numerically zero (equality case). Values >= 1 mean the inequality holds
// with that multiplicative margin.
double slack_ratio(double lhs, double rhs);

struct VerificationRecord {
    std::string check_id;
    std::string model_id;
    std::uint64_t seed = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool pass = false;
    double wall_time_sec = 0.0;
    std::string cstar_provenance;
    std::map<std::string, double> details;

    nlohmann::json to_json() const;
    static VerificationRecord from_json(const nlohmann::json& j);
};

VerificationRecord make_record(std::string check_id, std::string model_id,
                               std::uint64_t seed, double lhs, double rhs,
                               double tol, std::string cstar_provenance = {});

}  // namespace nmp

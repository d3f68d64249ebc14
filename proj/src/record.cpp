#include "nmp/record.hpp"

#include <algorithm>
#include <cmath>

namespace nmp {

double slack_ratio(double lhs, double rhs) {
    constexpr double kEps = 1e-300;
    constexpr double kCap = 1e300;
    if (std::abs(lhs) <= kEps && std::abs(rhs) <= kEps) return 1.0;
    double s = rhs / std::max(lhs, kEps);
    if (!std::isfinite(s)) return kCap;
    return std::clamp(s, 0.0, kCap);
}

nlohmann::json VerificationRecord::to_json() const {
    nlohmann::json j;
    j["check"] = check_id;
    j["model"] = model_id;
    j["seed"] = seed;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["slack"] = slack;
    j["pass"] = pass;
    j["wall_time"] = wall_time_sec;
    j["cstar"] = cstar_provenance;
    if (!details.empty()) j["details"] = details;
    return j;
}

VerificationRecord VerificationRecord::from_json(const nlohmann::json& j) {
    VerificationRecord rec;
    rec.check_id = j.at("check").get<std::string>();
    rec.model_id = j.at("model").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.lhs = j.at("lhs").get<double>();
    rec.rhs = j.at("rhs").get<double>();
    rec.slack = j.at("slack").get<double>();
    rec.pass = j.at("pass").get<bool>();
    rec.wall_time_sec = j.at("wall_time").get<double>();
    rec.cstar_provenance = j.at("cstar").get<std::string>();
    if (j.contains("details"))
        rec.details = j.at("details").get<std::map<std::string, double>>();
    return rec;
}

VerificationRecord make_record(std::string check_id, std::string model_id,
                               std::uint64_t seed, double lhs, double rhs,
                               double tol, std::string cstar_provenance) {
    VerificationRecord rec;
    rec.check_id = std::move(check_id);
    rec.model_id = std::move(model_id);
    rec.seed = seed;
    rec.lhs = lhs;
    rec.rhs = rhs;
    rec.slack = slack_ratio(lhs, rhs);
    rec.pass = lhs <= rhs + tol;
    rec.cstar_provenance = std::move(cstar_provenance);
    return rec;
}

}  // namespace nmp

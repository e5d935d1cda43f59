#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "capacity_mft.hpp"
#include "capacity_sim.hpp"
#include "geometry.hpp"
#include "report.hpp"
#include "svm.hpp"

namespace mg {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const SimCapacityResult& r, const SimConfig& cfg);
nlohmann::json to_json(const MftReport& r);
nlohmann::json to_json(const FieldDistribution& fd);
nlohmann::json to_json(const TrajectoryReport& t);
nlohmann::json to_json(const ProjectionReport& p);

MftReport mft_report_from_json(const nlohmann::json& j);
TrajectoryReport trajectory_from_json(const nlohmann::json& j);

// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace mg

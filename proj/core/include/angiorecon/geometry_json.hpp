#pragma once

// JSON form of ImagingGeometry / ViewAngles. Field names are fixed:
//   theta_deg, phi_deg, L, S, f, dx, dy, sx, sy, w_img, h_img
// theta_deg / phi_deg are optional (absent for grid sidecars).

#include "angiorecon/geometry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace angiorecon {

nlohmann::json to_json(const ImagingGeometry& g,
                       const std::optional<ViewAngles>& view = std::nullopt);

/// Reads geometry fields; dx/dy may be omitted and are then derived from
/// sx / w_img. When present they must agree with it to 1e-9 relative.
ImagingGeometry geometry_from_json(const nlohmann::json& j);

/// Reads theta_deg / phi_deg; nullopt when both are absent.
std::optional<ViewAngles> view_from_json(const nlohmann::json& j);

/// Parses either a JSON array of {theta_deg, phi_deg} objects or the
/// shorthand "lao30cra0,rao30cau0" (LAO/RAO sets the sign of theta,
/// CRA/CAU the sign of phi; values in degrees).
std::vector<ViewAngles> parse_views(std::string_view text);
std::string format_view(const ViewAngles& v);

/// Sidecar path for a data file: "dir/name.avg" -> "dir/name.json".
std::filesystem::path sidecar_path(const std::filesystem::path& data_file);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace angiorecon

#include "angiorecon/geometry_json.hpp"

#include "angiorecon/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace angiorecon {
namespace {

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw ValidationError(std::string("geometry JSON: missing field '") + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) {
    throw ValidationError(std::string("geometry JSON: field '") + key +
                          "' must be a number");
  }
  return v.get<double>();
}

int int_field(const nlohmann::json& j, const char* key) {
  const double v = number_field(j, key);
  if (v != std::floor(v)) {
    throw ValidationError(std::string("geometry JSON: field '") + key +
                          "' must be an integer");
  }
  return static_cast<int>(v);
}

void check_pitch(const nlohmann::json& j, const char* key, double derived) {
  if (!j.contains(key)) return;
  const double given = number_field(j, key);
  if (std::abs(given - derived) > 1e-9 * std::abs(derived)) {
    throw ValidationError(std::string("geometry JSON: ") + key + " = " +
                          std::to_string(given) +
                          " disagrees with sensor size / pixel count = " +
                          std::to_string(derived));
  }
}

}  // namespace

nlohmann::json to_json(const ImagingGeometry& g,
                       const std::optional<ViewAngles>& view) {
  nlohmann::json j;
  if (view) {
    j["theta_deg"] = view->theta_deg();
    j["phi_deg"] = view->phi_deg();
  }
  j["L"] = g.L;
  j["S"] = g.S;
  j["f"] = g.f;
  j["dx"] = g.dx;
  j["dy"] = g.dy;
  j["sx"] = g.sx;
  j["sy"] = g.sy;
  j["w_img"] = g.w_img;
  j["h_img"] = g.h_img;
  return j;
}

ImagingGeometry geometry_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("geometry JSON: expected an object");
  auto g = ImagingGeometry::make(number_field(j, "L"), number_field(j, "S"),
                                 number_field(j, "f"), number_field(j, "sx"),
                                 number_field(j, "sy"), int_field(j, "w_img"),
                                 int_field(j, "h_img"));
  check_pitch(j, "dx", g.dx);
  check_pitch(j, "dy", g.dy);
  return g;
}

std::optional<ViewAngles> view_from_json(const nlohmann::json& j) {
  const bool has_theta = j.contains("theta_deg");
  const bool has_phi = j.contains("phi_deg");
  if (!has_theta && !has_phi) return std::nullopt;
  if (has_theta != has_phi) {
    throw ValidationError("view JSON: theta_deg and phi_deg must appear together");
  }
  return ViewAngles::degrees(number_field(j, "theta_deg"),
                             number_field(j, "phi_deg"));
}

std::vector<ViewAngles> parse_views(std::string_view text) {
  std::string s(text);
  const auto first = s.find_first_not_of(" \t\n");
  if (first == std::string::npos) throw ValidationError("empty view list");
  std::vector<ViewAngles> views;
  if (s[first] == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("views JSON: ") + e.what());
    }
    for (const auto& item : j) {
      auto v = view_from_json(item);
      if (!v) throw ValidationError("views JSON: entry without theta_deg/phi_deg");
      views.push_back(*v);
    }
    return views;
  }
  static const std::regex kShorthand(
      R"(^\s*(lao|rao)([0-9]+(?:\.[0-9]+)?)(cra|cau)([0-9]+(?:\.[0-9]+)?)\s*$)",
      std::regex::icase);
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::smatch m;
    if (!std::regex_match(item, m, kShorthand)) {
      throw ValidationError("cannot parse view '" + item +
                            "' (expected e.g. lao30cra0 or rao30cau15)");
    }
    auto lower = [](std::string x) {
      for (auto& c : x) c = static_cast<char>(std::tolower(c));
      return x;
    };
    const double theta = std::stod(m[2]) * (lower(m[1]) == "lao" ? 1.0 : -1.0);
    const double phi = std::stod(m[4]) * (lower(m[3]) == "cra" ? 1.0 : -1.0);
    views.push_back(ViewAngles::degrees(theta, phi));
  }
  return views;
}

std::string format_view(const ViewAngles& v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%g%s%g", v.theta < 0 ? "rao" : "lao",
                std::abs(v.theta_deg()), v.phi < 0 ? "cau" : "cra",
                std::abs(v.phi_deg()));
  return buf;
}

std::filesystem::path sidecar_path(const std::filesystem::path& data_file) {
  auto p = data_file;
  p.replace_extension(".json");
  return p;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open JSON file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace angiorecon

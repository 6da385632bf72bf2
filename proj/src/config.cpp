#include "tmon/config.hpp"

#include <set>

#include "json_util.hpp"
#include "tmon/error.hpp"

namespace tmon {

namespace fs = std::filesystem;
using detail::field;
using detail::field_or;
using detail::join_path;

const CameraConfig* DeploymentConfig::find_camera(const std::string& id) const {
  for (const auto& c : cameras) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

CameraConfig parse_camera(const nlohmann::json& j, const fs::path& base_dir, const std::string& path,
                          fs::path* alias_db_path) {
  CameraConfig c;
  c.id = field<std::string>(j, "id", path);
  c.origin = detail::as_point(detail::require(j, "origin", path), join_path(path, "origin"));
  c.scale = field<double>(j, "scale", path);
  c.width = field_or<int>(j, "width", path, 1024);
  c.height = field_or<int>(j, "height", path, 1024);
  const long long period = field_or<long long>(j, "capture_period_ticks", path, 1);
  if (period < 1) throw ValidationError(join_path(path, "capture_period_ticks"), "must be >= 1");
  c.capture_period_ticks = static_cast<std::uint32_t>(period);
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError(join_path(path, e.field_path()), e.what());
  }

  const fs::path db_path = resolve(base_dir, field<std::string>(j, "alias_db", path));
  AliasDb db;
  try {
    db = load_alias_db(db_path);
  } catch (const ParseError& e) {
    throw ParseError(join_path(path, "alias_db") + ": " + db_path.string() + ": " + e.what());
  }
  if (db.map.camera_id != c.id) {
    throw ValidationError(join_path(path, "alias_db"),
                          "alias database is for camera '" + db.map.camera_id + "', not '" + c.id + "'");
  }
  const auto violations = validate_alias_table(db.map, db.table);
  if (!violations.empty()) {
    throw ValidationError(join_path(path, "alias_db"), std::string(to_string(violations.front().kind)) + " '" +
                                                           violations.front().alias + "': " +
                                                           violations.front().detail);
  }
  c.sections = std::make_shared<const SectionMap>(std::move(db.map));
  c.aliases = std::make_shared<const AliasTable>(std::move(db.table));
  if (alias_db_path) *alias_db_path = db_path;
  return c;
}

DeploymentConfig parse_config(const nlohmann::json& j, const fs::path& base_dir) {
  DeploymentConfig cfg;
  const auto& cameras = detail::require(j, "cameras", "");
  if (!cameras.is_array()) throw ParseError("cameras: expected array");
  if (cameras.empty()) throw ValidationError("cameras", "at least one camera is required");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const std::string path = detail::index_path("cameras", i);
    fs::path db;
    cfg.cameras.push_back(parse_camera(cameras[i], base_dir, path, &db));
    cfg.alias_db_paths.push_back(db);
    if (!ids.insert(cfg.cameras.back().id).second) {
      throw ValidationError(join_path(path, "id"), "duplicate camera id '" + cfg.cameras.back().id + "'");
    }
  }
  cfg.scenario_dir = resolve(base_dir, field<std::string>(j, "scenario_dir", ""));
  cfg.store_root = resolve(base_dir, field<std::string>(j, "store_root", ""));

  if (j.contains("endpoints")) {
    const auto& e = j["endpoints"];
    if (!e.is_object()) throw ParseError("endpoints: expected object");
    if (e.contains("detector") && !e["detector"].is_null()) {
      cfg.endpoints.detector = field<std::string>(e, "detector", "endpoints");
    }
    if (e.contains("vlm") && !e["vlm"].is_null()) cfg.endpoints.vlm = field<std::string>(e, "vlm", "endpoints");
  }
  if (j.contains("limits")) {
    const auto& l = j["limits"];
    cfg.limits.max_in_flight = field_or<int>(l, "max_in_flight", "limits", cfg.limits.max_in_flight);
    cfg.limits.timeout = std::chrono::milliseconds(
        field_or<long long>(l, "timeout_ms", "limits", static_cast<long long>(cfg.limits.timeout.count())));
    cfg.limits.retries = field_or<int>(l, "retries", "limits", cfg.limits.retries);
    cfg.limits.max_jobs = field_or<int>(l, "max_jobs", "limits", cfg.limits.max_jobs);
    if (cfg.limits.max_in_flight < 1 || cfg.limits.max_in_flight > 1024) {
      throw ValidationError("limits.max_in_flight", "must be in [1, 1024]");
    }
    if (cfg.limits.timeout.count() <= 0) throw ValidationError("limits.timeout_ms", "must be > 0");
    if (cfg.limits.retries < 0) throw ValidationError("limits.retries", "must be >= 0");
    if (cfg.limits.max_jobs < 1) throw ValidationError("limits.max_jobs", "must be >= 1");
  }
  if (j.contains("listen")) {
    const auto& l = j["listen"];
    cfg.host = field_or<std::string>(l, "host", "listen", cfg.host);
    cfg.port = field_or<int>(l, "port", "listen", cfg.port);
    if (cfg.port < 0 || cfg.port > 65535) throw ValidationError("listen.port", "must be in [0, 65535]");
  }
  return cfg;
}

DeploymentConfig load_config(const fs::path& path) {
  return parse_config(detail::read_json_file(path), path.parent_path());
}

nlohmann::ordered_json camera_summary(const CameraConfig& c) {
  return {{"id", c.id},
          {"origin", detail::point_json(c.origin)},
          {"scale", c.scale},
          {"width", c.width},
          {"height", c.height},
          {"capture_period_ticks", c.capture_period_ticks},
          {"sections", c.sections ? c.sections->aliases() : std::vector<std::string>{}}};
}

}  // namespace tmon

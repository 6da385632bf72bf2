#pragma once

// Deployment configuration file: cameras, scenario and store locations,
// optional remote endpoints and request limits.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmon/camera.hpp"

namespace tmon {

struct Endpoints {
  std::optional<std::string> detector;
  std::optional<std::string> vlm;
};

struct Limits {
  int max_in_flight = 4;
  std::chrono::milliseconds timeout{5000};
  int retries = 2;
  int max_jobs = 2;
};

struct DeploymentConfig {
  std::vector<CameraConfig> cameras;
  std::vector<std::filesystem::path> alias_db_paths;  // parallel to cameras
  std::filesystem::path scenario_dir;
  std::filesystem::path store_root;
  Endpoints endpoints;
  Limits limits;
  std::string host = "127.0.0.1";
  int port = 8080;

  const CameraConfig* find_camera(const std::string& id) const;
};

// Relative paths resolve against `base_dir`. Schema errors throw ParseError,
// semantic ones ValidationError; both carry the field path.
DeploymentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
DeploymentConfig load_config(const std::filesystem::path& path);

CameraConfig parse_camera(const nlohmann::json& j, const std::filesystem::path& base_dir, const std::string& path,
                          std::filesystem::path* alias_db_path = nullptr);
nlohmann::ordered_json camera_summary(const CameraConfig& camera);

}  // namespace tmon

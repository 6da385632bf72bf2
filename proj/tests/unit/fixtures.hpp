#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>
#include <thread>

#include <httplib.h>

#include "tmon/camera.hpp"
#include "tmon/config.hpp"
#include "tmon/grounding.hpp"
#include "tmon/scene.hpp"

namespace fixtures {

inline std::filesystem::path source_dir() { return TMON_SOURCE_DIR; }
inline std::filesystem::path demo_config() { return source_dir() / "config" / "demo.json"; }
inline std::filesystem::path scenario_dir() { return source_dir() / "scenarios"; }

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("tmon-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// 256 x 256 camera over [0,4]^2 m with two sections: left half "Section A"
// (Main St), right half "the roundabout" (Harbor Circle).
inline tmon::CameraConfig small_camera(std::uint32_t period = 1) {
  tmon::CameraConfig c;
  c.id = "cam-test";
  c.origin = {0.0, 0.0};
  c.scale = 64.0;
  c.width = 256;
  c.height = 256;
  c.capture_period_ticks = period;
  auto map = std::make_shared<tmon::SectionMap>();
  map->camera_id = c.id;
  map->sections.push_back({"Section A", {{0, 0}, {128, 0}, {128, 256}, {0, 256}}});
  map->sections.push_back({"the roundabout", {{128, 0}, {256, 0}, {256, 256}, {128, 256}}});
  auto table = std::make_shared<tmon::AliasTable>();
  table->camera_id = c.id;
  table->entries = {{"Section A", "Main St"}, {"the roundabout", "Harbor Circle"}};
  c.sections = map;
  c.aliases = table;
  return c;
}

inline tmon::EntitySpec vehicle_spec(std::string id, std::vector<tmon::Vec2> path, double speed,
                                     double heading = 0.0) {
  tmon::EntitySpec e;
  e.id = std::move(id);
  e.kind = tmon::EntityKind::kVehicle;
  e.footprint = {0.21, 0.10, 0.0};
  e.path = std::move(path);
  e.speed = speed;
  e.heading = heading;
  return e;
}

inline tmon::EntitySpec pedestrian_spec(std::string id, std::vector<tmon::Vec2> path, double speed) {
  tmon::EntitySpec e;
  e.id = std::move(id);
  e.kind = tmon::EntityKind::kPedestrian;
  e.footprint = {0.0, 0.0, 0.06};
  e.path = std::move(path);
  e.speed = speed;
  return e;
}

inline tmon::ScenarioConfig scenario(std::string id, std::uint32_t duration,
                                     std::vector<tmon::EntitySpec> entities) {
  tmon::ScenarioConfig s;
  s.id = std::move(id);
  s.duration_ticks = duration;
  s.entities = std::move(entities);
  return s;
}

// httplib server on an ephemeral port, running on its own thread.
class StubServer {
 public:
  explicit StubServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace fixtures

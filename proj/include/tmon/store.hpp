#pragma once

// File-based persistence: one directory per run, an append-only registry
// index, and saved evaluation reports.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmon/artifacts.hpp"
#include "tmon/camera.hpp"

namespace tmon {

enum class RunStatus { kPending, kRunning, kDone, kFailed };

std::string_view to_string(RunStatus s);
std::optional<RunStatus> parse_run_status(std::string_view s);

struct RunInfo {
  std::string id;
  std::string scenario_id;
  RunStatus status = RunStatus::kPending;
  std::string detail;
};

nlohmann::ordered_json to_json(const RunInfo& r);

// Layout under root:
//   registry.jsonl             one status transition per line
//   runs/{id}/                 artifacts of finished runs
//   runs/.{id}.staging/        artifacts while a run is in progress
//   reports/{id}.json
//   aliases/{camera_id}.json   runtime alias table edits
class RunStore {
 public:
  // Replays the registry. Runs left pending or running by a previous process
  // are recorded as failed.
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  RunInfo create(const std::string& scenario_id);
  std::optional<RunInfo> get(const std::string& id) const;
  std::vector<RunInfo> list() const;

  void mark_running(const std::string& id);
  // Sink writing into the run's staging directory.
  DirectorySink staging_sink(const std::string& id) const;
  // Moves staging into place and records done. A done run never changes again.
  void commit(const std::string& id);
  // Discards staged artifacts and records failed.
  void fail(const std::string& id, const std::string& detail);

  std::filesystem::path run_dir(const std::string& id) const;

  std::string save_report(const nlohmann::ordered_json& report);
  // Raw report text; throws NotFoundError.
  std::string load_report(const std::string& id) const;

  std::filesystem::path alias_override_path(const std::string& camera_id) const;

 private:
  void append(const RunInfo& info);
  void transition(const std::string& id, RunStatus to, const std::string& detail);
  std::filesystem::path staging_dir(const std::string& id) const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::vector<RunInfo> runs_;  // creation order, latest status
  std::size_t next_report_ = 1;
};

// Frames stored by a run (sidecar + PPM pairs), ordered by camera then tick.
std::vector<Frame> load_run_frames(const std::filesystem::path& run_dir);

}  // namespace tmon

#include "tmon/store.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "json_util.hpp"
#include "tmon/error.hpp"

namespace tmon {

namespace fs = std::filesystem;

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kPending: return "pending";
    case RunStatus::kRunning: return "running";
    case RunStatus::kDone: return "done";
    case RunStatus::kFailed: return "failed";
  }
  return "failed";
}

std::optional<RunStatus> parse_run_status(std::string_view s) {
  for (RunStatus r : {RunStatus::kPending, RunStatus::kRunning, RunStatus::kDone, RunStatus::kFailed}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

nlohmann::ordered_json to_json(const RunInfo& r) {
  return {{"run_id", r.id}, {"scenario_id", r.scenario_id}, {"status", to_string(r.status)}, {"detail", r.detail}};
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "runs");
  fs::create_directories(root_ / "reports");
  const fs::path registry = root_ / "registry.jsonl";
  if (fs::exists(registry)) {
    std::ifstream in(registry);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(registry.string() + ": line " + std::to_string(n) + ": " + e.what(), n);
      }
      RunInfo info;
      info.id = detail::field<std::string>(j, "run_id", "");
      info.scenario_id = detail::field<std::string>(j, "scenario_id", "");
      const auto status = parse_run_status(detail::field<std::string>(j, "status", ""));
      if (!status) throw ParseError(registry.string() + ": line " + std::to_string(n) + ": bad status", n);
      info.status = *status;
      info.detail = detail::field_or<std::string>(j, "detail", "", "");
      const auto it = std::find_if(runs_.begin(), runs_.end(), [&](const RunInfo& r) { return r.id == info.id; });
      if (it == runs_.end()) {
        runs_.push_back(info);
      } else {
        *it = info;
      }
    }
  }
  for (RunInfo& r : runs_) {
    if (r.status == RunStatus::kPending || r.status == RunStatus::kRunning) {
      fs::remove_all(staging_dir(r.id));
      r.status = RunStatus::kFailed;
      r.detail = "interrupted";
      append(r);
    }
  }
  for (const auto& entry : fs::directory_iterator(root_ / "reports")) {
    const std::string stem = entry.path().stem().string();
    if (stem.rfind("report-", 0) == 0) {
      next_report_ = std::max<std::size_t>(next_report_, std::stoul(stem.substr(7)) + 1);
    }
  }
}

void RunStore::append(const RunInfo& info) {
  std::ofstream out(root_ / "registry.jsonl", std::ios::app | std::ios::binary);
  out << to_json(info).dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + (root_ / "registry.jsonl").string());
}

fs::path RunStore::run_dir(const std::string& id) const { return root_ / "runs" / id; }
fs::path RunStore::staging_dir(const std::string& id) const { return root_ / "runs" / ("." + id + ".staging"); }
fs::path RunStore::alias_override_path(const std::string& camera_id) const {
  return root_ / "aliases" / (camera_id + ".json");
}

RunInfo RunStore::create(const std::string& scenario_id) {
  std::lock_guard lock(mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%04zu", runs_.size() + 1);
  RunInfo info{buf, scenario_id, RunStatus::kPending, ""};
  append(info);
  runs_.push_back(info);
  return info;
}

std::optional<RunInfo> RunStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& r : runs_) {
    if (r.id == id) return r;
  }
  return std::nullopt;
}

std::vector<RunInfo> RunStore::list() const {
  std::lock_guard lock(mutex_);
  return runs_;
}

void RunStore::transition(const std::string& id, RunStatus to, const std::string& detail) {
  const auto it = std::find_if(runs_.begin(), runs_.end(), [&](const RunInfo& r) { return r.id == id; });
  if (it == runs_.end()) throw NotFoundError("unknown run '" + id + "'");
  if (it->status == RunStatus::kDone || it->status == RunStatus::kFailed) {
    throw ValidationError("status", "run '" + id + "' is already " + std::string(to_string(it->status)));
  }
  it->status = to;
  it->detail = detail;
  append(*it);
}

void RunStore::mark_running(const std::string& id) {
  std::lock_guard lock(mutex_);
  transition(id, RunStatus::kRunning, "");
  fs::create_directories(staging_dir(id));
}

DirectorySink RunStore::staging_sink(const std::string& id) const { return DirectorySink(staging_dir(id)); }

void RunStore::commit(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = std::find_if(runs_.begin(), runs_.end(), [&](const RunInfo& r) { return r.id == id; });
  if (it == runs_.end()) throw NotFoundError("unknown run '" + id + "'");
  if (it->status != RunStatus::kRunning) throw ValidationError("status", "run '" + id + "' is not running");
  fs::rename(staging_dir(id), run_dir(id));
  transition(id, RunStatus::kDone, "");
}

void RunStore::fail(const std::string& id, const std::string& detail) {
  std::lock_guard lock(mutex_);
  std::error_code ec;
  fs::remove_all(staging_dir(id), ec);
  transition(id, RunStatus::kFailed, detail);
}

std::string RunStore::save_report(const nlohmann::ordered_json& report) {
  std::lock_guard lock(mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "report-%04zu", next_report_++);
  write_file_atomic(root_ / "reports" / (std::string(buf) + ".json"), report.dump(2) + "\n");
  return buf;
}

std::string RunStore::load_report(const std::string& id) const {
  const bool safe = !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
  const fs::path path = root_ / "reports" / (id + ".json");
  if (!safe || !fs::exists(path)) throw NotFoundError("unknown report '" + id + "'");
  return detail::read_text_file(path);
}

std::vector<Frame> load_run_frames(const fs::path& run_dir) {
  std::vector<fs::path> sidecars;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().parent_path() != run_dir) {
      sidecars.push_back(entry.path());
    }
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<Frame> frames;
  for (const fs::path& sidecar : sidecars) {
    Frame f = frame_from_annotations(detail::read_json_file(sidecar));
    fs::path ppm = sidecar;
    ppm.replace_extension(".ppm");
    const Image img = decode_ppm(detail::read_text_file(ppm));
    if (img.width != f.width || img.height != f.height) {
      throw ValidationError(ppm.string(), "image size does not match its sidecar");
    }
    f.pixels = img.pixels;
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace tmon

#include "tmon/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>

#include "json_util.hpp"
#include "tmon/artifacts.hpp"
#include "tmon/error.hpp"
#include "tmon/rng.hpp"

namespace tmon {

std::vector<std::string> derive_tags(const Frame& frame) {
  std::set<std::string> tags;
  if (frame.collision_present) tags.insert("collision");
  std::size_t vehicles = 0;
  std::map<std::pair<std::string, Direction>, int> lanes;
  for (const EntityAnnotation& a : frame.annotations) {
    if (a.cls == EntityKind::kPedestrian) {
      tags.insert("pedestrian");
      continue;
    }
    ++vehicles;
    if (a.direction != Direction::kStationary && a.section_alias) {
      if (++lanes[{*a.section_alias, a.direction}] >= 2) tags.insert("platooning");
    }
  }
  if (vehicles >= kCongestionVehicles) tags.insert("congestion");
  return {tags.begin(), tags.end()};
}

std::string image_path_for(const Frame& frame) {
  std::string path = "images/";
  if (!frame.scenario_id.empty()) path += frame.scenario_id + "/";
  return path + frame_stem(frame.camera_id, frame.tick) + ".ppm";
}

const std::vector<std::string>& default_query_pool() {
  static const std::vector<std::string> pool = {
      std::string(kDefaultQuery),
      "Describe the traffic in this image.",
      "Where are the vehicles and which way are they heading?",
      "Has any collision occurred in this scene?",
  };
  return pool;
}

const std::string& pick_query(std::string_view record_id, const std::vector<std::string>& pool) {
  if (pool.empty()) throw ValidationError("queries", "query pool is empty");
  return pool[SeedMixer(0).mix(record_id).value() % pool.size()];
}

std::string record_id(const Frame& frame) {
  char tick[16];
  std::snprintf(tick, sizeof tick, "%08u", frame.tick);
  return (frame.scenario_id.empty() ? "" : frame.scenario_id + "-") + frame.camera_id + "-" + tick;
}

InstructionRecord build_record(const Frame& frame, const Frame& highlighted, std::string query) {
  if (frame.camera_id != highlighted.camera_id) {
    throw ValidationError("camera_id", "frame '" + frame.camera_id + "' vs highlighted '" + highlighted.camera_id + "'");
  }
  if (frame.tick != highlighted.tick) {
    throw ValidationError("tick", std::to_string(frame.tick) + " vs " + std::to_string(highlighted.tick));
  }
  InstructionRecord r;
  r.id = record_id(frame);
  r.scenario_id = frame.scenario_id;
  r.image_path = image_path_for(highlighted);
  r.camera_id = frame.camera_id;
  r.tick = frame.tick;
  r.query = std::move(query);
  r.answer = caption_frame(frame);
  r.tags = derive_tags(frame);
  return r;
}

Manifest make_manifest(std::span<const InstructionRecord> records, std::string created_at) {
  Manifest m;
  m.count = records.size();
  m.created_at = std::move(created_at);
  std::set<std::string> cameras, scenarios, collision_scenarios;
  for (const auto& r : records) {
    cameras.insert(r.camera_id);
    scenarios.insert(r.scenario_id);
    if (std::find(r.tags.begin(), r.tags.end(), "collision") != r.tags.end()) {
      ++m.collision_count;
      collision_scenarios.insert(r.scenario_id);
    }
  }
  m.cameras.assign(cameras.begin(), cameras.end());
  m.scenario_count = scenarios.size();
  m.collision_scenario_count = collision_scenarios.size();
  return m;
}

nlohmann::ordered_json to_json(const InstructionRecord& r) {
  return {{"id", r.id},           {"scenario_id", r.scenario_id}, {"image_path", r.image_path},
          {"camera_id", r.camera_id}, {"tick", r.tick},           {"query", r.query},
          {"answer", r.answer},   {"tags", r.tags}};
}

InstructionRecord record_from_json(const nlohmann::json& j) {
  InstructionRecord r;
  r.id = detail::field<std::string>(j, "id", "");
  r.scenario_id = detail::field_or<std::string>(j, "scenario_id", "", "");
  r.image_path = detail::field<std::string>(j, "image_path", "");
  r.camera_id = detail::field<std::string>(j, "camera_id", "");
  r.tick = detail::field<std::uint32_t>(j, "tick", "");
  r.query = detail::field<std::string>(j, "query", "");
  r.answer = detail::field<std::string>(j, "answer", "");
  r.tags = detail::field<std::vector<std::string>>(j, "tags", "");
  return r;
}

std::string dataset_jsonl(std::span<const InstructionRecord> records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

nlohmann::ordered_json to_json(const Manifest& m) {
  return {{"count", m.count},
          {"collision_count", m.collision_count},
          {"cameras", m.cameras},
          {"created_at", m.created_at},
          {"scenario_count", m.scenario_count},
          {"collision_scenario_count", m.collision_scenario_count}};
}

Manifest export_dataset(std::span<const InstructionRecord> records, const std::filesystem::path& root,
                        std::string created_at) {
  for (const auto& r : records) {
    if (!std::filesystem::is_regular_file(root / r.image_path)) {
      throw NotFoundError("record " + r.id + ": missing image file " + r.image_path);
    }
  }
  Manifest m = make_manifest(records, std::move(created_at));
  write_file_atomic(root / "dataset.jsonl", dataset_jsonl(records));
  write_file_atomic(root / "manifest.json", to_json(m).dump(2) + "\n");
  return m;
}

std::vector<InstructionRecord> import_dataset(const std::filesystem::path& root) {
  std::ifstream in(root / "dataset.jsonl");
  if (!in) throw NotFoundError("cannot open " + (root / "dataset.jsonl").string());
  std::vector<InstructionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    InstructionRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("dataset.jsonl: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(std::string("dataset.jsonl: ") + e.what(), line_no);
    }
    if (!std::filesystem::is_regular_file(root / r.image_path)) {
      throw NotFoundError("dataset.jsonl line " + std::to_string(line_no) + ": missing image file " + r.image_path);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::pair<std::vector<InstructionRecord>, std::vector<InstructionRecord>> split_records(
    std::vector<InstructionRecord> records, double ratio, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = records.size(); i > 1; --i) std::swap(records[i - 1], records[rng.index(i)]);
  const auto first = static_cast<std::size_t>(std::llround(std::clamp(ratio, 0.0, 1.0) * records.size()));
  std::vector<InstructionRecord> head(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(first));
  std::vector<InstructionRecord> tail(records.begin() + static_cast<std::ptrdiff_t>(first), records.end());
  return {std::move(head), std::move(tail)};
}

std::string build_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace tmon

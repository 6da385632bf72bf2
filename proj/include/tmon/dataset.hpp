#pragma once

// Instruction-tuning corpus: one record per highlighted frame, with the
// ground-truth caption (alias vocabulary) as the answer.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tmon/camera.hpp"

namespace tmon {

struct InstructionRecord {
  std::string id;
  std::string scenario_id;
  std::string image_path;  // relative to the dataset root
  std::string camera_id;
  std::uint32_t tick = 0;
  std::string query;
  std::string answer;
  std::vector<std::string> tags;  // sorted subset of collision, congestion, pedestrian, platooning

  friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

// Vehicles on screen at or above which a frame is tagged "congestion".
inline constexpr std::size_t kCongestionVehicles = 4;

// collision: frame.collision_present. pedestrian: any pedestrian annotation.
// congestion: >= kCongestionVehicles vehicles. platooning: two or more moving
// vehicles sharing a section and direction.
std::vector<std::string> derive_tags(const Frame& frame);

// "images/{scenario}/{camera}/{tick:08}.ppm".
std::string image_path_for(const Frame& frame);

// "{scenario}-{camera}-{tick:08}"
std::string record_id(const Frame& frame);

// Queries paired with corpus images. The first entry is the default.
const std::vector<std::string>& default_query_pool();

// Deterministic pick keyed on the record id.
const std::string& pick_query(std::string_view record_id, const std::vector<std::string>& pool);

// Throws ValidationError if the frames disagree on camera or tick.
InstructionRecord build_record(const Frame& frame, const Frame& highlighted, std::string query);

struct Manifest {
  std::size_t count = 0;
  std::size_t collision_count = 0;  // records tagged collision
  std::vector<std::string> cameras;
  std::string created_at;
  std::size_t scenario_count = 0;
  std::size_t collision_scenario_count = 0;  // scenarios contributing collision records
};

Manifest make_manifest(std::span<const InstructionRecord> records, std::string created_at);

// Stable field order, one record per line.
nlohmann::ordered_json to_json(const InstructionRecord& r);
InstructionRecord record_from_json(const nlohmann::json& j);
std::string dataset_jsonl(std::span<const InstructionRecord> records);
nlohmann::ordered_json to_json(const Manifest& m);

// Writes dataset.jsonl and manifest.json under `root`. Throws NotFoundError if
// any record's image is missing under `root`.
Manifest export_dataset(std::span<const InstructionRecord> records, const std::filesystem::path& root,
                        std::string created_at);

// Reads root/dataset.jsonl. Throws ParseError with the line number for a
// malformed line and NotFoundError for a missing image.
std::vector<InstructionRecord> import_dataset(const std::filesystem::path& root);

// Seeded shuffle split; the first part holds round(ratio * size) records.
std::pair<std::vector<InstructionRecord>, std::vector<InstructionRecord>> split_records(
    std::vector<InstructionRecord> records, double ratio, std::uint64_t seed);

// Timestamp honoring SOURCE_DATE_EPOCH so repeated builds can be identical.
std::string build_timestamp();

}  // namespace tmon

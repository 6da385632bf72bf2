#pragma once

// Parsing of free-text responses and scoring against ground-truth frames.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tmon/camera.hpp"
#include "tmon/grounding.hpp"

namespace tmon {

struct Mention {
  EntityKind kind = EntityKind::kVehicle;
  // located == false: no location was stated. located with no alias: the
  // response placed the entity off the mapped area.
  bool located = false;
  std::optional<std::string> section_alias;
  std::optional<Direction> direction;

  bool operator==(const Mention&) const = default;
};

enum class ParseMode { kStrict, kLenient };

struct ParsedResponse {
  std::vector<Mention> mentions;  // textual order
  std::optional<bool> collision_claim;
  ParseMode mode = ParseMode::kStrict;

  std::vector<Mention> vehicles() const;
};

// Strict caption grammar first; lenient keyword scan if any sentence fails.
ParsedResponse parse_response(std::string_view text, const SectionMap& map);

// Strict pass alone. nullopt when any sentence is outside the grammar.
std::optional<ParsedResponse> parse_strict(std::string_view text, const SectionMap& map);
ParsedResponse parse_lenient(std::string_view text, const SectionMap& map);

// Mentions that describe the ground truth of `frame` exactly.
ParsedResponse expected_parse(const Frame& frame);

// Maximum-weight assignment of rows to columns (rows and columns may differ in
// count). Returns, per row, the assigned column or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weight);

struct VehicleMatch {
  std::string entity_id;
  int mention = -1;  // index into the parsed vehicle mentions
  bool location_correct = false;
  bool steering_correct = false;
};

struct FrameScore {
  std::string scenario_id;
  std::string camera_id;
  std::uint32_t tick = 0;
  std::size_t vehicles = 0;
  std::size_t location_correct = 0;
  std::size_t steering_correct = 0;
  std::size_t mentions = 0;
  bool collision_truth = false;
  std::optional<bool> collision_claim;
  bool collision_correct = false;
  ParseMode mode = ParseMode::kStrict;
  std::vector<VehicleMatch> matches;  // one per ground-truth vehicle
  std::string response;
};

FrameScore score_frame(const ParsedResponse& parsed, const Frame& truth);

struct EvalReport {
  std::size_t frames_scored = 0;
  std::size_t vehicles = 0;
  std::size_t location_correct = 0;
  std::size_t steering_correct = 0;
  std::size_t collision_correct = 0;
  double location_accuracy = 0.0;
  double steering_accuracy = 0.0;
  double collision_accuracy = 0.0;
  std::vector<FrameScore> frames;
};

// Micro-averaged. Throws ValidationError on empty input.
EvalReport aggregate(std::vector<FrameScore> frames);

nlohmann::ordered_json to_json(const FrameScore& f);
nlohmann::ordered_json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace tmon

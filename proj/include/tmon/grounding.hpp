#pragma once

// Alias grounding: per-camera named image regions, caption generation in the
// alias vocabulary, and substitution of aliases with real road names.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tmon/geometry.hpp"
#include "tmon/scene.hpp"

namespace tmon {

struct Frame;

struct Section {
  std::string alias;
  Polygon polygon;  // pixel coordinates
};

// List order is overlap precedence: the first containing section wins.
struct SectionMap {
  std::string camera_id;
  std::vector<Section> sections;

  std::vector<std::string> aliases() const;
};

struct AliasTable {
  std::string camera_id;
  std::map<std::string, std::string> entries;  // alias -> real name
};

// One camera's alias database file.
struct AliasDb {
  SectionMap map;
  AliasTable table;
};

AliasDb parse_alias_db(const nlohmann::json& j);
AliasDb load_alias_db(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const AliasDb& db);

std::optional<std::string> section_of(const SectionMap& map, Vec2 point);

// ---------------------------------------------------------------- captions

inline constexpr std::string_view kOffMap = "off the mapped area";
inline constexpr std::string_view kDefaultQuery = "Explain the vehicular activity.";

// Structured form of a caption. caption_frame renders describe_frame; the
// scripted responder perturbs a description before rendering it.
struct SceneDescription {
  struct Item {
    EntityKind kind = EntityKind::kVehicle;
    std::optional<std::string> alias;
    Direction direction = Direction::kStationary;
  };
  struct Collision {
    // 1-based vehicle numbers; 0 means the member is a pedestrian or was not
    // identified on screen.
    int vehicle_a = 0;
    int vehicle_b = 0;
    int pedestrians = 0;  // pedestrian members (0..2)
    std::optional<std::string> alias;
  };

  std::vector<Item> items;  // annotation order
  std::vector<Collision> collisions;
  bool collision_present = false;
};

SceneDescription describe_frame(const Frame& frame);
std::string render_caption(const SceneDescription& description);
std::string caption_frame(const Frame& frame);

// ---------------------------------------------------------------- substitution

// Case-insensitive, word-bounded, longest-match alias lookup.
class AliasMatcher {
 public:
  explicit AliasMatcher(std::vector<std::string> aliases);

  struct Match {
    std::size_t alias_index;
    std::size_t length;
  };

  // Longest alias matching at `pos`, which must itself be a word start.
  std::optional<Match> match_at(std::string_view text, std::size_t pos) const;
  const std::vector<std::string>& aliases() const { return aliases_; }

 private:
  std::vector<std::string> aliases_;
  std::vector<std::string> lowered_;
};

bool is_word_char(char c);
std::string ascii_lower(std::string_view s);

struct SubstitutionResult {
  std::string text;
  std::size_t replacements = 0;
  // "Section X"-shaped tokens that matched no registered alias.
  std::vector<std::string> unmatched_tokens;
};

SubstitutionResult substitute_aliases_detailed(std::string_view text, const AliasTable& table);

// Logs a warning per unmatched section-pattern token.
std::string substitute_aliases(std::string_view text, const AliasTable& table);

struct AliasViolation {
  enum class Kind { kMissingName, kDuplicateAlias, kNameCollision, kEmptyEntry, kDegeneratePolygon };
  Kind kind;
  std::string alias;
  std::string detail;
};

std::string_view to_string(AliasViolation::Kind k);

// Empty result means the pair is consistent.
std::vector<AliasViolation> validate_alias_table(const SectionMap& map, const AliasTable& table);

}  // namespace tmon

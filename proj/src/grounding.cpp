#include "tmon/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "json_util.hpp"
#include "tmon/camera.hpp"
#include "tmon/error.hpp"

namespace tmon {

std::vector<std::string> SectionMap::aliases() const {
  std::vector<std::string> out;
  out.reserve(sections.size());
  for (const Section& s : sections) out.push_back(s.alias);
  return out;
}

AliasDb parse_alias_db(const nlohmann::json& j) {
  AliasDb db;
  db.map.camera_id = detail::field<std::string>(j, "camera_id", "");
  db.table.camera_id = db.map.camera_id;
  const auto& sections = detail::require(j, "sections", "");
  if (!sections.is_array()) throw ParseError("sections: expected array");
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const std::string at = detail::index_path("sections", i);
    db.map.sections.push_back({detail::field<std::string>(sections[i], "alias", at),
                               detail::as_polygon(detail::require(sections[i], "polygon", at), at + ".polygon")});
  }
  const auto& names = detail::require(j, "names", "");
  if (!names.is_object()) throw ParseError("names: expected object");
  for (const auto& [alias, name] : names.items()) {
    db.table.entries[alias] = detail::as<std::string>(name, "names." + alias);
  }
  return db;
}

AliasDb load_alias_db(const std::filesystem::path& path) {
  return parse_alias_db(detail::read_json_file(path));
}

nlohmann::ordered_json to_json(const AliasDb& db) {
  nlohmann::ordered_json j;
  j["camera_id"] = db.map.camera_id;
  auto& sections = j["sections"] = nlohmann::ordered_json::array();
  for (const Section& s : db.map.sections) {
    sections.push_back({{"alias", s.alias}, {"polygon", detail::polygon_json(s.polygon)}});
  }
  auto& names = j["names"] = nlohmann::ordered_json::object();
  for (const auto& [alias, name] : db.table.entries) names[alias] = name;
  return j;
}

std::optional<std::string> section_of(const SectionMap& map, Vec2 point) {
  for (const Section& s : map.sections) {
    if (contains(s.polygon, point)) return s.alias;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- captions

SceneDescription describe_frame(const Frame& frame) {
  SceneDescription d;
  std::vector<int> vehicle_number(frame.annotations.size(), 0);
  int vehicles = 0;
  for (std::size_t i = 0; i < frame.annotations.size(); ++i) {
    const EntityAnnotation& a = frame.annotations[i];
    d.items.push_back({a.cls, a.section_alias, a.direction});
    if (a.cls == EntityKind::kVehicle) vehicle_number[i] = ++vehicles;
  }
  d.collision_present = frame.collision_present;
  if (!frame.collision_present) return d;

  for (const CollisionAnnotation& c : frame.collisions) {
    SceneDescription::Collision out;
    out.alias = c.section_alias;
    for (std::size_t idx : {c.a, c.b}) {
      if (vehicle_number[idx] == 0) {
        ++out.pedestrians;
      } else if (out.vehicle_a == 0) {
        out.vehicle_a = vehicle_number[idx];
      } else {
        out.vehicle_b = vehicle_number[idx];
      }
    }
    d.collisions.push_back(out);
  }
  if (d.collisions.empty()) {
    // A collided entity is on screen but its partner is not.
    SceneDescription::Collision generic;
    for (const EntityAnnotation& a : frame.annotations) {
      if (a.collided) {
        generic.alias = a.section_alias;
        break;
      }
    }
    d.collisions.push_back(generic);
  }
  return d;
}

namespace {

std::string location(const std::optional<std::string>& alias, std::string_view preposition) {
  if (!alias) return std::string(kOffMap);
  return std::string(preposition) + " " + *alias;
}

std::string collision_sentence(const SceneDescription::Collision& c) {
  std::string who;
  if (c.vehicle_a && c.vehicle_b) {
    who = " between vehicle " + std::to_string(c.vehicle_a) + " and vehicle " + std::to_string(c.vehicle_b);
  } else if (c.vehicle_a && c.pedestrians == 1) {
    who = " between vehicle " + std::to_string(c.vehicle_a) + " and a pedestrian";
  } else if (!c.vehicle_a && c.pedestrians == 2) {
    who = " between two pedestrians";
  }
  return "A collision has occurred" + who + " " + location(c.alias, "at") + ".";
}

}  // namespace

std::string render_caption(const SceneDescription& d) {
  std::vector<std::string> sentences;
  if (d.items.empty()) sentences.emplace_back("No vehicles or pedestrians are present.");
  int vehicle = 0;
  for (const auto& item : d.items) {
    const bool stationary = item.direction == Direction::kStationary;
    if (item.kind == EntityKind::kVehicle) {
      const std::string subject = "Vehicle " + std::to_string(++vehicle) + " is ";
      if (stationary) {
        sentences.push_back(subject + "stationary " + location(item.alias, "on") + ".");
      } else {
        sentences.push_back(subject + location(item.alias, "on") + " moving " +
                            std::string(to_string(item.direction)) + ".");
      }
    } else {
      sentences.push_back(std::string("A pedestrian is ") + (stationary ? "stationary " : "") +
                          location(item.alias, "on") + ".");
    }
  }
  if (d.collision_present) {
    for (const auto& c : d.collisions) sentences.push_back(collision_sentence(c));
  } else {
    sentences.emplace_back("No collision is observed.");
  }
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string caption_frame(const Frame& frame) { return render_caption(describe_frame(frame)); }

// ---------------------------------------------------------------- matching

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

AliasMatcher::AliasMatcher(std::vector<std::string> aliases) : aliases_(std::move(aliases)) {
  // Longest first so the first hit is the longest match.
  std::stable_sort(aliases_.begin(), aliases_.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  for (const auto& a : aliases_) lowered_.push_back(ascii_lower(a));
}

std::optional<AliasMatcher::Match> AliasMatcher::match_at(std::string_view text, std::size_t pos) const {
  for (std::size_t i = 0; i < lowered_.size(); ++i) {
    const std::string& alias = lowered_[i];
    if (alias.empty() || text.size() - pos < alias.size()) continue;
    if (is_word_char(alias.front()) && pos > 0 && is_word_char(text[pos - 1])) continue;
    bool same = true;
    for (std::size_t k = 0; k < alias.size() && same; ++k) {
      same = std::tolower(static_cast<unsigned char>(text[pos + k])) == alias[k];
    }
    if (!same) continue;
    const std::size_t end = pos + alias.size();
    if (is_word_char(alias.back()) && end < text.size() && is_word_char(text[end])) continue;
    return Match{i, alias.size()};
  }
  return std::nullopt;
}

namespace {

std::vector<std::string> table_aliases(const AliasTable& table) {
  std::vector<std::string> out;
  for (const auto& [alias, name] : table.entries) out.push_back(alias);
  return out;
}

}  // namespace

SubstitutionResult substitute_aliases_detailed(std::string_view text, const AliasTable& table) {
  const AliasMatcher matcher(table_aliases(table));
  SubstitutionResult result;
  std::vector<std::pair<std::size_t, std::size_t>> replaced;
  std::size_t i = 0;
  while (i < text.size()) {
    if (const auto m = matcher.match_at(text, i)) {
      result.text += table.entries.at(matcher.aliases()[m->alias_index]);
      replaced.emplace_back(i, i + m->length);
      ++result.replacements;
      i += m->length;
    } else {
      result.text += text[i++];
    }
  }

  static const std::regex kSectionToken(R"(\bsection\s+[a-z0-9]+\b)", std::regex::icase);
  const std::string source(text);
  for (auto it = std::sregex_iterator(source.begin(), source.end(), kSectionToken); it != std::sregex_iterator();
       ++it) {
    const auto start = static_cast<std::size_t>(it->position());
    const bool covered = std::any_of(replaced.begin(), replaced.end(),
                                     [&](const auto& span) { return start >= span.first && start < span.second; });
    if (!covered) result.unmatched_tokens.push_back(it->str());
  }
  return result;
}

std::string substitute_aliases(std::string_view text, const AliasTable& table) {
  auto result = substitute_aliases_detailed(text, table);
  for (const auto& token : result.unmatched_tokens) {
    spdlog::warn("camera {}: no alias registered for '{}'", table.camera_id, token);
  }
  return std::move(result.text);
}

// ---------------------------------------------------------------- validation

std::string_view to_string(AliasViolation::Kind k) {
  switch (k) {
    case AliasViolation::Kind::kMissingName: return "missing-name";
    case AliasViolation::Kind::kDuplicateAlias: return "duplicate-alias";
    case AliasViolation::Kind::kNameCollision: return "name-collision";
    case AliasViolation::Kind::kEmptyEntry: return "empty-entry";
    case AliasViolation::Kind::kDegeneratePolygon: return "degenerate-polygon";
  }
  return "unknown";
}

std::vector<AliasViolation> validate_alias_table(const SectionMap& map, const AliasTable& table) {
  using Kind = AliasViolation::Kind;
  std::vector<AliasViolation> out;

  std::set<std::string> seen;
  for (const Section& s : map.sections) {
    if (s.alias.empty()) {
      out.push_back({Kind::kEmptyEntry, s.alias, "section alias is empty"});
      continue;
    }
    if (!seen.insert(ascii_lower(s.alias)).second) {
      out.push_back({Kind::kDuplicateAlias, s.alias, "alias appears more than once in the section map"});
    }
    if (s.polygon.size() < 3 || signed_area(s.polygon) == 0.0) {
      out.push_back({Kind::kDegeneratePolygon, s.alias, "polygon needs >= 3 non-collinear vertices"});
    }
    if (!table.entries.contains(s.alias)) {
      out.push_back({Kind::kMissingName, s.alias, "no real name registered"});
    }
  }

  std::vector<std::string> registered = table_aliases(table);
  for (const Section& s : map.sections) {
    if (!table.entries.contains(s.alias)) registered.push_back(s.alias);
  }
  const AliasMatcher matcher(registered);
  for (const auto& [alias, name] : table.entries) {
    if (alias.empty() || name.empty()) {
      out.push_back({Kind::kEmptyEntry, alias, "alias and real name must be non-empty"});
      continue;
    }
    for (std::size_t pos = 0; pos < name.size(); ++pos) {
      if (const auto m = matcher.match_at(name, pos)) {
        out.push_back({Kind::kNameCollision, matcher.aliases()[m->alias_index],
                       "real name '" + name + "' (for '" + alias + "') contains a registered alias"});
        break;
      }
    }
  }
  return out;
}

}  // namespace tmon

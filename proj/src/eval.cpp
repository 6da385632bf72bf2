#include "tmon/eval.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <regex>

#include "json_util.hpp"
#include "tmon/error.hpp"

namespace tmon {

std::vector<Mention> ParsedResponse::vehicles() const {
  std::vector<Mention> out;
  for (const auto& m : mentions) {
    if (m.kind == EntityKind::kVehicle) out.push_back(m);
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Sentences end at '.' followed by a space or the end of text.
std::optional<std::vector<std::string>> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '.') continue;
    if (i + 1 == text.size()) {
      out.emplace_back(text.substr(start, i - start));
      start = text.size();
    } else if (text[i + 1] == ' ') {
      out.emplace_back(text.substr(start, i - start));
      start = i + 2;
    }
  }
  if (start != text.size()) return std::nullopt;
  return out;
}

const std::string& direction_pattern() {
  static const std::string p =
      "(rightward|upper-right|upward|upper-left|leftward|lower-left|downward|lower-right)";
  return p;
}

}  // namespace

std::optional<ParsedResponse> parse_strict(std::string_view text, const SectionMap& map) {
  static const std::regex kVehicleMoving("^Vehicle ([1-9][0-9]*) is (on (.+)|off the mapped area) moving " +
                                         direction_pattern() + "$");
  static const std::regex kVehicleStopped("^Vehicle ([1-9][0-9]*) is stationary (on (.+)|off the mapped area)$");
  static const std::regex kPedestrian("^A pedestrian is (stationary )?(on (.+)|off the mapped area)$");
  static const std::regex kCollision(
      "^A collision has occurred( between (vehicle [1-9][0-9]* and vehicle [1-9][0-9]*|vehicle [1-9][0-9]* and a "
      "pedestrian|two pedestrians))? (at (.+)|off the mapped area)$");

  const auto sentences = split_sentences(trim(text));
  if (!sentences || sentences->empty()) return std::nullopt;
  const std::vector<std::string> aliases = map.aliases();
  const auto registered = [&](const std::string& a) {
    return std::find(aliases.begin(), aliases.end(), a) != aliases.end();
  };
  const auto location = [&](const std::ssub_match& whole, const std::ssub_match& alias,
                            Mention& m) -> bool {
    m.located = true;
    if (whole.str().rfind("on ", 0) == 0 || whole.str().rfind("at ", 0) == 0) {
      if (!registered(alias.str())) return false;
      m.section_alias = alias.str();
    }
    return true;
  };

  ParsedResponse out;
  out.mode = ParseMode::kStrict;
  int vehicles = 0;
  bool empty_scene = false;
  bool saw_positive = false;
  bool saw_negative = false;
  for (const std::string& s : *sentences) {
    std::smatch m;
    Mention mention;
    if (s == "No vehicles or pedestrians are present") {
      if (empty_scene || !out.mentions.empty()) return std::nullopt;
      empty_scene = true;
    } else if (s == "No collision is observed") {
      if (saw_negative || saw_positive) return std::nullopt;
      saw_negative = true;
    } else if (std::regex_match(s, m, kVehicleMoving)) {
      if (std::stoi(m[1].str()) != ++vehicles || !location(m[2], m[3], mention)) return std::nullopt;
      mention.direction = parse_direction(m[4].str());
      out.mentions.push_back(mention);
    } else if (std::regex_match(s, m, kVehicleStopped)) {
      if (std::stoi(m[1].str()) != ++vehicles || !location(m[2], m[3], mention)) return std::nullopt;
      mention.direction = Direction::kStationary;
      out.mentions.push_back(mention);
    } else if (std::regex_match(s, m, kPedestrian)) {
      mention.kind = EntityKind::kPedestrian;
      if (!location(m[2], m[3], mention)) return std::nullopt;
      if (m[1].matched) mention.direction = Direction::kStationary;
      out.mentions.push_back(mention);
    } else if (std::regex_match(s, m, kCollision)) {
      if (saw_negative) return std::nullopt;
      Mention where;
      if (!location(m[3], m[4], where)) return std::nullopt;
      saw_positive = true;
    } else {
      return std::nullopt;
    }
    if (empty_scene && !out.mentions.empty()) return std::nullopt;
  }
  if (saw_positive) out.collision_claim = true;
  if (saw_negative) out.collision_claim = false;
  return out;
}

// ---------------------------------------------------------------- lenient

namespace {

struct Token {
  std::string word;  // lower case
  std::size_t begin = 0;
  std::size_t end = 0;
};

bool token_char(char c) { return is_word_char(c) || c == '-' || c == '\''; }

std::vector<Token> tokenize(const std::string& lowered, std::size_t from, std::size_t to) {
  std::vector<Token> out;
  std::size_t i = from;
  while (i < to) {
    if (!token_char(lowered[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < to && token_char(lowered[j])) ++j;
    out.push_back({lowered.substr(i, j - i), i, j});
    i = j;
  }
  return out;
}

struct Synonym {
  std::string_view first;
  std::string_view second;  // empty for single words
  Direction direction;
};

const std::vector<Synonym>& synonyms() {
  static const std::vector<Synonym> table = {
      {"upper", "right", Direction::kUpperRight}, {"upper", "left", Direction::kUpperLeft},
      {"lower", "right", Direction::kLowerRight}, {"lower", "left", Direction::kLowerLeft},
      {"up", "right", Direction::kUpperRight},    {"up", "left", Direction::kUpperLeft},
      {"down", "right", Direction::kLowerRight},  {"down", "left", Direction::kLowerLeft},
      {"north", "east", Direction::kUpperRight},  {"north", "west", Direction::kUpperLeft},
      {"south", "east", Direction::kLowerRight},  {"south", "west", Direction::kLowerLeft},
      {"upper-right", "", Direction::kUpperRight}, {"up-right", "", Direction::kUpperRight},
      {"northeast", "", Direction::kUpperRight},  {"north-east", "", Direction::kUpperRight},
      {"upper-left", "", Direction::kUpperLeft},  {"up-left", "", Direction::kUpperLeft},
      {"northwest", "", Direction::kUpperLeft},   {"north-west", "", Direction::kUpperLeft},
      {"lower-right", "", Direction::kLowerRight}, {"down-right", "", Direction::kLowerRight},
      {"southeast", "", Direction::kLowerRight},  {"south-east", "", Direction::kLowerRight},
      {"lower-left", "", Direction::kLowerLeft},  {"down-left", "", Direction::kLowerLeft},
      {"southwest", "", Direction::kLowerLeft},   {"south-west", "", Direction::kLowerLeft},
      {"up", "", Direction::kUpward},             {"upward", "", Direction::kUpward},
      {"upwards", "", Direction::kUpward},        {"north", "", Direction::kUpward},
      {"northward", "", Direction::kUpward},      {"northbound", "", Direction::kUpward},
      {"down", "", Direction::kDownward},         {"downward", "", Direction::kDownward},
      {"downwards", "", Direction::kDownward},    {"south", "", Direction::kDownward},
      {"southward", "", Direction::kDownward},    {"southbound", "", Direction::kDownward},
      {"right", "", Direction::kRightward},       {"rightward", "", Direction::kRightward},
      {"rightwards", "", Direction::kRightward},  {"east", "", Direction::kRightward},
      {"eastward", "", Direction::kRightward},    {"eastbound", "", Direction::kRightward},
      {"left", "", Direction::kLeftward},         {"leftward", "", Direction::kLeftward},
      {"leftwards", "", Direction::kLeftward},    {"west", "", Direction::kLeftward},
      {"westward", "", Direction::kLeftward},     {"westbound", "", Direction::kLeftward},
      {"stationary", "", Direction::kStationary}, {"stopped", "", Direction::kStationary},
      {"parked", "", Direction::kStationary},     {"idle", "", Direction::kStationary},
      {"still", "", Direction::kStationary},
  };
  return table;
}

std::optional<EntityKind> introducer(std::string_view w) {
  if (w == "vehicle" || w == "car" || w == "qcar" || w == "truck") return EntityKind::kVehicle;
  if (w == "pedestrian" || w == "person") return EntityKind::kPedestrian;
  return std::nullopt;
}

bool collision_stem(std::string_view w) {
  return w.rfind("collision", 0) == 0 || w.rfind("collid", 0) == 0 || w.rfind("crash", 0) == 0;
}

bool negation(std::string_view w) {
  static constexpr std::array<std::string_view, 6> kWords{"no", "not", "without", "never", "none", "nothing"};
  if (std::find(kWords.begin(), kWords.end(), w) != kWords.end()) return true;
  return w.size() > 3 && w.substr(w.size() - 3) == "n't";
}

struct Span {
  std::size_t begin;
  std::size_t end;
  std::optional<std::string> alias;  // nullopt marks an explicit off-map phrase
};

}  // namespace

ParsedResponse parse_lenient(std::string_view text, const SectionMap& map) {
  ParsedResponse out;
  out.mode = ParseMode::kLenient;
  const std::string lowered = ascii_lower(text);
  const AliasMatcher matcher(map.aliases());
  const AliasMatcher off_map({std::string(kOffMap), "off the map", "outside the mapped area"});

  bool positive = false;
  bool negative = false;
  std::size_t start = 0;
  while (start < lowered.size()) {
    std::size_t stop = lowered.find_first_of(".!?;\n", start);
    if (stop == std::string::npos) stop = lowered.size();

    std::vector<Span> spans;
    for (std::size_t i = start; i < stop;) {
      if (i == start || !is_word_char(lowered[i - 1])) {
        if (const auto m = matcher.match_at(std::string_view(lowered).substr(0, stop), i)) {
          spans.push_back({i, i + m->length, matcher.aliases()[m->alias_index]});
          i += m->length;
          continue;
        }
        if (const auto m = off_map.match_at(std::string_view(lowered).substr(0, stop), i)) {
          spans.push_back({i, i + m->length, std::nullopt});
          i += m->length;
          continue;
        }
      }
      ++i;
    }
    std::vector<Token> tokens;
    for (Token& t : tokenize(lowered, start, stop)) {
      const bool inside = std::any_of(spans.begin(), spans.end(),
                                      [&](const Span& s) { return t.begin >= s.begin && t.begin < s.end; });
      if (!inside) tokens.push_back(std::move(t));
    }

    bool collision_sentence = false;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (!collision_stem(tokens[k].word)) continue;
      collision_sentence = true;
      const bool negated = std::any_of(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(k),
                                       [](const Token& t) { return negation(t.word); });
      (negated ? negative : positive) = true;
    }

    if (!collision_sentence) {
      std::vector<std::size_t> intro;
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (introducer(tokens[k].word)) intro.push_back(k);
      }
      // "a parked car": a stationary adjective right before the introducer
      // belongs to that entity, not the previous one.
      const auto leading_stationary = [&](std::size_t k) {
        if (k == 0 || introducer(tokens[k - 1].word)) return false;
        return std::any_of(synonyms().begin(), synonyms().end(), [&](const Synonym& syn) {
          return syn.second.empty() && syn.direction == Direction::kStationary && tokens[k - 1].word == syn.first;
        });
      };
      for (std::size_t n = 0; n < intro.size(); ++n) {
        const std::size_t first = intro[n];
        const std::size_t last = n + 1 < intro.size() ? intro[n + 1] : tokens.size();
        const std::size_t seg_begin = tokens[first].begin;
        const std::size_t seg_end = last < tokens.size() ? tokens[last].begin : stop;
        Mention m;
        m.kind = *introducer(tokens[first].word);
        for (const Span& s : spans) {
          if (s.begin >= seg_begin && s.begin < seg_end) {
            m.located = true;
            m.section_alias = s.alias;
            break;
          }
        }
        if (leading_stationary(first)) m.direction = Direction::kStationary;
        const std::size_t scan_end = last < tokens.size() && leading_stationary(last) ? last - 1 : last;
        for (std::size_t k = first + 1; k < scan_end && !m.direction; ++k) {
          for (const Synonym& syn : synonyms()) {
            if (tokens[k].word != syn.first) continue;
            if (!syn.second.empty()) {
              if (k + 1 >= scan_end || tokens[k + 1].word != syn.second) continue;
            }
            m.direction = syn.direction;
            break;
          }
        }
        out.mentions.push_back(std::move(m));
      }
    }
    start = stop + 1;
  }
  if (positive) {
    out.collision_claim = true;
  } else if (negative) {
    out.collision_claim = false;
  }
  return out;
}

ParsedResponse parse_response(std::string_view text, const SectionMap& map) {
  if (auto strict = parse_strict(text, map)) return std::move(*strict);
  return parse_lenient(text, map);
}

ParsedResponse expected_parse(const Frame& frame) {
  ParsedResponse out;
  for (const EntityAnnotation& a : frame.annotations) {
    Mention m;
    m.kind = a.cls;
    m.located = true;
    m.section_alias = a.section_alias;
    // Captions only say whether a pedestrian is stationary.
    if (a.cls == EntityKind::kVehicle || a.direction == Direction::kStationary) m.direction = a.direction;
    out.mentions.push_back(std::move(m));
  }
  out.collision_claim = frame.collision_present;
  return out;
}

// ---------------------------------------------------------------- scoring

std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weight) {
  const std::size_t rows = weight.size();
  const std::size_t cols = rows ? weight[0].size() : 0;
  std::vector<int> result(rows, -1);
  if (rows == 0 || cols == 0) return result;
  const bool transpose = rows > cols;
  const std::size_t n = transpose ? cols : rows;
  const std::size_t m = transpose ? rows : cols;
  const auto cost = [&](std::size_t i, std::size_t j) {
    return -(transpose ? weight[j][i] : weight[i][j]);
  };

  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(m + 1, 0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<long long> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      long long delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const long long cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    if (transpose) {
      result[j - 1] = static_cast<int>(p[j] - 1);
    } else {
      result[p[j] - 1] = static_cast<int>(j - 1);
    }
  }
  return result;
}

FrameScore score_frame(const ParsedResponse& parsed, const Frame& truth) {
  FrameScore score;
  score.scenario_id = truth.scenario_id;
  score.camera_id = truth.camera_id;
  score.tick = truth.tick;
  score.mode = parsed.mode;

  std::vector<const EntityAnnotation*> vehicles;
  for (const auto& a : truth.annotations) {
    if (a.cls == EntityKind::kVehicle) vehicles.push_back(&a);
  }
  const std::vector<Mention> mentions = parsed.vehicles();
  score.vehicles = vehicles.size();
  score.mentions = mentions.size();

  const auto loc_ok = [](const Mention& m, const EntityAnnotation& a) {
    return m.located && m.section_alias == a.section_alias;
  };
  const auto dir_ok = [](const Mention& m, const EntityAnnotation& a) {
    return m.direction && *m.direction == a.direction;
  };
  // Total field matches dominate; location matches break ties so the split
  // between the two counts does not depend on mention order.
  const long long scale = static_cast<long long>(std::min(vehicles.size(), mentions.size())) + 1;
  std::vector<std::vector<long long>> weight(vehicles.size(), std::vector<long long>(mentions.size()));
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    for (std::size_t j = 0; j < mentions.size(); ++j) {
      const long long loc = loc_ok(mentions[j], *vehicles[i]);
      const long long dir = dir_ok(mentions[j], *vehicles[i]);
      weight[i][j] = (loc + dir) * scale + loc;
    }
  }
  const std::vector<int> assignment = max_weight_assignment(weight);
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    VehicleMatch vm;
    vm.entity_id = vehicles[i]->entity_id;
    const int j = assignment[i];
    if (j >= 0 && weight[i][static_cast<std::size_t>(j)] > 0) {
      vm.mention = j;
      vm.location_correct = loc_ok(mentions[static_cast<std::size_t>(j)], *vehicles[i]);
      vm.steering_correct = dir_ok(mentions[static_cast<std::size_t>(j)], *vehicles[i]);
    }
    score.location_correct += vm.location_correct;
    score.steering_correct += vm.steering_correct;
    score.matches.push_back(std::move(vm));
  }

  score.collision_truth = truth.collision_present;
  score.collision_claim = parsed.collision_claim;
  score.collision_correct = parsed.collision_claim && *parsed.collision_claim == truth.collision_present;
  return score;
}

EvalReport aggregate(std::vector<FrameScore> frames) {
  if (frames.empty()) throw ValidationError("frames", "no frames to aggregate");
  EvalReport r;
  r.frames_scored = frames.size();
  for (const auto& f : frames) {
    r.vehicles += f.vehicles;
    r.location_correct += f.location_correct;
    r.steering_correct += f.steering_correct;
    r.collision_correct += f.collision_correct;
  }
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.location_accuracy = ratio(r.location_correct, r.vehicles);
  r.steering_accuracy = ratio(r.steering_correct, r.vehicles);
  r.collision_accuracy = ratio(r.collision_correct, r.frames_scored);
  r.frames = std::move(frames);
  return r;
}

// ---------------------------------------------------------------- json

namespace {

std::string_view mode_name(ParseMode m) { return m == ParseMode::kStrict ? "strict" : "lenient"; }

nlohmann::ordered_json optional_bool(const std::optional<bool>& b) {
  return b ? nlohmann::ordered_json(*b) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const FrameScore& f) {
  nlohmann::ordered_json matches = nlohmann::ordered_json::array();
  for (const auto& m : f.matches) {
    matches.push_back({{"entity_id", m.entity_id},
                       {"mention", m.mention},
                       {"location_correct", m.location_correct},
                       {"steering_correct", m.steering_correct}});
  }
  return {{"scenario_id", f.scenario_id},
          {"camera_id", f.camera_id},
          {"tick", f.tick},
          {"parse_mode", mode_name(f.mode)},
          {"vehicles", f.vehicles},
          {"mentions", f.mentions},
          {"location_correct", f.location_correct},
          {"steering_correct", f.steering_correct},
          {"collision_truth", f.collision_truth},
          {"collision_claim", optional_bool(f.collision_claim)},
          {"collision_correct", f.collision_correct},
          {"matches", std::move(matches)},
          {"response", f.response}};
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (const auto& f : r.frames) frames.push_back(to_json(f));
  return {{"frames_scored", r.frames_scored},
          {"vehicles", r.vehicles},
          {"location_correct", r.location_correct},
          {"steering_correct", r.steering_correct},
          {"collision_correct", r.collision_correct},
          {"location_accuracy", r.location_accuracy},
          {"steering_accuracy", r.steering_accuracy},
          {"collision_accuracy", r.collision_accuracy},
          {"frames", std::move(frames)}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  using detail::field;
  EvalReport r;
  r.frames_scored = field<std::size_t>(j, "frames_scored", "");
  r.vehicles = field<std::size_t>(j, "vehicles", "");
  r.location_correct = field<std::size_t>(j, "location_correct", "");
  r.steering_correct = field<std::size_t>(j, "steering_correct", "");
  r.collision_correct = field<std::size_t>(j, "collision_correct", "");
  r.location_accuracy = field<double>(j, "location_accuracy", "");
  r.steering_accuracy = field<double>(j, "steering_accuracy", "");
  r.collision_accuracy = field<double>(j, "collision_accuracy", "");
  const auto& frames = detail::require(j, "frames", "");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& fj = frames[i];
    const std::string path = detail::index_path("frames", i);
    FrameScore f;
    f.scenario_id = field<std::string>(fj, "scenario_id", path);
    f.camera_id = field<std::string>(fj, "camera_id", path);
    f.tick = field<std::uint32_t>(fj, "tick", path);
    f.mode = field<std::string>(fj, "parse_mode", path) == "lenient" ? ParseMode::kLenient : ParseMode::kStrict;
    f.vehicles = field<std::size_t>(fj, "vehicles", path);
    f.mentions = field<std::size_t>(fj, "mentions", path);
    f.location_correct = field<std::size_t>(fj, "location_correct", path);
    f.steering_correct = field<std::size_t>(fj, "steering_correct", path);
    f.collision_truth = field<bool>(fj, "collision_truth", path);
    if (!fj.at("collision_claim").is_null()) f.collision_claim = fj.at("collision_claim").get<bool>();
    f.collision_correct = field<bool>(fj, "collision_correct", path);
    f.response = field<std::string>(fj, "response", path);
    const auto& matches = detail::require(fj, "matches", path);
    for (const auto& mj : matches) {
      f.matches.push_back({mj.at("entity_id").get<std::string>(), mj.at("mention").get<int>(),
                           mj.at("location_correct").get<bool>(), mj.at("steering_correct").get<bool>()});
    }
    r.frames.push_back(std::move(f));
  }
  return r;
}

}  // namespace tmon

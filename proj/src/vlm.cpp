#include "tmon/vlm.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "tmon/codec.hpp"
#include "tmon/error.hpp"
#include "tmon/rng.hpp"

namespace tmon {

std::string_view to_string(ResponderKind k) { return k == ResponderKind::kRemote ? "remote" : "oracle"; }

std::optional<ResponderKind> parse_responder(std::string_view s) {
  if (s == "remote") return ResponderKind::kRemote;
  if (s == "oracle") return ResponderKind::kOracle;
  return std::nullopt;
}

nlohmann::ordered_json to_json(const QueryResponse& r) {
  return {{"raw_text", r.raw_text},
          {"grounded_text", r.grounded_text},
          {"responder", to_string(r.responder)},
          {"latency_ms", r.latency_ms},
          {"retries", r.retries}};
}

std::chrono::milliseconds RetryPolicy::delay_before(int retry) const {
  auto d = base;
  for (int i = 1; i < retry; ++i) d *= factor;
  return d;
}

nlohmann::ordered_json chat_request(const QueryRequest& req) {
  return {{"prompt", req.prompt},
          {"image_b64", req.image ? base64_encode(encode_ppm(*req.image)) : std::string()},
          {"camera_id", req.camera_id},
          {"tick", req.tick}};
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

QueryResponse query_remote(const QueryRequest& req, const AliasTable& table, const std::string& endpoint,
                           std::chrono::milliseconds timeout, const RetryPolicy& policy) {
  if (req.prompt.empty()) throw ValidationError("prompt", "must be non-empty");
  const std::string body = chat_request(req).dump();
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    try {
      const HttpReply reply = post_json(endpoint, "/v1/chat", body, timeout);
      if (reply.status != 200) {
        throw TransportError(endpoint, "HTTP " + std::to_string(reply.status), reply.status);
      }
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(reply.body);
      } catch (const nlohmann::json::parse_error&) {
        throw MalformedResponseError(endpoint, "reply is not JSON");
      }
      if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        throw MalformedResponseError(endpoint, "reply lacks a string 'text' field");
      }
      QueryResponse out;
      out.raw_text = j["text"].get<std::string>();
      out.grounded_text = substitute_aliases(out.raw_text, table);
      out.responder = ResponderKind::kRemote;
      out.retries = attempt;
      out.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      return out;
    } catch (const TransportError& e) {
      if (e.status() != 0 && !retryable_status(e.status())) throw;
      if (attempt >= policy.retries) throw;
      spdlog::debug("{}: attempt {} failed ({}), retrying", endpoint, attempt + 1, e.what());
    } catch (const TimeoutError&) {
      if (attempt >= policy.retries) throw;
    }
    const auto delay = policy.delay_before(attempt + 1);
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
}

// ---------------------------------------------------------------- oracle

namespace {

constexpr std::array<Direction, 8> kMovingDirections{
    Direction::kRightward, Direction::kUpperRight, Direction::kUpward,    Direction::kUpperLeft,
    Direction::kLeftward,  Direction::kLowerLeft,  Direction::kDownward, Direction::kLowerRight};

}  // namespace

QueryResponse oracle_respond(const QueryRequest& req, const Frame& truth, const CameraConfig& camera,
                             const ErrorRates& errors, std::uint64_t seed, OracleTrace* trace) {
  const auto start = std::chrono::steady_clock::now();
  OracleTrace local;
  OracleTrace& t = trace ? *trace : local;
  Rng rng(SeedMixer(seed).mix(truth.scenario_id).mix(req.camera_id).mix(req.tick).value());
  const std::vector<std::string> aliases = camera.sections ? camera.sections->aliases() : std::vector<std::string>{};

  SceneDescription d = describe_frame(truth);
  int vehicle = 0;
  for (auto& item : d.items) {
    if (item.kind != EntityKind::kVehicle) continue;
    ++vehicle;
    // Both draws happen for every vehicle so one knob never shifts the
    // random stream seen by the other.
    const bool corrupt_loc = rng.bernoulli(errors.p_loc);
    const double loc_pick = rng.uniform();
    const bool corrupt_dir = rng.bernoulli(errors.p_dir);
    const double dir_pick = rng.uniform();
    if (corrupt_loc) {
      std::vector<std::string> others;
      for (const auto& a : aliases) {
        if (!item.alias || a != *item.alias) others.push_back(a);
      }
      if (others.empty()) {
        t.events.push_back("vehicle " + std::to_string(vehicle) + ": no alternative alias");
        spdlog::info("oracle {}@{}: vehicle {} location corruption skipped, no alternative alias", req.camera_id,
                     req.tick, vehicle);
      } else {
        item.alias = others[std::min(others.size() - 1, static_cast<std::size_t>(loc_pick * others.size()))];
        ++t.location_corruptions;
      }
    }
    if (corrupt_dir) {
      std::vector<Direction> others;
      for (Direction dir : kMovingDirections) {
        if (dir != item.direction) others.push_back(dir);
      }
      item.direction = others[std::min(others.size() - 1, static_cast<std::size_t>(dir_pick * others.size()))];
      ++t.direction_corruptions;
    }
  }
  if (rng.bernoulli(errors.p_col)) {
    t.collision_flipped = true;
    if (d.collision_present) {
      d.collision_present = false;
      d.collisions.clear();
    } else {
      d.collision_present = true;
      SceneDescription::Collision c;
      if (vehicle >= 2) {
        c.vehicle_a = 1;
        c.vehicle_b = 2;
      }
      for (const auto& item : d.items) {
        if (item.kind == EntityKind::kVehicle) {
          c.alias = item.alias;
          break;
        }
      }
      d.collisions.push_back(c);
    }
  }

  QueryResponse out;
  out.raw_text = render_caption(d);
  out.grounded_text = camera.aliases ? substitute_aliases(out.raw_text, *camera.aliases) : out.raw_text;
  out.responder = ResponderKind::kOracle;
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------- gateway

VlmGateway::VlmGateway(std::vector<CameraConfig> cameras, Options options)
    : options_(std::move(options)), limiter_(std::make_unique<InFlightLimiter>(options_.max_in_flight)) {
  for (auto& c : cameras) cameras_.emplace(c.id, std::move(c));
}

CameraConfig VlmGateway::camera(const std::string& camera_id) const {
  std::lock_guard lock(mutex_);
  const auto it = cameras_.find(camera_id);
  if (it == cameras_.end()) throw NotFoundError("unknown camera '" + camera_id + "'");
  return it->second;
}

std::vector<CameraConfig> VlmGateway::cameras() const {
  std::lock_guard lock(mutex_);
  std::vector<CameraConfig> out;
  for (const auto& [id, c] : cameras_) out.push_back(c);
  return out;
}

void VlmGateway::replace_alias_db(const std::string& camera_id, std::shared_ptr<const SectionMap> map,
                                  std::shared_ptr<const AliasTable> table) {
  std::lock_guard lock(mutex_);
  const auto it = cameras_.find(camera_id);
  if (it == cameras_.end()) throw NotFoundError("unknown camera '" + camera_id + "'");
  it->second.sections = std::move(map);
  it->second.aliases = std::move(table);
}

QueryResponse VlmGateway::query(const QueryRequest& req, ResponderKind responder, const Frame* truth,
                                const ErrorRates& errors, std::uint64_t seed) {
  const CameraConfig cam = camera(req.camera_id);
  if (req.prompt.empty()) throw ValidationError("prompt", "must be non-empty");
  if (responder == ResponderKind::kOracle) {
    if (!truth) throw Error("oracle responder needs the ground-truth frame");
    return oracle_respond(req, *truth, cam, errors, seed);
  }
  if (!options_.endpoint) throw Error("no vlm endpoint configured");
  auto slot = limiter_->acquire();
  const AliasTable empty{req.camera_id, {}};
  return query_remote(req, cam.aliases ? *cam.aliases : empty, *options_.endpoint, options_.timeout,
                      options_.retry);
}

}  // namespace tmon

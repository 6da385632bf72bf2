#pragma once

// Access to a multimodal-LLM responder: a remote inference endpoint or a
// scripted oracle that emits ground-truth captions with injected errors.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmon/camera.hpp"
#include "tmon/remote.hpp"

namespace tmon {

// Independent per-field corruption probabilities for the oracle responder.
struct ErrorRates {
  double p_loc = 0.0;
  double p_dir = 0.0;
  double p_col = 0.0;
};

enum class ResponderKind { kRemote, kOracle };

std::string_view to_string(ResponderKind k);
std::optional<ResponderKind> parse_responder(std::string_view s);

struct QueryRequest {
  std::string camera_id;
  std::uint32_t tick = 0;
  std::string prompt;
  const Frame* image = nullptr;  // highlighted frame sent to the model
};

struct QueryResponse {
  std::string raw_text;       // alias vocabulary
  std::string grounded_text;  // aliases replaced with real names
  ResponderKind responder = ResponderKind::kOracle;
  double latency_ms = 0.0;
  int retries = 0;
};

nlohmann::ordered_json to_json(const QueryResponse& r);

// Transport-failure retry schedule: delay before retry k (1-based) is
// base * factor^(k-1), no jitter.
struct RetryPolicy {
  int retries = 2;
  std::chrono::milliseconds base{100};
  int factor = 2;
  // Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

  std::chrono::milliseconds delay_before(int retry) const;
};

// Body for POST /v1/chat: {prompt, image_b64, camera_id, tick}. The image is
// the base64 of the highlighted frame encoded as binary PPM.
nlohmann::ordered_json chat_request(const QueryRequest& req);

// Throws TimeoutError / TransportError once retries are exhausted and
// MalformedResponseError (never retried) when the reply lacks "text".
QueryResponse query_remote(const QueryRequest& req, const AliasTable& table, const std::string& endpoint,
                           std::chrono::milliseconds timeout, const RetryPolicy& policy);

struct OracleTrace {
  int location_corruptions = 0;
  int direction_corruptions = 0;
  bool collision_flipped = false;
  std::vector<std::string> events;  // e.g. corruption requested with no legal substitute
};

// Precondition: truth is the un-highlighted frame for (req.camera_id, req.tick).
QueryResponse oracle_respond(const QueryRequest& req, const Frame& truth, const CameraConfig& camera,
                             const ErrorRates& errors, std::uint64_t seed, OracleTrace* trace = nullptr);

// Shareable front door over both responders for a set of cameras.
class VlmGateway {
 public:
  struct Options {
    std::optional<std::string> endpoint;
    std::chrono::milliseconds timeout{5000};
    RetryPolicy retry;
    int max_in_flight = 4;
  };

  VlmGateway(std::vector<CameraConfig> cameras, Options options);

  // `truth` is required for the oracle responder. Throws NotFoundError for an
  // unknown camera and Error when the remote responder has no endpoint.
  QueryResponse query(const QueryRequest& req, ResponderKind responder, const Frame* truth,
                      const ErrorRates& errors, std::uint64_t seed);

  // Swaps a camera's section map and alias table together; readers holding
  // the old pair keep it.
  void replace_alias_db(const std::string& camera_id, std::shared_ptr<const SectionMap> map,
                        std::shared_ptr<const AliasTable> table);
  // Consistent copy of the camera's current configuration.
  CameraConfig camera(const std::string& camera_id) const;
  std::vector<CameraConfig> cameras() const;

 private:
  std::map<std::string, CameraConfig> cameras_;
  Options options_;
  std::unique_ptr<InFlightLimiter> limiter_;
  mutable std::mutex mutex_;
};

}  // namespace tmon

#pragma once

// End-to-end pipeline: scenarios -> frames -> highlighted images -> records,
// and responder evaluation over the same frames.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tmon/artifacts.hpp"
#include "tmon/camera.hpp"
#include "tmon/dataset.hpp"
#include "tmon/eval.hpp"
#include "tmon/perception.hpp"
#include "tmon/scene.hpp"
#include "tmon/vlm.hpp"

namespace tmon {

// Every captured frame of one scenario, camera by camera in the given order.
std::vector<Frame> render_scenario(const ScenarioConfig& scenario, const std::vector<CameraConfig>& cameras);

Frame highlight_frame(const CameraConfig& camera, const Frame& frame, Detector& detector);

// Raw frame as {prefix}{camera_id}/{tick:08}.ppm plus the .json sidecar.
void write_frame(ArtifactSink& sink, const std::string& prefix, const Frame& frame);

struct CorpusOptions {
  OracleCorruption detection;
  std::vector<std::string> queries = default_query_pool();
  bool write_frames = false;  // raw frames under frames/{scenario}/
  bool write_images = true;   // highlighted images referenced by records
  std::string created_at;
};

struct CorpusResult {
  std::vector<InstructionRecord> records;
  Manifest manifest;
  std::size_t frames = 0;
};

// Writes images/, dataset.jsonl and manifest.json into the sink.
CorpusResult build_corpus(const std::vector<ScenarioConfig>& scenarios, const std::vector<CameraConfig>& cameras,
                          const CorpusOptions& options, ArtifactSink& sink);

struct EvalOptions {
  ResponderKind responder = ResponderKind::kOracle;
  ErrorRates errors;
  std::uint64_t seed = 0;
  std::string prompt = std::string(kDefaultQuery);
  OracleCorruption detection;
};

// Highlight, query, parse and score one frame. `camera` supplies the section
// map used for parsing.
FrameScore evaluate_frame(const CameraConfig& camera, const Frame& frame, VlmGateway& gateway,
                          const EvalOptions& options, Detector& detector, QueryResponse* response = nullptr);

// Called once per scored frame with (frame, response); may be empty.
using FrameObserver = std::function<void(const Frame&, const QueryResponse&)>;

EvalReport evaluate_scenarios(const std::vector<ScenarioConfig>& scenarios, const std::vector<CameraConfig>& cameras,
                              VlmGateway& gateway, const EvalOptions& options, Detector& detector,
                              const FrameObserver& observer = {});

}  // namespace tmon

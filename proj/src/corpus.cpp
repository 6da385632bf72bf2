#include "tmon/corpus.hpp"

#include <spdlog/spdlog.h>

#include "tmon/error.hpp"

namespace tmon {

std::vector<Frame> render_scenario(const ScenarioConfig& scenario, const std::vector<CameraConfig>& cameras) {
  const std::vector<WorldState> run = run_scenario(scenario);
  std::vector<Frame> out;
  for (const CameraConfig& camera : cameras) {
    for (Frame& f : capture_stream(camera, run, scenario.id)) out.push_back(std::move(f));
  }
  return out;
}

Frame highlight_frame(const CameraConfig& camera, const Frame& frame, Detector& detector) {
  const std::vector<Detection> detections = detector.detect(frame);
  const std::vector<StaticHighlightRegion> regions = static_regions(camera, frame);
  return overlay_highlight(frame, detections, regions);
}

void write_frame(ArtifactSink& sink, const std::string& prefix, const Frame& frame) {
  const std::string stem = prefix + frame_stem(frame.camera_id, frame.tick);
  sink.write(stem + ".ppm", encode_ppm(frame));
  sink.write(stem + ".json", annotations_json(frame).dump(2) + "\n");
}

namespace {

const CameraConfig& camera_for(const std::vector<CameraConfig>& cameras, const std::string& id) {
  for (const auto& c : cameras) {
    if (c.id == id) return c;
  }
  throw NotFoundError("unknown camera '" + id + "'");
}

}  // namespace

CorpusResult build_corpus(const std::vector<ScenarioConfig>& scenarios, const std::vector<CameraConfig>& cameras,
                          const CorpusOptions& options, ArtifactSink& sink) {
  CorpusResult result;
  OracleDetector detector(options.detection);
  for (const ScenarioConfig& scenario : scenarios) {
    const std::vector<Frame> frames = render_scenario(scenario, cameras);
    for (const Frame& frame : frames) {
      const CameraConfig& camera = camera_for(cameras, frame.camera_id);
      const Frame highlighted = highlight_frame(camera, frame, detector);
      InstructionRecord record = build_record(frame, highlighted, pick_query(record_id(frame), options.queries));
      if (options.write_images) sink.write(record.image_path, encode_ppm(highlighted));
      if (options.write_frames) write_frame(sink, "frames/" + scenario.id + "/", frame);
      result.records.push_back(std::move(record));
      ++result.frames;
    }
    spdlog::debug("corpus: {} -> {} frames", scenario.id, frames.size());
  }
  result.manifest = make_manifest(result.records, options.created_at);
  sink.write("dataset.jsonl", dataset_jsonl(result.records));
  sink.write("manifest.json", to_json(result.manifest).dump(2) + "\n");
  return result;
}

FrameScore evaluate_frame(const CameraConfig& camera, const Frame& frame, VlmGateway& gateway,
                          const EvalOptions& options, Detector& detector, QueryResponse* response) {
  const Frame highlighted = highlight_frame(camera, frame, detector);
  const QueryRequest req{frame.camera_id, frame.tick, options.prompt, &highlighted};
  QueryResponse reply = gateway.query(req, options.responder, &frame, options.errors, options.seed);
  const SectionMap empty{frame.camera_id, {}};
  const ParsedResponse parsed = parse_response(reply.raw_text, camera.sections ? *camera.sections : empty);
  FrameScore score = score_frame(parsed, frame);
  score.response = reply.raw_text;
  if (response) *response = std::move(reply);
  return score;
}

EvalReport evaluate_scenarios(const std::vector<ScenarioConfig>& scenarios, const std::vector<CameraConfig>& cameras,
                              VlmGateway& gateway, const EvalOptions& options, Detector& detector,
                              const FrameObserver& observer) {
  std::vector<FrameScore> scores;
  for (const ScenarioConfig& scenario : scenarios) {
    for (const Frame& frame : render_scenario(scenario, cameras)) {
      QueryResponse response;
      scores.push_back(
          evaluate_frame(camera_for(cameras, frame.camera_id), frame, gateway, options, detector, &response));
      if (observer) observer(frame, response);
    }
  }
  return aggregate(std::move(scores));
}

}  // namespace tmon

#include "tmon/service.hpp"

#include <semaphore>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "json_util.hpp"
#include "tmon/corpus.hpp"
#include "tmon/store.hpp"

namespace tmon {

namespace {

using json = nlohmann::json;

constexpr const char* kJson = "application/json";
constexpr const char* kPpm = "image/x-portable-pixmap";

void send_json(httplib::Response& res, const nlohmann::ordered_json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
  nlohmann::ordered_json body{{"error", message}};
  if (!field.empty()) body["field"] = field;
  send_json(res, body, status);
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw ParseError("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request body: ") + e.what());
  }
}

ErrorRates parse_error_rates(const json& j) {
  ErrorRates e;
  if (!j.contains("error_rates") || j["error_rates"].is_null()) return e;
  const auto& r = j["error_rates"];
  e.p_loc = detail::field_or<double>(r, "p_loc", "error_rates", 0.0);
  e.p_dir = detail::field_or<double>(r, "p_dir", "error_rates", 0.0);
  e.p_col = detail::field_or<double>(r, "p_col", "error_rates", 0.0);
  for (auto [name, p] : {std::pair{"p_loc", e.p_loc}, {"p_dir", e.p_dir}, {"p_col", e.p_col}}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string("error_rates.") + name, "must be in [0, 1]");
  }
  return e;
}

ResponderKind parse_responder_field(const json& j) {
  const std::string name = detail::field_or<std::string>(j, "responder", "", "oracle");
  const auto kind = parse_responder(name);
  if (!kind) throw ValidationError("responder", "expected 'oracle' or 'remote', got '" + name + "'");
  return *kind;
}

std::uint32_t parse_tick(const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(text, &used);
    if (used != text.size() || v > 0xffffffffUL) throw std::out_of_range("tick");
    return static_cast<std::uint32_t>(v);
  } catch (const std::logic_error&) {
    throw ValidationError("tick", "expected an unsigned integer, got '" + text + "'");
  }
}

}  // namespace

struct Service::Impl {
  DeploymentConfig config;
  std::vector<ScenarioConfig> scenarios;
  RunStore store;
  VlmGateway gateway;
  std::unique_ptr<Detector> detector;
  httplib::Server server;

  std::counting_semaphore<64> job_slots;
  std::mutex jobs_mutex;
  std::vector<std::thread> jobs;

  Impl(DeploymentConfig cfg, std::vector<ScenarioConfig> sc)
      : config(std::move(cfg)),
        scenarios(std::move(sc)),
        store(config.store_root),
        gateway(config.cameras, gateway_options(config)),
        job_slots(std::min(config.limits.max_jobs, 64)) {
    if (config.endpoints.detector) {
      detector = std::make_unique<RemoteDetector>(*config.endpoints.detector, config.limits.timeout,
                                                  config.limits.max_in_flight);
    } else {
      detector = std::make_unique<OracleDetector>();
    }
    // httplib's default adds SO_REUSEPORT, which lets a second server share
    // an occupied port.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    load_alias_overrides();
    routes();
  }

  static VlmGateway::Options gateway_options(const DeploymentConfig& c) {
    VlmGateway::Options o;
    o.endpoint = c.endpoints.vlm;
    o.timeout = c.limits.timeout;
    o.retry.retries = c.limits.retries;
    o.max_in_flight = c.limits.max_in_flight;
    return o;
  }

  void load_alias_overrides() {
    for (const CameraConfig& c : config.cameras) {
      const auto path = store.alias_override_path(c.id);
      if (!std::filesystem::exists(path)) continue;
      AliasDb db = load_alias_db(path);
      install_alias_db(c.id, std::move(db));
      spdlog::info("camera {}: alias table loaded from {}", c.id, path.string());
    }
  }

  void install_alias_db(const std::string& camera_id, AliasDb db) {
    if (db.map.camera_id != camera_id) {
      throw ValidationError("camera_id", "body is for camera '" + db.map.camera_id + "', not '" + camera_id + "'");
    }
    const auto violations = validate_alias_table(db.map, db.table);
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw ValidationError("sections", std::string(to_string(v.kind)) + " '" + v.alias + "': " + v.detail);
    }
    gateway.replace_alias_db(camera_id, std::make_shared<const SectionMap>(std::move(db.map)),
                             std::make_shared<const AliasTable>(std::move(db.table)));
  }

  const ScenarioConfig& scenario(const std::string& id) const {
    if (id.empty()) {
      if (scenarios.empty()) throw NotFoundError("no scenarios loaded");
      return scenarios.front();
    }
    for (const auto& s : scenarios) {
      if (s.id == id) return s;
    }
    throw NotFoundError("unknown scenario '" + id + "'");
  }

  void guarded(const httplib::Request& req, httplib::Response& res,
               const std::function<void(const httplib::Request&, httplib::Response&)>& handler) {
    try {
      handler(req, res);
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what(), e.field_path());
    } catch (const ParseError& e) {
      send_error(res, 400, e.what());
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const TimeoutError& e) {
      send_error(res, 504, e.what());
    } catch (const RemoteError& e) {
      send_error(res, 502, e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, 500, e.what());
    }
  }

  template <typename F>
  httplib::Server::Handler wrap(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) { guarded(req, res, f); };
  }

  void routes() {
    server.Get("/cameras", wrap([this](const httplib::Request&, httplib::Response& res) {
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (const CameraConfig& c : config.cameras) out.push_back(camera_summary(gateway.camera(c.id)));
      send_json(res, out);
    }));

    server.Get("/cameras/:id/frame", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const CameraConfig camera = gateway.camera(req.path_params.at("id"));
      if (!req.has_param("tick")) throw ValidationError("tick", "query parameter is required");
      const std::uint32_t tick = parse_tick(req.get_param_value("tick"));
      const std::string overlay = req.has_param("overlay") ? req.get_param_value("overlay") : "false";
      if (overlay != "true" && overlay != "false") throw ValidationError("overlay", "expected true or false");
      const ScenarioConfig& sc = scenario(req.has_param("scenario") ? req.get_param_value("scenario") : "");
      const Frame frame = rasterize_frame(camera, state_at(sc, tick), sc.id);
      const std::string body =
          encode_ppm(overlay == "true" ? highlight_frame(camera, frame, *detector) : frame);
      res.set_content(body, kPpm);
    }));

    server.Get("/cameras/:id/aliases", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const CameraConfig camera = gateway.camera(req.path_params.at("id"));
      send_json(res, to_json(AliasDb{*camera.sections, *camera.aliases}));
    }));

    server.Put("/cameras/:id/aliases", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.path_params.at("id");
      gateway.camera(id);
      const json body = parse_body(req);
      for (const char* key : {"camera_id", "sections", "names"}) {
        if (!body.contains(key)) throw ValidationError(key, "full alias table required; partial updates are rejected");
      }
      AliasDb db = parse_alias_db(body);
      const auto text = to_json(db).dump(2) + "\n";
      install_alias_db(id, std::move(db));
      write_file_atomic(store.alias_override_path(id), text);
      const CameraConfig camera = gateway.camera(id);
      send_json(res, to_json(AliasDb{*camera.sections, *camera.aliases}));
    }));

    server.Post("/scenarios/:id/run", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const ScenarioConfig sc = scenario(req.path_params.at("id"));
      const RunInfo info = store.create(sc.id);
      start_job(info.id, sc);
      send_json(res, to_json(info), 202);
    }));

    server.Get("/runs/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto info = store.get(req.path_params.at("id"));
      if (!info) throw NotFoundError("unknown run '" + req.path_params.at("id") + "'");
      send_json(res, to_json(*info));
    }));

    server.Post("/query", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const std::string camera_id = detail::field<std::string>(body, "camera_id", "");
      const std::uint32_t tick = detail::field<std::uint32_t>(body, "tick", "");
      const std::string prompt = detail::field<std::string>(body, "prompt", "");
      if (prompt.empty()) throw ValidationError("prompt", "must be non-empty");
      const ResponderKind responder = parse_responder_field(body);
      const ErrorRates errors = parse_error_rates(body);
      const std::uint64_t seed = detail::field_or<std::uint64_t>(body, "seed", "", 0);
      const ScenarioConfig& sc = scenario(detail::field_or<std::string>(body, "scenario_id", "", ""));

      const CameraConfig camera = gateway.camera(camera_id);
      const Frame frame = rasterize_frame(camera, state_at(sc, tick), sc.id);
      const Frame highlighted = highlight_frame(camera, frame, *detector);
      const QueryRequest q{camera_id, tick, prompt, &highlighted};
      const QueryResponse r = gateway.query(q, responder, &frame, errors, seed);
      nlohmann::ordered_json out{{"camera_id", camera_id}, {"tick", tick}, {"scenario_id", sc.id}};
      const nlohmann::ordered_json fields = to_json(r);
      for (const auto& [k, v] : fields.items()) out[k] = v;
      send_json(res, out);
    }));

    server.Post("/eval", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const std::string run_id = detail::field<std::string>(body, "run_id", "");
      const auto info = store.get(run_id);
      if (!info) throw NotFoundError("unknown run '" + run_id + "'");
      if (info->status != RunStatus::kDone) {
        throw ValidationError("run_id", "run '" + run_id + "' is " + std::string(to_string(info->status)));
      }
      EvalOptions options;
      options.responder = parse_responder_field(body);
      options.errors = parse_error_rates(body);
      options.seed = detail::field_or<std::uint64_t>(body, "seed", "", 0);
      options.prompt = detail::field_or<std::string>(body, "prompt", "", std::string(kDefaultQuery));

      std::vector<FrameScore> scores;
      for (const Frame& frame : load_run_frames(store.run_dir(run_id))) {
        scores.push_back(evaluate_frame(gateway.camera(frame.camera_id), frame, gateway, options, *detector));
      }
      const EvalReport report = aggregate(std::move(scores));
      nlohmann::ordered_json doc = to_json(report);
      doc["run_id"] = run_id;
      doc["responder"] = to_string(options.responder);
      doc["error_rates"] = {{"p_loc", options.errors.p_loc}, {"p_dir", options.errors.p_dir},
                            {"p_col", options.errors.p_col}};
      doc["seed"] = options.seed;
      const std::string report_id = store.save_report(doc);
      send_json(res, {{"report_id", report_id},
                      {"frames_scored", report.frames_scored},
                      {"location_accuracy", report.location_accuracy},
                      {"steering_accuracy", report.steering_accuracy},
                      {"collision_accuracy", report.collision_accuracy}});
    }));

    server.Get("/reports/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(store.load_report(req.path_params.at("id")), kJson);
    }));
  }

  void start_job(const std::string& run_id, ScenarioConfig sc) {
    std::lock_guard lock(jobs_mutex);
    jobs.emplace_back([this, run_id, sc = std::move(sc)] {
      job_slots.acquire();
      try {
        store.mark_running(run_id);
        DirectorySink sink = store.staging_sink(run_id);
        sink.write("scenario.json", to_json(sc).dump(2) + "\n");
        for (const Frame& f : render_scenario(sc, gateway.cameras())) write_frame(sink, "frames/", f);
        store.commit(run_id);
        spdlog::info("run {} ({}) done", run_id, sc.id);
      } catch (const std::exception& e) {
        spdlog::error("run {} ({}) failed: {}", run_id, sc.id, e.what());
        try {
          store.fail(run_id, e.what());
        } catch (const std::exception& inner) {
          spdlog::error("run {}: cannot record failure: {}", run_id, inner.what());
        }
      }
      job_slots.release();
    });
  }

  void join_jobs() {
    std::vector<std::thread> pending;
    {
      std::lock_guard lock(jobs_mutex);
      pending.swap(jobs);
    }
    for (auto& t : pending) t.join();
  }
};

Service::Service(DeploymentConfig config, std::vector<ScenarioConfig> scenarios)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(scenarios))) {}

Service::~Service() {
  stop();
  wait_for_jobs();
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw BindError("cannot bind " + host + ":<any>");
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw BindError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::run() { impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
void Service::wait_for_jobs() { impl_->join_jobs(); }

}  // namespace tmon

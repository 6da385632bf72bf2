// tmon: batch and service entry point.
//
//   tmon simulate        run scenarios and write raw frames
//   tmon export-dataset  build highlighted images + dataset.jsonl + manifest
//   tmon evaluate        run a responder over frames and write an EvalReport
//   tmon serve           HTTP API
//   tmon validate        check alias tables and scenario files

#include <csignal>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tmon/artifacts.hpp"
#include "tmon/config.hpp"
#include "tmon/corpus.hpp"
#include "tmon/error.hpp"
#include "tmon/kernels.hpp"
#include "tmon/service.hpp"

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingInput = 3,
  kInvalid = 4,
  kRemote = 5,
  kBind = 6,
};

struct Common {
  std::string config = "config/demo.json";
  std::vector<std::string> scenarios;
  bool all = false;
  std::string log_level = "warn";
};

std::vector<tmon::ScenarioConfig> select_scenarios(const tmon::DeploymentConfig& cfg, const Common& c) {
  std::vector<tmon::ScenarioConfig> loaded = tmon::load_scenario_dir(cfg.scenario_dir);
  if (c.all || c.scenarios.empty()) return loaded;
  std::vector<tmon::ScenarioConfig> out;
  for (const std::string& id : c.scenarios) {
    const auto it = std::find_if(loaded.begin(), loaded.end(), [&](const auto& s) { return s.id == id; });
    if (it == loaded.end()) throw tmon::NotFoundError("unknown scenario '" + id + "' in " + cfg.scenario_dir.string());
    out.push_back(*it);
  }
  return out;
}

tmon::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic monitoring pipeline: simulation, highlighting, grounding and evaluation"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--log-level", common.log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  const auto add_common = [&](CLI::App* sub, bool scenarios) {
    sub->add_option("-c,--config", common.config, "Deployment config file")->capture_default_str();
    if (scenarios) {
      sub->add_option("-s,--scenario", common.scenarios, "Scenario id (repeatable)");
      sub->add_flag("--all", common.all, "Every scenario in the scenario directory (default)");
    }
  };

  std::uint64_t seed = 0;
  std::string out;

  auto* simulate = app.add_subcommand("simulate", "Run scenarios and write frames + annotation sidecars");
  add_common(simulate, true);
  bool overlay = false;
  simulate->add_option("--seed", seed, "Seed for downstream oracles");
  simulate->add_option("-o,--out", out, "Output directory")->required();
  simulate->add_flag("--overlay", overlay, "Also write highlighted frames under highlighted/");

  auto* export_ds = app.add_subcommand("export-dataset", "Build the instruction-tuning corpus");
  add_common(export_ds, true);
  bool with_frames = false;
  double drop_rate = 0.0;
  double mislabel_rate = 0.0;
  export_ds->add_option("--seed", seed, "Seed for detector corruption");
  export_ds->add_option("-o,--out", out, "Dataset root")->required();
  export_ds->add_flag("--with-frames", with_frames, "Also write raw frames and sidecars");
  export_ds->add_option("--drop-rate", drop_rate, "Oracle detector miss probability")->check(CLI::Range(0.0, 1.0));
  export_ds->add_option("--mislabel-rate", mislabel_rate, "Oracle detector false-positive probability")
      ->check(CLI::Range(0.0, 1.0));

  auto* evaluate = app.add_subcommand("evaluate", "Run a responder over frames and write an EvalReport");
  add_common(evaluate, true);
  std::string responder = "oracle";
  tmon::ErrorRates rates;
  evaluate->add_option("--responder", responder, "oracle|remote")
      ->check(CLI::IsMember({"oracle", "remote"}))
      ->capture_default_str();
  evaluate->add_option("--p-loc", rates.p_loc, "Location corruption probability")->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--p-dir", rates.p_dir, "Direction corruption probability")->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--p-col", rates.p_col, "Collision flip probability")->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--seed", seed, "Responder seed");
  evaluate->add_option("-o,--out", out, "Report path (stdout summary only when omitted)");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  add_common(serve, false);
  std::string host;
  int port = -1;
  serve->add_option("--host", host, "Listen address (config value by default)");
  serve->add_option("--port", port, "Listen port, 0 for any (config value by default)");

  auto* validate = app.add_subcommand("validate", "Check alias tables and scenario files");
  add_common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("tmon"));
  spdlog::set_level(spdlog::level::from_str(common.log_level));

  try {
    if (*validate) {
      // load_config already rejects inconsistent alias tables; report every
      // scenario problem rather than the first.
      const tmon::DeploymentConfig cfg = tmon::load_config(common.config);
      int failures = 0;
      std::size_t count = 0;
      for (const auto& entry : std::filesystem::directory_iterator(cfg.scenario_dir)) {
        if (entry.path().extension() != ".json") continue;
        ++count;
        try {
          tmon::load_scenario(entry.path());
        } catch (const tmon::Error& e) {
          std::cerr << entry.path().string() << ": " << e.what() << "\n";
          ++failures;
        }
      }
      std::cout << cfg.cameras.size() << " cameras, " << count << " scenarios, " << failures << " invalid\n";
      return failures ? kInvalid : kOk;
    }

    const tmon::DeploymentConfig cfg = tmon::load_config(common.config);

    if (*serve) {
      tmon::Service service(cfg, tmon::load_scenario_dir(cfg.scenario_dir));
      const int bound = service.bind(host.empty() ? cfg.host : host, port < 0 ? cfg.port : port);
      std::cout << "listening on " << (host.empty() ? cfg.host : host) << ":" << bound << std::endl;
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.run();
      g_service = nullptr;
      return kOk;
    }

    const std::vector<tmon::ScenarioConfig> scenarios = select_scenarios(cfg, common);

    if (*simulate) {
      tmon::DirectorySink sink(out);
      tmon::OracleDetector detector(tmon::OracleCorruption{0.0, 0.0, seed});
      std::size_t frames = 0;
      for (const auto& sc : scenarios) {
        for (const tmon::Frame& f : tmon::render_scenario(sc, cfg.cameras)) {
          tmon::write_frame(sink, sc.id + "/", f);
          if (overlay) {
            const auto& camera = *cfg.find_camera(f.camera_id);
            sink.write("highlighted/" + sc.id + "/" + tmon::frame_stem(f.camera_id, f.tick) + ".ppm",
                       tmon::encode_ppm(tmon::highlight_frame(camera, f, detector)));
          }
          ++frames;
        }
      }
      std::cout << scenarios.size() << " scenarios, " << frames << " frames -> " << out << "\n";
      return kOk;
    }

    if (*export_ds) {
      tmon::DirectorySink sink(out);
      tmon::CorpusOptions options;
      options.detection = {drop_rate, mislabel_rate, seed};
      options.write_frames = with_frames;
      options.created_at = tmon::build_timestamp();
      const tmon::CorpusResult result = tmon::build_corpus(scenarios, cfg.cameras, options, sink);
      // Re-read what was written so the exported tree is checked end to end.
      const auto reread = tmon::import_dataset(out);
      if (reread.size() != result.records.size()) {
        throw tmon::ValidationError("dataset.jsonl", "re-import count mismatch");
      }
      std::cout << tmon::to_json(result.manifest).dump(2) << "\n";
      return kOk;
    }

    if (*evaluate) {
      tmon::VlmGateway::Options gopts;
      gopts.endpoint = cfg.endpoints.vlm;
      gopts.timeout = cfg.limits.timeout;
      gopts.retry.retries = cfg.limits.retries;
      gopts.max_in_flight = cfg.limits.max_in_flight;
      tmon::VlmGateway gateway(cfg.cameras, gopts);
      tmon::EvalOptions options;
      options.responder = *tmon::parse_responder(responder);
      options.errors = rates;
      options.seed = seed;
      std::unique_ptr<tmon::Detector> detector;
      if (cfg.endpoints.detector) {
        detector = std::make_unique<tmon::RemoteDetector>(*cfg.endpoints.detector, cfg.limits.timeout,
                                                          cfg.limits.max_in_flight);
      } else {
        detector = std::make_unique<tmon::OracleDetector>();
      }
      const tmon::EvalReport report = tmon::evaluate_scenarios(scenarios, cfg.cameras, gateway, options, *detector);
      nlohmann::ordered_json doc = tmon::to_json(report);
      if (!out.empty()) tmon::write_file_atomic(out, doc.dump(2) + "\n");
      std::printf("frames %zu  vehicles %zu  location %.4f  steering %.4f  collision %.4f\n", report.frames_scored,
                  report.vehicles, report.location_accuracy, report.steering_accuracy, report.collision_accuracy);
      return kOk;
    }
  } catch (const tmon::BindError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBind;
  } catch (const tmon::NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingInput;
  } catch (const tmon::ValidationError& e) {
    std::cerr << "error: " << e.field_path() << ": " << e.what() << "\n";
    return kInvalid;
  } catch (const tmon::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const tmon::RemoteError& e) {
    std::cerr << "error: " << e.endpoint() << ": " << e.what() << "\n";
    return kRemote;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

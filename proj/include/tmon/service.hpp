#pragma once

// HTTP API over the pipeline. All state changes go through the RunStore.

#include <memory>
#include <string>
#include <vector>

#include "tmon/config.hpp"
#include "tmon/error.hpp"
#include "tmon/scene.hpp"

namespace tmon {

class BindError : public Error {
 public:
  using Error::Error;
};

class Service {
 public:
  Service(DeploymentConfig config, std::vector<ScenarioConfig> scenarios);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws BindError.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();
  // Waits for every background run to finish.
  void wait_for_jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tmon

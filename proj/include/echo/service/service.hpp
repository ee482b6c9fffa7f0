#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "echo/engine/engine.hpp"

namespace echo {

// service.toml, table [service]:
//   host, port, data_dir, provider_config, catalog, seed_scene, admin_token,
//   ui_dir, generation_threads
// Relative paths resolve against the file's directory.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string data_dir;
  std::string provider_config;
  std::string catalog;
  std::string seed_scene;
  std::string admin_token;  // empty disables POST /assets/label
  std::string ui_dir;
  std::size_t generation_threads = 2;
};

// Throws ConfigError, including for unknown keys.
ServiceConfig load_service_config(const std::string& path);

// HTTP status and ApiError code for an engine error.
struct ApiStatus {
  int status = 500;
  std::string code;
};
ApiStatus api_status(Errc code);

// {"code", "message", "details"?}
nlohmann::ordered_json api_error(const std::string& code, const std::string& message,
                                 const nlohmann::ordered_json& details = nullptr);

// Session as served by GET /sessions/{sid}.
nlohmann::ordered_json session_view(const Session& s);

class Service {
 public:
  // seed, when given, is what POST /scenes copies for {"seed": true}.
  Service(ServiceConfig config, std::shared_ptr<Engine> engine,
          std::optional<SceneGraph> seed = std::nullopt);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  // Throws IoError when the address cannot be bound.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();

  Engine& engine() { return *engine_; }

 private:
  struct Impl;
  std::shared_ptr<Engine> engine_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace echo

#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "echo/engine/operation_log.hpp"
#include "echo/engine/session.hpp"

namespace boost::asio {
class thread_pool;
}

namespace echo {

struct EngineOptions {
  // When set, scenes, logs and sessions persist under this directory and are
  // recovered from it on construction.
  std::optional<std::string> data_dir;
  // 0 runs action generation inline inside instruct/regenerate, which keeps
  // provider call order fixed (needed for replay). Otherwise a pool of this
  // many threads runs it in the background.
  std::size_t generation_threads = 0;
};

struct ManualAdd {
  std::optional<std::string> asset_id;
  std::optional<std::string> category;
  std::optional<std::string> query;
  Vector3 position;
  std::optional<std::string> name;
};

struct ManualResult {
  Revision revision = 0;
  std::string name;  // the object's final name
};

// Owns scenes and sessions. Each scene has one writer at a time; apply, undo,
// regenerate and manual operations on a scene are serialized by its lock.
class Engine {
 public:
  Engine(EngineOptions options, std::shared_ptr<Provider> provider,
         std::shared_ptr<const Catalog> catalog = nullptr,
         std::shared_ptr<const Embedder> embedder = nullptr);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Notes produced while recovering from data_dir (orphaned sessions, log
  // repairs).
  const Diagnostics& startup_diagnostics() const { return startup_diags_; }

  // Scene ids are [A-Za-z0-9_-]{1,64}. Generated ids are "scene-1", ...
  std::string create_scene(SceneGraph initial, std::optional<std::string> scene_id = std::nullopt);
  void delete_scene(const std::string& scene_id);
  bool has_scene(const std::string& scene_id) const;
  std::vector<std::string> scene_ids() const;
  SceneSnapshot snapshot(const std::string& scene_id) const;
  std::vector<LogRecord> log(const std::string& scene_id) const;

  std::string instruct(const std::string& scene_id, const std::string& instruction,
                       const PipelineConfig& config);
  Session session(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  Revision apply(const std::string& session_id, const std::string& suggestion_id);
  Revision undo(const std::string& session_id, const std::string& suggestion_id);
  Revision reapply(const std::string& session_id, const std::string& suggestion_id);
  void regenerate(const std::string& session_id, const std::string& suggestion_id);

  ManualResult manual_add(const std::string& scene_id, const ManualAdd& add);
  Revision manual_mutate(const std::string& scene_id, const std::string& name,
                         const std::vector<std::pair<Field, std::string>>& changes);
  Revision manual_destroy(const std::string& scene_id, const std::string& name);
  Revision manual_undo(const std::string& scene_id);

  // Blocks until no background generation is running.
  void wait_idle();

  const Catalog* catalog() const { return catalog_.get(); }
  const Embedder* embedder() const { return embedder_.get(); }
  Provider& provider() { return *provider_; }

 private:
  struct SceneState;
  struct SessionState;

  std::shared_ptr<SceneState> scene_state(const std::string& scene_id) const;
  std::shared_ptr<SessionState> session_state(const std::string& session_id) const;

  void recover();
  void persist_scene(SceneState& s);
  void persist_session(const Session& s);
  void commit(SceneState& s, SceneGraph next, LogRecord record);
  Revision apply_locked(SceneState& scene, SessionState& ss, SuggestionEntry& entry);
  Revision undo_locked(SceneState& scene, SessionState& ss, SuggestionEntry& entry);
  void log_only(SceneState& s, LogRecord record);
  Revision manual_commit(SceneState& s, SceneGraph next, InversePatch patch, const std::string& op,
                         nlohmann::ordered_json detail);
  void schedule(std::function<void()> task);
  void generate(const std::string& session_id, const std::string& suggestion_id, int generation);

  EngineOptions options_;
  std::shared_ptr<Provider> provider_;
  std::shared_ptr<const Catalog> catalog_;
  std::shared_ptr<const Embedder> embedder_;
  Diagnostics startup_diags_;

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<SceneState>> scenes_;
  std::map<std::string, std::shared_ptr<SessionState>> sessions_;
  std::uint64_t next_scene_ = 1;
  std::uint64_t next_session_ = 1;

  std::mutex idle_mu_;
  std::condition_variable idle_cv_;
  std::size_t in_flight_ = 0;
  std::unique_ptr<boost::asio::thread_pool> pool_;
};

}  // namespace echo

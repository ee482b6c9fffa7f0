#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/scene/scene_graph.hpp"

namespace echo {

// One line of logs/{scene_id}.jsonl. kind is one of create, instruct, apply,
// undo, regenerate, manual, manual-undo; actor is "user", "manual" or
// "system". Scene changes are carried as effects, so replay never re-runs
// actions or calls a provider.
struct LogRecord {
  std::uint64_t seq = 0;
  std::string ts;
  std::string kind;
  std::string actor;
  std::string scene_id;
  std::string session_id;
  std::string suggestion_id;
  Revision revision_before = 0;
  Revision revision_after = 0;
  std::vector<SceneEffect> effects;
  nlohmann::ordered_json detail = nlohmann::ordered_json::object();
};

nlohmann::ordered_json log_record_to_json(const LogRecord& r);
LogRecord log_record_from_json(const nlohmann::ordered_json& j);

class OperationLog {
 public:
  OperationLog() = default;
  // Appends go to sink_path as well when it is non-empty.
  explicit OperationLog(std::string sink_path, std::vector<LogRecord> existing = {});

  // Assigns seq and ts, returns the stored record.
  const LogRecord& append(LogRecord r);
  std::vector<LogRecord> records() const;
  std::size_t size() const;

  // A final line without a newline is a torn write and is dropped; any other
  // bad line is LogCorrupt.
  static std::vector<LogRecord> load(const std::string& path);

 private:
  mutable std::mutex mu_;
  std::vector<LogRecord> records_;
  std::string sink_path_;
};

// Rebuilds a scene from the log's create record and everything after it.
// Throws LogCorrupt when a record does not line up with the replayed
// revision.
SceneGraph replay_log(const std::vector<LogRecord>& records);

// Replays records on top of an initial snapshot; a leading create record is
// checked against the snapshot rather than applied.
SceneGraph replay_log(const SceneSnapshot& initial, const std::vector<LogRecord>& records);

}  // namespace echo

#include "echo/engine/operation_log.hpp"

#include <fstream>
#include <sstream>

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

nlohmann::ordered_json log_record_to_json(const LogRecord& r) {
  auto effects = nlohmann::ordered_json::array();
  for (const auto& e : r.effects) effects.push_back(effect_to_json(e));
  nlohmann::ordered_json j = {{"seq", r.seq},
                              {"ts", r.ts},
                              {"kind", r.kind},
                              {"actor", r.actor},
                              {"scene_id", r.scene_id}};
  if (!r.session_id.empty()) j["session_id"] = r.session_id;
  if (!r.suggestion_id.empty()) j["suggestion_id"] = r.suggestion_id;
  j["revision_before"] = r.revision_before;
  j["revision_after"] = r.revision_after;
  j["effects"] = effects;
  j["detail"] = r.detail;
  return j;
}

LogRecord log_record_from_json(const nlohmann::ordered_json& j) {
  LogRecord r;
  try {
    r.seq = j.at("seq").get<std::uint64_t>();
    r.ts = j.value("ts", "");
    r.kind = j.at("kind").get<std::string>();
    r.actor = j.value("actor", "");
    r.scene_id = j.at("scene_id").get<std::string>();
    r.session_id = j.value("session_id", "");
    r.suggestion_id = j.value("suggestion_id", "");
    r.revision_before = j.at("revision_before").get<Revision>();
    r.revision_after = j.at("revision_after").get<Revision>();
    for (const auto& e : j.at("effects")) r.effects.push_back(effect_from_json(e));
    if (j.contains("detail")) r.detail = j["detail"];
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::LogCorrupt, std::string("log record: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::LogCorrupt, std::string("log record: ") + e.what());
  }
  return r;
}

OperationLog::OperationLog(std::string sink_path, std::vector<LogRecord> existing)
    : records_(std::move(existing)), sink_path_(std::move(sink_path)) {}

const LogRecord& OperationLog::append(LogRecord r) {
  std::lock_guard lock(mu_);
  r.seq = records_.empty() ? 1 : records_.back().seq + 1;
  r.ts = utc_timestamp();
  if (!sink_path_.empty()) {
    std::ofstream out(sink_path_, std::ios::app | std::ios::binary);
    out << log_record_to_json(r).dump() << '\n';
    out.flush();
    if (!out) throw Error(Errc::IoError, "cannot append to " + sink_path_);
  }
  records_.push_back(std::move(r));
  return records_.back();
}

std::vector<LogRecord> OperationLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t OperationLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<LogRecord> OperationLog::load(const std::string& path) {
  std::string text = read_file(path);
  std::vector<LogRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    bool torn = nl == std::string::npos;
    std::string line = text.substr(pos, torn ? std::string::npos : nl - pos);
    pos = torn ? text.size() : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(log_record_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const std::exception& e) {
      if (torn) break;
      throw Error(Errc::LogCorrupt, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

void replay_record(SceneGraph& scene, const LogRecord& r) {
  if (r.revision_before != scene.revision()) {
    throw Error(Errc::LogCorrupt, "record " + std::to_string(r.seq) + " starts at revision " +
                                      std::to_string(r.revision_before) + " but the scene is at " +
                                      std::to_string(scene.revision()));
  }
  try {
    SceneGraph::Batch batch(scene);
    for (const auto& e : r.effects) scene.apply_effect(e);
  } catch (const Error& e) {
    throw Error(Errc::LogCorrupt, "record " + std::to_string(r.seq) + ": " + e.what());
  }
  if (scene.revision() != r.revision_after) {
    throw Error(Errc::LogCorrupt, "record " + std::to_string(r.seq) + " should end at revision " +
                                      std::to_string(r.revision_after) + " but replay reached " +
                                      std::to_string(scene.revision()));
  }
}

RoomBounds bounds_from_detail(const nlohmann::ordered_json& detail) {
  RoomBounds b;
  if (detail.contains("bounds")) {
    const auto& j = detail["bounds"];
    b.min_x = j.value("min_x", b.min_x);
    b.min_z = j.value("min_z", b.min_z);
    b.max_x = j.value("max_x", b.max_x);
    b.max_z = j.value("max_z", b.max_z);
  }
  return b;
}

}  // namespace

SceneGraph replay_log(const std::vector<LogRecord>& records) {
  if (records.empty() || records.front().kind != "create") {
    throw Error(Errc::LogCorrupt, "log does not start with a create record");
  }
  const LogRecord& create = records.front();
  if (create.effects.size() != 1 || !std::holds_alternative<ResetEffect>(create.effects[0])) {
    throw Error(Errc::LogCorrupt, "create record must carry exactly one reset effect");
  }
  SceneGraph scene(create.scene_id, bounds_from_detail(create.detail));
  try {
    scene.apply_effect(create.effects[0]);
  } catch (const Error& e) {
    throw Error(Errc::LogCorrupt, std::string("create record: ") + e.what());
  }
  scene.set_revision(create.revision_after);
  scene.take_journal();
  for (std::size_t i = 1; i < records.size(); ++i) replay_record(scene, records[i]);
  return scene;
}

SceneGraph replay_log(const SceneSnapshot& initial, const std::vector<LogRecord>& records) {
  SceneGraph scene = initial.to_scene();
  std::size_t start = 0;
  if (!records.empty() && records.front().kind == "create") {
    if (records.front().revision_after != initial.revision()) {
      throw Error(Errc::LogCorrupt, "create record does not match the initial snapshot");
    }
    start = 1;
  }
  for (std::size_t i = start; i < records.size(); ++i) replay_record(scene, records[i]);
  return scene;
}

}  // namespace echo

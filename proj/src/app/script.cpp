#include "echo/app/script.hpp"

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

namespace {

using J = nlohmann::ordered_json;

[[noreturn]] void bad(std::size_t i, const std::string& msg) {
  throw Error(Errc::SchemaError, "script step " + std::to_string(i + 1) + ": " + msg);
}

std::string string_at(const J& j, const char* key, std::size_t i) {
  if (!j.contains(key) || !j[key].is_string()) bad(i, std::string("\"") + key + "\" must be a string");
  return j[key].get<std::string>();
}

void only_keys(const J& j, std::initializer_list<const char*> allowed, std::size_t i) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= k == a;
    if (!ok) bad(i, "unknown field \"" + k + "\"");
  }
}

ScriptStep parse_step(const J& j, std::size_t i) {
  if (!j.is_object()) bad(i, "must be an object");
  ScriptStep s;
  if (j.contains("session")) {
    if (!j["session"].is_number_integer() || j["session"].get<int>() < 1) {
      bad(i, "\"session\" must be a positive integer");
    }
    s.session = j["session"].get<int>();
  }
  try {
    if (j.contains("instruction")) {
      only_keys(j, {"instruction", "config"}, i);
      s.kind = ScriptStep::Kind::Instruction;
      s.text = string_at(j, "instruction", i);
      if (j.contains("config")) {
        s.config = j["config"].is_string()
                       ? PipelineConfig::from_condition(j["config"].get<std::string>())
                       : config_from_json(j["config"]);
      }
      return s;
    }
    for (auto [key, kind] : {std::pair{"apply", ScriptStep::Kind::Apply},
                             std::pair{"undo", ScriptStep::Kind::Undo},
                             std::pair{"reapply", ScriptStep::Kind::Reapply},
                             std::pair{"regenerate", ScriptStep::Kind::Regenerate}}) {
      if (!j.contains(key)) continue;
      only_keys(j, {key, "session"}, i);
      s.kind = kind;
      s.text = string_at(j, key, i);
      if (kind == ScriptStep::Kind::Apply && s.text == "all") s.kind = ScriptStep::Kind::ApplyAll;
      return s;
    }
    if (j.contains("manual")) {
      std::string op = string_at(j, "manual", i);
      if (op == "add") {
        s.kind = ScriptStep::Kind::ManualAdd;
        J rest = j;
        rest.erase("manual");
        s.add = manual_add_from_json(rest);
      } else if (op == "mutate") {
        only_keys(j, {"manual", "name", "set"}, i);
        s.kind = ScriptStep::Kind::ManualMutate;
        s.text = string_at(j, "name", i);
        if (!j.contains("set")) bad(i, "mutate needs \"set\"");
        s.changes = field_changes_from_json(j["set"]);
      } else if (op == "destroy") {
        only_keys(j, {"manual", "name"}, i);
        s.kind = ScriptStep::Kind::ManualDestroy;
        s.text = string_at(j, "name", i);
      } else if (op == "undo") {
        only_keys(j, {"manual"}, i);
        s.kind = ScriptStep::Kind::ManualUndo;
      } else {
        bad(i, "unknown manual op \"" + op + "\"");
      }
      return s;
    }
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaError) throw;
    bad(i, e.what());
  }
  bad(i, "no recognised action");
}

}  // namespace

Vector3 vector_from_json(const J& j) {
  if (j.is_string()) return Vector3::parse(j.get<std::string>());
  if (j.is_array() && j.size() == 3 && j[0].is_number() && j[1].is_number() && j[2].is_number()) {
    return Vector3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  }
  throw Error(Errc::SchemaError, "vector must be \"(x, y, z)\" or [x, y, z]");
}

std::vector<std::pair<Field, std::string>> field_changes_from_json(const J& j) {
  if (!j.is_object() || j.empty()) {
    throw Error(Errc::SchemaError, "field changes must be a non-empty object");
  }
  std::vector<std::pair<Field, std::string>> out;
  for (const auto& [k, v] : j.items()) {
    auto field = field_from_string(k);
    if (!field) throw Error(Errc::SchemaError, "unknown field \"" + k + "\"");
    switch (*field) {
      case Field::Position:
      case Field::Rotation:
      case Field::Scale: out.emplace_back(*field, vector_from_json(v).to_string()); break;
      case Field::Color:
      case Field::Material:
        if (!v.is_string()) throw Error(Errc::SchemaError, "\"" + k + "\" must be a string");
        out.emplace_back(*field, v.get<std::string>());
        break;
    }
  }
  return out;
}

ManualAdd manual_add_from_json(const J& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "add body must be an object");
  ManualAdd a;
  for (const auto& [k, v] : j.items()) {
    if (k == "position") {
      a.position = vector_from_json(v);
      continue;
    }
    if (k != "asset_id" && k != "category" && k != "query" && k != "name") {
      throw Error(Errc::SchemaError, "unknown field \"" + k + "\"");
    }
    if (!v.is_string()) throw Error(Errc::SchemaError, "\"" + k + "\" must be a string");
    std::string s = v.get<std::string>();
    if (k == "asset_id") a.asset_id = s;
    if (k == "category") a.category = s;
    if (k == "query") a.query = s;
    if (k == "name") a.name = s;
  }
  if (!j.contains("position")) throw Error(Errc::SchemaError, "add needs \"position\"");
  return a;
}

Script parse_script(const J& j) {
  Script script;
  const J* steps = &j;
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (k != "scene" && k != "steps") throw Error(Errc::SchemaError, "unknown script field \"" + k + "\"");
    }
    if (j.contains("scene")) {
      if (!j["scene"].is_string()) throw Error(Errc::SchemaError, "\"scene\" must be a path");
      script.scene_path = j["scene"].get<std::string>();
    }
    if (!j.contains("steps")) throw Error(Errc::SchemaError, "script needs \"steps\"");
    steps = &j["steps"];
  }
  if (!steps->is_array()) throw Error(Errc::SchemaError, "script steps must be an array");
  for (std::size_t i = 0; i < steps->size(); ++i) script.steps.push_back(parse_step((*steps)[i], i));
  return script;
}

Script load_script(const std::string& path) {
  J j;
  try {
    j = J::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
  return parse_script(j);
}

ScriptOutcome run_script(Engine& engine, const std::string& scene_id, const Script& script) {
  ScriptOutcome out;
  out.scene_id = scene_id;
  if (!engine.has_scene(scene_id)) throw Error(Errc::NotFound, "no scene " + scene_id);

  auto session_for = [&](const ScriptStep& s, std::size_t i) -> const std::string& {
    if (out.session_ids.empty()) {
      throw Error(Errc::WrongState, "script step " + std::to_string(i + 1) + ": no instruction yet");
    }
    if (!s.session) return out.session_ids.back();
    if (static_cast<std::size_t>(*s.session) > out.session_ids.size()) {
      throw Error(Errc::NotFound, "script step " + std::to_string(i + 1) + ": no session " +
                                      std::to_string(*s.session));
    }
    return out.session_ids[*s.session - 1];
  };
  auto apply_tolerant = [&](const std::string& sid, const std::string& sug) {
    try {
      engine.apply(sid, sug);
    } catch (const Error& e) {
      // the entry is now Failed and carries the diagnostics
      if (e.code() != Errc::AtomicRollback) throw;
    }
  };

  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const ScriptStep& s = script.steps[i];
    using K = ScriptStep::Kind;
    switch (s.kind) {
      case K::Instruction:
        out.session_ids.push_back(engine.instruct(scene_id, s.text, s.config));
        engine.wait_idle();
        break;
      case K::Apply: apply_tolerant(session_for(s, i), s.text); break;
      case K::ApplyAll: {
        const std::string& sid = session_for(s, i);
        for (const auto& e : engine.session(sid).entries) {
          if (e.state == SuggestionState::Pending) apply_tolerant(sid, e.id());
        }
        break;
      }
      case K::Undo: engine.undo(session_for(s, i), s.text); break;
      case K::Reapply: apply_tolerant(session_for(s, i), s.text); break;
      case K::Regenerate:
        engine.regenerate(session_for(s, i), s.text);
        engine.wait_idle();
        break;
      case K::ManualAdd: engine.manual_add(scene_id, s.add); break;
      case K::ManualMutate: engine.manual_mutate(scene_id, s.text, s.changes); break;
      case K::ManualDestroy: engine.manual_destroy(scene_id, s.text); break;
      case K::ManualUndo: engine.manual_undo(scene_id); break;
    }
  }

  for (const auto& sid : out.session_ids) {
    Session s = engine.session(sid);
    for (const auto& e : s.entries) out.failed_entries += e.state == SuggestionState::Failed;
    for (const auto& d : s.diagnostics) out.session_errors += d.severity == Severity::Error;
  }
  return out;
}

}  // namespace echo

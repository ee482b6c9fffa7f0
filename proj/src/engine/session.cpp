#include "echo/engine/session.hpp"

#include <algorithm>

#include "echo/error.hpp"

namespace echo {

std::string_view to_string(SuggestionState s) {
  switch (s) {
    case SuggestionState::Processing: return "processing";
    case SuggestionState::Pending: return "pending";
    case SuggestionState::Applied: return "applied";
    case SuggestionState::Failed: return "failed";
  }
  return "failed";
}

std::optional<SuggestionState> suggestion_state_from_string(std::string_view name) {
  for (auto s : {SuggestionState::Processing, SuggestionState::Pending, SuggestionState::Applied,
                 SuggestionState::Failed}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

bool is_legal_transition(SuggestionState from, SuggestionState to) {
  using S = SuggestionState;
  switch (from) {
    case S::Processing: return to == S::Pending || to == S::Failed;
    case S::Pending: return to == S::Applied || to == S::Processing || to == S::Failed;
    case S::Applied: return to == S::Pending || to == S::Processing;
    case S::Failed: return to == S::Processing;
  }
  return false;
}

void SuggestionEntry::transition(SuggestionState to) {
  if (!is_legal_transition(state, to)) {
    throw Error(Errc::WrongState, "suggestion " + id() + " cannot go from " +
                                      std::string(to_string(state)) + " to " +
                                      std::string(to_string(to)));
  }
  state = to;
  if (to != SuggestionState::Applied) patch.reset();
}

SuggestionEntry* Session::find(std::string_view suggestion_id) {
  for (auto& e : entries) {
    if (e.id() == suggestion_id) return &e;
  }
  return nullptr;
}

const SuggestionEntry* Session::find(std::string_view suggestion_id) const {
  return const_cast<Session*>(this)->find(suggestion_id);
}

bool Session::busy() const {
  return std::any_of(entries.begin(), entries.end(), [](const SuggestionEntry& e) {
    return e.state == SuggestionState::Processing;
  });
}

nlohmann::ordered_json entry_to_json(const SuggestionEntry& e) {
  auto actions = nlohmann::ordered_json::array();
  for (const auto& a : e.actions) actions.push_back(action_to_json(a));
  auto diags = nlohmann::ordered_json::array();
  for (const auto& d : e.diagnostics) diags.push_back(to_json(d));
  nlohmann::ordered_json j = suggestion_to_json(e.text);
  j["state"] = std::string(to_string(e.state));
  j["generation"] = e.generation;
  j["actions"] = actions;
  j["patch"] = e.patch ? patch_to_json(*e.patch) : nlohmann::ordered_json();
  j["diagnostics"] = diags;
  return j;
}

SuggestionEntry suggestion_entry_from_json(const nlohmann::ordered_json& j) {
  SuggestionEntry e;
  try {
    e.text = suggestion_from_json(j);
    auto state = suggestion_state_from_string(j.at("state").get<std::string>());
    if (!state) throw Error(Errc::SchemaError, "unknown state " + j.at("state").dump());
    e.state = *state;
    e.generation = j.at("generation").get<int>();
    for (const auto& a : j.at("actions")) e.actions.push_back(action_from_json(a));
    if (j.contains("patch") && !j["patch"].is_null()) e.patch = patch_from_json(j["patch"]);
    for (const auto& d : j.at("diagnostics")) e.diagnostics.push_back(diagnostic_from_json(d));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::SchemaError, std::string("suggestion entry: ") + ex.what());
  }
  if (e.patch.has_value() != (e.state == SuggestionState::Applied)) {
    throw Error(Errc::SchemaError, "suggestion " + e.id() + ": patch must be present exactly when applied");
  }
  return e;
}

nlohmann::ordered_json session_to_json(const Session& s) {
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : s.entries) entries.push_back(entry_to_json(e));
  auto diags = nlohmann::ordered_json::array();
  for (const auto& d : s.diagnostics) diags.push_back(to_json(d));
  return {{"session_id", s.session_id},
          {"scene_id", s.scene_id},
          {"instruction", s.instruction},
          {"config", config_to_json(s.config)},
          {"created_at", s.created_at},
          {"entries", entries},
          {"diagnostics", diags}};
}

Session session_from_json(const nlohmann::ordered_json& j) {
  Session s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.scene_id = j.at("scene_id").get<std::string>();
    s.instruction = j.at("instruction").get<std::string>();
    s.config = config_from_json(j.at("config"));
    s.created_at = j.value("created_at", "");
    for (const auto& e : j.at("entries")) s.entries.push_back(suggestion_entry_from_json(e));
    for (const auto& d : j.at("diagnostics")) s.diagnostics.push_back(diagnostic_from_json(d));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::SchemaError, std::string("session: ") + ex.what());
  }
  return s;
}

}  // namespace echo

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/action/execution.hpp"
#include "echo/pipeline/pipeline.hpp"

namespace echo {

enum class SuggestionState { Processing, Pending, Applied, Failed };

// Lowercase names used on the wire: "processing", "pending", ...
std::string_view to_string(SuggestionState s);
std::optional<SuggestionState> suggestion_state_from_string(std::string_view name);

// Processing->Pending, Processing->Failed, Pending->Applied, Applied->Pending,
// Pending->Processing, Applied->Processing, plus Pending->Failed (a failed
// apply) and Failed->Processing (regenerate after failure).
bool is_legal_transition(SuggestionState from, SuggestionState to);

struct SuggestionEntry {
  SuggestionText text;
  SuggestionState state = SuggestionState::Processing;
  ActionStepList actions;
  std::optional<InversePatch> patch;
  Diagnostics diagnostics;
  int generation = 1;

  const std::string& id() const { return text.suggestion_id; }

  // Throws WrongState on an illegal transition. Clears the patch when
  // leaving Applied.
  void transition(SuggestionState to);
};

struct Session {
  std::string session_id;
  std::string scene_id;
  std::string instruction;
  std::vector<SuggestionEntry> entries;
  PipelineConfig config;
  std::string created_at;
  Diagnostics diagnostics;

  SuggestionEntry* find(std::string_view suggestion_id);
  const SuggestionEntry* find(std::string_view suggestion_id) const;
  bool busy() const;  // any entry still Processing
};

nlohmann::ordered_json entry_to_json(const SuggestionEntry& e);
SuggestionEntry suggestion_entry_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json session_to_json(const Session& s);
Session session_from_json(const nlohmann::ordered_json& j);

}  // namespace echo

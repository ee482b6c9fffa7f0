#include "echo/action/steps.hpp"

#include "echo/error.hpp"
#include "echo/util/json_extract.hpp"
#include "echo/util/text.hpp"

namespace echo {

namespace {

// "key" values arrive as strings, numbers or arrays depending on the model.
std::string key_text(const nlohmann::ordered_json& k) {
  if (k.is_string()) return k.get<std::string>();
  if (k.is_number()) return format_number(k.get<double>());
  if (k.is_array() && k.size() == 3) {
    std::string s = "(";
    for (std::size_t i = 0; i < 3; ++i) {
      if (i) s += ", ";
      s += k[i].is_number() ? format_number(k[i].get<double>()) : k[i].dump();
    }
    return s + ")";
  }
  return k.dump();
}

void cross_check(const nlohmann::ordered_json& step, const Action& a, std::size_t index,
                 Diagnostics& diags) {
  if (step.contains("action") && step["action"].is_string()) {
    auto declared = verb_from_string(step["action"].get<std::string>());
    if (declared != a.verb) {
      diags.push_back(Diagnostic::warning(
          "FieldDisagreement",
          "\"action\" says '" + step["action"].get<std::string>() + "' but command is " +
              std::string(to_string(a.verb)),
          index, a.command_text));
    }
  }
  if (step.contains("selected_obj") && step["selected_obj"].is_string()) {
    std::string declared(trim(step["selected_obj"].get<std::string>()));
    if (declared != a.target) {
      diags.push_back(Diagnostic::warning(
          "FieldDisagreement",
          "\"selected_obj\" says '" + declared + "' but command targets '" + a.target + "'",
          index, a.command_text));
    }
  }
  if (a.verb != Verb::Destroy && step.contains("key") && !step["key"].is_null()) {
    std::string text = key_text(step["key"]);
    try {
      ActionKey declared = parse_key(a.verb, text);
      if (declared != a.key) {
        diags.push_back(Diagnostic::warning(
            "FieldDisagreement",
            "\"key\" says '" + text + "' but command has '" + key_to_string(a.key) + "'", index,
            a.command_text));
      }
    } catch (const Error& e) {
      diags.push_back(Diagnostic::warning(
          "FieldDisagreement", "\"key\" '" + text + "' unreadable (" + e.what() + ")", index,
          a.command_text));
    }
  }
}

}  // namespace

StepsParseResult parse_steps_json(std::string_view text) {
  nlohmann::ordered_json doc = extract_json_object(text, "steps");
  if (!doc.contains("steps") || !doc["steps"].is_array()) {
    throw Error(Errc::SchemaError, "provider output has no \"steps\" array");
  }

  StepsParseResult out;
  const auto& steps = doc["steps"];
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    if (!step.is_object()) {
      out.diagnostics.push_back(
          Diagnostic::error("SchemaError", "step is not an object", i, step.dump()));
      continue;
    }
    if (!step.contains("action_command") || !step["action_command"].is_string()) {
      out.diagnostics.push_back(Diagnostic::error(
          "SchemaError", "step has no \"action_command\" string", i, step.dump()));
      continue;
    }
    const std::string command = step["action_command"].get<std::string>();
    try {
      Diagnostics parse_notes;
      Action a = parse_command(command, &parse_notes);
      for (auto& d : parse_notes) {
        d.step_index = i;
        d.raw = command;
        out.diagnostics.push_back(std::move(d));
      }
      cross_check(step, a, i, out.diagnostics);
      out.actions.push_back(std::move(a));
    } catch (const Error& e) {
      out.diagnostics.push_back(Diagnostic::from(e, i, command));
    }
  }
  return out;
}

}  // namespace echo

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/error.hpp"

namespace echo {

enum class Severity { Warning, Error };

// Structured record attached to suggestions, sessions and CLI output.
struct Diagnostic {
  Severity severity = Severity::Warning;
  std::string kind;  // Errc name or a short machine string such as "Renamed"
  std::string message;
  std::optional<std::size_t> step_index;
  std::string raw;

  static Diagnostic warning(std::string kind, std::string message,
                            std::optional<std::size_t> step = std::nullopt,
                            std::string raw = {});
  static Diagnostic error(std::string kind, std::string message,
                          std::optional<std::size_t> step = std::nullopt,
                          std::string raw = {});
  static Diagnostic from(const Error& e, std::optional<std::size_t> step = std::nullopt,
                         std::string raw = {});

  bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

nlohmann::ordered_json to_json(const Diagnostic& d);
Diagnostic diagnostic_from_json(const nlohmann::ordered_json& j);

}  // namespace echo

#include "echo/diagnostic.hpp"
#include "echo/error.hpp"

namespace echo {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::InvalidScale: return "InvalidScale";
    case Errc::NotFound: return "NotFound";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::InvalidResolution: return "InvalidResolution";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownVerb: return "UnknownVerb";
    case Errc::MalformedVector: return "MalformedVector";
    case Errc::UnknownMaterial: return "UnknownMaterial";
    case Errc::NonPositiveScale: return "NonPositiveScale";
    case Errc::NoJsonFound: return "NoJsonFound";
    case Errc::SchemaError: return "SchemaError";
    case Errc::TargetMissing: return "TargetMissing";
    case Errc::RestoreCollision: return "RestoreCollision";
    case Errc::LabelSchemaError: return "LabelSchemaError";
    case Errc::BannedCategory: return "BannedCategory";
    case Errc::EmptyText: return "EmptyText";
    case Errc::UnknownCategory: return "UnknownCategory";
    case Errc::EmptyCatalog: return "EmptyCatalog";
    case Errc::CategoryNotInList: return "CategoryNotInList";
    case Errc::EmbedderMismatch: return "EmbedderMismatch";
    case Errc::IoError: return "IoError";
    case Errc::ProviderError: return "ProviderError";
    case Errc::Timeout: return "Timeout";
    case Errc::HttpError: return "HttpError";
    case Errc::AuthError: return "AuthError";
    case Errc::MissingSlot: return "MissingSlot";
    case Errc::TranscriptExhausted: return "TranscriptExhausted";
    case Errc::StageMismatch: return "StageMismatch";
    case Errc::AssetResolutionError: return "AssetResolutionError";
    case Errc::WrongState: return "WrongState";
    case Errc::AtomicRollback: return "AtomicRollback";
    case Errc::LogCorrupt: return "LogCorrupt";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::optional<Errc> errc_from_string(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(Errc::ConfigError); ++i) {
    if (to_string(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

Diagnostic Diagnostic::warning(std::string kind, std::string message,
                               std::optional<std::size_t> step, std::string raw) {
  return Diagnostic{Severity::Warning, std::move(kind), std::move(message), step,
                    std::move(raw)};
}

Diagnostic Diagnostic::error(std::string kind, std::string message,
                             std::optional<std::size_t> step, std::string raw) {
  return Diagnostic{Severity::Error, std::move(kind), std::move(message), step,
                    std::move(raw)};
}

Diagnostic Diagnostic::from(const Error& e, std::optional<std::size_t> step,
                            std::string raw) {
  return error(std::string(to_string(e.code())), e.what(), step, std::move(raw));
}

nlohmann::ordered_json to_json(const Diagnostic& d) {
  nlohmann::ordered_json j = {
      {"severity", d.severity == Severity::Warning ? "warning" : "error"},
      {"kind", d.kind},
      {"message", d.message},
  };
  j["step"] = d.step_index ? nlohmann::ordered_json(*d.step_index) : nlohmann::ordered_json(nullptr);
  if (!d.raw.empty()) j["raw"] = d.raw;
  return j;
}

Diagnostic diagnostic_from_json(const nlohmann::ordered_json& j) {
  Diagnostic d;
  d.severity = j.value("severity", "warning") == "error" ? Severity::Error : Severity::Warning;
  d.kind = j.value("kind", "");
  d.message = j.value("message", "");
  if (j.contains("step") && j["step"].is_number_unsigned()) {
    d.step_index = j["step"].get<std::size_t>();
  }
  d.raw = j.value("raw", "");
  return d;
}

}  // namespace echo

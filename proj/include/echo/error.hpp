#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace echo {

// Every failure the engine reports is one of these kinds. The service maps
// them to HTTP statuses and the CLI maps them to exit codes.
enum class Errc {
  // scene-core
  DuplicateName,
  InvalidScale,
  NotFound,
  InvalidValue,
  InvalidResolution,
  // action-dsl
  SyntaxError,
  UnknownVerb,
  MalformedVector,
  UnknownMaterial,
  NonPositiveScale,
  NoJsonFound,
  SchemaError,
  TargetMissing,
  RestoreCollision,
  // asset-catalog
  LabelSchemaError,
  BannedCategory,
  EmptyText,
  UnknownCategory,
  EmptyCatalog,
  CategoryNotInList,
  EmbedderMismatch,
  IoError,
  // providers / pipeline
  ProviderError,
  Timeout,
  HttpError,
  AuthError,
  MissingSlot,
  TranscriptExhausted,
  StageMismatch,
  AssetResolutionError,
  // suggestion-engine
  WrongState,
  AtomicRollback,
  LogCorrupt,
  // generic
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;
std::optional<Errc> errc_from_string(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(Errc code, const std::string& message, std::size_t offset)
      : std::runtime_error(message), code_(code), offset_(offset) {}

  Errc code() const noexcept { return code_; }

  // Byte offset into the parsed text, set for syntax-level failures.
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::size_t> offset_;
};

// Kinds raised by a provider call, as opposed to by parsing its output.
inline bool is_provider_failure(Errc code) {
  return code == Errc::ProviderError || code == Errc::Timeout ||
         code == Errc::HttpError || code == Errc::AuthError ||
         code == Errc::TranscriptExhausted || code == Errc::StageMismatch;
}

}  // namespace echo

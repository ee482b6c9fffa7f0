#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/pipeline/prompt.hpp"

namespace echo {

struct TranscriptEntry {
  std::uint64_t seq = 0;
  std::string ts;
  Stage stage = Stage::SuggestionGen;
  std::string system;
  std::string user;
  std::optional<std::string> image_sha256;
  std::string response;
  std::optional<std::string> error;  // "Kind: message" when the call failed
};

nlohmann::ordered_json entry_to_json(const TranscriptEntry& e);
TranscriptEntry entry_from_json(const nlohmann::ordered_json& j);

// Append-only, internally synchronized record of provider calls. When a
// sink path is set every entry is also appended to that JSON-lines file as
// it is recorded.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::string sink_path);

  void append(TranscriptEntry entry);
  std::vector<TranscriptEntry> entries() const;
  std::size_t size() const;
  // One JSON object per line, in recording order.
  std::string to_jsonl() const;

  // Reads a JSON-lines transcript. Throws IoError or SchemaError.
  static std::vector<TranscriptEntry> load(const std::string& path);

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
  std::string sink_path_;
};

// Text-in/text-out model endpoint. complete() is safe to call concurrently
// and records every call, failures included, in the attached transcript.
class Provider {
 public:
  virtual ~Provider() = default;

  std::string complete(const PromptBundle& bundle);

  void set_transcript(std::shared_ptr<Transcript> t) { transcript_ = std::move(t); }
  const std::shared_ptr<Transcript>& transcript() const { return transcript_; }

  virtual std::string id() const = 0;

 protected:
  virtual std::string do_complete(const PromptBundle& bundle) = 0;

 private:
  std::shared_ptr<Transcript> transcript_;
};

// Deterministic canned responses. A rule matches when its stage equals the
// request's and every keyword occurs (case-insensitively) in the request's
// primary slot: "instruction" for SuggestionGen, "suggestion" for ActionGen,
// "object_name" for CategorySelect and Labeling. First match wins.
// Responses may use {{slot}} placeholders plus {{best_category}}, the
// listed category that best matches the object name.
struct MockRule {
  Stage stage = Stage::SuggestionGen;
  std::vector<std::string> keywords;
  std::string response;
  int delay_ms = 0;
};

struct MockRuleTable {
  std::vector<MockRule> rules;
  std::string fallback = R"({"suggestions":[]})";
};

// {"rules": [{"stage", "keywords", "response" (string or JSON value),
// "delay_ms"?}], "fallback"?}. Throws SchemaError.
MockRuleTable parse_rule_table(const nlohmann::ordered_json& j);
MockRuleTable load_rule_table(const std::string& path);

class MockProvider : public Provider {
 public:
  explicit MockProvider(MockRuleTable table) : table_(std::move(table)) {}
  std::string id() const override { return "mock"; }

 protected:
  std::string do_complete(const PromptBundle& bundle) override;

 private:
  MockRuleTable table_;
};

// Serves a recorded transcript in order. Each request must have the stage of
// the next recorded entry (StageMismatch); running past the end is
// TranscriptExhausted. Recorded failures are re-raised.
class ReplayProvider : public Provider {
 public:
  explicit ReplayProvider(std::vector<TranscriptEntry> entries);
  static std::unique_ptr<ReplayProvider> from_file(const std::string& path);
  std::string id() const override { return "replay"; }
  std::size_t remaining() const;

 protected:
  std::string do_complete(const PromptBundle& bundle) override;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
  std::size_t cursor_ = 0;
};

struct ExternalProviderOptions {
  std::string endpoint;  // full URL of a chat-completions endpoint
  std::string model = "gpt-4o";
  std::string api_key;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff{1000};
};

// OpenAI-style chat completion. The top view is sent as a PNG data URI.
// Returns choices[0].message.content, or the raw body when the response has
// another shape. Throws AuthError, Timeout or HttpError.
class ExternalProvider : public Provider {
 public:
  explicit ExternalProvider(ExternalProviderOptions options) : options_(std::move(options)) {}
  std::string id() const override { return "external"; }

  // The request body that would be posted for a bundle.
  nlohmann::ordered_json request_body(const PromptBundle& bundle) const;

 protected:
  std::string do_complete(const PromptBundle& bundle) override;

 private:
  ExternalProviderOptions options_;
};

// provider.toml:
//   [provider]  kind = "mock" | "replay" | "external"; rules; transcript;
//               endpoint; model; api_key; timeout_ms; backoff_ms
//   [embedder]  kind = "hash-ngram" | "external"; endpoint; model; api_key
// ECHO_PROVIDER_KEY overrides both api_key values.
struct EmbedderSettings {
  std::string kind = "hash-ngram";
  std::string endpoint;
  std::string model;
  std::string api_key;
};

struct ProviderSettings {
  std::string kind = "mock";
  std::string rules_path;
  std::string transcript_path;
  ExternalProviderOptions external;
  EmbedderSettings embedder;
};

// Relative paths are resolved against the file's directory. Throws
// ConfigError.
ProviderSettings load_provider_settings(const std::string& path);
// "mock", "replay:<path>" or "external" over a base configuration.
ProviderSettings settings_from_spec(std::string_view spec, ProviderSettings base);
std::unique_ptr<Provider> make_provider(const ProviderSettings& settings);

// PNG encoding of a binary PPM, for endpoints that reject pixmaps.
std::string ppm_to_png(const std::string& ppm);

}  // namespace echo

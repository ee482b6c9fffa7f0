#include <cstdlib>
#include <filesystem>

#include <png.h>
#include <toml.hpp>

#include "echo/error.hpp"
#include "echo/pipeline/provider.hpp"
#include "echo/scene/top_view.hpp"
#include "echo/util/http_client.hpp"
#include "echo/util/text.hpp"

namespace echo {

std::string ppm_to_png(const std::string& ppm) {
  TopViewImage img = parse_ppm(ppm);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.rgb.data(), 0, nullptr)) {
    throw Error(Errc::InvalidValue, std::string("png sizing failed: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.rgb.data(), 0, nullptr)) {
    throw Error(Errc::InvalidValue, std::string("png encoding failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

nlohmann::ordered_json ExternalProvider::request_body(const PromptBundle& bundle) const {
  using J = nlohmann::ordered_json;
  J user_content = J::array();
  user_content.push_back({{"type", "text"}, {"text", bundle.user_text}});
  if (bundle.image) {
    std::string mime = bundle.image->mime_type;
    std::string data = bundle.image->base64;
    if (mime == "image/x-portable-pixmap") {
      data = base64_encode(ppm_to_png(base64_decode(data)));
      mime = "image/png";
    }
    user_content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:" + mime + ";base64," + data}}}});
  }
  return {{"model", options_.model},
          {"temperature", options_.temperature},
          {"messages",
           J::array({{{"role", "system"}, {"content", bundle.system_text}},
                     {{"role", "user"}, {"content", user_content}}})}};
}

std::string ExternalProvider::do_complete(const PromptBundle& bundle) {
  if (options_.endpoint.empty()) throw Error(Errc::ConfigError, "external provider has no endpoint");
  HttpHeaders headers;
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  HttpRetryPolicy policy{options_.timeout, 1, options_.backoff};
  std::string body = http_post_json(options_.endpoint, request_body(bundle).dump(), headers, policy);
  try {
    auto j = nlohmann::ordered_json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return body;
}

// ---------------------------------------------------------------------------
// settings

namespace {

std::string resolve_path(const std::filesystem::path& base, std::string value) {
  if (value.empty()) return value;
  std::filesystem::path p(value);
  return p.is_absolute() ? value : (base / p).lexically_normal().string();
}

void apply_key_override(ProviderSettings& s) {
  if (const char* key = std::getenv("ECHO_PROVIDER_KEY"); key && *key) {
    s.external.api_key = key;
    s.embedder.api_key = key;
  }
}

}  // namespace

ProviderSettings load_provider_settings(const std::string& path) {
  toml::table tbl;
  try {
    tbl = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw Error(Errc::ConfigError, path + ": " + std::string(e.description()));
  }
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  ProviderSettings s;
  auto provider = tbl["provider"];
  s.kind = provider["kind"].value_or(s.kind);
  if (s.kind != "mock" && s.kind != "replay" && s.kind != "external") {
    throw Error(Errc::ConfigError, path + ": unknown provider kind '" + s.kind + "'");
  }
  s.rules_path = resolve_path(base, provider["rules"].value_or(std::string()));
  s.transcript_path = resolve_path(base, provider["transcript"].value_or(std::string()));
  s.external.endpoint = provider["endpoint"].value_or(std::string());
  s.external.model = provider["model"].value_or(s.external.model);
  s.external.api_key = provider["api_key"].value_or(std::string());
  s.external.timeout = std::chrono::milliseconds(
      provider["timeout_ms"].value_or(static_cast<std::int64_t>(s.external.timeout.count())));
  s.external.backoff = std::chrono::milliseconds(
      provider["backoff_ms"].value_or(static_cast<std::int64_t>(s.external.backoff.count())));

  auto embedder = tbl["embedder"];
  s.embedder.kind = embedder["kind"].value_or(s.embedder.kind);
  if (s.embedder.kind != "hash-ngram" && s.embedder.kind != "external") {
    throw Error(Errc::ConfigError, path + ": unknown embedder kind '" + s.embedder.kind + "'");
  }
  s.embedder.endpoint = embedder["endpoint"].value_or(std::string());
  s.embedder.model = embedder["model"].value_or(std::string());
  s.embedder.api_key = embedder["api_key"].value_or(std::string());
  apply_key_override(s);
  return s;
}

ProviderSettings settings_from_spec(std::string_view spec, ProviderSettings base) {
  if (spec == "mock" || spec == "external") {
    base.kind = std::string(spec);
  } else if (spec.rfind("replay:", 0) == 0 && spec.size() > 7) {
    base.kind = "replay";
    base.transcript_path = std::string(spec.substr(7));
  } else {
    throw Error(Errc::ConfigError, "provider must be mock, replay:<path> or external");
  }
  apply_key_override(base);
  return base;
}

std::unique_ptr<Provider> make_provider(const ProviderSettings& s) {
  if (s.kind == "mock") {
    MockRuleTable table;
    if (!s.rules_path.empty()) table = load_rule_table(s.rules_path);
    return std::make_unique<MockProvider>(std::move(table));
  }
  if (s.kind == "replay") {
    if (s.transcript_path.empty()) throw Error(Errc::ConfigError, "replay needs a transcript path");
    return ReplayProvider::from_file(s.transcript_path);
  }
  if (s.kind == "external") return std::make_unique<ExternalProvider>(s.external);
  throw Error(Errc::ConfigError, "unknown provider kind '" + s.kind + "'");
}

}  // namespace echo

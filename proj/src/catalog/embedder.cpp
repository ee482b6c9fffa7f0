#include "echo/catalog/embedder.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "echo/error.hpp"
#include "echo/util/http_client.hpp"

namespace echo {

namespace {

void normalize_in_place(Embedding& v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  if (sum == 0.0) throw Error(Errc::EmptyText, "embedding has zero length");
  double inv = 1.0 / std::sqrt(sum);
  for (double& x : v) x *= inv;
}

bool is_ascii_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

}  // namespace

std::string HashNgramEmbedder::normalize(std::string_view text) {
  std::string out = " ";
  bool pending_space = false;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || is_ascii_alnum(c)) {
      if (pending_space && out.size() > 1) out += ' ';
      pending_space = false;
      out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else {
      pending_space = true;
    }
  }
  if (out.size() == 1) return {};
  out += ' ';
  return out;
}

std::uint32_t HashNgramEmbedder::bucket(std::string_view trigram) {
  std::uint32_t h = 2166136261u;
  for (char ch : trigram) {
    h ^= static_cast<unsigned char>(ch);
    h *= 16777619u;
  }
  return h % kDimensions;
}

Embedding HashNgramEmbedder::embed(std::string_view text) const {
  std::string norm = normalize(text);
  if (norm.empty()) throw Error(Errc::EmptyText, "nothing to embed");
  Embedding v(kDimensions, 0.0);
  for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
    v[bucket(std::string_view(norm).substr(i, 3))] += 1.0;
  }
  normalize_in_place(v);
  return v;
}

Embedding ExternalEmbedder::embed(std::string_view text) const {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(Errc::EmptyText, "nothing to embed");
  }
  nlohmann::ordered_json body = {{"model", options_.model}, {"input", std::string(text)}};
  HttpHeaders headers;
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  HttpRetryPolicy policy{options_.timeout, 1, std::chrono::milliseconds(500)};
  std::string reply = http_post_json(options_.endpoint, body.dump(), headers, policy);
  Embedding v;
  try {
    v = nlohmann::ordered_json::parse(reply).at("data").at(0).at("embedding").get<Embedding>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ProviderError, std::string("embedding response: ") + e.what());
  }
  normalize_in_place(v);
  return v;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::InvalidValue, "embedding dimensions differ (" + std::to_string(a.size()) +
                                        " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

}  // namespace echo

#include "echo/app/runtime.hpp"

#include "echo/error.hpp"

namespace echo {

std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& s) {
  if (s.kind == "hash-ngram") return std::make_unique<HashNgramEmbedder>();
  if (s.kind == "external") {
    if (s.endpoint.empty()) throw Error(Errc::ConfigError, "external embedder needs an endpoint");
    ExternalEmbedderOptions o;
    o.endpoint = s.endpoint;
    o.model = s.model;
    o.api_key = s.api_key;
    return std::make_unique<ExternalEmbedder>(o);
  }
  throw Error(Errc::ConfigError, "unknown embedder kind '" + s.kind + "'");
}

}  // namespace echo

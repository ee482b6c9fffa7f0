#pragma once

#include <memory>

#include "echo/catalog/embedder.hpp"
#include "echo/pipeline/provider.hpp"

namespace echo {

// Throws ConfigError for an unknown kind or an external embedder without an
// endpoint.
std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& settings);

}  // namespace echo

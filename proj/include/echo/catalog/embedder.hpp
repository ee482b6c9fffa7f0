#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace echo {

using Embedding = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  // Unit-length vector; equal text gives an equal vector. Throws EmptyText.
  virtual Embedding embed(std::string_view text) const = 0;
};

// Character 3-gram feature hashing. Text is lowercased (ASCII), every ASCII
// character other than a letter or digit becomes a space, runs of spaces
// collapse, the ends are trimmed and then padded with one space each. Every
// 3-byte window is hashed with 32-bit FNV-1a into one of 256 buckets; the
// bucket counts are L2-normalized.
class HashNgramEmbedder : public Embedder {
 public:
  static constexpr std::size_t kDimensions = 256;
  static constexpr std::string_view kId = "hash-ngram";

  std::string id() const override { return std::string(kId); }
  Embedding embed(std::string_view text) const override;

  // The padded, normalized text the 3-grams are taken from; empty when the
  // input has no letters or digits.
  static std::string normalize(std::string_view text);
  static std::uint32_t bucket(std::string_view trigram);
};

struct ExternalEmbedderOptions {
  std::string endpoint;  // OpenAI-style embeddings URL
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
};

// Posts {"model", "input"} and reads data[0].embedding, normalizing it.
class ExternalEmbedder : public Embedder {
 public:
  explicit ExternalEmbedder(ExternalEmbedderOptions options) : options_(std::move(options)) {}
  std::string id() const override { return "external"; }
  Embedding embed(std::string_view text) const override;

 private:
  ExternalEmbedderOptions options_;
};

// Dot product of two unit vectors clamped to [-1, 1]. Throws InvalidValue
// on a dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);

}  // namespace echo

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "echo/engine/engine.hpp"

namespace echo {

struct AblationInstruction {
  std::string dimension;
  std::string abstraction;
  std::string instruction;
};

// JSON array of {"dimension", "abstraction", "instruction"}. Throws IoError
// or SchemaError.
std::vector<AblationInstruction> load_instructions(const std::string& path);

// Builds the provider for one cell. index is 1-based.
using CellProviderFactory =
    std::function<std::shared_ptr<Provider>(const std::string& condition, std::size_t index)>;

struct AblationOptions {
  std::vector<AblationInstruction> instructions;
  std::vector<std::string> conditions;
  std::string out_dir;
  SceneGraph seed{"seed"};
  CellProviderFactory provider_for;
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const Embedder> embedder;
  int topview_resolution = 256;
};

struct AblationCell {
  std::string condition;
  std::size_t index = 0;
  std::string dir;
  std::size_t suggestions = 0;
  std::size_t applied = 0;
  std::size_t failed = 0;
  std::size_t provider_calls = 0;
};

// Cell directory: {out}/{condition}/{index}/ with scene.json, topview.ppm,
// transcript.jsonl and session.json. Transcripts and sessions are written
// without wall-clock fields so a replayed grid is byte-identical.
std::string cell_dir(const std::string& out_dir, const std::string& condition, std::size_t index);

// Every condition is validated up front (InvalidArgument). Each cell runs on
// a fresh copy of the seed with its own engine and provider, then applies
// every Pending suggestion in order.
std::vector<AblationCell> run_ablation(const AblationOptions& options);

}  // namespace echo

#include "echo/app/ablation.hpp"

#include <filesystem>

#include "echo/error.hpp"
#include "echo/scene/top_view.hpp"
#include "echo/util/text.hpp"

namespace echo {

namespace fs = std::filesystem;
using J = nlohmann::ordered_json;

std::vector<AblationInstruction> load_instructions(const std::string& path) {
  J j;
  try {
    j = J::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
  if (!j.is_array()) throw Error(Errc::SchemaError, path + ": expected an array of instructions");
  std::vector<AblationInstruction> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("instruction") || !item["instruction"].is_string()) {
      throw Error(Errc::SchemaError, path + ": every item needs an \"instruction\" string");
    }
    AblationInstruction a;
    a.instruction = item["instruction"].get<std::string>();
    a.dimension = item.value("dimension", "");
    a.abstraction = item.value("abstraction", "");
    out.push_back(std::move(a));
  }
  return out;
}

std::string cell_dir(const std::string& out_dir, const std::string& condition, std::size_t index) {
  return (fs::path(out_dir) / condition / std::to_string(index)).string();
}

namespace {

std::string transcript_text(const Transcript& t) {
  std::string out;
  for (const auto& e : t.entries()) {
    J j = entry_to_json(e);
    j.erase("ts");
    out += j.dump() + "\n";
  }
  return out;
}

AblationCell run_cell(const AblationOptions& opt, const std::string& condition, std::size_t index) {
  const AblationInstruction& item = opt.instructions[index - 1];
  AblationCell cell;
  cell.condition = condition;
  cell.index = index;
  cell.dir = cell_dir(opt.out_dir, condition, index);
  fs::create_directories(cell.dir);

  std::shared_ptr<Provider> provider = opt.provider_for(condition, index);
  auto transcript = std::make_shared<Transcript>();
  provider->set_transcript(transcript);

  Engine engine(EngineOptions{}, provider, opt.catalog, opt.embedder);
  SceneGraph seed = opt.seed;
  std::string scene = engine.create_scene(std::move(seed), std::string("cell"));
  PipelineConfig config = PipelineConfig::from_condition(condition);
  std::string sid = engine.instruct(scene, item.instruction, config);
  engine.wait_idle();
  for (const auto& e : engine.session(sid).entries) {
    if (e.state != SuggestionState::Pending) continue;
    try {
      engine.apply(sid, e.id());
    } catch (const Error& err) {
      if (err.code() != Errc::AtomicRollback) throw;
    }
  }

  Session session = engine.session(sid);
  cell.suggestions = session.entries.size();
  for (const auto& e : session.entries) {
    cell.applied += e.state == SuggestionState::Applied;
    cell.failed += e.state == SuggestionState::Failed;
  }
  cell.provider_calls = transcript->size();

  SceneGraph final_scene = engine.snapshot(scene).to_scene();
  J session_json = session_to_json(session);
  session_json.erase("created_at");
  session_json["dimension"] = item.dimension;
  session_json["abstraction"] = item.abstraction;
  write_file_atomic(cell.dir + "/scene.json", serialize_document(final_scene));
  write_file_atomic(cell.dir + "/topview.ppm",
                    render_top_view(final_scene, opt.topview_resolution).ppm());
  write_file_atomic(cell.dir + "/transcript.jsonl", transcript_text(*transcript));
  write_file_atomic(cell.dir + "/session.json", session_json.dump(2) + "\n");
  return cell;
}

}  // namespace

std::vector<AblationCell> run_ablation(const AblationOptions& opt) {
  if (!opt.provider_for) throw Error(Errc::InvalidArgument, "ablation needs a provider factory");
  for (const auto& c : opt.conditions) (void)PipelineConfig::from_condition(c);
  if (opt.topview_resolution < kMinTopViewResolution ||
      opt.topview_resolution > kMaxTopViewResolution) {
    throw Error(Errc::InvalidResolution, "top view resolution out of range");
  }
  std::vector<AblationCell> cells;
  for (const auto& condition : opt.conditions) {
    for (std::size_t i = 1; i <= opt.instructions.size(); ++i) {
      cells.push_back(run_cell(opt, condition, i));
    }
  }
  return cells;
}

}  // namespace echo

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <set>
#include <thread>

#include "echo/engine/engine.hpp"
#include "echo/error.hpp"
#include "echo/util/text.hpp"

using namespace echo;
namespace fs = std::filesystem;

namespace {

const std::string kData = ECHO_DATA_DIR;

SceneGraph seed() { return deserialize_parameters(read_file(kData + "/seed_scene.json"), "living"); }

std::shared_ptr<const Catalog> bundled_catalog() {
  static auto c = std::make_shared<const Catalog>(load_catalog(kData + "/catalog.json"));
  return c;
}

std::shared_ptr<const Embedder> embedder() {
  static auto e = std::make_shared<const HashNgramEmbedder>();
  return e;
}

std::unique_ptr<Engine> make_engine(std::shared_ptr<Provider> provider, EngineOptions opts = {}) {
  return std::make_unique<Engine>(opts, std::move(provider), bundled_catalog(), embedder());
}

std::shared_ptr<Provider> data_mock() {
  return std::make_shared<MockProvider>(load_rule_table(kData + "/mock_rules.json"));
}

std::string steps(std::initializer_list<const char*> commands) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const char* c : commands) arr.push_back({{"action_command", c}});
  return nlohmann::ordered_json{{"steps", arr}}.dump();
}

std::string suggestions(std::initializer_list<const char*> texts) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const char* t : texts) arr.push_back({{"suggestion", t}});
  return nlohmann::ordered_json{{"suggestions", arr}}.dump();
}

// Rule table where each suggestion text keys its own canned action list.
std::shared_ptr<MockProvider> scripted(
    const std::string& instruction_keyword, std::initializer_list<const char*> texts,
    std::vector<std::pair<std::string, std::string>> actions, int delay_ms = 0) {
  MockRuleTable table;
  table.rules.push_back({Stage::SuggestionGen, {instruction_keyword}, suggestions(texts), 0});
  for (auto& [kw, body] : actions) table.rules.push_back({Stage::ActionGen, {kw}, body, delay_ms});
  table.rules.push_back(
      {Stage::CategorySelect, {}, R"js({"Category1":"{{best_category}}","Description":"A {{object_name}}."})js", 0});
  return std::make_shared<MockProvider>(std::move(table));
}

std::string params(Engine& e, const std::string& scene) {
  return serialize_parameters(e.snapshot(scene).objects());
}

const SceneObject* object(const SceneSnapshot& snap, std::string_view name) {
  for (const auto& o : snap.objects()) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(StateMachineTest, LegalTransitionsOnly) {
  using S = SuggestionState;
  const S all[] = {S::Processing, S::Pending, S::Applied, S::Failed};
  std::set<std::pair<S, S>> legal = {{S::Processing, S::Pending}, {S::Processing, S::Failed},
                                     {S::Pending, S::Applied},    {S::Applied, S::Pending},
                                     {S::Pending, S::Processing}, {S::Applied, S::Processing},
                                     {S::Pending, S::Failed},     {S::Failed, S::Processing}};
  for (S a : all) {
    for (S b : all) EXPECT_EQ(is_legal_transition(a, b), legal.count({a, b}) > 0);
  }
  for (S s : all) EXPECT_EQ(suggestion_state_from_string(to_string(s)), s);
}

TEST(EngineTest, HomeTheaterSessionReachesPending) {
  auto engine = make_engine(data_mock());
  std::string scene = engine->create_scene(seed());
  std::string sid =
      engine->instruct(scene, "Set up a home theater area for movie nights.", PipelineConfig{});
  Session s = engine->session(sid);
  ASSERT_EQ(s.entries.size(), 3u);
  for (const auto& e : s.entries) {
    EXPECT_EQ(e.state, SuggestionState::Pending) << e.id();
    EXPECT_FALSE(e.actions.empty());
    EXPECT_FALSE(e.patch);
    EXPECT_EQ(e.generation, 1);
  }
}

TEST(EngineTest, BackgroundGenerationPassesThroughProcessing) {
  auto provider = scripted("theater", {"add a screen"},
                           {{"add a screen", steps({"Move {Sofa} to [(0, 0.42, -2)]"})}}, 300);
  auto engine = make_engine(provider, EngineOptions{std::nullopt, 2});
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "home theater", PipelineConfig{});
  EXPECT_EQ(engine->session(sid).entries[0].state, SuggestionState::Processing);
  EXPECT_EQ(code_of([&] { engine->apply(sid, "s1"); }), Errc::WrongState);
  EXPECT_EQ(code_of([&] { engine->regenerate(sid, "s1"); }), Errc::WrongState);
  engine->wait_idle();
  EXPECT_EQ(engine->session(sid).entries[0].state, SuggestionState::Pending);
  engine->apply(sid, "s1");
  EXPECT_EQ(engine->session(sid).entries[0].state, SuggestionState::Applied);
}

TEST(EngineTest, ZeroSuggestionsGivesEmptySession) {
  auto engine = make_engine(data_mock());
  std::string scene = engine->create_scene(seed());
  Session s = engine->session(engine->instruct(scene, "hum a tune", PipelineConfig{}));
  EXPECT_TRUE(s.entries.empty());
  EXPECT_TRUE(s.diagnostics.empty());
  EXPECT_EQ(code_of([&] { engine->instruct(scene, "   ", PipelineConfig{}); }),
            Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { engine->instruct("nope", "x", PipelineConfig{}); }), Errc::NotFound);
}

TEST(EngineTest, ProviderFailureOnSuggestionsIsRecorded) {
  TranscriptEntry e;
  e.stage = Stage::SuggestionGen;
  e.error = "HttpError: 503";
  auto engine = make_engine(std::make_shared<ReplayProvider>(std::vector<TranscriptEntry>{e}));
  std::string scene = engine->create_scene(seed());
  Session s = engine->session(engine->instruct(scene, "anything", PipelineConfig{}));
  EXPECT_TRUE(s.entries.empty());
  ASSERT_EQ(s.diagnostics.size(), 1u);
  EXPECT_EQ(s.diagnostics[0].kind, "HttpError");
}

TEST(EngineTest, OneUnparseableEntryFails) {
  auto provider = scripted("mixed", {"first idea", "second idea", "third idea"},
                           {{"first", steps({"Move {Sofa} to [(0, 0.42, -2)]"})},
                            {"second", "I cannot do that."},
                            {"third", steps({"Change {Rug} to [Grass]"})}});
  auto engine = make_engine(provider);
  std::string scene = engine->create_scene(seed());
  Session s = engine->session(engine->instruct(scene, "mixed bag", PipelineConfig{}));
  ASSERT_EQ(s.entries.size(), 3u);
  EXPECT_EQ(s.entries[0].state, SuggestionState::Pending);
  EXPECT_EQ(s.entries[1].state, SuggestionState::Failed);
  EXPECT_EQ(s.entries[1].diagnostics[0].kind, "NoJsonFound");
  EXPECT_EQ(s.entries[2].state, SuggestionState::Pending);
}

TEST(EngineTest, NoStageVariantWrapsInstruction) {
  auto engine = make_engine(data_mock());
  std::string scene = engine->create_scene(seed());
  Session s = engine->session(engine->instruct(scene, "Change the sofa color to navy blue.",
                                               PipelineConfig::from_condition("V+OP")));
  ASSERT_EQ(s.entries.size(), 1u);
  EXPECT_EQ(s.entries[0].text.text, "Change the sofa color to navy blue.");
  EXPECT_EQ(s.entries[0].state, SuggestionState::Pending);
}

TEST(EngineTest, ApplyAddThenMove) {
  auto provider = scripted("poster", {"hang a movie poster"},
                           {{"movie poster", steps({"Add {Movie_Poster} to [(-3.80, 1.00, 0.05)]",
                                                    "Move {Movie_Poster} to [(-1.00, 1.00, -3.95)]"})}});
  auto engine = make_engine(provider);
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "poster please", PipelineConfig{});
  Revision before = engine->snapshot(scene).revision();
  Revision rev = engine->apply(sid, "s1");
  EXPECT_EQ(rev, before + 1);
  SceneSnapshot snap = engine->snapshot(scene);
  ASSERT_TRUE(object(snap, "Movie_Poster"));
  EXPECT_EQ(object(snap, "Movie_Poster")->position, Vector3(-1.0, 1.0, -3.95));
  Session s = engine->session(sid);
  EXPECT_EQ(s.entries[0].state, SuggestionState::Applied);
  ASSERT_TRUE(s.entries[0].patch);
  EXPECT_FALSE(s.entries[0].patch->empty());
  EXPECT_EQ(code_of([&] { engine->apply(sid, "s1"); }), Errc::WrongState);
  EXPECT_EQ(code_of([&] { engine->apply(sid, "s9"); }), Errc::NotFound);
}

TEST(EngineTest, ApplyIsAtomic) {
  auto provider = scripted("broken", {"two steps"},
                           {{"two steps", steps({"Color {Sofa} to red[(255, 0, 0)]",
                                                 "Move {Ghost} to [(1, 0, 1)]"})}});
  auto engine = make_engine(provider);
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "broken idea", PipelineConfig{});
  const std::string before = params(*engine, scene);
  const Revision rev = engine->snapshot(scene).revision();
  const std::size_t log_size = engine->log(scene).size();
  EXPECT_EQ(code_of([&] { engine->apply(sid, "s1"); }), Errc::AtomicRollback);
  EXPECT_EQ(params(*engine, scene), before);
  EXPECT_EQ(engine->snapshot(scene).revision(), rev);
  EXPECT_EQ(engine->log(scene).size(), log_size);
  Session s = engine->session(sid);
  EXPECT_EQ(s.entries[0].state, SuggestionState::Failed);
  bool missing = false;
  for (const auto& d : s.entries[0].diagnostics) {
    if (d.kind == "TargetMissing") {
      missing = true;
      EXPECT_EQ(d.step_index, 1u);
    }
  }
  EXPECT_TRUE(missing);
}

TEST(EngineTest, UndoRestoresExactlyAndIsSelective) {
  auto provider = scripted("two", {"recolor sofa", "move lamp"},
                           {{"recolor sofa", steps({"Color {Sofa} to navy[(0, 0, 128)]"})},
                            {"move lamp", steps({"Move {Floor_Lamp} to [(1.5, 0.9, -2.7)]"})}});
  auto engine = make_engine(provider);
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "two things", PipelineConfig{});
  const std::string initial = params(*engine, scene);

  engine->apply(sid, "s1");
  engine->undo(sid, "s1");
  EXPECT_EQ(params(*engine, scene), initial);
  EXPECT_FALSE(engine->session(sid).entries[0].patch);
  EXPECT_EQ(code_of([&] { engine->undo(sid, "s1"); }), Errc::WrongState);

  engine->apply(sid, "s1");
  engine->apply(sid, "s2");
  engine->undo(sid, "s1");
  SceneSnapshot snap = engine->snapshot(scene);
  EXPECT_EQ(object(snap, "Floor_Lamp")->position, Vector3(1.5, 0.9, -2.7));
  EXPECT_EQ(object(snap, "Sofa")->color, ColorRGB::from_hex("#8C8C8C"));
  EXPECT_EQ(engine->session(sid).entries[1].state, SuggestionState::Applied);
  engine->undo(sid, "s2");
  EXPECT_EQ(params(*engine, scene), initial);
}

TEST(EngineTest, ReapplyBehaviour) {
  auto provider = scripted("lamp", {"add a lamp", "shift the sofa", "move the sofa"},
                           {{"add a lamp", steps({"Add {Lamp} to [(1, 0.5, 1)]"})},
                            {"shift the sofa", steps({"Move {Sofa} to [(1, 0.42, -2)]"})},
                            {"move the sofa", steps({"Move {Sofa} to [(-1, 0.42, -2)]"})}});
  auto engine = make_engine(provider);
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "lamp time", PipelineConfig{});

  engine->apply(sid, "s1");
  const std::string first = params(*engine, scene);
  engine->undo(sid, "s1");
  engine->reapply(sid, "s1");
  EXPECT_EQ(params(*engine, scene), first);

  // absolute positions survive interleaving
  engine->apply(sid, "s2");
  engine->undo(sid, "s2");
  engine->apply(sid, "s3");
  engine->reapply(sid, "s2");
  EXPECT_EQ(object(engine->snapshot(scene), "Sofa")->position, Vector3(1, 0.42, -2));

  // a manual object now holds the name the Add wants
  engine->undo(sid, "s1");
  engine->manual_add(scene, {std::string("lamp_table_ceramic"), {}, {}, Vector3(2, 0.25, 2),
                             std::string("Lamp")});
  engine->reapply(sid, "s1");
  SceneSnapshot snap = engine->snapshot(scene);
  EXPECT_TRUE(object(snap, "Lamp_2"));
  Session after = engine->session(sid);
  bool renamed = false;
  for (const auto& d : after.entries[0].diagnostics) renamed |= d.kind == "Renamed";
  EXPECT_TRUE(renamed);
}

TEST(EngineTest, RegenerateUsesNextRecordedResponse) {
  auto entry = [](Stage st, std::string r) {
    TranscriptEntry e;
    e.stage = st;
    e.response = std::move(r);
    return e;
  };
  std::vector<TranscriptEntry> rec = {
      entry(Stage::SuggestionGen, suggestions({"make it cozy"})),
      entry(Stage::ActionGen, steps({"Color {Sofa} to beige[(220, 200, 170)]"})),
      entry(Stage::ActionGen, steps({"Change {Sofa} to [Leather]", "Move {Floor_Lamp} to [(1, 0.9, -2.5)]"})),
  };
  auto engine = make_engine(std::make_shared<ReplayProvider>(rec));
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "cozy", PipelineConfig{});
  ActionStepList before = engine->session(sid).entries[0].actions;
  engine->regenerate(sid, "s1");
  SuggestionEntry e = engine->session(sid).entries[0];
  EXPECT_EQ(e.generation, 2);
  EXPECT_EQ(e.state, SuggestionState::Pending);
  EXPECT_NE(e.actions, before);
  EXPECT_EQ(e.actions.size(), 2u);
}

TEST(EngineTest, RegenerateAppliedUndoesFirst) {
  auto engine = make_engine(data_mock());
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "Change the sofa color to navy blue.", PipelineConfig{});
  const std::string initial = params(*engine, scene);
  engine->apply(sid, "s1");
  EXPECT_NE(params(*engine, scene), initial);
  engine->regenerate(sid, "s1");
  EXPECT_EQ(params(*engine, scene), initial);
  auto log = engine->log(scene);
  ASSERT_GE(log.size(), 2u);
  EXPECT_EQ(log[log.size() - 2].kind, "undo");
  EXPECT_EQ(log.back().kind, "regenerate");
  EXPECT_EQ(engine->session(sid).entries[0].generation, 2);
}

TEST(EngineTest, ManualOperations) {
  auto engine = make_engine(data_mock());
  std::string scene = engine->create_scene(seed());
  ManualResult added = engine->manual_add(scene, {std::string("Armchair1_C1"), {}, {}, Vector3(1, 0.45, 1), {}});
  EXPECT_EQ(added.name, "Armchair1_C1");
  SceneSnapshot snap = engine->snapshot(scene);
  EXPECT_EQ(object(snap, "Armchair1_C1")->scale, Vector3(0.85, 0.95, 0.85));
  EXPECT_EQ(object(snap, "Armchair1_C1")->asset_ref, "Armchair1_C1");

  ManualResult by_query =
      engine->manual_add(scene, {{}, std::string("Plant"), std::string("tall fiddle leaf fig"), Vector3(-3, 0.85, 3), {}});
  EXPECT_EQ(by_query.name, "Fiddle_Leaf_Fig");
  EXPECT_EQ(code_of([&] { engine->manual_add(scene, {std::string("nope"), {}, {}, Vector3(), {}}); }),
            Errc::NotFound);
  EXPECT_EQ(code_of([&] { engine->manual_add(scene, {{}, {}, {}, Vector3(), {}}); }),
            Errc::InvalidArgument);

  const std::string before_mutate = params(*engine, scene);
  engine->manual_mutate(scene, "Sofa", {{Field::Color, "#112233"}, {Field::Material, "Leather"}});
  EXPECT_EQ(object(engine->snapshot(scene), "Sofa")->material, Material::Leather);
  engine->manual_undo(scene);
  EXPECT_EQ(params(*engine, scene), before_mutate);
  EXPECT_EQ(code_of([&] { engine->manual_undo(scene); }), Errc::WrongState);
  EXPECT_EQ(code_of([&] { engine->manual_mutate(scene, "Ghost", {{Field::Color, "#000000"}}); }),
            Errc::NotFound);
  EXPECT_EQ(code_of([&] { engine->manual_mutate(scene, "Sofa", {{Field::Scale, "(0, 1, 1)"}}); }),
            Errc::InvalidValue);

  engine->manual_destroy(scene, "Armchair1_C1");
  EXPECT_FALSE(object(engine->snapshot(scene), "Armchair1_C1"));
  engine->manual_undo(scene);
  EXPECT_TRUE(object(engine->snapshot(scene), "Armchair1_C1"));
  EXPECT_EQ(engine->log(scene).back().actor, "manual");
}

TEST(EngineTest, ManualChangesSurviveSuggestionUndo) {
  auto provider = scripted("lamp", {"move lamp"},
                           {{"move lamp", steps({"Move {Floor_Lamp} to [(1.5, 0.9, -2.7)]"})}});
  auto engine = make_engine(provider);
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "lamp", PipelineConfig{});
  engine->apply(sid, "s1");
  engine->manual_mutate(scene, "Rug", {{Field::Color, "#224466"}});
  engine->undo(sid, "s1");
  EXPECT_EQ(object(engine->snapshot(scene), "Rug")->color, ColorRGB::from_hex("#224466"));
}

TEST(EngineTest, StaleSuggestionAfterManualDestroy) {
  auto provider = scripted("rug", {"recolor rug"},
                           {{"recolor rug", steps({"Color {Sofa} to red[(255, 0, 0)]",
                                                   "Color {Rug} to blue[(0, 0, 255)]"})}});
  auto engine = make_engine(provider);
  std::string scene = engine->create_scene(seed());
  std::string sid = engine->instruct(scene, "rug", PipelineConfig{});
  engine->manual_destroy(scene, "Rug");
  const std::string before = params(*engine, scene);
  EXPECT_EQ(code_of([&] { engine->apply(sid, "s1"); }), Errc::AtomicRollback);
  EXPECT_EQ(params(*engine, scene), before);
}

TEST(OperationLogTest, ReplayMatchesEveryRevision) {
  auto engine = make_engine(data_mock());
  std::string scene = engine->create_scene(seed());
  std::map<Revision, std::string> checkpoints;
  auto mark = [&] {
    checkpoints[engine->snapshot(scene).revision()] = serialize_document(engine->snapshot(scene).to_scene());
  };
  mark();
  std::string sid = engine->instruct(scene, "Set up a home theater area for movie nights.", PipelineConfig{});
  for (const char* s : {"s1", "s2", "s3"}) {
    engine->apply(sid, s);
    mark();
  }
  engine->undo(sid, "s2");
  mark();
  engine->manual_mutate(scene, "Sofa", {{Field::Position, "(0, 0.42, -2.2)"}});
  mark();
  engine->manual_destroy(scene, "Recliner_Chair_2");
  mark();
  engine->manual_undo(scene);
  mark();
  engine->regenerate(sid, "s1");
  mark();

  auto records = engine->log(scene);
  EXPECT_EQ(serialize_document(replay_log(records)), checkpoints.rbegin()->second);
  // every prefix lands on a checkpoint
  for (std::size_t n = 1; n <= records.size(); ++n) {
    std::vector<LogRecord> prefix(records.begin(), records.begin() + n);
    SceneGraph g = replay_log(prefix);
    ASSERT_TRUE(checkpoints.count(g.revision())) << n;
    EXPECT_EQ(serialize_document(g), checkpoints[g.revision()]) << n;
  }
  // starting from the initial snapshot gives the same result
  SceneGraph from_snap = replay_log(replay_log({records.front()}).take_snapshot(), records);
  EXPECT_EQ(serialize_document(from_snap), checkpoints.rbegin()->second);
  EXPECT_EQ(serialize_document(replay_log({records.front()})), checkpoints.begin()->second);
}

TEST(OperationLogTest, CorruptionIsDetected) {
  auto engine = make_engine(data_mock());
  std::string scene = engine->create_scene(seed());
  engine->manual_mutate(scene, "Sofa", {{Field::Color, "#000000"}});
  engine->manual_mutate(scene, "Rug", {{Field::Color, "#000000"}});
  auto records = engine->log(scene);
  records[2].revision_before += 5;
  EXPECT_EQ(code_of([&] { replay_log(records); }), Errc::LogCorrupt);
  EXPECT_EQ(code_of([&] { replay_log(std::vector<LogRecord>(records.begin() + 1, records.end())); }),
            Errc::LogCorrupt);

  fs::path dir = scratch("echo_log_test");
  fs::create_directories(dir);
  write_file_atomic((dir / "good_then_torn.jsonl").string(),
                    log_record_to_json(engine->log(scene)[0]).dump() + "\n{\"seq\": 2, \"ki");
  EXPECT_EQ(OperationLog::load((dir / "good_then_torn.jsonl").string()).size(), 1u);
  write_file_atomic((dir / "bad.jsonl").string(), "{oops}\n{}\n");
  EXPECT_EQ(code_of([&] { OperationLog::load((dir / "bad.jsonl").string()); }), Errc::LogCorrupt);
  fs::remove_all(dir);
}

TEST(PersistenceTest, RestartRecoversScenesAndSessions) {
  fs::path dir = scratch("echo_engine_persist");
  std::string scene, sid, live;
  {
    auto engine = make_engine(data_mock(), EngineOptions{dir.string(), 0});
    scene = engine->create_scene(seed());
    sid = engine->instruct(scene, "Apply a nautical theme to the living room.", PipelineConfig{});
    engine->apply(sid, "s1");
    engine->apply(sid, "s2");
    engine->manual_mutate(scene, "Rug", {{Field::Color, "#102030"}});
    live = serialize_document(engine->snapshot(scene).to_scene());
  }
  {
    auto engine = make_engine(data_mock(), EngineOptions{dir.string(), 0});
    EXPECT_EQ(engine->scene_ids(), std::vector<std::string>{scene});
    EXPECT_EQ(serialize_document(engine->snapshot(scene).to_scene()), live);
    EXPECT_EQ(serialize_document(replay_log(engine->log(scene))), live);
    Session s = engine->session(sid);
    EXPECT_EQ(s.entries[0].state, SuggestionState::Applied);
    EXPECT_EQ(s.entries[2].state, SuggestionState::Pending);
    // recovered patches still undo
    engine->undo(sid, "s2");
    EXPECT_FALSE(object(engine->snapshot(scene), "Ship_Wheel_Decor"));
    // fresh ids continue after recovered ones
    EXPECT_EQ(engine->create_scene(seed()), "scene-2");
  }
  fs::remove_all(dir);
}

TEST(PersistenceTest, OrphanedProcessingEntriesFail) {
  fs::path dir = scratch("echo_engine_orphans");
  std::string sid;
  {
    auto engine = make_engine(data_mock(), EngineOptions{dir.string(), 0});
    std::string scene = engine->create_scene(seed());
    sid = engine->instruct(scene, "Set up a home theater area for movie nights.", PipelineConfig{});
  }
  // Rewrite the session as if the process died mid-generation.
  fs::path file = dir / "sessions" / (sid + ".json");
  auto j = nlohmann::ordered_json::parse(read_file(file.string()));
  j["entries"][1]["state"] = "processing";
  j["entries"][1]["actions"] = nlohmann::ordered_json::array();
  write_file_atomic(file.string(), j.dump(2));
  {
    auto engine = make_engine(data_mock(), EngineOptions{dir.string(), 0});
    Session s = engine->session(sid);
    EXPECT_EQ(s.entries[0].state, SuggestionState::Pending);
    EXPECT_EQ(s.entries[1].state, SuggestionState::Failed);
    EXPECT_EQ(s.entries[1].diagnostics.back().kind, "Interrupted");
    EXPECT_FALSE(engine->startup_diagnostics().empty());
  }
  fs::remove_all(dir);
}

TEST(PersistenceTest, ColdStartAndCorruptFile) {
  fs::path dir = scratch("echo_engine_cold");
  {
    auto engine = make_engine(data_mock(), EngineOptions{dir.string(), 0});
    EXPECT_TRUE(engine->scene_ids().empty());
  }
  write_file_atomic((dir / "scenes" / "broken.json").string(), "{not json");
  try {
    make_engine(data_mock(), EngineOptions{dir.string(), 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
    EXPECT_NE(std::string(e.what()).find("broken.json"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(PersistenceTest, LogAheadOfSceneFileIsReplayed) {
  fs::path dir = scratch("echo_engine_logahead");
  std::string scene, stale, live;
  {
    auto engine = make_engine(data_mock(), EngineOptions{dir.string(), 0});
    scene = engine->create_scene(seed());
    engine->manual_mutate(scene, "Sofa", {{Field::Color, "#010203"}});
    stale = read_file((dir / "scenes" / (scene + ".json")).string());
    engine->manual_mutate(scene, "Rug", {{Field::Color, "#040506"}});
    live = serialize_document(engine->snapshot(scene).to_scene());
  }
  write_file_atomic((dir / "scenes" / (scene + ".json")).string(), stale);
  auto engine = make_engine(data_mock(), EngineOptions{dir.string(), 0});
  EXPECT_EQ(serialize_document(engine->snapshot(scene).to_scene()), live);
  fs::remove_all(dir);
}

TEST(EngineTest, DeleteSceneDropsItsSessions) {
  auto engine = make_engine(data_mock());
  std::string a = engine->create_scene(seed());
  std::string b = engine->create_scene(seed(), std::string("den"));
  std::string sid = engine->instruct(a, "Change the sofa color to navy blue.", PipelineConfig{});
  engine->delete_scene(a);
  EXPECT_FALSE(engine->has_scene(a));
  EXPECT_TRUE(engine->has_scene(b));
  EXPECT_EQ(code_of([&] { engine->session(sid); }), Errc::NotFound);
  EXPECT_EQ(code_of([&] { engine->create_scene(seed(), std::string("den")); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { engine->create_scene(seed(), std::string("../etc")); }), Errc::InvalidArgument);
}

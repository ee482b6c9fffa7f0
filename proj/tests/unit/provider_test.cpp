#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "echo/error.hpp"
#include "echo/pipeline/provider.hpp"
#include "echo/scene/top_view.hpp"
#include "echo/util/text.hpp"
#include "test_util.hpp"

using namespace echo;
using echo::testing::make_object;

namespace {

SceneGraph two_object_scene() {
  SceneGraph g("living");
  g.add_object(make_object("Sofa", Vector3(0, 0.4, -2), Vector3(2, 0.8, 1), {200, 200, 200}));
  g.add_object(make_object("Wall_N", Vector3(0, 1.5, 4), Vector3(8, 3, 0.1)));
  return g;
}

PromptBundle suggestion_bundle(const std::string& instruction) {
  return build_prompt(Stage::SuggestionGen, PipelineConfig{}, two_object_scene(),
                      {{"instruction", instruction}});
}

}  // namespace

TEST(ConfigTest, ConditionsMapToChannels) {
  auto c = PipelineConfig::from_condition("V+OP+S");
  EXPECT_TRUE(c.include_vision && c.include_object_params && c.include_suggestions_stage);
  c = PipelineConfig::from_condition("V+S");
  EXPECT_TRUE(c.include_vision && !c.include_object_params && c.include_suggestions_stage);
  c = PipelineConfig::from_condition("V+OP");
  EXPECT_TRUE(c.include_vision && c.include_object_params && !c.include_suggestions_stage);
  c = PipelineConfig::from_condition("OP+S");
  EXPECT_TRUE(!c.include_vision && c.include_object_params && c.include_suggestions_stage);
  EXPECT_THROW(PipelineConfig::from_condition("V"), Error);
  for (auto name : kAblationConditions) {
    EXPECT_EQ(PipelineConfig::from_condition(name).condition_name(), name);
  }
}

TEST(ConfigTest, JsonRoundTripAndValidation) {
  PipelineConfig c = PipelineConfig::from_condition("OP+S");
  c.suggestion_count_hint = 3;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  EXPECT_THROW(config_from_json({{"bogus", 1}}), Error);
  EXPECT_THROW(config_from_json({{"suggestion_count_hint", 0}}), Error);
  EXPECT_EQ(config_from_json({{"condition", "V+S"}}), PipelineConfig::from_condition("V+S"));
}

TEST(PromptTest, FullConditionSuggestionRequest) {
  SceneGraph scene = two_object_scene();
  PromptBundle b = build_prompt(Stage::SuggestionGen, PipelineConfig{}, scene,
                                {{"instruction", "Set up a home theater area for movie nights."}});
  EXPECT_EQ(b.user_text,
            "User Instruction : Set up a home theater area for movie nights.\n\n"
            "Object list: " + serialize_parameters(scene) + ".\n\n"
            "Top View Image: [image attached]\n\n"
            "Propose about 5 suggestions.");
  ASSERT_TRUE(b.image);
  EXPECT_EQ(b.image->base64, render_top_view(scene, 256).base64());
  EXPECT_EQ(b.system_text.rfind(std::string(prompts::kSceneUnderstandingSystem), 0), 0u);
  EXPECT_NE(b.system_text.find(std::string(prompts::kSuggestionSystem)), std::string::npos);
}

TEST(PromptTest, VisionOnlySuggestionRequestHasNoObjectList) {
  PromptBundle b = build_prompt(Stage::SuggestionGen, PipelineConfig::from_condition("V+S"),
                                two_object_scene(), {{"instruction", "x"}});
  EXPECT_EQ(b.user_text.find("Object list"), std::string::npos);
  EXPECT_TRUE(b.image);
}

TEST(PromptTest, NoVisionMeansNoImage) {
  PromptBundle b = build_prompt(Stage::ActionGen, PipelineConfig::from_condition("OP+S"),
                                two_object_scene(), {{"suggestion", "move the sofa"}});
  EXPECT_FALSE(b.image);
  EXPECT_EQ(b.user_text.find("Top View Image"), std::string::npos);
  EXPECT_EQ(b.user_text.rfind("Suggestion : move the sofa\n\nObject list: [", 0), 0u);
}

TEST(PromptTest, ActionRequestCarriesAllChannels) {
  PromptBundle b = build_prompt(
      Stage::ActionGen, PipelineConfig{}, two_object_scene(),
      {{"suggestion",
        "add a large screen on Wall_N for a cinema effect and install surround sound speakers "
        "around the room"}});
  EXPECT_NE(b.user_text.find("Suggestion : add a large screen"), std::string::npos);
  EXPECT_NE(b.user_text.find("Object list: [{\"name\":\"Sofa\""), std::string::npos);
  EXPECT_TRUE(b.image);
  EXPECT_NE(b.system_text.find("Rotate {Object} [(Angle)]"), std::string::npos);
}

TEST(PromptTest, EmptySceneObjectList) {
  PromptBundle b = build_prompt(Stage::ActionGen, PipelineConfig{}, SceneGraph(),
                                {{"suggestion", "add a lamp"}});
  EXPECT_NE(b.user_text.find("Object list: []."), std::string::npos);
}

TEST(PromptTest, MissingSlots) {
  for (Stage s : {Stage::SuggestionGen, Stage::ActionGen}) {
    try {
      build_prompt(s, PipelineConfig{}, SceneGraph(), {});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::MissingSlot);
    }
  }
  EXPECT_THROW(build_category_prompt("", {"Sofa"}), Error);
  EXPECT_THROW(build_category_prompt("sofa", {}), Error);
  EXPECT_THROW(build_label_prompt("x", ImagePayload{"image/png", ""}), Error);
}

TEST(PromptTest, CategoryAndLabelTexts) {
  PromptBundle c = build_category_prompt("sofa", {"Bed", "Sofa"});
  EXPECT_EQ(c.user_text, "The object is : sofa.\n\nCategories include: Bed, Sofa.");
  EXPECT_FALSE(c.image);
  PromptBundle l = build_label_prompt("Armchair1_C1", ImagePayload{"image/png", "AAAA"});
  EXPECT_EQ(l.user_text, "object_name: Armchair1_C1\n\nimage: [image attached]");
  EXPECT_TRUE(l.image);
  EXPECT_NE(l.system_text.find("\"3D model\", \"3D shape\""), std::string::npos);
}

// ---------------------------------------------------------------------------

TEST(MockProviderTest, KeywordRulesAndFallback) {
  MockRuleTable table = parse_rule_table(nlohmann::ordered_json::parse(R"js({
    "rules": [
      {"stage": "SuggestionGen", "keywords": ["ocean"],
       "response": {"suggestions": [{"suggestion": "paint the walls sea blue"}]}},
      {"stage": "ActionGen", "keywords": ["ocean"], "response": "{\"steps\": []}"}
    ]})js"));
  MockProvider mock(std::move(table));
  auto t = std::make_shared<Transcript>();
  mock.set_transcript(t);
  std::string a = mock.complete(suggestion_bundle("Evoke the tranquility of the OCEAN."));
  std::string b = mock.complete(suggestion_bundle("Evoke the tranquility of the OCEAN."));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, R"js({"suggestions":[{"suggestion":"paint the walls sea blue"}]})js");
  EXPECT_EQ(mock.complete(suggestion_bundle("something else")), R"js({"suggestions":[]})js");
  ASSERT_EQ(t->size(), 3u);
  auto entries = t->entries();
  EXPECT_EQ(entries[0].seq, 1u);
  EXPECT_EQ(entries[2].seq, 3u);
  EXPECT_EQ(entries[0].stage, Stage::SuggestionGen);
  ASSERT_TRUE(entries[0].image_sha256);
  EXPECT_EQ(entries[0].image_sha256->size(), 64u);
}

TEST(MockProviderTest, TemplatesAndBestCategory) {
  MockRuleTable table;
  table.rules.push_back(
      {Stage::CategorySelect, {}, R"js({"Category1":"{{best_category}}","Description":"A {{object_name}}"})js", 0});
  MockProvider mock(std::move(table));
  EXPECT_EQ(mock.complete(build_category_prompt("Coffee_Table", {"Chair", "Lamp", "Table"})),
            R"js({"Category1":"Table","Description":"A Coffee_Table"})js");
  EXPECT_EQ(mock.complete(build_category_prompt("Recliner_Chair", {"Chair", "Table"})),
            R"js({"Category1":"Chair","Description":"A Recliner_Chair"})js");
  EXPECT_EQ(mock.complete(build_category_prompt("Speaker \"X\"", {"Bed", "Chair"})),
            R"js({"Category1":"Bed","Description":"A Speaker \"X\""})js");
}

TEST(MockProviderTest, RuleTableErrors) {
  EXPECT_THROW(parse_rule_table(nlohmann::ordered_json::parse(R"js({"rules": [{"stage": "Nope", "response": ""}]})js")),
               Error);
  EXPECT_THROW(parse_rule_table(nlohmann::ordered_json::parse("{}")), Error);
}

TEST(ReplayProviderTest, ReplaysInOrderAndGuards) {
  MockRuleTable table;
  table.rules.push_back({Stage::SuggestionGen, {}, "first", 0});
  table.rules.push_back({Stage::CategorySelect, {}, "second", 0});
  MockProvider mock(std::move(table));
  auto t = std::make_shared<Transcript>();
  mock.set_transcript(t);
  mock.complete(suggestion_bundle("a"));
  mock.complete(build_category_prompt("sofa", {"Sofa"}));

  const auto path = (std::filesystem::temp_directory_path() / "echo_replay_test.jsonl").string();
  write_file_atomic(path, t->to_jsonl());
  auto replay = ReplayProvider::from_file(path);
  auto rt = std::make_shared<Transcript>();
  replay->set_transcript(rt);
  EXPECT_EQ(replay->complete(suggestion_bundle("a")), "first");
  EXPECT_EQ(replay->complete(build_category_prompt("sofa", {"Sofa"})), "second");
  try {
    replay->complete(suggestion_bundle("a"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TranscriptExhausted);
  }

  auto mismatched = ReplayProvider::from_file(path);
  try {
    mismatched->complete(build_category_prompt("sofa", {"Sofa"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StageMismatch);
  }

  // The replayed requests and responses match the recording.
  auto original = t->entries();
  auto replayed = rt->entries();
  ASSERT_EQ(replayed.size(), 3u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(replayed[i].user, original[i].user);
    EXPECT_EQ(replayed[i].response, original[i].response);
    EXPECT_EQ(replayed[i].image_sha256, original[i].image_sha256);
  }
  EXPECT_TRUE(replayed[2].error);
  std::filesystem::remove(path);
}

TEST(ReplayProviderTest, RecordedFailureIsRaisedAgain) {
  TranscriptEntry e;
  e.seq = 1;
  e.stage = Stage::ActionGen;
  e.error = "Timeout: upstream took too long";
  ReplayProvider replay({e});
  try {
    replay.complete(build_prompt(Stage::ActionGen, PipelineConfig::from_condition("OP+S"),
                                 SceneGraph(), {{"suggestion", "x"}}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::Timeout);
    EXPECT_STREQ(err.what(), "upstream took too long");
  }
}

// ---------------------------------------------------------------------------
// external provider against a local HTTP server

namespace {

class FakeEndpoint {
 public:
  explicit FakeEndpoint(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ExternalProviderOptions options_for(const FakeEndpoint& ep) {
  ExternalProviderOptions o;
  o.endpoint = ep.url();
  o.api_key = "test-key";
  o.timeout = std::chrono::milliseconds(400);
  o.backoff = std::chrono::milliseconds(10);
  return o;
}

}  // namespace

TEST(ExternalProviderTest, AuthErrorIsNotRetried) {
  std::atomic<int> calls = 0;
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
  });
  ExternalProvider p(options_for(ep));
  try {
    p.complete(suggestion_bundle("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AuthError);
  }
  EXPECT_EQ(calls, 1);
}

TEST(ExternalProviderTest, TimeoutThenSuccess) {
  std::atomic<int> calls = 0;
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    if (++calls == 1) std::this_thread::sleep_for(std::chrono::milliseconds(900));
    res.set_content(R"js({"choices":[{"message":{"content":"{\"suggestions\":[]}"}}]})js",
                    "application/json");
  });
  ExternalProvider p(options_for(ep));
  EXPECT_EQ(p.complete(suggestion_bundle("x")), R"js({"suggestions":[]})js");
  EXPECT_EQ(calls, 2);
}

TEST(ExternalProviderTest, ServerErrorsExhaustRetry) {
  std::atomic<int> calls = 0;
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  ExternalProvider p(options_for(ep));
  try {
    p.complete(suggestion_bundle("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::HttpError);
  }
  EXPECT_EQ(calls, 2);
}

TEST(ExternalProviderTest, RequestShapeAndPassthrough) {
  nlohmann::ordered_json seen;
  std::string auth;
  const std::string content = "Sure!\n```json\n{\"steps\": []}\n```";
  FakeEndpoint ep([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::ordered_json::parse(req.body);
    auth = req.get_header_value("Authorization");
    nlohmann::ordered_json reply = {{"choices", {{{"message", {{"content", content}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  ExternalProvider p(options_for(ep));
  EXPECT_EQ(p.complete(suggestion_bundle("x")), content);
  EXPECT_EQ(auth, "Bearer test-key");
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  const auto& parts = seen["messages"][1]["content"];
  ASSERT_EQ(parts.size(), 2u);
  std::string url = parts[1]["image_url"]["url"].get<std::string>();
  ASSERT_EQ(url.rfind("data:image/png;base64,", 0), 0u);
  std::string png = base64_decode(url.substr(22));
  EXPECT_EQ(png.substr(1, 3), "PNG");
}

TEST(ProviderSettingsTest, TomlAndEnvOverride) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "echo_settings_test";
  fs::create_directories(dir);
  write_file_atomic((dir / "provider.toml").string(),
                    "[provider]\nkind = \"external\"\nendpoint = \"http://x/v1\"\n"
                    "rules = \"rules.json\"\napi_key = \"from-file\"\ntimeout_ms = 1500\n"
                    "[embedder]\nkind = \"hash-ngram\"\n");
  ::setenv("ECHO_PROVIDER_KEY", "from-env", 1);
  ProviderSettings s = load_provider_settings((dir / "provider.toml").string());
  ::unsetenv("ECHO_PROVIDER_KEY");
  EXPECT_EQ(s.kind, "external");
  EXPECT_EQ(s.external.api_key, "from-env");
  EXPECT_EQ(s.external.timeout.count(), 1500);
  EXPECT_EQ(s.rules_path, (dir / "rules.json").string());

  write_file_atomic((dir / "bad.toml").string(), "[provider]\nkind = \"psychic\"\n");
  EXPECT_THROW(load_provider_settings((dir / "bad.toml").string()), Error);
  write_file_atomic((dir / "broken.toml").string(), "[provider\n");
  EXPECT_THROW(load_provider_settings((dir / "broken.toml").string()), Error);

  EXPECT_EQ(settings_from_spec("replay:/tmp/t.jsonl", {}).transcript_path, "/tmp/t.jsonl");
  EXPECT_THROW(settings_from_spec("oracle", {}), Error);
  fs::remove_all(dir);
}

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "echo/error.hpp"
#include "echo/service/service.hpp"
#include "echo/util/text.hpp"

using namespace echo;
namespace fs = std::filesystem;
using J = nlohmann::ordered_json;

namespace {

const std::string kData = ECHO_DATA_DIR;
const std::string kFixtures = ECHO_FIXTURE_DIR;

SceneGraph seed() { return deserialize_parameters(read_file(kData + "/seed_scene.json"), "living"); }

std::shared_ptr<const Catalog> bundled_catalog() {
  static auto c = std::make_shared<const Catalog>(load_catalog(kData + "/catalog.json"));
  return c;
}

// A running service on a free port plus a client for it.
struct Harness {
  std::shared_ptr<Engine> engine;
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;

  explicit Harness(std::shared_ptr<Provider> provider, EngineOptions eo = {}, std::string admin = "") {
    engine = std::make_shared<Engine>(eo, std::move(provider), bundled_catalog(),
                                      std::make_shared<const HashNgramEmbedder>());
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.admin_token = std::move(admin);
    service = std::make_unique<Service>(cfg, engine, seed());
    int port = service->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(10, 0);
  }
  ~Harness() { service->stop(); }

  httplib::Result post(const std::string& path, const J& body) {
    return client->Post(path.c_str(), body.dump(), "application/json");
  }
  std::string new_scene() {
    auto r = post("/scenes", {{"seed", true}});
    return J::parse(r->body)["scene_id"].get<std::string>();
  }
  std::string instruct(const std::string& scene, const std::string& text) {
    auto r = post("/scenes/" + scene + "/instruct", {{"instruction", text}});
    EXPECT_EQ(r->status, 200) << r->body;
    return J::parse(r->body)["session_id"].get<std::string>();
  }
  J session(const std::string& sid) { return J::parse(client->Get(("/sessions/" + sid).c_str())->body); }
};

std::shared_ptr<Provider> mock() {
  return std::make_shared<MockProvider>(load_rule_table(kData + "/mock_rules.json"));
}

void expect_api_error(const httplib::Result& r, int status, const std::string& code) {
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, status) << r->body;
  J j = J::parse(r->body);
  EXPECT_EQ(j["code"], code) << r->body;
  EXPECT_TRUE(j["message"].is_string());
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
}

}  // namespace

TEST(ServiceConfigTest, LoadsAndRejects) {
  fs::path dir = fs::temp_directory_path() / "echo_service_cfg";
  fs::create_directories(dir);
  write_file_atomic((dir / "service.toml").string(),
                    "[service]\nport = 9001\ndata_dir = \"var\"\nadmin_token = \"t\"\ngeneration_threads = 3\n");
  ServiceConfig c = load_service_config((dir / "service.toml").string());
  EXPECT_EQ(c.port, 9001);
  EXPECT_EQ(c.data_dir, (dir / "var").string());
  EXPECT_EQ(c.admin_token, "t");
  EXPECT_EQ(c.generation_threads, 3u);
  for (const char* bad : {"[service]\nport = \"x\"\n", "[service]\nprot = 1\n", "[other]\n", "port = = 1"}) {
    write_file_atomic((dir / "bad.toml").string(), bad);
    try {
      load_service_config((dir / "bad.toml").string());
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ConfigError);
    }
  }
  fs::remove_all(dir);
}

TEST(ServiceTest, HealthAndSceneLifecycle) {
  Harness h(mock());
  auto health = h.client->Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(J::parse(health->body)["scenes"], 0);

  auto created = h.post("/scenes", {{"bounds", {{"min_x", -3}, {"min_z", -3}, {"max_x", 3}, {"max_z", 3}}}});
  EXPECT_EQ(created->status, 201);
  std::string empty = J::parse(created->body)["scene_id"];
  auto got = h.client->Get(("/scenes/" + empty).c_str());
  EXPECT_EQ(got->body, "[]");
  EXPECT_EQ(got->get_header_value("X-Scene-Revision"), "0");

  std::string scene = h.new_scene();
  got = h.client->Get(("/scenes/" + scene).c_str());
  EXPECT_EQ(got->body, serialize_parameters(seed()));

  auto top = h.client->Get(("/scenes/" + scene + "/topview?res=64").c_str());
  EXPECT_EQ(top->status, 200);
  EXPECT_EQ(top->get_header_value("Content-Type"), "image/x-portable-pixmap");
  EXPECT_EQ(top->body.substr(0, 2), "P6");
  auto png = h.client->Get(("/scenes/" + scene + "/topview?res=64&format=png").c_str());
  EXPECT_EQ(png->body.substr(1, 3), "PNG");
  expect_api_error(h.client->Get(("/scenes/" + scene + "/topview?res=10").c_str()), 422, "VALIDATION_ERROR");

  auto del = h.client->Delete(("/scenes/" + empty).c_str());
  EXPECT_EQ(del->status, 200);
  expect_api_error(h.client->Get(("/scenes/" + empty).c_str()), 404, "NOT_FOUND");
  expect_api_error(h.client->Get("/nowhere"), 404, "NOT_FOUND");
  expect_api_error(h.post("/scenes", {{"colour", "red"}}), 422, "VALIDATION_ERROR");
  expect_api_error(h.client->Post("/scenes", "{oops", "application/json"), 422, "VALIDATION_ERROR");
  expect_api_error(h.post("/scenes", {{"scene_id", "../x"}}), 422, "VALIDATION_ERROR");
}

TEST(ServiceTest, OceanInstructionApplyUndoRoundTrip) {
  Harness h(mock());
  std::string scene = h.new_scene();
  std::string sid = h.instruct(scene, "Evoke the tranquility of the ocean in the living space.");
  J view = h.session(sid);
  ASSERT_FALSE(view["suggestions"].empty());
  for (const auto& s : view["suggestions"]) EXPECT_EQ(s["state"], "pending");

  auto before = h.client->Get(("/scenes/" + scene).c_str());
  auto applied = h.client->Post(("/sessions/" + sid + "/suggestions/s1/apply").c_str());
  ASSERT_EQ(applied->status, 200) << applied->body;
  Revision rev = J::parse(applied->body)["revision"];
  EXPECT_EQ(h.client->Get(("/scenes/" + scene).c_str())->get_header_value("X-Scene-Revision"),
            std::to_string(rev));
  EXPECT_EQ(h.session(sid)["suggestions"][0]["state"], "applied");

  expect_api_error(h.client->Post(("/sessions/" + sid + "/suggestions/s1/apply").c_str()), 409, "WRONG_STATE");

  auto undone = h.client->Post(("/sessions/" + sid + "/suggestions/s1/undo").c_str());
  EXPECT_EQ(undone->status, 200);
  auto after = h.client->Get(("/scenes/" + scene).c_str());
  EXPECT_EQ(after->body, before->body);
  EXPECT_NE(after->get_header_value("X-Scene-Revision"), before->get_header_value("X-Scene-Revision"));
  expect_api_error(h.client->Post(("/sessions/" + sid + "/suggestions/s1/undo").c_str()), 409, "WRONG_STATE");
  expect_api_error(h.client->Post(("/sessions/" + sid + "/suggestions/s99/apply").c_str()), 404, "NOT_FOUND");
  expect_api_error(h.client->Get("/sessions/sess-404"), 404, "NOT_FOUND");

  auto regen = h.client->Post(("/sessions/" + sid + "/suggestions/s2/regenerate").c_str());
  EXPECT_EQ(regen->status, 202);
  h.engine->wait_idle();
  EXPECT_EQ(h.session(sid)["suggestions"][1]["generation"], 2);

  auto log = J::parse(h.client->Get(("/scenes/" + scene + "/log").c_str())->body)["records"];
  ASSERT_GE(log.size(), 4u);
  EXPECT_EQ(log[0]["kind"], "create");
  EXPECT_EQ(log[1]["kind"], "instruct");
  EXPECT_EQ(log[2]["kind"], "apply");
  EXPECT_EQ(log[3]["kind"], "undo");
}

TEST(ServiceTest, InstructValidationAndProviderFailure) {
  Harness h(mock());
  std::string scene = h.new_scene();
  expect_api_error(h.post("/scenes/" + scene + "/instruct", {{"instructions", "x"}}), 422, "VALIDATION_ERROR");
  expect_api_error(h.post("/scenes/" + scene + "/instruct", {{"instruction", "   "}}), 422, "VALIDATION_ERROR");
  expect_api_error(h.post("/scenes/" + scene + "/instruct", {{"instruction", "x"}, {"config", "V+Z"}}), 422,
                   "VALIDATION_ERROR");
  expect_api_error(h.post("/scenes/nope/instruct", {{"instruction", "x"}}), 404, "NOT_FOUND");

  TranscriptEntry e;
  e.stage = Stage::SuggestionGen;
  e.error = "Timeout: no answer";
  Harness failing(std::make_shared<ReplayProvider>(std::vector<TranscriptEntry>{e}));
  std::string s2 = failing.new_scene();
  auto r = failing.post("/scenes/" + s2 + "/instruct", {{"instruction", "anything"}});
  expect_api_error(r, 502, "PROVIDER_ERROR");
  EXPECT_TRUE(J::parse(r->body)["details"]["session_id"].is_string());
}

TEST(ServiceTest, AtomicRollbackReportsDiagnostics) {
  MockRuleTable t;
  t.rules.push_back({Stage::SuggestionGen, {"ghost"}, R"js({"suggestions":[{"suggestion":"paint the ghost"}]})js", 0});
  t.rules.push_back({Stage::ActionGen, {"ghost"},
                     R"js({"steps":[{"action_command":"Color {Sofa} to red[(255, 0, 0)]"},
                                    {"action_command":"Color {Ghost} to red[(255, 0, 0)]"}]})js", 0});
  Harness h(std::make_shared<MockProvider>(t));
  std::string scene = h.new_scene();
  std::string sid = h.instruct(scene, "ghost");
  auto before = h.client->Get(("/scenes/" + scene).c_str());
  auto r = h.client->Post(("/sessions/" + sid + "/suggestions/s1/apply").c_str());
  expect_api_error(r, 409, "ATOMIC_ROLLBACK");
  J details = J::parse(r->body)["details"];
  bool missing = false;
  for (const auto& d : details["diagnostics"]) missing |= d["kind"] == "TargetMissing";
  EXPECT_TRUE(missing);
  EXPECT_EQ(h.client->Get(("/scenes/" + scene).c_str())->body, before->body);
  EXPECT_EQ(h.session(sid)["suggestions"][0]["state"], "failed");
}

TEST(ServiceTest, ManualObjectRoutes) {
  Harness h(mock());
  std::string scene = h.new_scene();
  auto added = h.post("/scenes/" + scene + "/objects", {{"asset_id", "Armchair1_C1"}, {"position", {1, 0.45, 1}}});
  ASSERT_EQ(added->status, 200) << added->body;
  EXPECT_EQ(J::parse(added->body)["name"], "Armchair1_C1");
  auto by_query = h.post("/scenes/" + scene + "/objects",
                         {{"category", "TV"}, {"query", "large flat screen television"}, {"position", "(0, 1, 3.8)"}});
  ASSERT_EQ(by_query->status, 200) << by_query->body;

  auto patched = h.client->Patch(("/scenes/" + scene + "/objects/Sofa").c_str(),
                                 J{{"color", "#123456"}, {"material", "Leather"}}.dump(), "application/json");
  EXPECT_EQ(patched->status, 200);
  J params = J::parse(h.client->Get(("/scenes/" + scene).c_str())->body);
  bool found = false;
  for (const auto& o : params) {
    if (o["name"] != "Sofa") continue;
    found = true;
    EXPECT_EQ(o["color"], "#123456");
    EXPECT_EQ(o["material"], "Leather");
  }
  EXPECT_TRUE(found);
  expect_api_error(h.client->Patch(("/scenes/" + scene + "/objects/Sofa").c_str(), J{{"size", 1}}.dump(),
                                   "application/json"),
                   422, "VALIDATION_ERROR");
  expect_api_error(h.client->Patch(("/scenes/" + scene + "/objects/Ghost").c_str(), J{{"color", "#000000"}}.dump(),
                                   "application/json"),
                   404, "NOT_FOUND");
  expect_api_error(h.client->Patch(("/scenes/" + scene + "/objects/Sofa").c_str(), J{{"scale", "(0, 1, 1)"}}.dump(),
                                   "application/json"),
                   422, "VALIDATION_ERROR");

  auto undo = h.client->Post(("/scenes/" + scene + "/manual-undo").c_str());
  EXPECT_EQ(undo->status, 200);
  EXPECT_EQ(h.client->Delete(("/scenes/" + scene + "/objects/Rug").c_str())->status, 200);
  expect_api_error(h.client->Delete(("/scenes/" + scene + "/objects/Rug").c_str()), 404, "NOT_FOUND");
}

TEST(ServiceTest, AssetSearchAndLabeling) {
  auto label_rules = std::make_shared<MockProvider>(load_rule_table(kFixtures + "/label_rules.json"));
  Harness h(label_rules, {}, "sekret");
  auto r = h.client->Get("/assets/search?category=Sofa&q=light%20gray%20fabric%20sofa&limit=3");
  ASSERT_EQ(r->status, 200) << r->body;
  J results = J::parse(r->body)["results"];
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[0]["asset_id"], "sofa_gray_fabric");
  EXPECT_GE(results[0]["score"].get<double>(), results[1]["score"].get<double>());
  expect_api_error(h.client->Get("/assets/search?category=Spaceship&q=x"), 422, "VALIDATION_ERROR");
  expect_api_error(h.client->Get("/assets/search?q="), 422, "VALIDATION_ERROR");
  EXPECT_FALSE(J::parse(h.client->Get("/assets/categories")->body)["categories"].empty());

  J body = {{"object_name", "Armchair1_C1"},
            {"thumbnail_base64", base64_encode(read_file(kFixtures + "/thumbnails/Armchair1_C1.ppm"))},
            {"mime_type", "image/x-portable-pixmap"}};
  expect_api_error(h.post("/assets/label", body), 401, "UNAUTHORIZED");
  httplib::Headers headers = {{"X-Admin-Token", "sekret"}};
  auto labeled = h.client->Post("/assets/label", headers, body.dump(), "application/json");
  ASSERT_EQ(labeled->status, 200) << labeled->body;
  EXPECT_EQ(J::parse(labeled->body)["record"]["asset_id"], "Armchair1_C1");

  Harness closed(mock());
  expect_api_error(closed.post("/assets/label", body), 403, "FORBIDDEN");
}

TEST(ServiceTest, BackgroundGenerationIsPollable) {
  MockRuleTable t;
  t.rules.push_back({Stage::SuggestionGen, {"slow"}, R"js({"suggestions":[{"suggestion":"slowly move the sofa"}]})js", 0});
  t.rules.push_back({Stage::ActionGen, {"slowly"}, R"js({"steps":[{"action_command":"Move {Sofa} to [(0, 0.42, -2)]"}]})js", 300});
  Harness h(std::make_shared<MockProvider>(t), EngineOptions{std::nullopt, 2});
  std::string scene = h.new_scene();
  std::string sid = h.instruct(scene, "slow please");
  EXPECT_EQ(h.session(sid)["suggestions"][0]["state"], "processing");
  expect_api_error(h.client->Post(("/sessions/" + sid + "/suggestions/s1/apply").c_str()), 409, "WRONG_STATE");
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (h.session(sid)["suggestions"][0]["state"] == "processing" && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  EXPECT_EQ(h.session(sid)["suggestions"][0]["state"], "pending");
  EXPECT_EQ(h.client->Post(("/sessions/" + sid + "/suggestions/s1/apply").c_str())->status, 200);
}

TEST(ServiceTest, ConcurrentAppliesNeverInterleave) {
  Harness h(mock());
  std::string scene = h.new_scene();
  std::string sid = h.instruct(scene, "Set up a home theater area for movie nights.");
  std::vector<std::thread> threads;
  std::vector<int> codes(6);
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&, i] {
      httplib::Client c(h.client->host(), h.client->port());
      std::string sug = "s" + std::to_string(i % 3 + 1);
      codes[i] = c.Post(("/sessions/" + sid + "/suggestions/" + sug + "/apply").c_str())->status;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(std::count(codes.begin(), codes.end(), 200), 3);
  EXPECT_EQ(std::count(codes.begin(), codes.end(), 409), 3);
  auto records = h.engine->log(scene);
  for (std::size_t i = 1; i < records.size(); ++i) {
    EXPECT_EQ(records[i].revision_before, records[i - 1].revision_after);
  }
  EXPECT_EQ(serialize_document(replay_log(records)), serialize_document(h.engine->snapshot(scene).to_scene()));
}

TEST(ServiceTest, RestartRecoversThroughHttp) {
  fs::path dir = fs::temp_directory_path() / "echo_service_restart";
  fs::remove_all(dir);
  std::string scene, body;
  {
    Harness h(mock(), EngineOptions{dir.string(), 0});
    scene = h.new_scene();
    std::string sid = h.instruct(scene, "Apply a nautical theme to the living room.");
    h.client->Post(("/sessions/" + sid + "/suggestions/s1/apply").c_str());
    body = h.client->Get(("/scenes/" + scene).c_str())->body;
  }
  {
    Harness h(mock(), EngineOptions{dir.string(), 0});
    EXPECT_EQ(h.client->Get(("/scenes/" + scene).c_str())->body, body);
    EXPECT_EQ(J::parse(h.client->Get("/healthz")->body)["scenes"], 1);
  }
  fs::remove_all(dir);
}

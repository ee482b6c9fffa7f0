#include <csignal>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "echo/app/ablation.hpp"
#include "echo/app/runtime.hpp"
#include "echo/app/script.hpp"
#include "echo/catalog/labeling.hpp"
#include "echo/error.hpp"
#include "echo/service/service.hpp"
#include "echo/util/text.hpp"

using namespace echo;
namespace fs = std::filesystem;

namespace {

// Exit codes, also listed in the README.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitReference = 3;

const std::string kData = ECHO_DATA_DIR;

struct Globals {
  std::string provider = "mock";
  std::string provider_config;
  std::string rules = kData + "/mock_rules.json";
  std::string catalog = kData + "/catalog.json";
};

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::NotFound:
    case Errc::WrongState: return kExitReference;
    case Errc::ConfigError: return kExitUsage;
    default:
      // bad input, same classification as the HTTP 422 responses
      return api_status(code).status == 422 ? kExitUsage : kExitFailure;
  }
}

ProviderSettings provider_settings(const Globals& g) {
  ProviderSettings base;
  if (!g.provider_config.empty()) base = load_provider_settings(g.provider_config);
  if (base.rules_path.empty()) base.rules_path = g.rules;
  return settings_from_spec(g.provider, base);
}

SceneGraph load_scene_file(const std::string& path) {
  std::string text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return deserialize_parameters(text, "scene");
  return parse_document(text);
}

std::shared_ptr<const Catalog> load_optional_catalog(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const Catalog>(load_catalog(path));
}

void print_session(const Session& s) {
  std::cerr << "session " << s.session_id << ": " << s.instruction << "\n";
  for (const auto& d : s.diagnostics) std::cerr << "  ! " << d.kind << ": " << d.message << "\n";
  for (const auto& e : s.entries) {
    std::cerr << "  " << e.id() << " [" << to_string(e.state) << "] " << e.text.text << "\n";
    for (const auto& d : e.diagnostics) {
      std::cerr << "    " << (d.severity == Severity::Error ? "error " : "warning ") << d.kind;
      if (d.step_index) std::cerr << " (step " << *d.step_index + 1 << ")";
      std::cerr << ": " << d.message << "\n";
    }
  }
}

int cmd_run_script(const Globals& g, const std::string& file, const std::string& scene_path, bool lenient,
                   const std::string& transcript_out) {
  Script script = load_script(file);
  SceneGraph initial("scene");
  if (script.scene_path) {
    fs::path p(*script.scene_path);
    if (p.is_relative()) p = fs::path(file).parent_path() / p;
    initial = load_scene_file(p.string());
  } else {
    initial = load_scene_file(scene_path.empty() ? kData + "/seed_scene.json" : scene_path);
  }
  std::shared_ptr<Provider> provider = make_provider(provider_settings(g));
  auto transcript = std::make_shared<Transcript>();
  provider->set_transcript(transcript);
  auto settings = provider_settings(g);
  std::shared_ptr<const Embedder> embedder = make_embedder(settings.embedder);
  Engine engine(EngineOptions{}, provider, load_optional_catalog(g.catalog), embedder);
  std::string scene = engine.create_scene(std::move(initial));

  ScriptOutcome outcome;
  try {
    outcome = run_script(engine, scene, script);
  } catch (...) {
    if (!transcript_out.empty()) write_file_atomic(transcript_out, transcript->to_jsonl());
    throw;
  }
  if (!transcript_out.empty()) write_file_atomic(transcript_out, transcript->to_jsonl());
  for (const auto& sid : outcome.session_ids) print_session(engine.session(sid));
  std::cout << serialize_document(engine.snapshot(scene).to_scene());
  if (!outcome.ok()) {
    std::cerr << outcome.failed_entries << " failed suggestion(s), " << outcome.session_errors
              << " session error(s)\n";
    return lenient ? kExitOk : kExitFailure;
  }
  return kExitOk;
}

int cmd_ablate(const Globals& g, const std::string& instructions, const std::string& conditions,
               const std::string& out, const std::string& scene_path, int resolution) {
  AblationOptions opt;
  opt.instructions = load_instructions(instructions);
  std::string list = conditions;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    std::string item(trim(list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (!item.empty()) opt.conditions.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (opt.conditions.empty()) throw Error(Errc::InvalidArgument, "no conditions given");
  opt.out_dir = out;
  opt.seed = load_scene_file(scene_path.empty() ? kData + "/seed_scene.json" : scene_path);
  opt.topview_resolution = resolution;
  ProviderSettings settings = provider_settings(g);
  opt.catalog = load_optional_catalog(g.catalog);
  opt.embedder = make_embedder(settings.embedder);
  std::optional<MockRuleTable> rules;
  if (settings.kind == "mock") rules = load_rule_table(settings.rules_path);
  // For replay the path names an earlier ablation output directory.
  opt.provider_for = [&](const std::string& condition, std::size_t index) -> std::shared_ptr<Provider> {
    if (settings.kind == "mock") return std::make_shared<MockProvider>(*rules);
    if (settings.kind == "replay") {
      return ReplayProvider::from_file(cell_dir(settings.transcript_path, condition, index) + "/transcript.jsonl");
    }
    return make_provider(settings);
  };
  auto cells = run_ablation(opt);
  for (const auto& c : cells) {
    std::cout << c.condition << "/" << c.index << ": " << c.suggestions << " suggestions, " << c.applied
              << " applied, " << c.failed << " failed, " << c.provider_calls << " provider calls\n";
  }
  std::cout << cells.size() << " cells written to " << out << "\n";
  return kExitOk;
}

int cmd_serve(const Globals& g, const std::string& config_path, const std::string& data_dir,
              std::optional<int> port, bool provider_given) {
  ServiceConfig config = load_service_config(config_path);
  if (!data_dir.empty()) config.data_dir = data_dir;
  if (port) config.port = *port;

  Globals eff = g;
  if (!config.provider_config.empty() && eff.provider_config.empty()) eff.provider_config = config.provider_config;
  ProviderSettings settings = provider_settings(eff);
  if (!provider_given && !eff.provider_config.empty()) settings = load_provider_settings(eff.provider_config);
  if (settings.kind == "mock" && settings.rules_path.empty()) settings.rules_path = g.rules;
  std::shared_ptr<Provider> provider = make_provider(settings);
  std::shared_ptr<const Embedder> embedder = make_embedder(settings.embedder);
  auto catalog = load_optional_catalog(config.catalog.empty() ? g.catalog : config.catalog);
  std::optional<SceneGraph> seed =
      load_scene_file(config.seed_scene.empty() ? kData + "/seed_scene.json" : config.seed_scene);

  EngineOptions eo;
  if (!config.data_dir.empty()) eo.data_dir = config.data_dir;
  eo.generation_threads = config.generation_threads;

  // Signals are taken synchronously below, so block them before any thread
  // starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto engine = std::make_shared<Engine>(eo, provider, catalog, embedder);
  for (const auto& d : engine->startup_diagnostics()) spdlog::warn("recovery: {}: {}", d.kind, d.message);
  spdlog::info("{} scene(s) recovered from {}", engine->scene_ids().size(),
               config.data_dir.empty() ? "(memory)" : config.data_dir);
  Service service(config, engine, std::move(seed));
  service.start();
  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {}; shutting down", sig);
  service.stop();
  engine->wait_idle();
  return kExitOk;
}

int cmd_catalog_build(const Globals& g, const std::string& thumbnails, const std::string& out) {
  ProviderSettings settings = provider_settings(g);
  auto provider = make_provider(settings);
  auto embedder = make_embedder(settings.embedder);
  Diagnostics diags;
  Catalog c = build_catalog(thumbnails, *provider, *embedder, &diags);
  for (const auto& d : diags) std::cerr << d.kind << ": " << d.message << "\n";
  save_catalog(c, out);
  std::cout << c.size() << " records written to " << out << "\n";
  return kExitOk;
}

int cmd_catalog_lint(const std::string& path) {
  auto issues = lint_records(read_records(path));
  for (const auto& i : issues) std::cout << i.asset_id << "\t" << i.kind << "\t" << i.message << "\n";
  std::cout << issues.size() << " issue(s)\n";
  return issues.empty() ? kExitOk : kExitFailure;
}

int cmd_catalog_search(const Globals& g, const std::string& category, const std::string& query,
                       std::size_t limit) {
  Catalog c = load_catalog(g.catalog);
  auto embedder = make_embedder(provider_settings(g).embedder);
  std::optional<std::string> cat;
  if (!category.empty()) cat = category;
  for (const auto& hit : c.search(*embedder, cat, query, limit)) {
    char score[32];
    std::snprintf(score, sizeof score, "%.5f", hit.score);
    std::cout << hit.asset_id << "\t" << score << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene editing assistant: service, catalog tools, scripted sessions and ablations"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--provider", g.provider, "mock | replay:<path> | external")->capture_default_str();
  app.add_option("--provider-config", g.provider_config, "provider.toml");
  app.add_option("--rules", g.rules, "mock provider rule table")->capture_default_str();
  app.add_option("--catalog", g.catalog, "asset catalog file or label directory")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  std::string config_path, data_dir;
  std::optional<int> port;
  serve->add_option("--config", config_path, "service.toml")->required();
  serve->add_option("--data-dir", data_dir, "overrides service.data_dir");
  serve->add_option("--port", port, "overrides service.port");

  auto* catalog = app.add_subcommand("catalog", "labeling workflows");
  catalog->require_subcommand(1);
  auto* build = catalog->add_subcommand("build", "label a thumbnail directory");
  std::string thumbnails, build_out;
  build->add_option("--thumbnails", thumbnails)->required()->check(CLI::ExistingDirectory);
  build->add_option("--out", build_out)->required();
  auto* lint = catalog->add_subcommand("lint", "check labels for review");
  std::string lint_path;
  lint->add_option("path", lint_path)->required()->check(CLI::ExistingPath);
  auto* search = catalog->add_subcommand("search", "rank assets for a description");
  std::string category, query;
  std::size_t limit = 5;
  search->add_option("--category", category);
  search->add_option("--query", query)->required();
  search->add_option("--limit", limit)->capture_default_str();

  auto* run = app.add_subcommand("run-script", "run a scripted design session");
  std::string script_file, scene_path, transcript_out;
  bool lenient = false;
  run->add_option("file", script_file)->required()->check(CLI::ExistingFile);
  run->add_option("--scene", scene_path, "initial scene (parameter array or document)");
  run->add_flag("--lenient", lenient, "exit 0 even when suggestions fail");
  run->add_option("--transcript-out", transcript_out, "write provider calls as JSON lines");

  auto* ablate = app.add_subcommand("ablate", "run instructions under each input condition");
  std::string instructions = kData + "/instructions.json", conditions = "V+OP+S,V+S,V+OP,OP+S", out;
  std::string ablate_scene;
  int resolution = 256;
  ablate->add_option("--instructions", instructions)->capture_default_str();
  ablate->add_option("--conditions", conditions)->capture_default_str();
  ablate->add_option("--out", out)->required();
  ablate->add_option("--scene", ablate_scene, "seed scene");
  ablate->add_option("--resolution", resolution, "top view size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve) {
      return cmd_serve(g, config_path, data_dir, port, app.count("--provider") > 0);
    }
    if (*build) return cmd_catalog_build(g, thumbnails, build_out);
    if (*lint) return cmd_catalog_lint(lint_path);
    if (*search) return cmd_catalog_search(g, category, query, limit);
    if (*run) return cmd_run_script(g, script_file, scene_path, lenient, transcript_out);
    if (*ablate) return cmd_ablate(g, instructions, conditions, out, ablate_scene, resolution);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

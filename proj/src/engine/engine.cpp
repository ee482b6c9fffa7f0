#include "echo/engine/engine.hpp"

#include <algorithm>
#include <filesystem>

#include <boost/asio/post.hpp>
#include <boost/asio/thread_pool.hpp>

#include "echo/error.hpp"
#include "echo/util/text.hpp"

namespace echo {

namespace fs = std::filesystem;

struct Engine::SceneState {
  SceneState(std::string scene_id, SceneGraph g, std::string log_path,
             std::vector<LogRecord> records = {})
      : id(std::move(scene_id)), graph(std::move(g)), log(std::move(log_path), std::move(records)) {
    graph.take_journal();
    graph.set_journaling(true);
  }

  std::mutex mu;
  std::string id;
  SceneGraph graph;
  OperationLog log;
  std::optional<InversePatch> last_manual;
};

struct Engine::SessionState {
  explicit SessionState(Session s) : session(std::move(s)) {}
  std::mutex mu;
  Session session;
};

namespace {

bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

// "scene-7" -> 7 for prefix "scene-"; 0 when the id is not of that shape.
std::uint64_t counter_of(std::string_view id, std::string_view prefix) {
  if (id.substr(0, prefix.size()) != prefix) return 0;
  std::string_view digits = id.substr(prefix.size());
  if (digits.empty() || digits.size() > 18 ||
      !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return 0;
  }
  return std::stoull(std::string(digits));
}

nlohmann::ordered_json bounds_json(const RoomBounds& b) {
  return {{"min_x", b.min_x}, {"min_z", b.min_z}, {"max_x", b.max_x}, {"max_z", b.max_z}};
}

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

LogRecord make_record(std::string kind, std::string actor) {
  LogRecord r;
  r.kind = std::move(kind);
  r.actor = std::move(actor);
  return r;
}

}  // namespace

Engine::Engine(EngineOptions options, std::shared_ptr<Provider> provider,
               std::shared_ptr<const Catalog> catalog, std::shared_ptr<const Embedder> embedder)
    : options_(std::move(options)),
      provider_(std::move(provider)),
      catalog_(std::move(catalog)),
      embedder_(std::move(embedder)) {
  if (!provider_) throw Error(Errc::InvalidArgument, "engine needs a provider");
  if (options_.data_dir) {
    fs::path root(*options_.data_dir);
    std::error_code ec;
    for (const char* sub : {"scenes", "logs", "sessions"}) {
      fs::create_directories(root / sub, ec);
      if (ec) throw Error(Errc::IoError, "cannot create " + (root / sub).string() + ": " + ec.message());
    }
    recover();
  }
  if (options_.generation_threads > 0) {
    pool_ = std::make_unique<boost::asio::thread_pool>(options_.generation_threads);
  }
}

Engine::~Engine() {
  if (pool_) pool_->join();
}

// ---------------------------------------------------------------------------
// persistence

void Engine::recover() {
  fs::path root(*options_.data_dir);
  for (const auto& path : files_with_extension(root / "scenes", ".json")) {
    std::string id = path.stem().string();
    SceneGraph graph;
    try {
      graph = parse_document(read_file(path.string()));
    } catch (const Error& e) {
      throw Error(Errc::IoError, path.string() + ": " + e.what());
    }
    if (graph.id() != id) {
      throw Error(Errc::IoError, path.string() + ": scene id '" + graph.id() + "' does not match the file name");
    }
    fs::path log_path = root / "logs" / (id + ".jsonl");
    std::vector<LogRecord> records;
    std::error_code ec;
    if (fs::exists(log_path, ec)) {
      try {
        records = OperationLog::load(log_path.string());
      } catch (const Error& e) {
        throw Error(Errc::IoError, log_path.string() + ": " + e.what());
      }
    }
    // The log is appended before the scene file is rewritten, so a crash
    // in between leaves the log one step ahead.
    if (!records.empty() && records.back().revision_after > graph.revision()) {
      try {
        SceneGraph rebuilt = replay_log(records);
        startup_diags_.push_back(Diagnostic::warning(
            "SceneRebuiltFromLog", id + " rebuilt from its log at revision " +
                                       std::to_string(rebuilt.revision())));
        graph = std::move(rebuilt);
      } catch (const Error& e) {
        startup_diags_.push_back(Diagnostic::warning("LogMismatch", id + ": " + e.what()));
      }
    }
    auto state = std::make_shared<SceneState>(id, std::move(graph), log_path.string(),
                                              std::move(records));
    next_scene_ = std::max(next_scene_, counter_of(id, "scene-") + 1);
    scenes_.emplace(id, std::move(state));
  }
  for (auto& [id, state] : scenes_) persist_scene(*state);

  for (const auto& path : files_with_extension(root / "sessions", ".json")) {
    Session s;
    try {
      s = session_from_json(nlohmann::ordered_json::parse(read_file(path.string())));
    } catch (const std::exception& e) {
      throw Error(Errc::IoError, path.string() + ": " + e.what());
    }
    bool changed = false;
    for (auto& e : s.entries) {
      if (e.state != SuggestionState::Processing) continue;
      e.transition(SuggestionState::Failed);
      e.diagnostics.push_back(
          Diagnostic::error("Interrupted", "action generation was cut off by a restart"));
      changed = true;
    }
    if (changed) {
      persist_session(s);
      startup_diags_.push_back(Diagnostic::warning(
          "Interrupted", "session " + s.session_id + " had unfinished suggestions; marked failed"));
    }
    next_session_ = std::max(next_session_, counter_of(s.session_id, "sess-") + 1);
    std::string sid = s.session_id;
    sessions_.emplace(sid, std::make_shared<SessionState>(std::move(s)));
  }
}

void Engine::persist_scene(SceneState& s) {
  if (!options_.data_dir) return;
  fs::path p = fs::path(*options_.data_dir) / "scenes" / (s.id + ".json");
  write_file_atomic(p.string(), serialize_document(s.graph));
}

void Engine::persist_session(const Session& s) {
  if (!options_.data_dir) return;
  fs::path p = fs::path(*options_.data_dir) / "sessions" / (s.session_id + ".json");
  write_file_atomic(p.string(), session_to_json(s).dump(2) + "\n");
}

void Engine::commit(SceneState& s, SceneGraph next, LogRecord record) {
  record.scene_id = s.id;
  record.revision_before = s.graph.revision();
  s.graph = std::move(next);
  record.effects = s.graph.take_journal();
  record.revision_after = s.graph.revision();
  s.log.append(std::move(record));
  persist_scene(s);
}

void Engine::log_only(SceneState& s, LogRecord record) {
  record.scene_id = s.id;
  record.revision_before = record.revision_after = s.graph.revision();
  s.log.append(std::move(record));
}

// ---------------------------------------------------------------------------
// lookup

std::shared_ptr<Engine::SceneState> Engine::scene_state(const std::string& scene_id) const {
  std::shared_lock lock(mu_);
  auto it = scenes_.find(scene_id);
  if (it == scenes_.end()) throw Error(Errc::NotFound, "no scene '" + scene_id + "'");
  return it->second;
}

std::shared_ptr<Engine::SessionState> Engine::session_state(const std::string& session_id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(Errc::NotFound, "no session '" + session_id + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// scenes

std::string Engine::create_scene(SceneGraph initial, std::optional<std::string> scene_id) {
  std::unique_lock lock(mu_);
  std::string id;
  if (scene_id) {
    if (!valid_id(*scene_id)) {
      throw Error(Errc::InvalidArgument, "scene id must be 1-64 characters of [A-Za-z0-9_-]");
    }
    if (scenes_.count(*scene_id)) throw Error(Errc::InvalidArgument, "scene '" + *scene_id + "' exists");
    id = *scene_id;
  } else {
    do {
      id = "scene-" + std::to_string(next_scene_++);
    } while (scenes_.count(id));
  }

  SceneGraph graph(id, initial.bounds());
  graph.apply_effect(ResetEffect{initial.objects(), initial.next_object_id()});
  graph.set_revision(initial.revision());

  std::string log_path;
  if (options_.data_dir) {
    log_path = (fs::path(*options_.data_dir) / "logs" / (id + ".jsonl")).string();
    std::error_code ec;
    fs::remove(log_path, ec);
  }
  auto state = std::make_shared<SceneState>(id, std::move(graph), log_path);
  LogRecord create = make_record("create", "system");
  create.effects.push_back(ResetEffect{state->graph.objects(), state->graph.next_object_id()});
  create.detail = {{"bounds", bounds_json(state->graph.bounds())}};
  {
    std::lock_guard scene_lock(state->mu);
    log_only(*state, std::move(create));
    persist_scene(*state);
  }
  scenes_.emplace(id, std::move(state));
  return id;
}

void Engine::delete_scene(const std::string& scene_id) {
  std::unique_lock lock(mu_);
  auto it = scenes_.find(scene_id);
  if (it == scenes_.end()) throw Error(Errc::NotFound, "no scene '" + scene_id + "'");
  {
    std::lock_guard scene_lock(it->second->mu);
    if (options_.data_dir) {
      std::error_code ec;
      fs::path root(*options_.data_dir);
      fs::remove(root / "scenes" / (scene_id + ".json"), ec);
      fs::remove(root / "logs" / (scene_id + ".jsonl"), ec);
    }
  }
  scenes_.erase(it);
  for (auto s = sessions_.begin(); s != sessions_.end();) {
    bool match;
    {
      std::lock_guard session_lock(s->second->mu);
      match = s->second->session.scene_id == scene_id;
    }
    if (match) {
      if (options_.data_dir) {
        std::error_code ec;
        fs::remove(fs::path(*options_.data_dir) / "sessions" / (s->first + ".json"), ec);
      }
      s = sessions_.erase(s);
    } else {
      ++s;
    }
  }
}

bool Engine::has_scene(const std::string& scene_id) const {
  std::shared_lock lock(mu_);
  return scenes_.count(scene_id) > 0;
}

std::vector<std::string> Engine::scene_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : scenes_) out.push_back(id);
  return out;
}

SceneSnapshot Engine::snapshot(const std::string& scene_id) const {
  auto s = scene_state(scene_id);
  std::lock_guard lock(s->mu);
  return s->graph.take_snapshot();
}

std::vector<LogRecord> Engine::log(const std::string& scene_id) const {
  return scene_state(scene_id)->log.records();
}

// ---------------------------------------------------------------------------
// sessions

std::string Engine::instruct(const std::string& scene_id, const std::string& instruction,
                             const PipelineConfig& config) {
  std::string text(trim(instruction));
  if (text.empty()) throw Error(Errc::InvalidArgument, "instruction is empty");
  auto sc = scene_state(scene_id);
  SceneGraph view;
  {
    std::lock_guard lock(sc->mu);
    view = sc->graph;
  }

  Session s;
  s.scene_id = scene_id;
  s.instruction = text;
  s.config = config;
  s.created_at = utc_timestamp();
  std::vector<SuggestionText> suggestions;
  if (config.include_suggestions_stage) {
    try {
      suggestions = generate_suggestions(config, view, text, *provider_, &s.diagnostics);
    } catch (const Error& e) {
      s.diagnostics.push_back(Diagnostic::from(e));
    }
  } else {
    suggestions.push_back({"s1", text, text});
  }
  for (auto& t : suggestions) {
    SuggestionEntry e;
    e.text = std::move(t);
    s.entries.push_back(std::move(e));
  }

  std::shared_ptr<SessionState> ss;
  {
    std::unique_lock lock(mu_);
    do {
      s.session_id = "sess-" + std::to_string(next_session_++);
    } while (sessions_.count(s.session_id));
    ss = std::make_shared<SessionState>(s);
    sessions_.emplace(s.session_id, ss);
  }
  {
    std::lock_guard lock(ss->mu);
    persist_session(ss->session);
  }
  {
    std::lock_guard lock(sc->mu);
    LogRecord r = make_record("instruct", "user");
    r.session_id = s.session_id;
    auto texts = nlohmann::ordered_json::array();
    for (const auto& e : s.entries) texts.push_back(e.text.text);
    r.detail = {{"instruction", text}, {"condition", config.condition_name()}, {"suggestions", texts}};
    log_only(*sc, std::move(r));
  }
  for (const auto& e : s.entries) {
    std::string sid = s.session_id, gid = e.id();
    schedule([this, sid, gid] { generate(sid, gid, 1); });
  }
  return s.session_id;
}

Session Engine::session(const std::string& session_id) const {
  auto ss = session_state(session_id);
  std::lock_guard lock(ss->mu);
  return ss->session;
}

std::vector<std::string> Engine::session_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void Engine::schedule(std::function<void()> task) {
  if (!pool_) {
    task();
    return;
  }
  {
    std::lock_guard lock(idle_mu_);
    ++in_flight_;
  }
  boost::asio::post(*pool_, [this, task = std::move(task)] {
    task();
    std::lock_guard lock(idle_mu_);
    if (--in_flight_ == 0) idle_cv_.notify_all();
  });
}

void Engine::wait_idle() {
  std::unique_lock lock(idle_mu_);
  idle_cv_.wait(lock, [this] { return in_flight_ == 0; });
}

void Engine::generate(const std::string& session_id, const std::string& suggestion_id,
                      int generation) {
  std::shared_ptr<SessionState> ss;
  try {
    ss = session_state(session_id);
  } catch (const Error&) {
    return;  // session deleted with its scene
  }
  PipelineConfig config;
  std::string text, scene_id;
  {
    std::lock_guard lock(ss->mu);
    const SuggestionEntry* e = ss->session.find(suggestion_id);
    if (!e || e->generation != generation || e->state != SuggestionState::Processing) return;
    config = ss->session.config;
    text = e->text.text;
    scene_id = ss->session.scene_id;
  }

  StepsParseResult result;
  std::optional<Diagnostic> failure;
  try {
    auto sc = scene_state(scene_id);
    SceneGraph view;
    {
      std::lock_guard lock(sc->mu);
      view = sc->graph;
    }
    result = generate_actions(config, view, text, *provider_, {catalog_.get(), embedder_.get()});
  } catch (const Error& e) {
    failure = Diagnostic::from(e);
  } catch (const std::exception& e) {
    failure = Diagnostic::error("InternalError", e.what());
  }

  std::lock_guard lock(ss->mu);
  SuggestionEntry* e = ss->session.find(suggestion_id);
  if (!e || e->generation != generation || e->state != SuggestionState::Processing) return;
  if (failure) {
    e->diagnostics.push_back(*failure);
  } else {
    e->actions = std::move(result.actions);
    for (auto& d : result.diagnostics) e->diagnostics.push_back(std::move(d));
    if (e->actions.empty()) {
      e->diagnostics.push_back(Diagnostic::error("NoActions", "provider output had no usable steps"));
    }
  }
  e->transition(e->actions.empty() ? SuggestionState::Failed : SuggestionState::Pending);
  try {
    persist_session(ss->session);
  } catch (const Error&) {
    // the in-memory state is still right; the next successful write catches up
  }
}

Revision Engine::apply_locked(SceneState& scene, SessionState& ss, SuggestionEntry& entry) {
  if (entry.state != SuggestionState::Pending) {
    throw Error(Errc::WrongState, "suggestion " + entry.id() + " is " +
                                      std::string(to_string(entry.state)) + ", not pending");
  }
  SceneGraph work = scene.graph;
  ExecutionContext ctx;
  InversePatch patch;
  std::optional<std::pair<std::size_t, Error>> failure;
  {
    SceneGraph::Batch batch(work);
    for (std::size_t i = 0; i < entry.actions.size(); ++i) {
      try {
        patch.append(execute(entry.actions[i], work, ctx).patch);
      } catch (const Error& e) {
        failure.emplace(i, e);
        break;
      }
    }
  }
  for (auto& d : ctx.diagnostics) entry.diagnostics.push_back(std::move(d));

  if (failure) {
    const auto& [step, err] = *failure;
    entry.diagnostics.push_back(Diagnostic::from(err, step, entry.actions[step].command_text));
    entry.diagnostics.push_back(Diagnostic::error(
        "AtomicRollback", "step " + std::to_string(step + 1) + " failed; no change was kept"));
    entry.transition(SuggestionState::Failed);
    persist_session(ss.session);
    throw Error(Errc::AtomicRollback, "suggestion " + entry.id() + " step " +
                                          std::to_string(step + 1) + ": " + err.what());
  }

  LogRecord r = make_record("apply", "user");
  r.session_id = ss.session.session_id;
  r.suggestion_id = entry.id();
  auto commands = nlohmann::ordered_json::array();
  for (const auto& a : entry.actions) commands.push_back(format_command(a));
  r.detail = {{"commands", commands}};
  commit(scene, std::move(work), std::move(r));
  entry.transition(SuggestionState::Applied);
  entry.patch = std::move(patch);
  persist_session(ss.session);
  return scene.graph.revision();
}

Revision Engine::undo_locked(SceneState& scene, SessionState& ss, SuggestionEntry& entry) {
  if (entry.state != SuggestionState::Applied) {
    throw Error(Errc::WrongState, "suggestion " + entry.id() + " is " +
                                      std::string(to_string(entry.state)) + ", not applied");
  }
  SceneGraph work = scene.graph;
  Diagnostics notes;
  invert(*entry.patch, work, &notes);
  LogRecord r = make_record("undo", "user");
  r.session_id = ss.session.session_id;
  r.suggestion_id = entry.id();
  commit(scene, std::move(work), std::move(r));
  for (auto& d : notes) entry.diagnostics.push_back(std::move(d));
  entry.transition(SuggestionState::Pending);
  persist_session(ss.session);
  return scene.graph.revision();
}

namespace {

SuggestionEntry& entry_of(Session& s, const std::string& suggestion_id) {
  SuggestionEntry* e = s.find(suggestion_id);
  if (!e) {
    throw Error(Errc::NotFound,
                "session " + s.session_id + " has no suggestion '" + suggestion_id + "'");
  }
  return *e;
}

}  // namespace

Revision Engine::apply(const std::string& session_id, const std::string& suggestion_id) {
  auto ss = session_state(session_id);
  std::string scene_id;
  {
    std::lock_guard lock(ss->mu);
    scene_id = ss->session.scene_id;
  }
  auto sc = scene_state(scene_id);
  std::scoped_lock lock(sc->mu, ss->mu);
  return apply_locked(*sc, *ss, entry_of(ss->session, suggestion_id));
}

Revision Engine::reapply(const std::string& session_id, const std::string& suggestion_id) {
  return apply(session_id, suggestion_id);
}

Revision Engine::undo(const std::string& session_id, const std::string& suggestion_id) {
  auto ss = session_state(session_id);
  std::string scene_id;
  {
    std::lock_guard lock(ss->mu);
    scene_id = ss->session.scene_id;
  }
  auto sc = scene_state(scene_id);
  std::scoped_lock lock(sc->mu, ss->mu);
  return undo_locked(*sc, *ss, entry_of(ss->session, suggestion_id));
}

void Engine::regenerate(const std::string& session_id, const std::string& suggestion_id) {
  auto ss = session_state(session_id);
  std::string scene_id;
  {
    std::lock_guard lock(ss->mu);
    scene_id = ss->session.scene_id;
  }
  auto sc = scene_state(scene_id);
  int generation;
  {
    std::scoped_lock lock(sc->mu, ss->mu);
    SuggestionEntry& e = entry_of(ss->session, suggestion_id);
    if (e.state == SuggestionState::Processing) {
      throw Error(Errc::WrongState, "suggestion " + e.id() + " is already processing");
    }
    if (e.state == SuggestionState::Applied) undo_locked(*sc, *ss, e);
    e.transition(SuggestionState::Processing);
    ++e.generation;
    e.actions.clear();
    e.diagnostics.clear();
    generation = e.generation;
    LogRecord r = make_record("regenerate", "user");
    r.session_id = session_id;
    r.suggestion_id = suggestion_id;
    r.detail = {{"generation", generation}};
    log_only(*sc, std::move(r));
    persist_session(ss->session);
  }
  schedule([this, session_id, suggestion_id, generation] {
    generate(session_id, suggestion_id, generation);
  });
}

// ---------------------------------------------------------------------------
// manual operations

Revision Engine::manual_commit(SceneState& s, SceneGraph next, InversePatch patch,
                               const std::string& op, nlohmann::ordered_json detail) {
  LogRecord r = make_record("manual", "manual");
  detail["op"] = op;
  r.detail = std::move(detail);
  commit(s, std::move(next), std::move(r));
  s.last_manual = std::move(patch);
  return s.graph.revision();
}

ManualResult Engine::manual_add(const std::string& scene_id, const ManualAdd& add) {
  if (!catalog_) throw Error(Errc::InvalidArgument, "no asset catalog is loaded");
  const AssetRecord* rec = nullptr;
  if (add.asset_id) {
    rec = catalog_->find(*add.asset_id);
    if (!rec) throw Error(Errc::NotFound, "no asset '" + *add.asset_id + "'");
  } else if (add.category && add.query) {
    if (!embedder_) throw Error(Errc::InvalidArgument, "no embedder configured");
    auto hits = catalog_->search(*embedder_, *add.category, *add.query, 1);
    if (hits.empty()) throw Error(Errc::EmptyCatalog, "category '" + *add.category + "' is empty");
    rec = catalog_->find(hits.front().asset_id);
  } else {
    throw Error(Errc::InvalidArgument, "manual add needs asset_id or category and query");
  }

  Action a;
  a.verb = Verb::Add;
  a.target = add.name.value_or(rec->name);
  a.key = add.position;
  a.asset = AssetBinding{rec->asset_id, rec->category, rec->default_scale};
  a.command_text = format_command(a);

  auto sc = scene_state(scene_id);
  std::lock_guard lock(sc->mu);
  SceneGraph work = sc->graph;
  ExecutionContext ctx;
  ExecutionResult res = execute(a, work, ctx);
  std::string name = ctx.resolve(a.target);
  Revision rev = manual_commit(*sc, std::move(work), std::move(res.patch), "add",
                               {{"asset_id", rec->asset_id},
                                {"name", name},
                                {"position", add.position.to_string()}});
  return {rev, name};
}

Revision Engine::manual_mutate(const std::string& scene_id, const std::string& name,
                               const std::vector<std::pair<Field, std::string>>& changes) {
  if (changes.empty()) throw Error(Errc::InvalidArgument, "no fields to change");
  auto sc = scene_state(scene_id);
  std::lock_guard lock(sc->mu);
  SceneGraph work = sc->graph;
  InversePatch patch;
  auto fields = nlohmann::ordered_json::object();
  {
    SceneGraph::Batch batch(work);
    for (const auto& [field, text] : changes) {
      MutationResult r = work.mutate_object(name, field, text);
      const SceneObject* obj = work.find(name);
      patch.records.push_back(RestoreField{obj->id, name, r.old_value, obj->get(field)});
      fields[std::string(to_string(field))] = obj->get(field).to_string();
    }
  }
  return manual_commit(*sc, std::move(work), std::move(patch), "mutate",
                       {{"name", name}, {"fields", fields}});
}

Revision Engine::manual_destroy(const std::string& scene_id, const std::string& name) {
  auto sc = scene_state(scene_id);
  std::lock_guard lock(sc->mu);
  if (!sc->graph.contains(name)) throw Error(Errc::NotFound, "no object '" + name + "'");
  Action a;
  a.verb = Verb::Destroy;
  a.target = name;
  a.command_text = format_command(a);
  SceneGraph work = sc->graph;
  ExecutionContext ctx;
  ExecutionResult res = execute(a, work, ctx);
  return manual_commit(*sc, std::move(work), std::move(res.patch), "destroy", {{"name", name}});
}

Revision Engine::manual_undo(const std::string& scene_id) {
  auto sc = scene_state(scene_id);
  std::lock_guard lock(sc->mu);
  if (!sc->last_manual) throw Error(Errc::WrongState, "no manual operation to undo");
  SceneGraph work = sc->graph;
  Diagnostics notes;
  invert(*sc->last_manual, work, &notes);
  LogRecord r = make_record("manual-undo", "manual");
  auto warnings = nlohmann::ordered_json::array();
  for (const auto& d : notes) warnings.push_back(to_json(d));
  r.detail = {{"warnings", warnings}};
  commit(*sc, std::move(work), std::move(r));
  sc->last_manual.reset();
  return sc->graph.revision();
}

}  // namespace echo

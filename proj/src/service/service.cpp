#include "echo/service/service.hpp"

#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>
#include <toml.hpp>

#include "echo/app/script.hpp"
#include "echo/catalog/labeling.hpp"
#include "echo/error.hpp"
#include "echo/scene/top_view.hpp"
#include "echo/util/text.hpp"

namespace echo {

namespace fs = std::filesystem;
using J = nlohmann::ordered_json;

ServiceConfig load_service_config(const std::string& path) {
  toml::table tbl;
  try {
    tbl = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw Error(Errc::ConfigError, path + ": " + std::string(e.description()));
  }
  for (const auto& [k, v] : tbl) {
    if (k.str() != "service") throw Error(Errc::ConfigError, path + ": unknown table '" + std::string(k.str()) + "'");
  }
  const toml::table* svc = tbl["service"].as_table();
  ServiceConfig c;
  if (!svc) return c;
  fs::path base = fs::path(path).parent_path();
  auto rel = [&](const std::string& v) {
    if (v.empty() || fs::path(v).is_absolute()) return v;
    return (base / v).lexically_normal().string();
  };
  for (const auto& [key, node] : *svc) {
    std::string k(key.str());
    auto str = [&]() {
      auto v = node.value<std::string>();
      if (!v) throw Error(Errc::ConfigError, path + ": '" + k + "' must be a string");
      return *v;
    };
    auto integer = [&](std::int64_t lo, std::int64_t hi) {
      auto v = node.value<std::int64_t>();
      if (!v || *v < lo || *v > hi) {
        throw Error(Errc::ConfigError, path + ": '" + k + "' must be an integer in [" +
                                           std::to_string(lo) + ", " + std::to_string(hi) + "]");
      }
      return *v;
    };
    if (k == "host") c.host = str();
    else if (k == "port") c.port = static_cast<int>(integer(0, 65535));
    else if (k == "data_dir") c.data_dir = rel(str());
    else if (k == "provider_config") c.provider_config = rel(str());
    else if (k == "catalog") c.catalog = rel(str());
    else if (k == "seed_scene") c.seed_scene = rel(str());
    else if (k == "admin_token") c.admin_token = str();
    else if (k == "ui_dir") c.ui_dir = rel(str());
    else if (k == "generation_threads") c.generation_threads = static_cast<std::size_t>(integer(0, 64));
    else throw Error(Errc::ConfigError, path + ": unknown key '" + k + "'");
  }
  return c;
}

ApiStatus api_status(Errc code) {
  switch (code) {
    case Errc::NotFound: return {404, "NOT_FOUND"};
    case Errc::WrongState: return {409, "WRONG_STATE"};
    case Errc::AtomicRollback: return {409, "ATOMIC_ROLLBACK"};
    case Errc::ProviderError:
    case Errc::Timeout:
    case Errc::HttpError:
    case Errc::AuthError: return {502, "PROVIDER_ERROR"};
    case Errc::DuplicateName:
    case Errc::InvalidScale:
    case Errc::InvalidValue:
    case Errc::InvalidResolution:
    case Errc::SyntaxError:
    case Errc::UnknownVerb:
    case Errc::MalformedVector:
    case Errc::UnknownMaterial:
    case Errc::NonPositiveScale:
    case Errc::SchemaError:
    case Errc::LabelSchemaError:
    case Errc::BannedCategory:
    case Errc::EmptyText:
    case Errc::UnknownCategory:
    case Errc::EmptyCatalog:
    case Errc::CategoryNotInList:
    case Errc::InvalidArgument: return {422, "VALIDATION_ERROR"};
    default: return {500, "INTERNAL"};
  }
}

J api_error(const std::string& code, const std::string& message, const J& details) {
  J j = {{"code", code}, {"message", message}};
  if (!details.is_null()) j["details"] = details;
  return j;
}

J session_view(const Session& s) {
  J entries = J::array();
  for (const auto& e : s.entries) {
    J actions = J::array();
    for (const auto& a : e.actions) actions.push_back(a.command_text.empty() ? format_command(a) : a.command_text);
    J diags = J::array();
    for (const auto& d : e.diagnostics) diags.push_back(to_json(d));
    entries.push_back({{"suggestion_id", e.id()},
                       {"text", e.text.text},
                       {"state", std::string(to_string(e.state))},
                       {"generation", e.generation},
                       {"actions", actions},
                       {"diagnostics", diags}});
  }
  J diags = J::array();
  for (const auto& d : s.diagnostics) diags.push_back(to_json(d));
  return {{"session_id", s.session_id},
          {"scene_id", s.scene_id},
          {"instruction", s.instruction},
          {"config", config_to_json(s.config)},
          {"suggestions", entries},
          {"diagnostics", diags}};
}

namespace {

struct Reply {
  int status = 200;
  J body;
};

void send_json(httplib::Response& res, int status, const J& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

J parse_body(const httplib::Request& req, bool required) {
  if (req.body.empty()) {
    if (required) throw Error(Errc::SchemaError, "request body must be a JSON object");
    return J::object();
  }
  J j;
  try {
    j = J::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::SchemaError, "request body must be a JSON object");
  return j;
}

void only_keys(const J& j, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= k == a;
    if (!ok) throw Error(Errc::SchemaError, "unknown field \"" + k + "\"");
  }
}

RoomBounds bounds_from_json(const J& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "\"bounds\" must be an object");
  only_keys(j, {"min_x", "min_z", "max_x", "max_z"});
  RoomBounds b;
  auto num = [&](const char* k, double& out) {
    if (!j.contains(k)) return;
    if (!j[k].is_number()) throw Error(Errc::SchemaError, std::string("\"") + k + "\" must be a number");
    out = j[k].get<double>();
  };
  num("min_x", b.min_x);
  num("min_z", b.min_z);
  num("max_x", b.max_x);
  num("max_z", b.max_z);
  if (!(b.min_x < b.max_x) || !(b.min_z < b.max_z)) throw Error(Errc::InvalidValue, "empty room bounds");
  return b;
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  std::optional<SceneGraph> seed;
  httplib::Server server;
  std::thread thread;
  std::mutex label_mu;
};

Service::Service(ServiceConfig config, std::shared_ptr<Engine> engine, std::optional<SceneGraph> seed)
    : engine_(std::move(engine)), impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->seed = std::move(seed);
  httplib::Server& srv = impl_->server;
  Engine& eng = *engine_;
  Impl& impl = *impl_;

  // Runs a handler, turning errors into ApiError bodies.
  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        Reply r = fn(req, res);
        if (!r.body.is_null()) send_json(res, r.status, r.body);
      } catch (const Error& e) {
        ApiStatus st = api_status(e.code());
        send_json(res, st.status, api_error(st.code, e.what(), {{"kind", std::string(to_string(e.code()))}}));
      } catch (const std::exception& e) {
        send_json(res, 500, api_error("INTERNAL", e.what()));
      }
    };
  };
  auto revision_reply = [](Revision r) { return Reply{200, J{{"revision", r}}}; };

  srv.Get("/healthz", guarded([&eng](const httplib::Request&, httplib::Response&) {
    return Reply{200, J{{"status", "ok"}, {"scenes", eng.scene_ids().size()}}};
  }));

  srv.Get("/scenes", guarded([&eng](const httplib::Request&, httplib::Response&) {
    return Reply{200, J{{"scenes", eng.scene_ids()}}};
  }));

  srv.Post("/scenes", guarded([&eng, &impl](const httplib::Request& req, httplib::Response&) {
    J body = parse_body(req, false);
    only_keys(body, {"scene_id", "bounds", "objects", "seed"});
    RoomBounds bounds = body.contains("bounds") ? bounds_from_json(body["bounds"]) : RoomBounds{};
    std::optional<std::string> id;
    if (body.contains("scene_id")) {
      if (!body["scene_id"].is_string()) throw Error(Errc::SchemaError, "\"scene_id\" must be a string");
      id = body["scene_id"].get<std::string>();
    }
    bool use_seed = body.value("seed", false);
    if (use_seed && body.contains("objects")) {
      throw Error(Errc::InvalidArgument, "give either \"seed\" or \"objects\"");
    }
    SceneGraph initial("new", bounds);
    if (use_seed) {
      if (!impl.seed) throw Error(Errc::InvalidArgument, "no seed scene configured");
      SceneSnapshot s = impl.seed->take_snapshot();
      initial = deserialize_parameters(serialize_parameters(s.objects()), "new",
                                       body.contains("bounds") ? bounds : impl.seed->bounds());
    } else if (body.contains("objects")) {
      initial = deserialize_parameters(body["objects"].dump(), "new", bounds);
    }
    std::string sid = eng.create_scene(std::move(initial), id);
    return Reply{201, J{{"scene_id", sid}, {"revision", eng.snapshot(sid).revision()}}};
  }));

  srv.Get(R"(/scenes/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    SceneSnapshot snap = eng.snapshot(req.matches[1]);
    res.set_header("X-Scene-Revision", std::to_string(snap.revision()));
    res.status = 200;
    res.set_content(serialize_parameters(snap.objects()), "application/json");
    return Reply{200, nullptr};
  }));

  srv.Delete(R"(/scenes/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response&) {
    std::string id = req.matches[1];
    eng.delete_scene(id);
    return Reply{200, J{{"deleted", id}}};
  }));

  srv.Get(R"(/scenes/([^/]+)/topview)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
    int resolution = 256;
    if (req.has_param("res")) {
      try {
        std::size_t used = 0;
        std::string text = req.get_param_value("res");
        resolution = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        throw Error(Errc::InvalidResolution, "res must be an integer");
      }
    }
    std::string format = req.has_param("format") ? req.get_param_value("format") : "ppm";
    if (format != "ppm" && format != "png") throw Error(Errc::InvalidArgument, "format must be ppm or png");
    SceneSnapshot snap = eng.snapshot(req.matches[1]);
    std::string ppm = render_top_view(snap.to_scene(), resolution).ppm();
    res.set_header("X-Scene-Revision", std::to_string(snap.revision()));
    res.status = 200;
    if (format == "png") {
      res.set_content(ppm_to_png(ppm), "image/png");
    } else {
      res.set_content(ppm, "image/x-portable-pixmap");
    }
    return Reply{200, nullptr};
  }));

  srv.Get(R"(/scenes/([^/]+)/log)", guarded([&eng](const httplib::Request& req, httplib::Response&) {
    J records = J::array();
    for (const auto& r : eng.log(req.matches[1])) records.push_back(log_record_to_json(r));
    return Reply{200, J{{"records", records}}};
  }));

  srv.Post(R"(/scenes/([^/]+)/objects)", guarded([&eng](const httplib::Request& req, httplib::Response&) {
    ManualResult r = eng.manual_add(req.matches[1], manual_add_from_json(parse_body(req, true)));
    return Reply{200, J{{"revision", r.revision}, {"name", r.name}}};
  }));

  srv.Patch(R"(/scenes/([^/]+)/objects/([^/]+))",
            guarded([&eng, revision_reply](const httplib::Request& req, httplib::Response&) {
              auto changes = field_changes_from_json(parse_body(req, true));
              return revision_reply(eng.manual_mutate(req.matches[1], req.matches[2], changes));
            }));

  srv.Delete(R"(/scenes/([^/]+)/objects/([^/]+))",
             guarded([&eng, revision_reply](const httplib::Request& req, httplib::Response&) {
               return revision_reply(eng.manual_destroy(req.matches[1], req.matches[2]));
             }));

  srv.Post(R"(/scenes/([^/]+)/manual-undo)",
           guarded([&eng, revision_reply](const httplib::Request& req, httplib::Response&) {
             return revision_reply(eng.manual_undo(req.matches[1]));
           }));

  srv.Post(R"(/scenes/([^/]+)/instruct)", guarded([&eng](const httplib::Request& req, httplib::Response&) {
    J body = parse_body(req, true);
    only_keys(body, {"instruction", "config"});
    if (!body.contains("instruction") || !body["instruction"].is_string()) {
      throw Error(Errc::SchemaError, "\"instruction\" must be a string");
    }
    PipelineConfig config;
    if (body.contains("config")) {
      config = body["config"].is_string() ? PipelineConfig::from_condition(body["config"].get<std::string>())
                                          : config_from_json(body["config"]);
    }
    std::string sid = eng.instruct(req.matches[1], body["instruction"].get<std::string>(), config);
    Session s = eng.session(sid);
    // Suggestion generation itself failed at the provider.
    if (s.entries.empty()) {
      for (const auto& d : s.diagnostics) {
        auto code = errc_from_string(d.kind);
        if (d.severity == Severity::Error && code && is_provider_failure(*code)) {
          return Reply{502, api_error("PROVIDER_ERROR", d.message, {{"session_id", sid}, {"kind", d.kind}})};
        }
      }
    }
    return Reply{200, J{{"session_id", sid}}};
  }));

  srv.Get(R"(/sessions/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response&) {
    return Reply{200, session_view(eng.session(req.matches[1]))};
  }));

  srv.Post(R"(/sessions/([^/]+)/suggestions/([^/]+)/(apply|undo|reapply|regenerate))",
           guarded([&eng](const httplib::Request& req, httplib::Response&) {
             std::string sid = req.matches[1], sug = req.matches[2], op = req.matches[3];
             if (op == "regenerate") {
               eng.regenerate(sid, sug);
               return Reply{202, J{{"accepted", true}}};
             }
             try {
               Revision r = op == "undo" ? eng.undo(sid, sug) : eng.apply(sid, sug);
               return Reply{200, J{{"revision", r}}};
             } catch (const Error& e) {
               if (e.code() != Errc::AtomicRollback) throw;
               J diags = J::array();
               for (const auto& s : eng.session(sid).entries) {
                 if (s.id() != sug) continue;
                 for (const auto& d : s.diagnostics) diags.push_back(to_json(d));
               }
               return Reply{409, api_error("ATOMIC_ROLLBACK", e.what(), {{"diagnostics", diags}})};
             }
           }));

  srv.Get("/assets/categories", guarded([&eng](const httplib::Request&, httplib::Response&) {
    if (!eng.catalog()) return Reply{200, J{{"categories", J::array()}}};
    return Reply{200, J{{"categories", eng.catalog()->categories()}}};
  }));

  srv.Get("/assets/search", guarded([&eng](const httplib::Request& req, httplib::Response&) {
    if (!eng.catalog() || !eng.embedder()) throw Error(Errc::EmptyCatalog, "no catalog loaded");
    std::optional<std::string> category;
    if (req.has_param("category") && !req.get_param_value("category").empty()) {
      category = req.get_param_value("category");
    }
    std::string q = req.has_param("q") ? req.get_param_value("q") : "";
    std::size_t limit = 10;
    if (req.has_param("limit")) {
      try {
        limit = static_cast<std::size_t>(std::stoul(req.get_param_value("limit")));
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "limit must be a non-negative integer");
      }
    }
    J results = J::array();
    for (const auto& hit : eng.catalog()->search(*eng.embedder(), category, q, limit)) {
      const AssetRecord* r = eng.catalog()->find(hit.asset_id);
      results.push_back({{"asset_id", hit.asset_id},
                         {"name", r->name},
                         {"category", r->category},
                         {"description", r->description},
                         {"score", hit.score}});
    }
    return Reply{200, J{{"results", results}}};
  }));

  srv.Post("/assets/label", guarded([&eng, &impl](const httplib::Request& req, httplib::Response&) {
    if (impl.config.admin_token.empty()) {
      return Reply{403, api_error("FORBIDDEN", "labeling is disabled; no admin token configured")};
    }
    std::string given = req.get_header_value("X-Admin-Token");
    if (given.empty()) {
      std::string auth = req.get_header_value("Authorization");
      if (auth.rfind("Bearer ", 0) == 0) given = auth.substr(7);
    }
    if (given != impl.config.admin_token) return Reply{401, api_error("UNAUTHORIZED", "bad admin token")};
    J body = parse_body(req, true);
    only_keys(body, {"object_name", "thumbnail_base64", "mime_type"});
    if (!body.contains("object_name") || !body["object_name"].is_string() ||
        !body.contains("thumbnail_base64") || !body["thumbnail_base64"].is_string()) {
      throw Error(Errc::SchemaError, "\"object_name\" and \"thumbnail_base64\" are required strings");
    }
    std::string bytes = base64_decode(body["thumbnail_base64"].get<std::string>());
    std::string mime = body.value("mime_type", "image/png");
    Diagnostics diags;
    AssetRecord rec;
    {
      std::lock_guard lock(impl.label_mu);
      rec = annotate_asset(body["object_name"].get<std::string>(), bytes, mime, eng.provider(), &diags);
    }
    J d = J::array();
    for (const auto& x : diags) d.push_back(to_json(x));
    return Reply{200, J{{"record", record_to_json(rec)}, {"diagnostics", d}}};
  }));

  if (!impl.config.ui_dir.empty()) srv.set_mount_point("/ui", impl.config.ui_dir);

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_json(res, 404, api_error("NOT_FOUND", "no such route"));
    } else if (res.status == 405) {
      send_json(res, 405, api_error("METHOD_NOT_ALLOWED", "method not allowed"));
    } else {
      send_json(res, res.status, api_error(res.status >= 500 ? "INTERNAL" : "BAD_REQUEST", "request failed"));
    }
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send_json(res, 500, api_error("INTERNAL", "unhandled error"));
  });
  srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::info("{} {} {} {}B", req.method, req.path, res.status, res.body.size());
  });
}

Service::~Service() { stop(); }

int Service::start() {
  int port = impl_->config.port == 0
                 ? impl_->server.bind_to_any_port(impl_->config.host)
                 : (impl_->server.bind_to_port(impl_->config.host, impl_->config.port) ? impl_->config.port : -1);
  if (port < 0) {
    throw Error(Errc::IoError, "cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  spdlog::info("listening on {}:{}", impl_->config.host, port);
  return port;
}

void Service::run() {
  start();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable() && impl_->thread.get_id() != std::this_thread::get_id()) {
    impl_->thread.join();
  }
}

}  // namespace echo

#include "echo/action/execution.hpp"

#include <algorithm>

#include "echo/error.hpp"

namespace echo {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kMinScale = 0.01;

SceneObject make_added_object(const Action& a, std::string name) {
  SceneObject obj;
  obj.name = std::move(name);
  obj.position = std::get<Vector3>(a.key);
  if (a.asset) {
    obj.scale = a.asset->default_scale;
    obj.asset_ref = a.asset->asset_id;
  } else {
    obj.color = kPlaceholderColor;
  }
  return obj;
}

void add_object(SceneGraph& scene, SceneObject obj, InversePatch& patch) {
  scene.add_object(obj);
  const SceneObject* added = scene.find(obj.name);
  patch.records.push_back(DeleteObject{added->id, added->name});
}

void set_field(SceneGraph& scene, const SceneObject& obj, const FieldValue& value,
               InversePatch& patch) {
  MutationResult r = scene.mutate_object(obj.id, value);
  patch.records.push_back(
      RestoreField{obj.id, obj.name, r.old_value, scene.find(obj.id)->get(value.field())});
}

}  // namespace

void InversePatch::append(InversePatch other) {
  records.insert(records.end(), std::make_move_iterator(other.records.begin()),
                 std::make_move_iterator(other.records.end()));
}

std::string ExecutionContext::resolve(std::string_view target) const {
  auto it = renamed.find(target);
  return it == renamed.end() ? std::string(target) : it->second;
}

ExecutionResult execute(const Action& a, SceneGraph& scene) {
  ExecutionContext ctx;
  return execute(a, scene, ctx);
}

namespace {

InversePatch apply_action(const Action& a, SceneGraph& scene, ExecutionContext& ctx) {
  InversePatch patch;

  if (a.verb == Verb::Add) {
    std::string name = scene.unique_name(a.target);
    if (name != a.target) {
      ctx.renamed[a.target] = name;
      ctx.diagnostics.push_back(Diagnostic::warning(
          "Renamed", "'" + a.target + "' already exists; added as '" + name + "'", std::nullopt,
          a.command_text));
    }
    add_object(scene, make_added_object(a, name), patch);
    return patch;
  }

  std::string name = ctx.resolve(a.target);
  if (!scene.contains(name)) {
    if (!ctx.options.auto_add_missing) {
      throw Error(Errc::TargetMissing, "target '" + name + "' does not exist");
    }
    SceneObject placeholder;
    placeholder.name = name;
    placeholder.color = kPlaceholderColor;
    placeholder.position = Vector3(0.0, 0.5, 0.0);
    add_object(scene, placeholder, patch);
    ctx.diagnostics.push_back(Diagnostic::warning(
        "AutoAdded", "placeholder '" + name + "' created for " + std::string(to_string(a.verb)),
        std::nullopt, a.command_text));
  }
  const SceneObject obj = *scene.find(name);

  switch (a.verb) {
    case Verb::Move:
      set_field(scene, obj, FieldValue::position(std::get<Vector3>(a.key)), patch);
      break;
    case Verb::Rotate:
      set_field(scene, obj, FieldValue::rotation(std::get<Vector3>(a.key)), patch);
      break;
    case Verb::Scale: {
      double m = std::get<ScaleFactor>(a.key).value;
      auto scaled = [m](double v) { return std::max(kMinScale, quantize(v * m)); };
      Vector3 s(scaled(obj.scale.x), scaled(obj.scale.y), scaled(obj.scale.z));
      set_field(scene, obj, FieldValue::scale(s), patch);
      break;
    }
    case Verb::Color:
      set_field(scene, obj, FieldValue::color(std::get<ColorRGB>(a.key)), patch);
      break;
    case Verb::Style:
      set_field(scene, obj, FieldValue::material(std::get<Material>(a.key)), patch);
      break;
    case Verb::Destroy: {
      RemovedObject removed = scene.remove_object(obj.id);
      patch.records.push_back(RestoreObject{std::move(removed)});
      break;
    }
    case Verb::Add: break;
  }
  return patch;
}

}  // namespace

ExecutionResult execute(const Action& a, SceneGraph& scene, ExecutionContext& ctx) {
  if (!key_matches_verb(a.verb, a.key)) {
    throw Error(Errc::InvalidValue,
                "action key does not match verb " + std::string(to_string(a.verb)));
  }
  InversePatch patch;
  {
    SceneGraph::Batch batch(scene);
    patch = apply_action(a, scene, ctx);
  }
  return {scene.revision(), std::move(patch)};
}

ExecutionResult execute_sequence(const ActionStepList& actions, SceneGraph& scene,
                                 ExecutionContext& ctx) {
  InversePatch patch;
  {
    SceneGraph::Batch batch(scene);
    for (const Action& a : actions) patch.append(execute(a, scene, ctx).patch);
  }
  return {scene.revision(), std::move(patch)};
}

Revision invert(const InversePatch& patch, SceneGraph& scene, Diagnostics* diags) {
  auto note = [&](std::string kind, std::string msg) {
    if (diags) diags->push_back(Diagnostic::warning(std::move(kind), std::move(msg)));
  };
  {
    SceneGraph::Batch batch(scene);
    for (auto it = patch.records.rbegin(); it != patch.records.rend(); ++it) {
      std::visit(
          overloaded{
              [&](const RestoreField& r) {
                const SceneObject* obj = scene.find(r.id);
                if (!obj) {
                  note("UndoTargetGone", "'" + r.name + "' no longer exists; " +
                                             std::string(to_string(r.old_value.field())) +
                                             " not restored");
                  return;
                }
                if (obj->get(r.old_value.field()) != r.new_value) {
                  note("UndoConflict", "'" + r.name + "' " +
                                           std::string(to_string(r.old_value.field())) +
                                           " was changed after this suggestion; restoring anyway");
                }
                scene.mutate_object(r.id, r.old_value);
              },
              [&](const DeleteObject& r) {
                if (!scene.find(r.id)) {
                  note("UndoTargetGone", "'" + r.name + "' was already removed");
                  return;
                }
                scene.remove_object(r.id);
              },
              [&](const RestoreObject& r) {
                SceneObject obj = r.removed.object;
                if (scene.find(obj.id)) {
                  note("UndoTargetGone", "'" + obj.name + "' is already present");
                  return;
                }
                if (scene.contains(obj.name)) {
                  std::string fresh = scene.unique_name(obj.name);
                  if (diags) {
                    diags->push_back(Diagnostic::warning(
                        std::string(to_string(Errc::RestoreCollision)),
                        "'" + obj.name + "' restored as '" + fresh + "'"));
                  }
                  obj.name = fresh;
                }
                scene.insert_object(std::move(obj), r.removed.index);
              },
          },
          *it);
    }
  }
  return scene.revision();
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json patch_to_json(const InversePatch& patch) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& rec : patch.records) {
    arr.push_back(std::visit(
        overloaded{
            [](const RestoreField& r) {
              return nlohmann::ordered_json{{"op", "restore_field"},
                                    {"id", r.id},
                                    {"name", r.name},
                                    {"field", std::string(to_string(r.old_value.field()))},
                                    {"old", r.old_value.to_string()},
                                    {"new", r.new_value.to_string()}};
            },
            [](const DeleteObject& r) {
              return nlohmann::ordered_json{{"op", "delete_object"}, {"id", r.id}, {"name", r.name}};
            },
            [](const RestoreObject& r) {
              nlohmann::ordered_json obj = object_to_json(r.removed.object, true);
              return nlohmann::ordered_json{
                  {"op", "restore_object"}, {"index", r.removed.index}, {"object", obj}};
            },
        },
        rec));
  }
  return arr;
}

InversePatch patch_from_json(const nlohmann::ordered_json& j) {
  InversePatch patch;
  try {
    for (const auto& r : j) {
      const std::string op = r.at("op").get<std::string>();
      if (op == "restore_field") {
        auto field = field_from_string(r.at("field").get<std::string>());
        if (!field) throw Error(Errc::SchemaError, "unknown field in patch");
        patch.records.push_back(RestoreField{r.at("id").get<ObjectId>(),
                                             r.at("name").get<std::string>(),
                                             FieldValue::parse(*field, r.at("old").get<std::string>()),
                                             FieldValue::parse(*field, r.at("new").get<std::string>())});
      } else if (op == "delete_object") {
        patch.records.push_back(
            DeleteObject{r.at("id").get<ObjectId>(), r.at("name").get<std::string>()});
      } else if (op == "restore_object") {
        patch.records.push_back(RestoreObject{RemovedObject{
            object_from_json(r.at("object"), true), r.at("index").get<std::size_t>()}});
      } else {
        throw Error(Errc::SchemaError, "unknown patch op '" + op + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("patch: ") + e.what());
  }
  return patch;
}

}  // namespace echo

#include "echo/scene/scene_graph.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "echo/error.hpp"

namespace echo {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive(const Vector3& v) { return v.x > 0.0 && v.y > 0.0 && v.z > 0.0; }

// Re-quantizes vectors that may have been assigned component-wise and
// normalizes the rotation.
SceneObject normalized(SceneObject obj) {
  obj.position = Vector3(obj.position.x, obj.position.y, obj.position.z);
  obj.rotation = normalize_rotation(obj.rotation);
  obj.scale = Vector3(obj.scale.x, obj.scale.y, obj.scale.z);
  return obj;
}

FieldValue normalized(const FieldValue& v) {
  switch (v.field()) {
    case Field::Position: return FieldValue::position(Vector3(v.vector().x, v.vector().y, v.vector().z));
    case Field::Rotation: return FieldValue::rotation(normalize_rotation(v.vector()));
    case Field::Scale: {
      Vector3 s(v.vector().x, v.vector().y, v.vector().z);
      if (!positive(s)) {
        throw Error(Errc::InvalidValue, "scale components must be > 0, got " + s.to_string());
      }
      return FieldValue::scale(s);
    }
    default: return v;
  }
}

void validate_objects(const std::vector<SceneObject>& objects, ObjectId next_id) {
  std::set<std::string> names;
  std::set<ObjectId> ids;
  for (const auto& o : objects) {
    if (!is_valid_object_name(o.name)) {
      throw Error(Errc::SchemaError, "invalid object name '" + o.name + "'");
    }
    if (!names.insert(o.name).second) {
      throw Error(Errc::SchemaError, "duplicate object name '" + o.name + "'");
    }
    if (o.id == 0 || o.id >= next_id || !ids.insert(o.id).second) {
      throw Error(Errc::SchemaError, "bad object id for '" + o.name + "'");
    }
    if (!positive(o.scale)) {
      throw Error(Errc::SchemaError, "non-positive scale on '" + o.name + "'");
    }
  }
}

}  // namespace

SceneGraph::SceneGraph(std::string scene_id, RoomBounds bounds)
    : id_(std::move(scene_id)), bounds_(bounds) {
  if (!bounds_.valid()) throw Error(Errc::InvalidValue, "room bounds are empty");
}

const SceneObject* SceneGraph::find(std::string_view name) const {
  auto it = std::find_if(objects_.begin(), objects_.end(),
                         [&](const SceneObject& o) { return o.name == name; });
  return it == objects_.end() ? nullptr : &*it;
}

const SceneObject* SceneGraph::find(ObjectId id) const {
  auto it = std::find_if(objects_.begin(), objects_.end(),
                         [&](const SceneObject& o) { return o.id == id; });
  return it == objects_.end() ? nullptr : &*it;
}

std::size_t SceneGraph::index_of(ObjectId id) const {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].id == id) return i;
  }
  throw Error(Errc::NotFound, "no object with id " + std::to_string(id));
}

std::string SceneGraph::unique_name(std::string_view base) const {
  std::string name(base);
  for (int n = 2; contains(name); ++n) name = std::string(base) + "_" + std::to_string(n);
  return name;
}

void SceneGraph::check_insertable(const SceneObject& obj) const {
  if (!is_valid_object_name(obj.name)) {
    throw Error(Errc::InvalidValue, "invalid object name '" + obj.name + "'");
  }
  if (contains(obj.name)) {
    throw Error(Errc::DuplicateName, "object '" + obj.name + "' already exists");
  }
  if (!positive(obj.scale)) {
    throw Error(Errc::InvalidScale, "scale components must be > 0 for '" + obj.name + "'");
  }
}

Revision SceneGraph::add_object(SceneObject obj) {
  return insert_object(std::move(obj), objects_.size());
}

Revision SceneGraph::insert_object(SceneObject obj, std::size_t index) {
  obj = normalized(std::move(obj));
  check_insertable(obj);
  if (obj.id == 0 || find(obj.id) != nullptr) {
    obj.id = next_id_++;
  } else if (obj.id >= next_id_) {
    next_id_ = obj.id + 1;
  }
  index = std::min(index, objects_.size());
  objects_.insert(objects_.begin() + static_cast<std::ptrdiff_t>(index), obj);
  record(InsertEffect{std::move(obj), index});
  touch();
  return revision_;
}

RemovedObject SceneGraph::remove_object(std::string_view name) {
  const SceneObject* o = find(name);
  if (!o) throw Error(Errc::NotFound, "no object named '" + std::string(name) + "'");
  return remove_object(o->id);
}

RemovedObject SceneGraph::remove_object(ObjectId id) {
  std::size_t index = index_of(id);
  RemovedObject removed{objects_[index], index};
  objects_.erase(objects_.begin() + static_cast<std::ptrdiff_t>(index));
  record(RemoveEffect{id});
  touch();
  return removed;
}

MutationResult SceneGraph::mutate_object(std::string_view name, const FieldValue& value) {
  const SceneObject* o = find(name);
  if (!o) throw Error(Errc::NotFound, "no object named '" + std::string(name) + "'");
  return mutate_object(o->id, value);
}

MutationResult SceneGraph::mutate_object(ObjectId id, const FieldValue& value) {
  SceneObject& obj = at(id);
  FieldValue v = normalized(value);
  FieldValue old = obj.get(v.field());
  obj.set(v);
  record(SetFieldEffect{id, v});
  touch();
  return {old, revision_};
}

MutationResult SceneGraph::mutate_object(std::string_view name, Field field,
                                         std::string_view text) {
  if (!find(name)) throw Error(Errc::NotFound, "no object named '" + std::string(name) + "'");
  std::optional<FieldValue> value;
  try {
    value = FieldValue::parse(field, text);
  } catch (const Error& e) {
    throw Error(Errc::InvalidValue, e.what());
  }
  return mutate_object(name, *value);
}

SceneSnapshot SceneGraph::take_snapshot() const { return SceneSnapshot(*this); }

Revision SceneGraph::restore_snapshot(const SceneSnapshot& snap) {
  apply_effect(ResetEffect{snap.objects(), snap.next_object_id()});
  return revision_;
}

void SceneGraph::apply_effect(const SceneEffect& effect) {
  std::visit(overloaded{
                 [&](const InsertEffect& e) {
                   if (find(e.object.id)) {
                     throw Error(Errc::LogCorrupt, "insert of existing id " +
                                                       std::to_string(e.object.id));
                   }
                   insert_object(e.object, e.index);
                 },
                 [&](const RemoveEffect& e) { remove_object(e.id); },
                 [&](const SetFieldEffect& e) { mutate_object(e.id, e.value); },
                 [&](const ResetEffect& e) {
                   // Ids are never handed out twice, even across a restore.
                   ObjectId next = std::max(next_id_, e.next_object_id);
                   std::vector<SceneObject> objs;
                   objs.reserve(e.objects.size());
                   for (const auto& o : e.objects) objs.push_back(normalized(o));
                   validate_objects(objs, next);
                   objects_ = std::move(objs);
                   next_id_ = next;
                   record(ResetEffect{objects_, next_id_});
                   touch();
                 },
             },
             effect);
}

SceneGraph::Batch::Batch(SceneGraph& scene) : scene_(scene) { ++scene_.batch_depth_; }

SceneGraph::Batch::~Batch() {
  if (--scene_.batch_depth_ == 0 && scene_.batch_dirty_) {
    scene_.batch_dirty_ = false;
    ++scene_.revision_;
  }
}

std::vector<SceneEffect> SceneGraph::take_journal() { return std::exchange(journal_, {}); }

void SceneGraph::touch() {
  if (batch_depth_ > 0) {
    batch_dirty_ = true;
  } else {
    ++revision_;
  }
}

void SceneGraph::record(SceneEffect effect) {
  if (journaling_) journal_.push_back(std::move(effect));
}

SceneObject& SceneGraph::at(ObjectId id) {
  return objects_[index_of(id)];
}

SceneGraph SceneSnapshot::to_scene() const {
  SceneGraph g(scene_id_, bounds_);
  g.objects_ = objects_;
  g.next_id_ = next_id_;
  g.revision_ = revision_;
  return g;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::ordered_json object_to_json(const SceneObject& obj, bool with_bookkeeping) {
  nlohmann::ordered_json j;
  if (with_bookkeeping) j["id"] = obj.id;
  j["name"] = obj.name;
  j["position"] = obj.position.to_string();
  j["rotation"] = obj.rotation.to_string();
  j["scale"] = obj.scale.to_string();
  j["color"] = obj.color.to_hex();
  j["material"] = std::string(to_string(obj.material));
  if (with_bookkeeping) {
    j["asset_ref"] = obj.asset_ref ? nlohmann::ordered_json(*obj.asset_ref)
                                   : nlohmann::ordered_json(nullptr);
  }
  return j;
}

SceneObject object_from_json(const nlohmann::ordered_json& j, bool with_bookkeeping) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "object entry is not a JSON object");
  auto str = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string()) {
      throw Error(Errc::SchemaError, std::string("object entry missing string '") + key + "'");
    }
    return j[key].get<std::string>();
  };
  SceneObject o;
  try {
    o.name = str("name");
    o.position = Vector3::parse(str("position"));
    o.rotation = Vector3::parse(str("rotation"));
    o.scale = Vector3::parse(str("scale"));
    o.color = ColorRGB::from_hex(str("color"));
    auto m = lookup_material(str("material"), true);
    if (!m || m->via_alias) throw Error(Errc::SchemaError, "unknown material " + str("material"));
    o.material = m->material;
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaError) throw;
    throw Error(Errc::SchemaError, std::string("bad object entry: ") + e.what());
  }
  if (with_bookkeeping) {
    if (!j.contains("id") || !j["id"].is_number_unsigned()) {
      throw Error(Errc::SchemaError, "object entry missing id");
    }
    o.id = j["id"].get<ObjectId>();
    if (j.contains("asset_ref") && j["asset_ref"].is_string()) {
      o.asset_ref = j["asset_ref"].get<std::string>();
    }
  }
  return o;
}

std::string serialize_parameters(const std::vector<SceneObject>& objects) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& o : objects) arr.push_back(object_to_json(o, false));
  return arr.dump();
}

std::string serialize_parameters(const SceneGraph& scene) {
  return serialize_parameters(scene.objects());
}

SceneGraph deserialize_parameters(std::string_view text, std::string scene_id,
                                  RoomBounds bounds) {
  nlohmann::ordered_json arr;
  try {
    arr = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("scene parameters: ") + e.what());
  }
  if (!arr.is_array()) throw Error(Errc::SchemaError, "scene parameters must be an array");
  SceneGraph g(std::move(scene_id), bounds);
  for (const auto& entry : arr) {
    try {
      g.add_object(object_from_json(entry, false));
    } catch (const Error& e) {
      if (e.code() == Errc::SchemaError) throw;
      throw Error(Errc::SchemaError, e.what());
    }
  }
  return g;
}

nlohmann::ordered_json to_document(const SceneSnapshot& snap) {
  nlohmann::ordered_json doc;
  doc["scene_id"] = snap.scene_id();
  doc["revision"] = snap.revision();
  doc["bounds"] = {{"min_x", snap.bounds().min_x},
                   {"min_z", snap.bounds().min_z},
                   {"max_x", snap.bounds().max_x},
                   {"max_z", snap.bounds().max_z}};
  doc["next_object_id"] = snap.next_object_id();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& o : snap.objects()) arr.push_back(object_to_json(o, true));
  doc["objects"] = std::move(arr);
  return doc;
}

std::string serialize_document(const SceneGraph& scene) {
  return to_document(scene.take_snapshot()).dump(2) + "\n";
}

SceneSnapshot snapshot_from_document(const nlohmann::ordered_json& doc) {
  try {
    if (!doc.is_object()) throw Error(Errc::SchemaError, "scene document must be an object");
    RoomBounds b;
    const auto& jb = doc.at("bounds");
    b.min_x = jb.at("min_x").get<double>();
    b.min_z = jb.at("min_z").get<double>();
    b.max_x = jb.at("max_x").get<double>();
    b.max_z = jb.at("max_z").get<double>();
    SceneGraph g(doc.at("scene_id").get<std::string>(), b);
    std::vector<SceneObject> objects;
    for (const auto& entry : doc.at("objects")) objects.push_back(object_from_json(entry, true));
    g.apply_effect(ResetEffect{std::move(objects), doc.at("next_object_id").get<ObjectId>()});
    g.set_revision(doc.at("revision").get<Revision>());
    return g.take_snapshot();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("scene document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaError) throw;
    throw Error(Errc::SchemaError, std::string("scene document: ") + e.what());
  }
}

SceneGraph parse_document(std::string_view text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("scene document: ") + e.what());
  }
  return snapshot_from_document(doc).to_scene();
}

// ---------------------------------------------------------------------------
// effects

nlohmann::ordered_json effect_to_json(const SceneEffect& e) {
  return std::visit(
      overloaded{
          [](const InsertEffect& x) {
            return nlohmann::ordered_json{{"op", "insert"},
                                  {"index", x.index},
                                  {"object", object_to_json(x.object, true)}};
          },
          [](const RemoveEffect& x) { return nlohmann::ordered_json{{"op", "remove"}, {"id", x.id}}; },
          [](const SetFieldEffect& x) {
            return nlohmann::ordered_json{{"op", "set"},
                                  {"id", x.id},
                                  {"field", std::string(to_string(x.value.field()))},
                                  {"value", x.value.to_string()}};
          },
          [](const ResetEffect& x) {
            auto arr = nlohmann::ordered_json::array();
            for (const auto& o : x.objects) arr.push_back(object_to_json(o, true));
            return nlohmann::ordered_json{
                {"op", "reset"}, {"next_object_id", x.next_object_id}, {"objects", arr}};
          },
      },
      e);
}

SceneEffect effect_from_json(const nlohmann::ordered_json& j) {
  try {
    const std::string op = j.at("op").get<std::string>();
    if (op == "insert") {
      return InsertEffect{object_from_json(j.at("object"), true), j.at("index").get<std::size_t>()};
    }
    if (op == "remove") return RemoveEffect{j.at("id").get<ObjectId>()};
    if (op == "set") {
      auto field = field_from_string(j.at("field").get<std::string>());
      if (!field) throw Error(Errc::LogCorrupt, "unknown field in effect");
      return SetFieldEffect{j.at("id").get<ObjectId>(),
                            FieldValue::parse(*field, j.at("value").get<std::string>())};
    }
    if (op == "reset") {
      std::vector<SceneObject> objects;
      for (const auto& o : j.at("objects")) objects.push_back(object_from_json(o, true));
      return ResetEffect{std::move(objects), j.at("next_object_id").get<ObjectId>()};
    }
    throw Error(Errc::LogCorrupt, "unknown effect op '" + op + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::LogCorrupt, std::string("effect: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::LogCorrupt) throw;
    throw Error(Errc::LogCorrupt, std::string("effect: ") + e.what());
  }
}

}  // namespace echo

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "echo/scene/types.hpp"

namespace echo {

using Revision = std::uint64_t;

// Value copy of an object removed from a scene, with its position in the
// insertion order, sufficient to restore it exactly.
struct RemovedObject {
  SceneObject object;
  std::size_t index = 0;

  bool operator==(const RemovedObject&) const = default;
};

struct MutationResult {
  FieldValue old_value;
  Revision revision;
};

// Primitive state changes. Every committed mutation is journaled as a list
// of these so the operation log can rebuild a scene without re-running
// actions.
struct InsertEffect {
  SceneObject object;
  std::size_t index;
};
struct RemoveEffect {
  ObjectId id;
};
struct SetFieldEffect {
  ObjectId id;
  FieldValue value;
};
struct ResetEffect {
  std::vector<SceneObject> objects;
  ObjectId next_object_id;
};
using SceneEffect = std::variant<InsertEffect, RemoveEffect, SetFieldEffect, ResetEffect>;

nlohmann::ordered_json effect_to_json(const SceneEffect& e);
SceneEffect effect_from_json(const nlohmann::ordered_json& j);

class SceneSnapshot;

// Mutable world state. Not internally synchronized: the owner serializes
// writers. Every public mutation outside a batch bumps the revision by one;
// inside a batch the whole batch bumps it by one when the outermost batch
// closes.
class SceneGraph {
 public:
  explicit SceneGraph(std::string scene_id = "scene", RoomBounds bounds = {});

  const std::string& id() const { return id_; }
  Revision revision() const { return revision_; }
  const RoomBounds& bounds() const { return bounds_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  ObjectId next_object_id() const { return next_id_; }
  std::size_t size() const { return objects_.size(); }

  const SceneObject* find(std::string_view name) const;
  const SceneObject* find(ObjectId id) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::size_t index_of(ObjectId id) const;

  // "Sofa" if free, otherwise the first free of "Sofa_2", "Sofa_3", ...
  std::string unique_name(std::string_view base) const;

  // Appends obj. Throws DuplicateName, InvalidScale, InvalidValue (bad name).
  // Assigns a fresh id when obj.id is 0 or already taken.
  Revision add_object(SceneObject obj);
  // Inserts at index (clamped to size). Same checks as add_object.
  Revision insert_object(SceneObject obj, std::size_t index);
  // Throws NotFound; the scene is unchanged on error.
  RemovedObject remove_object(std::string_view name);
  RemovedObject remove_object(ObjectId id);
  // Throws NotFound or InvalidValue. Rotation values are normalized and
  // scale must be strictly positive.
  MutationResult mutate_object(std::string_view name, const FieldValue& value);
  MutationResult mutate_object(ObjectId id, const FieldValue& value);
  // Parses text for the field first; any parse failure is InvalidValue.
  MutationResult mutate_object(std::string_view name, Field field, std::string_view text);

  SceneSnapshot take_snapshot() const;
  Revision restore_snapshot(const SceneSnapshot& snap);

  // Applies one journaled effect as if it were a fresh mutation.
  void apply_effect(const SceneEffect& effect);

  // Groups mutations into one committed revision.
  class Batch {
   public:
    explicit Batch(SceneGraph& scene);
    ~Batch();
    Batch(const Batch&) = delete;
    Batch& operator=(const Batch&) = delete;

   private:
    SceneGraph& scene_;
  };

  void set_journaling(bool on) { journaling_ = on; }
  // Effects recorded since the previous call.
  std::vector<SceneEffect> take_journal();

  // Overrides the revision counter; used only when rebuilding from disk.
  void set_revision(Revision r) { revision_ = r; }

 private:
  friend class SceneSnapshot;

  void touch();
  void record(SceneEffect effect);
  SceneObject& at(ObjectId id);
  void check_insertable(const SceneObject& obj) const;

  std::string id_;
  RoomBounds bounds_;
  std::vector<SceneObject> objects_;
  ObjectId next_id_ = 1;
  Revision revision_ = 0;
  int batch_depth_ = 0;
  bool batch_dirty_ = false;
  bool journaling_ = false;
  std::vector<SceneEffect> journal_;
};

// Immutable full value copy of a scene at one revision.
class SceneSnapshot {
 public:
  SceneSnapshot() = default;
  explicit SceneSnapshot(const SceneGraph& scene)
      : scene_id_(scene.id_), bounds_(scene.bounds_), objects_(scene.objects_),
        next_id_(scene.next_id_), revision_(scene.revision_) {}

  const std::string& scene_id() const { return scene_id_; }
  const RoomBounds& bounds() const { return bounds_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  ObjectId next_object_id() const { return next_id_; }
  Revision revision() const { return revision_; }

  // Rebuilds an owned scene at this snapshot's revision.
  SceneGraph to_scene() const;

  bool operator==(const SceneSnapshot&) const = default;

 private:
  std::string scene_id_;
  RoomBounds bounds_;
  std::vector<SceneObject> objects_;
  ObjectId next_id_ = 1;
  Revision revision_ = 0;
};

// Canonical object-parameter JSON: an array in insertion order with name,
// position, rotation, scale ("(x, y, z)"), color ("#RRGGBB") and material.
std::string serialize_parameters(const SceneGraph& scene);
std::string serialize_parameters(const std::vector<SceneObject>& objects);
// Inverse of serialize_parameters; objects get fresh ids. Throws SchemaError.
SceneGraph deserialize_parameters(std::string_view text, std::string scene_id = "scene",
                                  RoomBounds bounds = {});

// Persistence document: the parameter entries plus id and asset_ref, and the
// scene bookkeeping (id, revision, bounds, next object id).
nlohmann::ordered_json to_document(const SceneSnapshot& snap);
std::string serialize_document(const SceneGraph& scene);
SceneSnapshot snapshot_from_document(const nlohmann::ordered_json& doc);
SceneGraph parse_document(std::string_view text);

nlohmann::ordered_json object_to_json(const SceneObject& obj, bool with_bookkeeping);
SceneObject object_from_json(const nlohmann::ordered_json& j, bool with_bookkeeping);

}  // namespace echo

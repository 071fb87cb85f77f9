#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pr/core.hpp"

namespace pr {

struct ParseError : PoseError {
  using PoseError::PoseError;
};
struct SchemaMismatch : PoseError {
  using PoseError::PoseError;
};
struct MissingScore : PoseError {
  using PoseError::PoseError;
};

// Optional auxiliary points some poses carry (e.g. a precomputed top-head
// vertex for COCO-style data). Stored alongside the pose in annotation files.
struct AuxPoints {
  std::map<std::string, std::pair<double, double>> points;
};

struct AnnotatedPose {
  Pose pose;
  AuxPoints aux;
};

struct DatasetFrame {
  std::string image;
  std::optional<std::string> sequence_id;
  std::int64_t frame_index = 0;
  std::vector<AnnotatedPose> people;
};

struct Dataset {
  JointSchema schema;
  std::vector<DatasetFrame> frames;

  // Frame indices grouped by sequence id, in file order.
  std::map<std::string, std::vector<int>> sequences() const;
  void validate() const;
};

// One rule per target joint: copy a source joint, take the midpoint of two
// sub-rules, read an auxiliary point, or leave the joint absent.
struct MapRule {
  enum class Kind { Copy, Midpoint, Aux, Absent } kind = Kind::Absent;
  int source = -1;                              // Copy
  std::unique_ptr<MapRule> a, b;                // Midpoint
  std::string aux_name;                         // Aux

  static MapRule copy(int i);
  static MapRule midpoint(MapRule x, MapRule y);
  static MapRule aux(std::string name);
  static MapRule absent();
  MapRule clone() const;
};

struct SchemaMapping {
  JointSchema source;
  JointSchema target;
  std::vector<MapRule> rules;  // one per target joint

  void validate() const;
};

Dataset parse_annotations(const std::string& bytes);
Dataset parse_annotations_file(const std::string& path);

// Deterministic serialization: sorted keys, 6-decimal floats. When
// require_scores is set every present joint must carry a score.
std::string write_annotations(const Dataset& ds, bool require_scores = false);
inline std::string write_predictions(const Dataset& ds) {
  return write_annotations(ds, true);
}
void write_annotations_file(const Dataset& ds, const std::string& path,
                            bool require_scores = false);

Pose remap_schema(const Pose& pose, const AuxPoints& aux,
                  const SchemaMapping& mapping);

SchemaMapping parse_mapping(const std::string& bytes,
                            const JointSchema& source,
                            const JointSchema& target);
JointSchema parse_schema(const std::string& bytes);
SchemaMapping identity_mapping(const JointSchema& schema);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace pr

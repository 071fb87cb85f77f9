#include "pr/datasets.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pr/jsonio.hpp"

namespace pr {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PoseError("cannot write file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::map<std::string, std::vector<int>> Dataset::sequences() const {
  std::map<std::string, std::vector<int>> seqs;
  for (int i = 0; i < static_cast<int>(frames.size()); ++i) {
    const auto& f = frames[i];
    seqs[f.sequence_id.value_or("")].push_back(i);
  }
  return seqs;
}

void Dataset::validate() const {
  schema.validate();
  const int n = schema.count();
  std::map<std::string, std::int64_t> last_index;
  for (const auto& f : frames) {
    for (const auto& p : f.people) {
      if (static_cast<int>(p.pose.joints.size()) != n)
        throw SchemaMismatch("pose joint count does not match schema");
      if (p.pose.head_box &&
          (p.pose.head_box->width() <= 0 || p.pose.head_box->height() <= 0))
        throw ParseError("head_box must have positive width and height");
    }
    const std::string key = f.sequence_id.value_or("");
    auto it = last_index.find(key);
    if (it != last_index.end() && f.frame_index <= it->second)
      throw ParseError("frame_index not strictly increasing in sequence '" +
                       key + "'");
    last_index[key] = f.frame_index;
  }
}

namespace {

std::string ctx(const std::string& where) {
  return "annotation parse error at " + where;
}

Keypoint parse_joint(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(ctx(where) + ": joint not an object");
  Keypoint kp;
  kp.present = j.value("present", false);
  if (kp.present) {
    if (!j.contains("x") || !j.contains("y"))
      throw ParseError(ctx(where) + ": present joint missing x/y");
    kp.x = j.at("x").get<double>();
    kp.y = j.at("y").get<double>();
    if (j.contains("score")) kp.score = j.at("score").get<double>();
  }
  return kp;
}

AnnotatedPose parse_person(const json& j, int n, const std::string& where) {
  AnnotatedPose ap;
  if (j.contains("track_id")) ap.pose.track_id = j.at("track_id").get<std::int64_t>();
  if (ap.pose.track_id && *ap.pose.track_id < 0)
    throw ParseError(ctx(where) + ": negative track_id");
  if (j.contains("head_box")) {
    const auto& hb = j.at("head_box");
    if (!hb.is_array() || hb.size() != 4)
      throw ParseError(ctx(where) + ": head_box must be [x1,y1,x2,y2]");
    ap.pose.head_box = Rect{hb[0].get<double>(), hb[1].get<double>(),
                            hb[2].get<double>(), hb[3].get<double>()};
  }
  if (j.contains("height_px"))
    ap.pose.height_px = j.at("height_px").get<double>();
  if (j.contains("aux")) {
    for (const auto& [name, pt] : j.at("aux").items()) {
      if (!pt.is_array() || pt.size() != 2)
        throw ParseError(ctx(where) + ": aux point must be [x,y]");
      ap.aux.points[name] = {pt[0].get<double>(), pt[1].get<double>()};
    }
  }
  const auto& joints = j.at("joints");
  if (!joints.is_array() || static_cast<int>(joints.size()) != n)
    throw SchemaMismatch(ctx(where) + ": pose joint count != schema count");
  for (size_t k = 0; k < joints.size(); ++k)
    ap.pose.joints.push_back(
        parse_joint(joints[k], where + ".joints[" + std::to_string(k) + "]"));
  return ap;
}

}  // namespace

JointSchema parse_schema_json(const json& js) {
  JointSchema schema;
  for (const auto& name : js.at("joints"))
    schema.names.push_back(name.get<std::string>());
  for (const auto& fp : js.at("flip_pairs"))
    schema.flip_pairs.emplace_back(fp[0].get<int>(), fp[1].get<int>());
  const auto& hp = js.at("head_pair");
  schema.head_pair = {hp[0].get<int>(), hp[1].get<int>()};
  schema.validate();
  return schema;
}

JointSchema parse_schema(const std::string& bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema parse error: ") + e.what());
  }
  return parse_schema_json(j);
}

Dataset parse_annotations(const std::string& bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ParseError(std::string("annotation parse error: ") + e.what());
  }
  Dataset ds;
  try {
    ds.schema = parse_schema_json(j.at("schema"));
    const int n = ds.schema.count();
    size_t fi = 0;
    for (const auto& fj : j.at("frames")) {
      const std::string where = "frames[" + std::to_string(fi++) + "]";
      DatasetFrame frame;
      frame.image = fj.value("image", "");
      if (fj.contains("sequence_id"))
        frame.sequence_id = fj.at("sequence_id").get<std::string>();
      frame.frame_index = fj.at("frame_index").get<std::int64_t>();
      if (frame.frame_index < 0)
        throw ParseError(ctx(where) + ": negative frame_index");
      size_t pi = 0;
      for (const auto& pj : fj.at("people"))
        frame.people.push_back(parse_person(
            pj, n, where + ".people[" + std::to_string(pi++) + "]"));
      ds.frames.push_back(std::move(frame));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("annotation parse error: ") + e.what());
  }
  ds.validate();
  return ds;
}

Dataset parse_annotations_file(const std::string& path) {
  return parse_annotations(read_file(path));
}

std::string write_annotations(const Dataset& ds, bool require_scores) {
  JsonWriter w;
  w.begin_object();
  w.key("frames");
  w.begin_array();
  for (const auto& f : ds.frames) {
    w.begin_object();
    w.key("frame_index");
    w.value(f.frame_index);
    w.key("image");
    w.value(f.image);
    w.key("people");
    w.begin_array();
    for (const auto& p : f.people) {
      w.begin_object();
      if (!p.aux.points.empty()) {
        w.key("aux");
        w.begin_object();
        for (const auto& [name, pt] : p.aux.points) {
          w.key(name);
          w.begin_array();
          w.value(pt.first);
          w.value(pt.second);
          w.end_array();
        }
        w.end_object();
      }
      if (p.pose.head_box) {
        w.key("head_box");
        w.begin_array();
        w.value(p.pose.head_box->x0);
        w.value(p.pose.head_box->y0);
        w.value(p.pose.head_box->x1);
        w.value(p.pose.head_box->y1);
        w.end_array();
      }
      if (p.pose.height_px) {
        w.key("height_px");
        w.value(*p.pose.height_px);
      }
      w.key("joints");
      w.begin_array();
      for (size_t ji = 0; ji < p.pose.joints.size(); ++ji) {
        const auto& kp = p.pose.joints[ji];
        w.begin_object();
        w.key("present");
        w.value(kp.present);
        if (kp.present) {
          if (kp.score) {
            w.key("score");
            w.value(*kp.score);
          } else if (require_scores) {
            throw MissingScore("present joint " + ds.schema.names[ji] +
                               " has no confidence score");
          }
          w.key("x");
          w.value(kp.x);
          w.key("y");
          w.value(kp.y);
        }
        w.end_object();
      }
      w.end_array();
      if (p.pose.track_id) {
        w.key("track_id");
        w.value(*p.pose.track_id);
      }
      w.end_object();
    }
    w.end_array();
    if (f.sequence_id) {
      w.key("sequence_id");
      w.value(*f.sequence_id);
    }
    w.end_object();
  }
  w.end_array();
  w.key("schema");
  w.begin_object();
  w.key("flip_pairs");
  w.begin_array();
  for (const auto& [a, b] : ds.schema.flip_pairs) {
    w.begin_array();
    w.value(a);
    w.value(b);
    w.end_array();
  }
  w.end_array();
  w.key("head_pair");
  w.begin_array();
  w.value(ds.schema.head_pair.first);
  w.value(ds.schema.head_pair.second);
  w.end_array();
  w.key("joints");
  w.begin_array();
  for (const auto& name : ds.schema.names) w.value(name);
  w.end_array();
  w.end_object();
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

void write_annotations_file(const Dataset& ds, const std::string& path,
                            bool require_scores) {
  write_file(path, write_annotations(ds, require_scores));
}

MapRule MapRule::copy(int i) {
  MapRule r;
  r.kind = Kind::Copy;
  r.source = i;
  return r;
}
MapRule MapRule::midpoint(MapRule x, MapRule y) {
  MapRule r;
  r.kind = Kind::Midpoint;
  r.a = std::make_unique<MapRule>(std::move(x));
  r.b = std::make_unique<MapRule>(std::move(y));
  return r;
}
MapRule MapRule::aux(std::string name) {
  MapRule r;
  r.kind = Kind::Aux;
  r.aux_name = std::move(name);
  return r;
}
MapRule MapRule::absent() { return MapRule{}; }

MapRule MapRule::clone() const {
  MapRule r;
  r.kind = kind;
  r.source = source;
  r.aux_name = aux_name;
  if (a) r.a = std::make_unique<MapRule>(a->clone());
  if (b) r.b = std::make_unique<MapRule>(b->clone());
  return r;
}

void SchemaMapping::validate() const {
  source.validate();
  target.validate();
  if (static_cast<int>(rules.size()) != target.count())
    throw ParseError("mapping must give exactly one rule per target joint");
}

namespace {

// Evaluates a rule to a keypoint; absent if any referenced joint is absent.
Keypoint eval_rule(const MapRule& rule, const Pose& pose,
                   const AuxPoints& aux) {
  switch (rule.kind) {
    case MapRule::Kind::Copy:
      return pose.joints[rule.source];
    case MapRule::Kind::Midpoint: {
      Keypoint ka = eval_rule(*rule.a, pose, aux);
      Keypoint kb = eval_rule(*rule.b, pose, aux);
      Keypoint out;
      if (!ka.present || !kb.present) return out;
      out.present = true;
      out.x = 0.5 * (ka.x + kb.x);
      out.y = 0.5 * (ka.y + kb.y);
      if (ka.score && kb.score) out.score = 0.5 * (*ka.score + *kb.score);
      return out;
    }
    case MapRule::Kind::Aux: {
      Keypoint out;
      auto it = aux.points.find(rule.aux_name);
      if (it == aux.points.end()) return out;
      out.present = true;
      out.x = it->second.first;
      out.y = it->second.second;
      return out;
    }
    case MapRule::Kind::Absent:
      return Keypoint{};
  }
  return Keypoint{};
}

MapRule parse_rule(const json& j, const JointSchema& source) {
  if (j.is_string()) {
    if (j.get<std::string>() == "absent") return MapRule::absent();
    int idx = source.index_of(j.get<std::string>());
    if (idx < 0)
      throw ParseError("mapping refers to unknown source joint '" +
                       j.get<std::string>() + "'");
    return MapRule::copy(idx);
  }
  if (j.is_object()) {
    if (j.contains("copy")) return parse_rule(j.at("copy"), source);
    if (j.contains("aux")) return MapRule::aux(j.at("aux").get<std::string>());
    if (j.contains("midpoint")) {
      const auto& mp = j.at("midpoint");
      if (!mp.is_array() || mp.size() != 2)
        throw ParseError("midpoint rule needs exactly two operands");
      return MapRule::midpoint(parse_rule(mp[0], source),
                               parse_rule(mp[1], source));
    }
  }
  throw ParseError("unrecognized mapping rule");
}

}  // namespace

Pose remap_schema(const Pose& pose, const AuxPoints& aux,
                  const SchemaMapping& mapping) {
  Pose out;
  out.head_box = pose.head_box;
  out.height_px = pose.height_px;
  out.track_id = pose.track_id;
  out.joints.reserve(mapping.rules.size());
  for (const auto& rule : mapping.rules)
    out.joints.push_back(eval_rule(rule, pose, aux));
  return out;
}

SchemaMapping parse_mapping(const std::string& bytes,
                            const JointSchema& source,
                            const JointSchema& target) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ParseError(std::string("mapping parse error: ") + e.what());
  }
  SchemaMapping m;
  m.source = source;
  m.target = target;
  const auto& rules = j.at("rules");
  for (const auto& name : target.names) {
    if (!rules.contains(name))
      throw ParseError("mapping missing rule for target joint '" + name + "'");
    m.rules.push_back(parse_rule(rules.at(name), source));
  }
  m.validate();
  return m;
}

SchemaMapping identity_mapping(const JointSchema& schema) {
  SchemaMapping m;
  m.source = schema;
  m.target = schema;
  for (int i = 0; i < schema.count(); ++i) m.rules.push_back(MapRule::copy(i));
  return m;
}

}  // namespace pr

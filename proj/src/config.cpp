#include "pr/config.hpp"

#include <charconv>
#include <sstream>

#include "pr/datasets.hpp"
#include "pr/jsonio.hpp"

namespace pr {

namespace {

struct TomlValue {
  enum class Kind { Number, Bool, String, Array } kind = Kind::Number;
  double num = 0.0;
  bool boolean = false;
  std::string str;
  std::vector<TomlValue> items;

  double as_number(const std::string& key) const {
    if (kind != Kind::Number)
      throw ConfigError("config key '" + key + "' must be a number");
    return num;
  }
  int as_int(const std::string& key) const {
    return static_cast<int>(as_number(key));
  }
  bool as_bool(const std::string& key) const {
    if (kind != Kind::Bool)
      throw ConfigError("config key '" + key + "' must be a boolean");
    return boolean;
  }
  const std::string& as_string(const std::string& key) const {
    if (kind != Kind::String)
      throw ConfigError("config key '" + key + "' must be a string");
    return str;
  }
  const std::vector<TomlValue>& as_array(const std::string& key) const {
    if (kind != Kind::Array)
      throw ConfigError("config key '" + key + "' must be an array");
    return items;
  }
};

struct TomlParser {
  const std::string& s;
  size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
  }
  bool eof() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  void skip_inline_ws() {
    while (!eof() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  void skip_ws_and_comments() {
    while (!eof()) {
      const char c = s[pos];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos;
      } else if (c == '\n') {
        ++pos;
        ++line;
      } else if (c == '#') {
        while (!eof() && s[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  std::string read_bare_key() {
    std::string key;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                      s[pos] == '_' || s[pos] == '-'))
      key += s[pos++];
    if (key.empty()) fail("expected a key");
    return key;
  }

  TomlValue read_value() {
    skip_inline_ws();
    if (eof()) fail("expected a value");
    const char c = peek();
    if (c == '"') {
      ++pos;
      TomlValue v;
      v.kind = TomlValue::Kind::String;
      while (!eof() && peek() != '"') {
        if (peek() == '\\' && pos + 1 < s.size()) ++pos;
        v.str += s[pos++];
      }
      if (eof()) fail("unterminated string");
      ++pos;
      return v;
    }
    if (c == '[') {
      ++pos;
      TomlValue v;
      v.kind = TomlValue::Kind::Array;
      skip_ws_and_comments();
      while (!eof() && peek() != ']') {
        v.items.push_back(read_value());
        skip_ws_and_comments();
        if (!eof() && peek() == ',') {
          ++pos;
          skip_ws_and_comments();
        }
      }
      if (eof()) fail("unterminated array");
      ++pos;
      return v;
    }
    if (s.compare(pos, 4, "true") == 0) {
      pos += 4;
      TomlValue v;
      v.kind = TomlValue::Kind::Bool;
      v.boolean = true;
      return v;
    }
    if (s.compare(pos, 5, "false") == 0) {
      pos += 5;
      TomlValue v;
      v.kind = TomlValue::Kind::Bool;
      v.boolean = false;
      return v;
    }
    size_t end = pos;
    while (end < s.size() && s[end] != '\n' && s[end] != ',' && s[end] != ']' &&
           s[end] != '#' && s[end] != ' ' && s[end] != '\t' && s[end] != '\r')
      ++end;
    const std::string tok = s.substr(pos, end - pos);
    TomlValue v;
    char* parse_end = nullptr;
    v.num = std::strtod(tok.c_str(), &parse_end);
    if (parse_end == tok.c_str() || *parse_end != '\0')
      fail("cannot parse value '" + tok + "'");
    pos = end;
    return v;
  }
};

using Section = std::map<std::string, TomlValue>;

std::map<std::string, Section> parse_toml(const std::string& text) {
  std::map<std::string, Section> sections;
  TomlParser p{text};
  std::string current;  // "" = top level
  p.skip_ws_and_comments();
  while (!p.eof()) {
    if (p.peek() == '[') {
      ++p.pos;
      std::string name;
      while (!p.eof() && p.peek() != ']') name += text[p.pos++];
      if (p.eof()) p.fail("unterminated section header");
      ++p.pos;
      current = name;
      sections[current];
    } else {
      const std::string key = p.read_bare_key();
      p.skip_inline_ws();
      if (p.eof() || p.peek() != '=') p.fail("expected '=' after key");
      ++p.pos;
      sections[current][key] = p.read_value();
    }
    p.skip_ws_and_comments();
  }
  return sections;
}

void apply_synth(SynthConfig& cfg, const Section& sec) {
  for (const auto& [key, v] : sec) {
    if (key == "t1") cfg.t1_enabled = v.as_bool(key);
    else if (key == "t2") cfg.t2_enabled = v.as_bool(key);
    else if (key == "t3") cfg.t3_enabled = v.as_bool(key);
    else if (key == "t4") cfg.t4_enabled = v.as_bool(key);
    else if (key == "shift_short_prob") cfg.shift_short_prob = v.as_number(key);
    else if (key == "shift_short_max") cfg.shift_short_max = v.as_number(key);
    else if (key == "shift_long_max") cfg.shift_long_max = v.as_number(key);
    else if (key == "swap_prob") cfg.swap_prob = v.as_number(key);
    else if (key == "steal_prob") cfg.steal_prob = v.as_number(key);
    else if (key == "steal_radius") cfg.steal_radius = v.as_number(key);
    else if (key == "drop_prob") cfg.drop_prob = v.as_number(key);
    else if (key == "drop_forced_joints") {
      cfg.drop_forced_joints.clear();
      for (const auto& item : v.as_array(key))
        cfg.drop_forced_joints.push_back(item.as_int(key));
    } else {
      throw ConfigError("unknown [synth] key '" + key + "'");
    }
  }
  cfg.validate();
}

void apply_train(TrainSection& cfg, const Section& sec) {
  for (const auto& [key, v] : sec) {
    if (key == "lr_schedule") {
      cfg.schedule.segments.clear();
      for (const auto& seg : v.as_array(key)) {
        const auto& pair = seg.as_array(key);
        if (pair.size() != 2)
          throw ConfigError("lr_schedule entries must be [epochs, lr]");
        cfg.schedule.segments.emplace_back(pair[0].as_number(key),
                                           pair[1].as_number(key));
      }
    } else if (key == "batch_size") {
      cfg.schedule.batch_size = v.as_int(key);
    } else if (key == "w_heat") {
      cfg.loss.w_heat = v.as_number(key);
    } else if (key == "w_off") {
      cfg.loss.w_off = v.as_number(key);
    } else if (key == "clip_norm") {
      cfg.clip_norm = v.as_number(key);
    } else if (key == "augment") {
      cfg.augment = v.as_bool(key);
    } else if (key == "arch") {
      cfg.arch.clear();
      for (const auto& item : v.as_array(key))
        cfg.arch.push_back(item.as_string(key));
    } else {
      throw ConfigError("unknown [train] key '" + key + "'");
    }
  }
  cfg.schedule.validate();
}

void apply_geom(GeomConfig& cfg, const Section& sec) {
  for (const auto& [key, v] : sec) {
    if (key == "reference_height") cfg.reference_height = v.as_number(key);
    else if (key == "crop_margin") cfg.crop_margin = v.as_number(key);
    else if (key == "blob_radius") cfg.blob_radius = v.as_number(key);
    else if (key == "head_diag_factor") cfg.head_diag_factor = v.as_number(key);
    else if (key == "bbox_height_factor")
      cfg.bbox_height_factor = v.as_number(key);
    else throw ConfigError("unknown [geom] key '" + key + "'");
  }
}

void apply_decode(DecodeConfig& cfg, const Section& sec) {
  for (const auto& [key, v] : sec) {
    if (key == "tau") cfg.tau = v.as_number(key);
    else throw ConfigError("unknown [decode] key '" + key + "'");
  }
  if (cfg.tau < 0.0 || cfg.tau > 1.0)
    throw ConfigError("decode tau must lie in [0,1]");
}

void apply_data(DataConfig& cfg, const Section& sec) {
  for (const auto& [key, v] : sec) {
    if (key == "annotations") cfg.annotations = v.as_string(key);
    else if (key == "images_dir") cfg.images_dir = v.as_string(key);
    else if (key == "schema") cfg.schema_file = v.as_string(key);
    else throw ConfigError("unknown [data] key '" + key + "'");
  }
}

void apply_toy(ToyConfig& cfg, const Section& sec) {
  for (const auto& [key, v] : sec) {
    if (key == "frames") cfg.frames = v.as_int(key);
    else if (key == "frames_per_sequence")
      cfg.frames_per_sequence = v.as_int(key);
    else if (key == "min_people") cfg.min_people = v.as_int(key);
    else if (key == "max_people") cfg.max_people = v.as_int(key);
    else if (key == "width") cfg.width = v.as_int(key);
    else if (key == "height") cfg.height = v.as_int(key);
    else if (key == "min_height_px") cfg.min_height_px = v.as_number(key);
    else if (key == "max_height_px") cfg.max_height_px = v.as_number(key);
    else if (key == "proximity") cfg.proximity = v.as_number(key);
    else if (key == "image_format") cfg.image_format = v.as_string(key);
    else throw ConfigError("unknown [toy] key '" + key + "'");
  }
  cfg.validate();
}

}  // namespace

NetConfig PipelineConfig::net_config(int joints) const {
  if (train.arch.empty())
    return NetConfig::default_config(3 + joints, joints);
  std::string text = "input_channels " + std::to_string(3 + joints) + "\n" +
                     "joints " + std::to_string(joints) + "\n";
  for (const auto& line : train.arch) text += line + "\n";
  return NetConfig::from_text(text);
}

PipelineConfig parse_pipeline_config(const std::string& text) {
  PipelineConfig cfg;
  const auto sections = parse_toml(text);
  for (const auto& [name, sec] : sections) {
    if (name.empty()) {
      for (const auto& [key, v] : sec) {
        if (key == "seed")
          cfg.seed = static_cast<std::uint64_t>(v.as_number(key));
        else
          throw ConfigError("unknown top-level key '" + key + "'");
      }
    } else if (name == "synth") {
      apply_synth(cfg.synth, sec);
    } else if (name == "train") {
      apply_train(cfg.train, sec);
    } else if (name == "geom") {
      apply_geom(cfg.geom, sec);
    } else if (name == "decode") {
      apply_decode(cfg.decode, sec);
    } else if (name == "data") {
      apply_data(cfg.data, sec);
    } else if (name == "toy") {
      apply_toy(cfg.toy, sec);
    } else {
      throw ConfigError("unknown config section [" + name + "]");
    }
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(read_file(path));
}

PipelineConfig desk_scale_config() {
  PipelineConfig cfg;
  // Geometry shrunk proportionally from the reference protocol so that a
  // whole training run fits in CPU minutes; synthesis noise shrinks by the
  // same factor to keep the corruption-to-person ratio.
  cfg.geom.reference_height = 64.0;
  cfg.geom.crop_margin = 16.0;
  cfg.geom.blob_radius = 8.0;
  cfg.synth.shift_short_max = 10.0;
  cfg.synth.shift_long_max = 30.0;
  cfg.synth.steal_radius = 40.0;
  // Learning rates scale up with the geometry: single-sample steps on the
  // small crop produce per-parameter gradients about 100x smaller than the
  // reference protocol, and clipping keeps the occasional spike in check.
  cfg.train.schedule.segments = {
      {1.0 / 3.0, 0.5}, {3.0, 2.0}, {1.0, 0.2}, {1.0, 0.1}};
  cfg.train.clip_norm = 1.0;
  cfg.toy.frames = 250;
  cfg.toy.frames_per_sequence = 5;
  cfg.toy.max_people = 2;
  return cfg;
}

std::string synth_config_json(const SynthConfig& cfg, std::uint64_t seed) {
  JsonWriter w;
  w.begin_object();
  w.key("drop_forced_joints");
  w.begin_array();
  for (int j : cfg.drop_forced_joints) w.value(j);
  w.end_array();
  w.key("drop_prob");
  w.value(cfg.drop_prob);
  w.key("seed");
  w.value(static_cast<std::int64_t>(seed));
  w.key("shift_long_max");
  w.value(cfg.shift_long_max);
  w.key("shift_short_max");
  w.value(cfg.shift_short_max);
  w.key("shift_short_prob");
  w.value(cfg.shift_short_prob);
  w.key("steal_prob");
  w.value(cfg.steal_prob);
  w.key("steal_radius");
  w.value(cfg.steal_radius);
  w.key("swap_prob");
  w.value(cfg.swap_prob);
  w.key("t1");
  w.value(cfg.t1_enabled);
  w.key("t2");
  w.value(cfg.t2_enabled);
  w.key("t3");
  w.value(cfg.t3_enabled);
  w.key("t4");
  w.value(cfg.t4_enabled);
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

}  // namespace pr

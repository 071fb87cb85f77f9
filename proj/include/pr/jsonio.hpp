#pragma once

#include <cstdio>
#include <string>

namespace pr {

// Minimal deterministic JSON emitter: keys are written in the order given by
// the caller (callers keep them sorted), doubles always use 6 decimal places.
class JsonWriter {
 public:
  std::string take() { return std::move(out_); }

  void begin_object() { punct('{'); }
  void end_object() {
    out_ += '}';
    fresh_ = false;
  }
  void begin_array() { punct('['); }
  void end_array() {
    out_ += ']';
    fresh_ = false;
  }

  void key(const std::string& k) {
    comma();
    string_raw(k);
    out_ += ':';
    fresh_ = true;
  }

  void value(const std::string& s) {
    comma();
    string_raw(s);
  }
  void value(const char* s) { value(std::string(s)); }
  void value(bool b) {
    comma();
    out_ += b ? "true" : "false";
  }
  void value(std::int64_t v) {
    comma();
    out_ += std::to_string(v);
  }
  void value(int v) { value(static_cast<std::int64_t>(v)); }
  void value(double v) {
    comma();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    out_ += buf;
  }

 private:
  void punct(char c) {
    comma();
    out_ += c;
    fresh_ = true;
  }
  void comma() {
    if (!fresh_ && !out_.empty()) {
      char last = out_.back();
      if (last != '{' && last != '[' && last != ':') out_ += ',';
    }
    fresh_ = false;
  }
  void string_raw(const std::string& s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out_ += buf;
          } else {
            out_ += c;
          }
      }
    }
    out_ += '"';
  }

  std::string out_;
  bool fresh_ = true;
};

}  // namespace pr

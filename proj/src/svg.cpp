#include "pr/svg.hpp"

#include <sstream>

#include "pr/image.hpp"

namespace pr {

namespace {

std::string base64(const std::string& bytes) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
  }
  if (i < bytes.size()) {
    unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size())
      v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? alphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

const char* kBoneColor = "#00e5ff";
const char* kJointColor = "#ffde2e";

void draw_pose(std::ostringstream& ss, const Pose& pose,
               const JointSchema& schema, double ox) {
  // Bones: flip pairs give limbs only, so connect joints to the head segment
  // chain plus pairwise left/right bars where both ends exist.
  auto line = [&](int a, int b) {
    const Keypoint& ka = pose.joints[a];
    const Keypoint& kb = pose.joints[b];
    if (!ka.present || !kb.present) return;
    ss << "<line x1='" << ox + ka.x << "' y1='" << ka.y << "' x2='"
       << ox + kb.x << "' y2='" << kb.y << "' stroke='" << kBoneColor
       << "' stroke-width='1.2'/>\n";
  };
  line(schema.head_pair.first, schema.head_pair.second);
  // Chain consecutive flip pairs (shoulder->elbow->wrist, hip->knee->ankle)
  // when the schema orders them that way; harmless otherwise.
  for (size_t i = 0; i + 1 < schema.flip_pairs.size(); ++i) {
    line(schema.flip_pairs[i].first, schema.flip_pairs[i + 1].first);
    line(schema.flip_pairs[i].second, schema.flip_pairs[i + 1].second);
  }
  for (int j = 0; j < schema.count(); ++j) {
    const Keypoint& kp = pose.joints[j];
    if (!kp.present) continue;
    ss << "<circle cx='" << ox + kp.x << "' cy='" << kp.y
       << "' r='1.6' fill='" << kJointColor << "'/>\n";
  }
}

}  // namespace

std::string overlay_svg(const ImageRaster& image, const JointSchema& schema,
                        const std::vector<OverlayPanel>& panels) {
  const int pad = 4, title_h = 14;
  const int panel_w = image.width + pad;
  const int total_w = panel_w * static_cast<int>(panels.size());
  const int total_h = image.height + title_h;
  const std::string png64 = base64(encode_png(image));

  std::ostringstream ss;
  ss << "<svg xmlns='http://www.w3.org/2000/svg' width='" << total_w
     << "' height='" << total_h << "'>\n";
  ss << "<rect width='" << total_w << "' height='" << total_h
     << "' fill='#101010'/>\n";
  for (size_t pi = 0; pi < panels.size(); ++pi) {
    const double ox = pi * panel_w;
    ss << "<text x='" << ox + 2 << "' y='" << title_h - 4
       << "' fill='#e0e0e0' font-size='10' font-family='monospace'>"
       << panels[pi].title << "</text>\n";
    ss << "<image x='" << ox << "' y='" << title_h << "' width='"
       << image.width << "' height='" << image.height
       << "' href='data:image/png;base64," << png64 << "'/>\n";
    ss << "<g transform='translate(0," << title_h << ")'>\n";
    for (const auto& pose : panels[pi].poses)
      draw_pose(ss, pose, schema, ox);
    ss << "</g>\n";
  }
  ss << "</svg>\n";
  return ss.str();
}

}  // namespace pr

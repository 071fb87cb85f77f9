#include "pr/net.hpp"

#include "pr/datasets.hpp"

namespace pr {

std::string NetConfig::to_text() const {
  std::ostringstream ss;
  ss << "input_channels " << input_channels << "\n";
  ss << "joints " << joints << "\n";
  for (const auto& l : layers) {
    if (l.kind == LayerSpec::Kind::Conv)
      ss << "conv " << l.out_c << " " << l.kernel << " " << l.stride << " "
         << l.pad << "\n";
    else
      ss << "relu\n";
  }
  return ss.str();
}

NetConfig NetConfig::from_text(const std::string& text) {
  NetConfig cfg;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok.empty() || tok[0] == '#') continue;
    if (tok == "input_channels") {
      ls >> cfg.input_channels;
    } else if (tok == "joints") {
      ls >> cfg.joints;
    } else if (tok == "conv") {
      LayerSpec l;
      l.kind = LayerSpec::Kind::Conv;
      if (!(ls >> l.out_c >> l.kernel >> l.stride >> l.pad))
        throw ParseError("net config: conv needs out_c kernel stride pad");
      cfg.layers.push_back(l);
    } else if (tok == "relu") {
      cfg.layers.push_back({LayerSpec::Kind::Relu});
    } else {
      throw ParseError("net config: unknown directive '" + tok + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void NetConfig::validate() const {
  if (input_channels <= 0) throw ParseError("net config: input_channels <= 0");
  if (joints <= 0) throw ParseError("net config: joints <= 0");
  if (layers.empty() || layers.back().kind != LayerSpec::Kind::Conv)
    throw ParseError("net config: last layer must be a conv");
  if (layers.back().out_c != 3 * joints)
    throw ParseError("net config: final conv must emit 3*joints channels");
  if (total_stride() != 8)
    throw ParseError("net config: composite stride must be exactly 8");
}

int NetConfig::total_stride() const {
  int s = 1;
  for (const auto& l : layers)
    if (l.kind == LayerSpec::Kind::Conv) s *= l.stride;
  return s;
}

NetConfig NetConfig::default_config(int input_channels, int joints) {
  NetConfig cfg;
  cfg.input_channels = input_channels;
  cfg.joints = joints;
  auto conv = [](int out_c, int k, int s, int p) {
    return LayerSpec{LayerSpec::Kind::Conv, out_c, k, s, p};
  };
  const LayerSpec relu{LayerSpec::Kind::Relu};
  cfg.layers = {conv(16, 3, 2, 1), relu, conv(16, 3, 1, 1), relu,
                conv(32, 3, 2, 1), relu, conv(32, 3, 1, 1), relu,
                conv(64, 3, 2, 1), relu, conv(64, 3, 1, 1), relu,
                conv(3 * joints, 1, 1, 0)};
  return cfg;
}

double TrainSchedule::lr_at(double epoch_pos) const {
  double acc = 0.0;
  for (const auto& [e, lr] : segments) {
    acc += e;
    if (epoch_pos < acc) return lr;
  }
  return segments.empty() ? 0.0 : segments.back().second;
}

void TrainSchedule::validate() const {
  if (segments.empty()) throw ParseError("schedule has no segments");
  for (const auto& [e, lr] : segments)
    if (!(e > 0.0) || !(lr >= 0.0))
      throw ParseError("schedule segment needs epochs > 0 and lr >= 0");
  if (batch_size < 1) throw ParseError("batch_size must be >= 1");
}

namespace {

constexpr std::uint32_t kCkptVersion = 1;

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint32_t get_u32le(const std::string& s, size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i]))
         << (8 * i);
  return v;
}

}  // namespace

std::string save_checkpoint(const RefinerNet<float>& net) {
  std::string out = "PRCK";
  put_u32le(out, kCkptVersion);
  const std::string cfg = net.config().to_text();
  put_u32le(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  const std::vector<float> params = net.flat_params();
  out.append(reinterpret_cast<const char*>(params.data()),
             params.size() * sizeof(float));
  return out;
}

RefinerNet<float> load_checkpoint(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "PRCK") != 0)
    throw ParseError("not a checkpoint file");
  if (get_u32le(bytes, 4) != kCkptVersion)
    throw ParseError("unsupported checkpoint version");
  const std::uint32_t cfg_len = get_u32le(bytes, 8);
  if (12 + cfg_len > bytes.size()) throw ParseError("truncated checkpoint");
  const NetConfig cfg = NetConfig::from_text(bytes.substr(12, cfg_len));
  RefinerNet<float> net(cfg);
  const size_t want = net.param_count();
  const size_t have = (bytes.size() - 12 - cfg_len) / sizeof(float);
  if (have != want) throw ParseError("checkpoint parameter count mismatch");
  std::vector<float> params(want);
  std::memcpy(params.data(), bytes.data() + 12 + cfg_len,
              want * sizeof(float));
  net.set_flat_params(params);
  return net;
}

}  // namespace pr

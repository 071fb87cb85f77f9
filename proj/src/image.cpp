#include "pr/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pr/datasets.hpp"

namespace pr {

ImageRaster resample_bilinear(const ImageRaster& src, int out_w, int out_h) {
  ImageRaster out;
  out.width = out_w;
  out.height = out_h;
  out.pixels.resize(static_cast<size_t>(3) * out_w * out_h);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    const int ya = std::clamp(y0, 0, src.height - 1);
    const int yb = std::clamp(y0 + 1, 0, src.height - 1);
    for (int x = 0; x < out_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      const int xa = std::clamp(x0, 0, src.width - 1);
      const int xb = std::clamp(x0 + 1, 0, src.width - 1);
      const std::uint8_t* p00 = src.at(xa, ya);
      const std::uint8_t* p10 = src.at(xb, ya);
      const std::uint8_t* p01 = src.at(xa, yb);
      const std::uint8_t* p11 = src.at(xb, yb);
      std::uint8_t* dst = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - wy) * ((1 - wx) * p00[c] + wx * p10[c]) +
                         wy * ((1 - wx) * p01[c] + wx * p11[c]);
        dst[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

ImageRaster crop_zero_pad(const ImageRaster& src, int x0, int y0, int w,
                          int h) {
  ImageRaster out;
  out.width = w;
  out.height = h;
  out.pixels.assign(static_cast<size_t>(3) * w * h, 0);
  const int sx0 = std::max(0, x0), sx1 = std::min(src.width, x0 + w);
  const int sy0 = std::max(0, y0), sy1 = std::min(src.height, y0 + h);
  for (int y = sy0; y < sy1; ++y) {
    if (sx1 <= sx0) break;
    std::memcpy(out.at(sx0 - x0, y - y0), src.at(sx0, y),
                static_cast<size_t>(3) * (sx1 - sx0));
  }
  return out;
}

ImageRaster flip_horizontal(const ImageRaster& src) {
  ImageRaster out = src;
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      std::memcpy(out.at(src.width - 1 - x, y), src.at(x, y), 3);
  return out;
}

std::string encode_ppm(const ImageRaster& img) {
  std::ostringstream ss;
  ss << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::string out = ss.str();
  out.append(reinterpret_cast<const char*>(img.pixels.data()),
             img.pixels.size());
  return out;
}

namespace {

struct PpmReader {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size()) {
      if (std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      } else if (s[pos] == '#') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }
  int read_int() {
    skip_ws();
    int v = 0;
    bool any = false;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      v = v * 10 + (s[pos++] - '0');
      any = true;
    }
    if (!any) throw ParseError("malformed PPM header");
    return v;
  }
};

}  // namespace

ImageRaster decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw ParseError("not a P6 PPM file");
  PpmReader r{bytes, 2};
  ImageRaster img;
  img.width = r.read_int();
  img.height = r.read_int();
  const int maxval = r.read_int();
  if (maxval != 255) throw ParseError("only 8-bit PPM supported");
  ++r.pos;  // single whitespace after maxval
  const size_t need = static_cast<size_t>(3) * img.width * img.height;
  if (bytes.size() - r.pos < need) throw ParseError("truncated PPM data");
  img.pixels.assign(bytes.begin() + r.pos, bytes.begin() + r.pos + need);
  return img;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out += static_cast<char>((v >> 24) & 0xff);
  out += static_cast<char>((v >> 16) & 0xff);
  out += static_cast<char>((v >> 8) & 0xff);
  out += static_cast<char>(v & 0xff);
}

std::uint32_t get_u32(const std::string& s, size_t pos) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + 3]));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc = crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

const char kPngSig[8] = {'\x89', 'P', 'N', 'G', '\r', '\n', '\x1a', '\n'};

}  // namespace

std::string encode_png(const ImageRaster& img) {
  std::string raw;
  raw.reserve((static_cast<size_t>(img.width) * 3 + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw += '\0';  // filter type 0
    raw.append(reinterpret_cast<const char*>(img.at(0, y)),
               static_cast<size_t>(3) * img.width);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw PoseError("PNG compression failed");
  z.resize(zlen);

  std::string out(kPngSig, 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += '\x08';  // bit depth
  ihdr += '\x02';  // color type RGB
  ihdr += '\0';    // compression
  ihdr += '\0';    // filter
  ihdr += '\0';    // no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", "");
  return out;
}

ImageRaster decode_png(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
    throw ParseError("not a PNG file");
  size_t pos = 8;
  int width = 0, height = 0, bit_depth = 0, color_type = 0, interlace = 0;
  std::string idat;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes, pos);
    const std::string type = bytes.substr(pos + 4, 4);
    if (pos + 12 + len > bytes.size()) throw ParseError("truncated PNG chunk");
    const std::string data = bytes.substr(pos + 8, len);
    pos += 12 + len;
    if (type == "IHDR") {
      width = static_cast<int>(get_u32(data, 0));
      height = static_cast<int>(get_u32(data, 4));
      bit_depth = static_cast<unsigned char>(data[8]);
      color_type = static_cast<unsigned char>(data[9]);
      interlace = static_cast<unsigned char>(data[12]);
    } else if (type == "IDAT") {
      idat += data;
    } else if (type == "IEND") {
      break;
    }
  }
  if (width <= 0 || height <= 0) throw ParseError("PNG missing IHDR");
  if (bit_depth != 8 || interlace != 0)
    throw ParseError("only 8-bit non-interlaced PNG supported");
  int channels;
  switch (color_type) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    case 4: channels = 2; break;
    case 6: channels = 4; break;
    default: throw ParseError("unsupported PNG color type");
  }
  const size_t stride = static_cast<size_t>(width) * channels;
  std::string raw((stride + 1) * height, '\0');
  uLongf rlen = static_cast<uLongf>(raw.size());
  if (uncompress(reinterpret_cast<Bytef*>(raw.data()), &rlen,
                 reinterpret_cast<const Bytef*>(idat.data()),
                 static_cast<uLong>(idat.size())) != Z_OK ||
      rlen != raw.size())
    throw ParseError("PNG inflate failed");

  // Undo per-row filters in place.
  std::vector<std::uint8_t> prev(stride, 0), cur(stride, 0);
  ImageRaster img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<size_t>(3) * width * height);
  auto paeth = [](int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
  };
  for (int y = 0; y < height; ++y) {
    const unsigned char* row =
        reinterpret_cast<const unsigned char*>(raw.data()) + y * (stride + 1);
    const int filter = row[0];
    for (size_t i = 0; i < stride; ++i) {
      const int x = row[1 + i];
      const int a = i >= static_cast<size_t>(channels) ? cur[i - channels] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<size_t>(channels) ? prev[i - channels] : 0;
      int v;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + paeth(a, b, c); break;
        default: throw ParseError("bad PNG filter type");
      }
      cur[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    for (int x = 0; x < width; ++x) {
      std::uint8_t* dst = img.at(x, y);
      const std::uint8_t* s = cur.data() + static_cast<size_t>(x) * channels;
      if (channels >= 3) {
        dst[0] = s[0];
        dst[1] = s[1];
        dst[2] = s[2];
      } else {
        dst[0] = dst[1] = dst[2] = s[0];
      }
    }
    std::swap(prev, cur);
  }
  return img;
}

ImageRaster load_image(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0)
    return decode_png(bytes);
  return decode_ppm(bytes);
}

void save_image(const ImageRaster& img, const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".png")
    write_file(path, encode_png(img));
  else
    write_file(path, encode_ppm(img));
}

}  // namespace pr

#pragma once

#include <string>

#include "pr/core.hpp"

namespace pr {

// Bilinear resample to the given size; source sampled at pixel centers.
ImageRaster resample_bilinear(const ImageRaster& src, int out_w, int out_h);

// Copy the window with origin (x0, y0) and the given size; out-of-image
// regions are zero.
ImageRaster crop_zero_pad(const ImageRaster& src, int x0, int y0, int w, int h);

ImageRaster flip_horizontal(const ImageRaster& src);

// P6 binary PPM.
std::string encode_ppm(const ImageRaster& img);
ImageRaster decode_ppm(const std::string& bytes);

// 8-bit PNG: encoder emits RGB, decoder accepts RGB / RGBA / gray.
std::string encode_png(const ImageRaster& img);
ImageRaster decode_png(const std::string& bytes);

// Dispatch on magic bytes (PNG signature vs "P6").
ImageRaster load_image(const std::string& path);
void save_image(const ImageRaster& img, const std::string& path);

}  // namespace pr

#pragma once

#include <string>

#include "clc/common.hpp"
#include "clc/image.hpp"

namespace clc {

// Binary PPM (P6) and PGM (P5), 8-bit maxval 255 only. Writing emits the
// canonical "P6\n<w> <h>\n255\n" header, so canonical files round-trip
// byte-identically.
Image image_read(const std::string& path);
void image_write(const std::string& path, const Image& img);

Image image_decode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> image_encode(const Image& img);

}  // namespace clc

#include "clc/image_io.hpp"

#include <cctype>
#include <fstream>

namespace clc {

namespace {

// Reads the next PNM header token, skipping whitespace and # comments.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (std::isspace(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#')
    tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty()) throw ParseError("pnm: truncated header");
  return tok;
}

int parse_int(const std::string& tok) {
  for (char c : tok)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ParseError("pnm: malformed number '" + tok + "'");
  long v = std::stol(tok);
  if (v <= 0 || v > 1 << 20) throw ParseError("pnm: value out of range");
  return static_cast<int>(v);
}

}  // namespace

Image image_decode(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  std::string magic = next_token(bytes, pos);
  int channels;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw ParseError("pnm: unsupported magic '" + magic + "'");
  }
  int w = parse_int(next_token(bytes, pos));
  int h = parse_int(next_token(bytes, pos));
  int maxval = parse_int(next_token(bytes, pos));
  if (maxval != 255) throw ParseError("pnm: only maxval 255 supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw ParseError("pnm: missing separator before pixel data");
  ++pos;  // single whitespace after maxval

  Image img(w, h, channels);
  if (bytes.size() - pos < img.data.size()) throw ParseError("pnm: pixel data truncated");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.data.size(),
              img.data.begin());
  return img;
}

std::vector<std::uint8_t> image_encode(const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("image_encode: unsupported channel count");
  std::string header = (img.channels == 3 ? "P6\n" : "P5\n") +
                       std::to_string(img.width) + " " + std::to_string(img.height) +
                       "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

Image image_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("image_read: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return image_decode(bytes);
}

void image_write(const std::string& path, const Image& img) {
  std::vector<std::uint8_t> bytes = image_encode(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("image_write: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError("image_write: write failed for " + path);
}

}  // namespace clc

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "vizrank/error.hpp"
#include "vizrank/render.hpp"

namespace vizrank {

namespace {

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::string encode_pgm(const PlotImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.reserve(out.size() + image.pixels.size());
  for (float v : image.pixels) out.push_back(static_cast<char>(quantize(v)));
  return out;
}

PlotImage decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || maxval != 255 || width <= 0 || height <= 0) {
    throw Error(Errc::MalformedInput, "not an 8-bit binary PGM");
  }
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < offset + count) throw Error(Errc::MalformedInput, "truncated PGM");
  PlotImage image;
  image.width = width;
  image.height = height;
  image.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    image.pixels[i] = static_cast<float>(static_cast<unsigned char>(bytes[offset + i])) / 255.0f;
  }
  return image;
}

std::string encode_png(const PlotImage& image) {
  std::string raw;
  raw.reserve(image.pixels.size() + static_cast<std::size_t>(image.height));
  for (int r = 0; r < image.height; ++r) {
    raw.push_back('\0');  // filter: none
    for (int c = 0; c < image.width; ++c) raw.push_back(static_cast<char>(quantize(image.at(r, c))));
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw Error(Errc::IoFailure, "zlib compression failed");
  }
  packed.resize(packed_size);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string header;
  put_u32(header, static_cast<std::uint32_t>(image.width));
  put_u32(header, static_cast<std::uint32_t>(image.height));
  header += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit grayscale, no interlace
  put_chunk(png, "IHDR", header);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", {});
  return png;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace vizrank

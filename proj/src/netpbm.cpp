#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "rrn/data.hpp"

namespace rrn::data {
namespace {

struct Header {
  int width = 0;
  int height = 0;
  std::size_t payload = 0;  // byte offset of the first sample
};

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.size() < 2 || bytes_.substr(0, 2) != magic) {
      throw FormatError("bad netpbm magic at offset 0: expected '" + std::string(magic) + "'");
    }
    pos_ = 2;
  }

  int read_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1LL << 30)) throw FormatError(std::string(what) + " too large at offset " + std::to_string(start));
      ++pos_;
    }
    if (pos_ == start) {
      throw FormatError("expected " + std::string(what) + " at offset " + std::to_string(start));
    }
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t end_of_header() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("expected whitespace after maxval at offset " + std::to_string(pos_));
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

Header parse_header(std::string_view bytes, std::string_view magic, int channels) {
  HeaderReader r(bytes);
  r.expect_magic(magic);
  Header h;
  h.width = r.read_int("width");
  h.height = r.read_int("height");
  const int maxval = r.read_int("maxval");
  if (maxval != 255) {
    throw FormatError("unsupported maxval " + std::to_string(maxval) + " (only 255)");
  }
  if (h.width < 1 || h.height < 1) throw FormatError("netpbm image has zero extent");
  h.payload = r.end_of_header();
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height * channels;
  if (bytes.size() - h.payload < need) {
    throw FormatError("truncated netpbm payload at offset " + std::to_string(bytes.size()) +
                      ": expected " + std::to_string(need) + " bytes from offset " +
                      std::to_string(h.payload));
  }
  return h;
}

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace

double quantize8(double v) { return to_byte(v) / 255.0; }

std::string encode_ppm(const Image& image) {
  const tg::Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) throw ShapeError("encode_ppm expects (1,3,H,W), got " + s.str());
  std::string out = "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
  out.reserve(out.size() + s.numel());
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) out.push_back(static_cast<char>(to_byte(image.at(0, c, y, x))));
    }
  }
  return out;
}

std::string encode_pgm(const GrayMap& map) {
  std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  out.reserve(out.size() + map.size());
  for (double v : map.data) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

Image decode_ppm(std::string_view bytes) {
  const Header h = parse_header(bytes, "P6", 3);
  Image img(tg::Shape{1, 3, h.height, h.width});
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload);
  for (int y = 0; y < h.height; ++y) {
    for (int x = 0; x < h.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = *p++ / 255.0;
    }
  }
  return img;
}

GrayMap decode_pgm(std::string_view bytes) {
  const Header h = parse_header(bytes, "P5", 1);
  GrayMap map(h.height, h.width);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload);
  for (auto& v : map.data) v = *p++ / 255.0;
  return map;
}

Image load_ppm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

GrayMap load_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_pgm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_ppm(const std::filesystem::path& path, const Image& image) { write_file(path, encode_ppm(image)); }

void save_pgm(const std::filesystem::path& path, const GrayMap& map) { write_file(path, encode_pgm(map)); }

}  // namespace rrn::data

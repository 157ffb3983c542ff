#include "oscar/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "oscar/errors.hpp"

namespace oscar::io {

namespace {

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> t{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
    t[i] = c;
  }
  return t;
}

const std::array<uint32_t, 256>& crc_table() {
  static const auto table = make_crc_table();
  return table;
}

}  // namespace

uint32_t crc32(const void* data, size_t len, uint32_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint32_t c = seed ^ 0xffffffffu;
  const auto& t = crc_table();
  for (size_t i = 0; i < len; ++i) c = t[(c ^ p[i]) & 0xffu] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

uint32_t crc32_file(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  return crc32(buf.data(), buf.size());
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const std::streamoff n = f.tellg();
  f.seekg(0);
  std::vector<char> buf(static_cast<size_t>(n));
  if (n > 0) f.read(buf.data(), n);
  if (!f) throw IoError("short read on " + path.string());
  return buf;
}

void write_file(const std::filesystem::path& path, const void* data, size_t len) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!f) throw IoError("short write on " + path.string());
}

void write_pgm(const std::filesystem::path& path, const RowMat& image) {
  std::string header = "P5\n" + std::to_string(image.cols()) + " " +
                       std::to_string(image.rows()) + "\n255\n";
  std::vector<char> buf(header.begin(), header.end());
  buf.reserve(buf.size() + static_cast<size_t>(image.size()));
  for (Eigen::Index r = 0; r < image.rows(); ++r)
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c), 0.0, 1.0);
      buf.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  write_file(path, buf.data(), buf.size());
}

RowMat read_pgm(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  std::string_view s(buf.data(), buf.size());
  size_t pos = 0;
  auto token = [&]() -> std::string_view {
    while (pos < s.size() && (std::isspace(static_cast<unsigned char>(s[pos])) || s[pos] == '#')) {
      if (s[pos] == '#') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else {
        ++pos;
      }
    }
    const size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return s.substr(start, pos - start);
  };
  if (token() != "P5") throw FormatError("not a binary PGM (P5): " + path.string());
  auto parse_int = [&](std::string_view tok) {
    long v = -1;
    std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return v;
  };
  const long w = parse_int(token());
  const long h = parse_int(token());
  const long maxval = parse_int(token());
  if (w <= 0 || h <= 0) throw FormatError("bad PGM dimensions in " + path.string());
  if (maxval != 255) throw FormatError("PGM maxval must be 255 in " + path.string());
  ++pos;  // single whitespace after maxval
  if (s.size() - pos < static_cast<size_t>(w) * static_cast<size_t>(h))
    throw FormatError("truncated PGM payload in " + path.string());
  RowMat img(h, w);
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c)
      img(r, c) = static_cast<unsigned char>(s[pos + static_cast<size_t>(r * w + c)]) / 255.0;
  return img;
}

void write_pose_text(const std::filesystem::path& path, const Eigen::Matrix4d& T) {
  std::ostringstream os;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (c) os << ' ';
      os << format_double(T(r, c));
    }
    os << '\n';
  }
  const std::string s = os.str();
  write_file(path, s.data(), s.size());
}

Eigen::Matrix4d read_pose_text(const std::filesystem::path& path) {
  const auto buf = read_file(path);
  std::istringstream is(std::string(buf.begin(), buf.end()));
  Eigen::Matrix4d T;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(is >> T(r, c))) throw FormatError("malformed pose file " + path.string());
  return T;
}

void put_u32(std::vector<char>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::vector<char>& buf, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

void put_f64_block(std::vector<char>& buf, const double* data, size_t count) {
  buf.reserve(buf.size() + count * 8);
  for (size_t i = 0; i < count; ++i) put_f64(buf, data[i]);
}

Reader::Reader(const char* data, size_t len, std::string what)
    : data_(data), len_(len), what_(std::move(what)) {}

void Reader::need(size_t n) const {
  if (pos_ + n > len_) throw FormatError("truncated file: " + what_);
}

uint32_t Reader::u32() {
  need(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

double Reader::f64() {
  need(8);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 8;
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void Reader::f64_block(double* out, size_t count) {
  for (size_t i = 0; i < count; ++i) out[i] = f64();
}

void Reader::magic(const char expect[8]) {
  need(8);
  if (std::memcmp(data_ + pos_, expect, 8) != 0)
    throw FormatError("bad magic in " + what_ + " (expected " + std::string(expect, 8) + ")");
  pos_ += 8;
}

void Reader::raw(void* out, size_t len) {
  need(len);
  std::memcpy(out, data_ + pos_, len);
  pos_ += len;
}

std::string format_double(double v) {
  char tmp[64];
  auto [end, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v);
  (void)ec;
  return std::string(tmp, end);
}

}  // namespace oscar::io

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace oscar::io {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

uint32_t crc32(const void* data, size_t len, uint32_t seed = 0);
uint32_t crc32_file(const std::filesystem::path& path);

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const void* data, size_t len);

// Binary P5, 8 bit. Values clipped to [0,1] and quantized to 0..255.
void write_pgm(const std::filesystem::path& path, const RowMat& image);
RowMat read_pgm(const std::filesystem::path& path);

// 4 lines x 4 whitespace-separated floats, row-major.
void write_pose_text(const std::filesystem::path& path, const Eigen::Matrix4d& T);
Eigen::Matrix4d read_pose_text(const std::filesystem::path& path);

// Little-endian primitive encoding used by all binary artifact files.
void put_u32(std::vector<char>& buf, uint32_t v);
void put_f64(std::vector<char>& buf, double v);
void put_f64_block(std::vector<char>& buf, const double* data, size_t count);

class Reader {
 public:
  Reader(const char* data, size_t len, std::string what);
  uint32_t u32();
  double f64();
  void f64_block(double* out, size_t count);
  void magic(const char expect[8]);
  void raw(void* out, size_t len);
  size_t offset() const { return pos_; }
  size_t remaining() const { return len_ - pos_; }

 private:
  void need(size_t n) const;
  const char* data_;
  size_t len_, pos_ = 0;
  std::string what_;
};

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace oscar::io

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dissect/errors.hpp"

namespace dissect::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class ByteWriter {
 public:
  explicit ByteWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path.string());
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f32(float v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
    out_.close();
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    in.seekg(0, std::ios::end);
    buf_.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!in) throw IoError("read failed: " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > buf_.size()) {
      throw FormatError("truncated file: expected " + std::to_string(pos_ + n) +
                            " bytes, have " + std::to_string(buf_.size()),
                        pos_);
    }
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::int32_t i32() {
    std::int32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  float f32() {
    float v;
    bytes(&v, 4);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > buf_.size()) throw FormatError("string length out of range", pos_ - 8);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace dissect::io

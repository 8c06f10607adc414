#pragma once

// Little-endian byte packing shared by the ODPS/ODPD/ODPM containers.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "odp/error.hpp"

namespace odp::bytes {

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

/// Sequential reader that reports the byte offset of any truncation.
class Reader {
 public:
  Reader(std::string data, std::string name)
      : data_(std::move(data)), name_(std::move(name)) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 4;
    return v;
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto lo = static_cast<unsigned char>(data_[pos_]);
    const auto hi = static_cast<unsigned char>(data_[pos_ + 1]);
    pos_ += 2;
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void magic(const char* expect) {
    need(4, "magic");
    if (data_.compare(pos_, 4, expect) != 0)
      throw DataError(name_ + ": bad magic, expected \"" + expect + "\"");
    pos_ += 4;
  }

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t offset() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (pos_ + n > data_.size())
      throw DataError(name_ + ": truncated at byte offset " +
                      std::to_string(pos_) + " while reading " + what);
  }

  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace odp::bytes

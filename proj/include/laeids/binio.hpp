#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "laeids/errors.hpp"

namespace laeids {

struct CorruptFile : Error {
  using Error::Error;
};

// Little-endian binary stream helpers shared by the bundle file formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void u8(uint8_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f32(float v);
  void f64(double v);
  void f64_span(std::span<const double> v);  // length-prefixed
  void bytes(std::span<const uint8_t> v);    // length-prefixed
  void str(std::string_view s);              // length-prefixed

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  float f32();
  double f64();
  std::vector<double> f64_span();
  std::vector<uint8_t> bytes();
  std::string str();

 private:
  void read(void* dst, size_t n);
  std::istream& in_;
};

std::string hex_encode(std::span<const uint8_t> data);
std::vector<uint8_t> hex_decode(std::string_view hex);

}  // namespace laeids

#include "laeids/binio.hpp"

#include <cstring>
#include <istream>
#include <ostream>

namespace laeids {

namespace {
void put_le(std::ostream& out, uint64_t v, int nbytes) {
  char buf[8];
  for (int i = 0; i < nbytes; ++i) buf[i] = static_cast<char>(v >> (8 * i));
  out.write(buf, nbytes);
}

uint64_t get_le(std::istream& in, int nbytes) {
  unsigned char buf[8] = {0};
  in.read(reinterpret_cast<char*>(buf), nbytes);
  if (!in) throw CorruptFile("unexpected end of file");
  uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}
}  // namespace

void BinaryWriter::u8(uint8_t v) { put_le(out_, v, 1); }
void BinaryWriter::u32(uint32_t v) { put_le(out_, v, 4); }
void BinaryWriter::u64(uint64_t v) { put_le(out_, v, 8); }

void BinaryWriter::f32(float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  u32(bits);
}

void BinaryWriter::f64(double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  u64(bits);
}

void BinaryWriter::f64_span(std::span<const double> v) {
  u64(v.size());
  for (double x : v) f64(x);
}

void BinaryWriter::bytes(std::span<const uint8_t> v) {
  u64(v.size());
  if (!v.empty()) out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
}

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryReader::read(void* dst, size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (!in_) throw CorruptFile("unexpected end of file");
}

uint8_t BinaryReader::u8() { return static_cast<uint8_t>(get_le(in_, 1)); }
uint32_t BinaryReader::u32() { return static_cast<uint32_t>(get_le(in_, 4)); }
uint64_t BinaryReader::u64() { return get_le(in_, 8); }

float BinaryReader::f32() {
  uint32_t bits = u32();
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

double BinaryReader::f64() {
  uint64_t bits = u64();
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::vector<double> BinaryReader::f64_span() {
  const uint64_t n = u64();
  std::vector<double> out(n);
  for (uint64_t i = 0; i < n; ++i) out[i] = f64();
  return out;
}

std::vector<uint8_t> BinaryReader::bytes() {
  const uint64_t n = u64();
  std::vector<uint8_t> out(n);
  if (n) read(out.data(), n);
  return out;
}

std::string BinaryReader::str() {
  const uint64_t n = u64();
  std::string out(n, '\0');
  if (n) read(out.data(), n);
  return out;
}

std::string hex_encode(std::span<const uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

std::vector<uint8_t> hex_decode(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw CorruptFile("invalid hex digit");
  };
  if (hex.size() % 2 != 0) throw CorruptFile("odd hex length");
  std::vector<uint8_t> out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

}  // namespace laeids

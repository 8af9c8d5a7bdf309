#include "laeids/digest.hpp"

#include <cstring>

namespace laeids {

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

Digest& Digest::add_bytes(const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 1099511628211ull;
  }
  return *this;
}

Digest& Digest::add(std::string_view s) {
  add(static_cast<uint64_t>(s.size()));
  return add_bytes(s.data(), s.size());
}

Digest& Digest::add(uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  return add_bytes(buf, 8);
}

Digest& Digest::add(double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return add(bits);
}

Digest& Digest::add(std::span<const double> v) {
  add(static_cast<uint64_t>(v.size()));
  for (double x : v) add(x);
  return *this;
}

Digest& Digest::add(std::span<const uint8_t> v) {
  add(static_cast<uint64_t>(v.size()));
  return add_bytes(v.data(), v.size());
}

}  // namespace laeids

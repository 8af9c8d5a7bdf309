#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace laeids {

std::string hex64(uint64_t v);

// Streaming FNV-1a (64-bit). Used for run digests, config digests and frozen
// test fixtures; doubles are hashed by bit pattern so digests are exact.
class Digest {
 public:
  Digest& add_bytes(const void* data, size_t n);
  Digest& add(std::string_view s);
  Digest& add(uint64_t v);
  Digest& add(int64_t v) { return add(static_cast<uint64_t>(v)); }
  Digest& add(int v) { return add(static_cast<uint64_t>(static_cast<int64_t>(v))); }
  Digest& add(double v);
  Digest& add(std::span<const double> v);
  Digest& add(std::span<const uint8_t> v);

  uint64_t value() const { return h_; }
  std::string hex() const { return hex64(h_); }

 private:
  uint64_t h_ = 1469598103934665603ull;
};

}  // namespace laeids

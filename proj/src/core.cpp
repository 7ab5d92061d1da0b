#include "lipo/core.hpp"

#include <stdexcept>

namespace lipo {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string BinaryDescriptor::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(kBytes * 2, '0');
  for (unsigned b = 0; b < kBytes; ++b) {
    const std::uint8_t v = byte(b);
    out[2 * b] = digits[v >> 4];
    out[2 * b + 1] = digits[v & 0x0F];
  }
  return out;
}

BinaryDescriptor BinaryDescriptor::from_hex(const std::string& hex) {
  if (hex.size() != kBytes * 2)
    throw std::invalid_argument("descriptor hex must be " +
                                std::to_string(kBytes * 2) + " characters, got " +
                                std::to_string(hex.size()));
  BinaryDescriptor d;
  for (unsigned b = 0; b < kBytes; ++b) {
    const int hi = hex_value(hex[2 * b]);
    const int lo = hex_value(hex[2 * b + 1]);
    if (hi < 0 || lo < 0)
      throw std::invalid_argument("invalid hex digit in descriptor at offset " +
                                  std::to_string(2 * b));
    d.set_byte(b, static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return d;
}

}  // namespace lipo

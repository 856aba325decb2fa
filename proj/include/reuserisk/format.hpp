#pragma once

// Locale-independent shortest round-trip formatting for report emission.

#include <charconv>
#include <string>

namespace reuserisk {

inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace reuserisk

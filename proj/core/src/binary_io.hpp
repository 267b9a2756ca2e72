#pragma once

// Shared helpers for the 16-byte-header float32 payload formats (AVG1, AIM1).

#include "angiorecon/error.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace angiorecon::detail {

constexpr std::size_t kHeaderBytes = 16;

inline std::string make_header(const std::string& line) {
  if (line.size() > kHeaderBytes - 1) {
    throw ValidationError("header '" + line + "' does not fit in 16 bytes");
  }
  std::string h = line;
  h.resize(kHeaderBytes - 1, ' ');
  h.push_back('\n');
  return h;
}

inline std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Splits the 16-byte header into whitespace tokens.
inline std::vector<std::string> header_tokens(const std::vector<char>& bytes,
                                              const std::filesystem::path& path) {
  if (bytes.size() < kHeaderBytes || bytes[kHeaderBytes - 1] != '\n') {
    throw FormatError(path.string() + ": malformed header (expected 16-byte line)");
  }
  std::istringstream ss(std::string(bytes.begin(), bytes.begin() + kHeaderBytes - 1));
  std::vector<std::string> tokens;
  for (std::string t; ss >> t;) tokens.push_back(t);
  return tokens;
}

inline long parse_dim(const std::string& token, const std::filesystem::path& path) {
  std::size_t used = 0;
  long v = -1;
  try {
    v = std::stol(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size()) {
    throw FormatError(path.string() + ": header dimension '" + token +
                      "' is not an integer");
  }
  if (v < 1) {
    throw FormatError(path.string() + ": header dimension " + token +
                      " must be positive");
  }
  return v;
}

/// Decodes little-endian float32 values after the header, checking the size.
inline std::vector<double> decode_payload(const std::vector<char>& bytes,
                                          std::size_t count,
                                          const std::filesystem::path& path) {
  const std::size_t expected = kHeaderBytes + 4 * count;
  if (bytes.size() != expected) {
    throw FormatError(path.string() + ": " +
                      (bytes.size() < expected ? "truncated" : "oversized") +
                      " payload, expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + kHeaderBytes + 4 * i);
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    const double v = std::bit_cast<float>(u);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw FormatError(path.string() + ": value " + std::to_string(v) +
                        " at index " + std::to_string(i) + " outside [0, 1]");
    }
    out[i] = v;
  }
  return out;
}

inline void write_payload(const std::filesystem::path& path, const std::string& header,
                          std::span<const double> values) {
  std::string buf = header;
  buf.reserve(header.size() + 4 * values.size());
  for (double v : values) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    buf.push_back(static_cast<char>(u & 0xFF));
    buf.push_back(static_cast<char>((u >> 8) & 0xFF));
    buf.push_back(static_cast<char>((u >> 16) & 0xFF));
    buf.push_back(static_cast<char>((u >> 24) & 0xFF));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace angiorecon::detail

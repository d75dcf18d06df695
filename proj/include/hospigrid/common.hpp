#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hospigrid {

using Bytes = std::vector<std::uint8_t>;

enum class Errc {
  // model
  MissingRequiredTag,
  MalformedContainer,
  DuplicateImageId,
  // catalog
  DuplicateLfn,
  StorageFull,
  UnknownLfn,
  BadLfn,
  // query
  UnknownTable,
  UnknownColumn,
  DepthExceeded,
  SchemaMismatch,
  ColumnMismatch,
  BadQueryDoc,
  // gridio / jobs
  AlreadyReplicated,
  NotAuthorized,
  SiteUnavailable,
  NoLiveSites,
  // federation
  MalformedConfig,
  MissingCentral,
  CyclicVoHierarchy,
  RevokedCertificate,
  UnknownUser,
  UnknownSite,
  // cli
  AssertionFailed,
  BadCommand,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MissingRequiredTag: return "MissingRequiredTag";
    case Errc::MalformedContainer: return "MalformedContainer";
    case Errc::DuplicateImageId: return "DuplicateImageId";
    case Errc::DuplicateLfn: return "DuplicateLfn";
    case Errc::StorageFull: return "StorageFull";
    case Errc::UnknownLfn: return "UnknownLfn";
    case Errc::BadLfn: return "BadLfn";
    case Errc::UnknownTable: return "UnknownTable";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::ColumnMismatch: return "ColumnMismatch";
    case Errc::BadQueryDoc: return "BadQueryDoc";
    case Errc::AlreadyReplicated: return "AlreadyReplicated";
    case Errc::NotAuthorized: return "NotAuthorized";
    case Errc::SiteUnavailable: return "SiteUnavailable";
    case Errc::NoLiveSites: return "NoLiveSites";
    case Errc::MalformedConfig: return "MalformedConfig";
    case Errc::MissingCentral: return "MissingCentral";
    case Errc::CyclicVoHierarchy: return "CyclicVoHierarchy";
    case Errc::RevokedCertificate: return "RevokedCertificate";
    case Errc::UnknownUser: return "UnknownUser";
    case Errc::UnknownSite: return "UnknownSite";
    case Errc::AssertionFailed: return "AssertionFailed";
    case Errc::BadCommand: return "BadCommand";
  }
  return "Unknown";
}

inline Errc errc_from_name(const std::string& name) {
  for (int i = 0; i <= int(Errc::BadCommand); ++i)
    if (name == errc_name(Errc(i))) return Errc(i);
  return Errc::MalformedConfig;
}

class GridError : public std::runtime_error {
 public:
  GridError(Errc code, std::string detail)
      : std::runtime_error(std::string(errc_name(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, std::string detail = "") {
  throw GridError(code, std::move(detail));
}

// ---- hex -------------------------------------------------------------

inline std::string to_hex(const std::uint8_t* data, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }

// ---- SHA-256 ---------------------------------------------------------
// Compact local implementation so the library stays dependency-free.
// Not a performance path; files here are kilobytes.

using Digest256 = std::array<std::uint8_t, 32>;

namespace detail {

inline std::uint32_t rotr(std::uint32_t x, int n) {
  return (x >> n) | (x << (32 - n));
}

inline void sha256_block(std::uint32_t h[8], const std::uint8_t* p) {
  static const std::uint32_t k[64] = {
      0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
      0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
      0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
      0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
      0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
      0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
      0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
      0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
      0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
      0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
      0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
  std::uint32_t w[64];
  for (int i = 0; i < 16; ++i)
    w[i] = std::uint32_t(p[4 * i]) << 24 | std::uint32_t(p[4 * i + 1]) << 16 |
           std::uint32_t(p[4 * i + 2]) << 8 | std::uint32_t(p[4 * i + 3]);
  for (int i = 16; i < 64; ++i) {
    std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
    std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
    w[i] = w[i - 16] + s0 + w[i - 7] + s1;
  }
  std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
  std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
  for (int i = 0; i < 64; ++i) {
    std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
    std::uint32_t ch = (e & f) ^ (~e & g);
    std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
    std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
    std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
    std::uint32_t t2 = s0 + maj;
    hh = g; g = f; f = e; e = d + t1;
    d = c; c = b; b = a; a = t1 + t2;
  }
  h[0] += a; h[1] += b; h[2] += c; h[3] += d;
  h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
}

}  // namespace detail

inline Digest256 sha256(const std::uint8_t* data, std::size_t len) {
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::size_t full = len / 64;
  for (std::size_t i = 0; i < full; ++i) detail::sha256_block(h, data + 64 * i);

  std::uint8_t tail[128] = {0};
  std::size_t rem = len - full * 64;
  std::memcpy(tail, data + full * 64, rem);
  tail[rem] = 0x80;
  std::size_t tail_len = (rem + 9 <= 64) ? 64 : 128;
  std::uint64_t bits = std::uint64_t(len) * 8;
  for (int i = 0; i < 8; ++i)
    tail[tail_len - 1 - i] = std::uint8_t(bits >> (8 * i));
  detail::sha256_block(h, tail);
  if (tail_len == 128) detail::sha256_block(h, tail + 64);

  Digest256 out;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j)
      out[4 * i + j] = std::uint8_t(h[i] >> (24 - 8 * j));
  return out;
}

inline Digest256 sha256(const Bytes& b) { return sha256(b.data(), b.size()); }

inline Digest256 sha256(const std::string& s) {
  return sha256(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

inline std::string sha256_hex(const std::string& s) {
  auto d = sha256(s);
  return to_hex(d.data(), d.size());
}

inline std::string digest_hex(const Digest256& d) {
  return to_hex(d.data(), d.size());
}

// ---- SplitMix-style mixer ---------------------------------------------
// Deterministic 64-bit mixer used wherever reproducible "random" choices
// are required (job placement, data generation in tests).

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t ordinal) {
  return mix64(seed + (ordinal + 1) * 0x9e3779b97f4a7c15ULL);
}

// ---- small string helpers ---------------------------------------------

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

inline Bytes to_bytes(const std::string& s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
  return std::string(b.begin(), b.end());
}

}  // namespace hospigrid

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pgim {

/// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
/// needed so results are reproducible across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next();

  // Uniform double in [0, 1), 53 mantissa bits.
  double next_unit();

  // Uniform double in [-1, 1).
  double next_symmetric();

  // Uniform integer in [0, bound).
  uint64_t next_below(uint64_t bound);

 private:
  uint64_t state_;
};

// splitmix64 finalizer; bijective on 64-bit values.
uint64_t mix64(uint64_t x);

// Seeded FNV-1a over the bytes of s, passed through mix64.
uint64_t hash64(uint64_t seed, std::string_view s);

// Fans one master seed out into independent streams, one per purpose tag.
// derive_seed(s, "train:shuffle") and derive_seed(s, "embed") never collide
// in practice; the derivation is the first 8 bytes (little-endian) of
// SHA-256("pgim:<s>:<tag>").
uint64_t derive_seed(uint64_t master, std::string_view tag);

std::string sha256_hex(std::string_view data);

std::vector<std::string> split_whitespace(std::string_view s);
std::string_view trim(std::string_view s);

// Collapses internal whitespace runs to single spaces and trims the ends.
std::string normalize_spaces(std::string_view s);

std::string to_upper(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

}  // namespace pgim

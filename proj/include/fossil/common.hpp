#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace fossil {

// Error taxonomy: validation of domain values, configuration problems,
// file-level problems, and numeric failures (non-convergence, non-finite).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Deliberate refusal to act (overwrite without --force, stale checkpoint).
// Mapped to its own exit code so scripts can tell it from real failures.
class RefusalError : public IoError {
public:
  using IoError::IoError;
};

// Degenerate statistical input (all-zero differences, zero variance).
class DegenerateInputError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// Metric not defined for the given input (e.g. AUC with one class).
class UndefinedMetricError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// FNV-1a, 64 bit. Used for config hashes and output-file digests; content
// identity only, not cryptographic.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// Derives an independent substream seed from a base seed and a tag.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t buf[2] = {seed, tag};
  std::uint64_t h = fnv1a64(buf, sizeof(buf));
  // splitmix finalizer so consecutive tags land far apart
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag) {
  return mix_seed(seed, fnv1a64(tag));
}

}  // namespace fossil

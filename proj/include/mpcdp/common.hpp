#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpcdp {

using Word = std::uint64_t;
using Payload = std::vector<Word>;
using MachineId = std::uint32_t;

// DP values: 64-bit integers with saturating infinities.
using Value = std::int64_t;
inline constexpr Value kNegInf = std::numeric_limits<Value>::min();
inline constexpr Value kPosInf = std::numeric_limits<Value>::max();

inline bool is_inf(Value v) { return v == kNegInf || v == kPosInf; }

inline Value sat_add(Value a, Value b) {
  if (a == kNegInf || b == kNegInf) return kNegInf;
  if (a == kPosInf || b == kPosInf) return kPosInf;
  Value r;
  if (__builtin_add_overflow(a, b, &r)) return a > 0 ? kPosInf : kNegInf;
  return r;
}

enum class Sense { Max, Min };

inline Value identity_of(Sense s) { return s == Sense::Max ? kNegInf : kPosInf; }
inline Value pick(Sense s, Value a, Value b) {
  return s == Sense::Max ? (a > b ? a : b) : (a < b ? a : b);
}
inline bool improves(Sense s, Value cand, Value cur) {
  return s == Sense::Max ? cand > cur : cand < cur;
}

enum class ErrorKind {
  CapExceeded,
  NonTermination,
  DuplicateSequence,
  InvalidConfig,
  InvalidRange,
  KeyOutOfDomain,
  DuplicateIndex,
  MissingParent,
  CycleDetected,
  MultipleRoots,
  ParseError,
  SizeBoundViolated,
  InfeasibleK,
  TooLarge,
  InvalidArgument,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Smallest k with 2^k >= n (0 for n <= 1).
inline int ceil_log2(std::uint64_t n) {
  int k = 0;
  while (k < 63 && (std::uint64_t{1} << k) < n) ++k;
  return k;
}

inline int floor_log2(std::uint64_t n) {
  int k = 0;
  while (n > 1) {
    n >>= 1;
    ++k;
  }
  return k;
}

inline bool is_pow2(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

// Deterministic generator seeded from a tuple of 64-bit parts.
std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> parts);

}  // namespace mpcdp

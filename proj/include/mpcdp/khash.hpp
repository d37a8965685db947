#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mpcdp/common.hpp"

namespace mpcdp {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

// Degree-(k-1) polynomial over GF(p), reduced mod a power-of-two range.
struct HashFn {
  std::vector<std::uint64_t> coefficients;  // a_0 .. a_{k-1}
  std::uint64_t prime = kMersenne61;
  std::uint64_t domain_size = 0;
  std::uint64_t range_size = 1;

  std::uint64_t eval(std::uint64_t key) const;
  std::uint32_t machine(std::uint64_t key) const { return static_cast<std::uint32_t>(eval(key)); }
  std::size_t k() const { return coefficients.size(); }

  // Wire form for sharing: [k, prime, domain, range, coefficients...].
  Payload encode() const;
  static HashFn decode(const Payload& words, std::size_t offset = 0);
  bool operator==(const HashFn&) const = default;
};

// Independence order used for m machines: ceil(log2 m), at least 2.
std::uint32_t default_hash_order(std::uint64_t range_size);

HashFn sample_hash(std::uint64_t seed, std::uint32_t k, std::uint64_t domain_size,
                   std::uint64_t range_size, std::uint64_t prime = kMersenne61);

HashFn make_hash(std::vector<std::uint64_t> coefficients, std::uint64_t prime,
                 std::uint64_t domain_size, std::uint64_t range_size);

std::uint64_t eval(const HashFn& h, std::uint64_t key);

struct WeightedItem {
  std::uint64_t index = 0;
  std::uint64_t weight = 0;
};

struct Distribution {
  std::vector<std::uint32_t> assignment;  // parallel to the input items
  std::vector<std::uint64_t> loads;       // per machine
  std::uint64_t max_load = 0;
};

Distribution distribute_weighted(const std::vector<WeightedItem>& items, const HashFn& h);

}  // namespace mpcdp

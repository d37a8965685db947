#include "mpcdp/khash.hpp"

#include <algorithm>

namespace mpcdp {

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  if (p == kMersenne61) {
    std::uint64_t lo = static_cast<std::uint64_t>(prod & kMersenne61);
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t r = lo + hi;
    if (r >= kMersenne61) r -= kMersenne61;
    return r;
  }
  return static_cast<std::uint64_t>(prod % p);
}

void check_range(std::uint64_t range_size) {
  if (!is_pow2(range_size))
    throw Error(ErrorKind::InvalidRange,
                "range " + std::to_string(range_size) + " is not a power of two");
}

}  // namespace

std::uint64_t HashFn::eval(std::uint64_t key) const {
  if (key >= domain_size)
    throw Error(ErrorKind::KeyOutOfDomain,
                "key " + std::to_string(key) + " >= " + std::to_string(domain_size));
  const std::uint64_t x = key % prime;
  std::uint64_t acc = 0;
  for (std::size_t i = coefficients.size(); i-- > 0;) {
    acc = mulmod(acc, x, prime) + coefficients[i];
    if (acc >= prime) acc -= prime;
  }
  return acc & (range_size - 1);
}

Payload HashFn::encode() const {
  Payload w{coefficients.size(), prime, domain_size, range_size};
  w.insert(w.end(), coefficients.begin(), coefficients.end());
  return w;
}

HashFn HashFn::decode(const Payload& words, std::size_t offset) {
  HashFn h;
  const std::size_t k = words.at(offset);
  h.prime = words.at(offset + 1);
  h.domain_size = words.at(offset + 2);
  h.range_size = words.at(offset + 3);
  h.coefficients.assign(words.begin() + static_cast<std::ptrdiff_t>(offset + 4),
                        words.begin() + static_cast<std::ptrdiff_t>(offset + 4 + k));
  return h;
}

std::uint32_t default_hash_order(std::uint64_t range_size) {
  return static_cast<std::uint32_t>(std::max(2, ceil_log2(range_size)));
}

HashFn sample_hash(std::uint64_t seed, std::uint32_t k, std::uint64_t domain_size,
                   std::uint64_t range_size, std::uint64_t prime) {
  check_range(range_size);
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "hash order must be positive");
  if (domain_size > prime)
    throw Error(ErrorKind::InvalidArgument, "domain exceeds the field size");
  auto rng = make_rng({seed, 0x6b68617368ULL, k});
  HashFn h;
  h.prime = prime;
  h.domain_size = domain_size;
  h.range_size = range_size;
  h.coefficients.resize(k);
  for (auto& c : h.coefficients) c = rng() % prime;
  return h;
}

HashFn make_hash(std::vector<std::uint64_t> coefficients, std::uint64_t prime,
                 std::uint64_t domain_size, std::uint64_t range_size) {
  check_range(range_size);
  HashFn h;
  h.prime = prime;
  h.domain_size = domain_size;
  h.range_size = range_size;
  for (auto& c : coefficients) c %= prime;
  h.coefficients = std::move(coefficients);
  return h;
}

std::uint64_t eval(const HashFn& h, std::uint64_t key) { return h.eval(key); }

Distribution distribute_weighted(const std::vector<WeightedItem>& items, const HashFn& h) {
  Distribution d;
  d.assignment.reserve(items.size());
  d.loads.assign(h.range_size, 0);
  for (const auto& it : items) {
    const auto mach = h.machine(it.index);
    d.assignment.push_back(mach);
    d.loads[mach] += it.weight;
  }
  for (auto l : d.loads) d.max_load = std::max(d.max_load, l);
  return d;
}

}  // namespace mpcdp

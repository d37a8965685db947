#include "mpcdp/common.hpp"

namespace mpcdp {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::NonTermination: return "NonTermination";
    case ErrorKind::DuplicateSequence: return "DuplicateSequence";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::KeyOutOfDomain: return "KeyOutOfDomain";
    case ErrorKind::DuplicateIndex: return "DuplicateIndex";
    case ErrorKind::MissingParent: return "MissingParent";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::MultipleRoots: return "MultipleRoots";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SizeBoundViolated: return "SizeBoundViolated";
    case ErrorKind::InfeasibleK: return "InfeasibleK";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> seeds;
  seeds.reserve(parts.size() * 2);
  for (auto p : parts) {
    seeds.push_back(static_cast<std::uint32_t>(p));
    seeds.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(seeds.begin(), seeds.end());
  return std::mt19937_64(seq);
}

}  // namespace mpcdp

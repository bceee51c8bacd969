#include "mdsize/rng.hpp"

#include "mdsize/common.hpp"

namespace mdsize {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t part : parts) {
    h = mix64(h ^ mix64(part));
  }
  return h;
}

std::uint64_t hash_bytes(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InvalidCovariance: return "invalid-covariance";
    case ErrorKind::CalibrationFailure: return "calibration-failure";
    case ErrorKind::SizingFailure: return "sizing-failure";
    case ErrorKind::DegenerateFit: return "degenerate-fit";
    case ErrorKind::DegenerateOutcome: return "degenerate-outcome";
    case ErrorKind::DegeneratePredictions: return "degenerate-predictions";
    case ErrorKind::RankDeficient: return "rank-deficient";
    case ErrorKind::EmptyDataset: return "empty-dataset";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace mdsize

#include "clc/common.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace clc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::vector<double> sample_gaussian(Rng& rng, double mean, double stddev,
                                    std::size_t count) {
  if (stddev < 0.0) throw std::invalid_argument("sample_gaussian: stddev < 0");
  std::vector<double> out(count);
  for (auto& v : out) v = mean + stddev * rng.normal();
  return out;
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes) {
  std::array<std::uint8_t, 32> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != digest.size()) {
    throw std::runtime_error("sha256 digest failed");
  }
  return digest;
}

}  // namespace clc

#include "qsf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace qsf {
namespace {

std::mt19937_64 seeded_engine(const std::vector<std::uint64_t>& key) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * key.size() + 1);
  // Length prefix keeps keys of different depth from aliasing.
  words.push_back(static_cast<std::uint32_t>(key.size()));
  for (auto k : key) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : RngStream(std::vector<std::uint64_t>{seed, stream_id}) {}

RngStream::RngStream(std::vector<std::uint64_t> key)
    : key_(std::move(key)), engine_(seeded_engine(key_)) {}

RngStream RngStream::split(std::uint64_t child) const {
  auto key = key_;
  key.push_back(child);
  return RngStream(std::move(key));
}

RngStream RngStream::split(std::initializer_list<std::uint64_t> path) const {
  auto key = key_;
  key.insert(key.end(), path.begin(), path.end());
  return RngStream(std::move(key));
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
  return -std::log(uniform_open()) / rate;
}

}  // namespace qsf

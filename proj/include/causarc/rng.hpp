#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace causarc {

uint64_t splitmix64(uint64_t x);

// Deterministic random stream. Every random draw in the library goes through
// an explicitly passed RngStream; there is no hidden global engine. Uniforms
// and normals are derived from mt19937_64 output with fixed arithmetic
// (bit shift mapping, Box-Muller) instead of the distribution classes so the
// sequences are identical across standard library implementations.
class RngStream {
 public:
  explicit RngStream(uint64_t seed);

  uint64_t next_u64();
  double uniform();                 // [0, 1)
  double normal();                  // standard normal
  bool bernoulli(double p);
  int uniform_int(int lo, int hi);  // inclusive bounds

  // Child stream with a decorrelated seed derived from this stream's seed and
  // the id. Does not advance or depend on the current engine state.
  RngStream split(uint64_t stream_id) const;

  std::string save_state() const;
  void load_state(const std::string& s);

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace causarc

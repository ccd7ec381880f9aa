#include "causarc/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace causarc {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(uint64_t seed) : seed_(seed), engine_(seed) {}

uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  // 53 high bits -> [0, 1) with full double resolution
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // Box-Muller, cosine branch only. Uncached so the draw count per call is
  // fixed, which checkpoint resume relies on.
  double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

int RngStream::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
  uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

RngStream RngStream::split(uint64_t stream_id) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(stream_id)));
}

std::string RngStream::save_state() const {
  std::ostringstream os;
  os << seed_ << ' ' << engine_;
  return os.str();
}

void RngStream::load_state(const std::string& s) {
  std::istringstream is(s);
  is >> seed_ >> engine_;
  if (is.fail()) throw std::runtime_error("RngStream: bad serialized state");
}

}  // namespace causarc

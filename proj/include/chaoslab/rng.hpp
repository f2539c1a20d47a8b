#ifndef CHAOSLAB_RNG_HPP
#define CHAOSLAB_RNG_HPP

#include <cmath>
#include <cstdint>

// Counter-based RNG: every draw is a hash of (key, counter), so replica
// streams keyed by (master_seed, replica_id) are reproducible independent of
// execution order.  Gaussians come from an explicit Box-Muller so output does
// not depend on the standard library's distribution implementation.

namespace chaoslab {

class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(mix(key ^ 0x2545F4914F6CDD1DULL)) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // per-replica stream derived from a master seed
  static CounterRng stream(uint64_t master_seed, uint64_t stream_id) {
    return CounterRng(mix(master_seed) ^ mix(stream_id * 0xD1B54A32D192ED03ULL + 1));
  }

  uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  // uniform in (0,1)
  double uniform() {
    return (double(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double c = std::cos(6.283185307179586476925287 * u2);
    double s = std::sin(6.283185307179586476925287 * u2);
    spare_ = r * s;
    have_spare_ = true;
    return r * c;
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace chaoslab

#endif

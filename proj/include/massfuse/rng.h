// Seeded random streams for simulation.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so the
// variates below are generated by hand from the raw 64-bit stream:
//
//   uniform()       53 high bits scaled to [0, 1)
//   uniform_index() rejection sampling, unbiased on [0, n)
//   normal()        Marsaglia polar method (log and sqrt only)
//   exponential()   inversion, -log(1 - u)
//
// Independent streams are keyed by (master_seed, stream, substream) and mixed
// through SplitMix64 before seeding the engine.

#ifndef MASSFUSE_RNG_H_
#define MASSFUSE_RNG_H_

#include <cstdint>
#include <random>

namespace massfuse {

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Stream for replicate `stream`, purpose `substream`, of a run keyed by
  // `master_seed`. Distinct keys give streams seeded from distinct values.
  static Rng for_stream(std::uint64_t master_seed, std::uint64_t stream,
                        std::uint64_t substream = 0);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate = 1.0);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace massfuse

#endif  // MASSFUSE_RNG_H_

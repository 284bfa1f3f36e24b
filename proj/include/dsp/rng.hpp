#pragma once

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <random>

namespace dsp {

// Seeded random stream. The engine is mt19937_64 initialised through seed_seq
// from (seed, stream); boost.random distributions are used because their
// output is specified independently of the standard library vendor.
class RngStream {
public:
  using engine_type = std::mt19937_64;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Child stream keyed by `id`; deterministic in (seed, stream, id).
  RngStream child(std::uint64_t id) const {
    return RngStream(seed_ ^ (0xd1b54a32d192ed03ull * (stream_ + 1)), id + 0x632be59bd9b4e019ull);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = boost::random::uniform_01<double>{}(engine_);
    } while (u <= 0.0);
    return u;
  }

  double normal() { return boost::random::normal_distribution<double>{}(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Exponential with rate 1.
  double exponential() { return boost::random::exponential_distribution<double>{}(engine_); }

  /// Gamma(shape, scale = 1).
  double gamma(double shape) {
    return boost::random::gamma_distribution<double>{shape, 1.0}(engine_);
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  engine_type& engine() noexcept { return engine_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
};

}  // namespace dsp

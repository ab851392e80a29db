#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dgrom/geometry.hpp"

namespace dgrom {

/// Uniform sampling of a parameter box from a seeded 64-bit Mersenne Twister.
///
/// The engine output is mapped to [0,1) with the top 53 bits, which keeps the sequence
/// identical across standard libraries (std::uniform_real_distribution is not portable).
class UniformBoxSampler {
 public:
  UniformBoxSampler(const ParameterBox& box, std::uint64_t seed) : box_(box), seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  ParameterTuple next() {
    const double u = unit(), v = unit();
    return ParameterTuple(box_.x_lo + u * (box_.x_hi - box_.x_lo), box_.y_lo + v * (box_.y_hi - box_.y_lo), box_);
  }

  std::vector<ParameterTuple> draw(Index n) {
    std::vector<ParameterTuple> out;
    out.reserve(n);
    for (Index i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  double unit() { return double(engine_() >> 11) * 0x1.0p-53; }

  ParameterBox box_;
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Training parameters use the configured seed, test parameters the next one.
inline std::vector<ParameterTuple> training_parameters(const ParameterBox& box, std::uint64_t seed, Index n) {
  return UniformBoxSampler(box, seed).draw(n);
}

inline std::vector<ParameterTuple> test_parameters(const ParameterBox& box, std::uint64_t seed, Index n) {
  return UniformBoxSampler(box, seed + 1).draw(n);
}

}  // namespace dgrom

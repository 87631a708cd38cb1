#include "bsweyl/sampling.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace bsweyl {

unsigned nth_prime(unsigned k) {
  static constexpr std::array<unsigned, 24> kPrimes{2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                   41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
  if (k >= kPrimes.size()) throw std::out_of_range("nth_prime: Halton dimension too large");
  return kPrimes[k];
}

double radical_inverse(std::uint64_t i, unsigned base) {
  const double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += static_cast<double>(i % base) * f;
    i /= base;
    f *= inv;
  }
  return r;
}

void halton_point(std::uint64_t i, const std::vector<double>& shift, std::vector<double>& out) {
  for (std::size_t d = 0; d < out.size(); ++d) {
    double u = radical_inverse(i + 1, nth_prime(static_cast<unsigned>(d)));
    if (!shift.empty()) {
      u += shift[d];
      u -= std::floor(u);
    }
    out[d] = u;
  }
}

}  // namespace bsweyl

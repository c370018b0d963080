#pragma once

#include <cmath>

namespace fsqd {

// Open-boundary transverse-field Ising chain with a longitudinal tilt:
//   H = -J sum_i sz_i sz_{i+1} - hx sum_i sx_i - hz sum_i sz_i
// The small hz > 0 biases the ground state toward |00...0> (sz|0> = +|0>).
struct IsingParams {
    double J = 1.0;
    double hx = 1.0;
    double hz = 0.05;
};

// Triangle-inequality bound on the spectral radius: sum of term norms.
inline double ising_term_norm_bound(const IsingParams& p, long n) {
    return std::abs(p.J) * static_cast<double>(n - 1) +
           std::abs(p.hx) * static_cast<double>(n) + std::abs(p.hz) * static_cast<double>(n);
}

}  // namespace fsqd

#pragma once

#include <cstdint>
#include <vector>

#include "fsqd/mpo.hpp"
#include "fsqd/mps.hpp"

namespace fsqd {

struct DmrgConfig {
    long max_bond = 20;
    long n_sweeps = 20;
    double convergence_tol = 1e-12;  // per site; a sweep converges when |dE| < tol * n
    long lanczos_dim = 8;            // Krylov dimension of the local solver
    double cutoff = 1e-12;           // relative discarded weight per bond split
    double noise = 0.0;              // optional perturbation, disabled on the last two sweeps
};

struct SweepRecord {
    long sweep = 0;           // 1-based sweep number
    double energy = 0.0;     // Ritz value after the sweep
    double max_discarded = 0.0;
};

struct DmrgResult {
    double energy = 0.0;  // <state|h|state> of the returned state
    MPS state;
    std::vector<SweepRecord> sweep_log;
    bool converged = false;
};

// Two-site ground-state search for a Hermitian MPO, starting from a random
// MPS at the configured bond dimension.
DmrgResult ground_state(const MPO& h, const DmrgConfig& cfg, std::uint64_t seed);

}  // namespace fsqd

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fsqd/bitstring.hpp"
#include "fsqd/circuit.hpp"
#include "fsqd/model.hpp"
#include "fsqd/mpo.hpp"
#include "fsqd/mps.hpp"

namespace fsqd {

// Sampled configuration subspace, most-sampled bitstrings first (ties broken
// by bitstring value).  The all-zeros string can be force-included at the
// front, displacing the least-sampled entry if the cap is already reached.
struct SampledSubspace {
    long n = 0;
    std::vector<Bitstring> basis;
    std::vector<long> counts;  // aligned with basis; 0 for an unseen forced entry
    bool zero_forced = false;
    long total_shots = 0;
};

SampledSubspace select_subspace(const SampleCounts& counts, long n, long max_states,
                                bool force_include_zero);

// Matrix <x_I| h |x_J> over the given bitstrings.  Exactly Hermitian by
// construction: the upper triangle is computed and mirrored, diagonals are
// forced real.  Columns may be distributed over threads; the result does not
// depend on the thread count.
RowMat truncated_hamiltonian(const MPO& h, const std::vector<Bitstring>& basis, int n_threads = 1);

struct SubspaceGround {
    double energy = 0.0;
    Eigen::VectorXcd vector;
    double residual = 0.0;  // ||h v - E v||
    bool used_dense = true;
};

// Lowest eigenpair of a Hermitian matrix: dense below dense_cap, otherwise
// restarted Lanczos to the given residual tolerance.
SubspaceGround subspace_ground(const RowMat& h, long dense_cap = 1024, double tol = 1e-8);

// <H^2> - <H>^2 in the truncated basis, via matrix elements of h and of the
// separately supplied h_squared.  Small negative values from roundoff are
// clamped to zero; large ones raise numerical_error.
double energy_variance(const MPO& h, const MPO& h_squared, const std::vector<Bitstring>& basis,
                       const Eigen::VectorXcd& ground, int n_threads = 1);

// Same quantity evaluated without operator truncation (n <= 24): the subspace
// vector is expanded to a dense state, moved to the physical frame by the
// filter circuit (if any), and hit with the exact Hamiltonian.
double energy_variance_dense(const IsingParams& p, long n, const BrickwallCircuit* filter,
                             const std::vector<Bitstring>& basis, const Eigen::VectorXcd& ground);

enum class ProtocolKind { sqd, fsqd_direct, fsqd_projected, fsqd_unitary_projector };
enum class VarianceMode { off, elements, dense };

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::sqd;
    std::vector<long> shot_schedule;  // strictly increasing cumulative totals
    long max_states = 5000;
    bool force_include_zero = true;
    VarianceMode variance = VarianceMode::off;
    long dense_eig_cap = 1024;
    double eig_tol = 1e-8;
    long square_bond_cap = 200;  // bond cap when building h^2 for element variances
    int n_threads = 1;
};

struct EnergyPoint {
    long n_shots = 0;   // cumulative samples consumed
    long n_states = 0;  // subspace size actually diagonalized
    double energy = 0.0;
    double error = 0.0;  // energy - e_ref
    std::optional<double> variance;
    double anchor_energy = 0.0;  // <0...0| h |0...0> in the sampling frame
};

struct ProtocolContext {
    const MPO* hamiltonian = nullptr;  // operator in the sampling frame
    const MPS* sampler = nullptr;      // state that is sampled
    double e_ref = 0.0;
    // Optional exact-frame data enabling dense variances.
    const IsingParams* params = nullptr;
    const BrickwallCircuit* filter = nullptr;
};

// Sample-select-diagonalize loop over a cumulative shot schedule.  Point k
// draws its increment from substream k of the seed, so prefixes of a schedule
// reproduce exactly.
std::vector<EnergyPoint> run_protocol(const ProtocolContext& ctx, const ProtocolSpec& spec,
                                      std::uint64_t seed, SampleCounts* final_counts = nullptr);

struct DecayFit {
    double tau = 0.0;  // error/site ~ shots^(-tau)
    double stderr_ = 0.0;
    double log_prefactor = 0.0;
    long points_used = 0;
};

DecayFit fit_decay_exponent(const std::vector<EnergyPoint>& points, long n, long min_shots = 1000);

struct VarianceFit {
    double intercept = 0.0;  // extrapolated error at zero variance
    double stderr_ = 0.0;
    Eigen::VectorXd coeffs;
    int order = 1;
    long points_used = 0;
};

// Polynomial fit of energy error against energy variance (order 1 or 2);
// the intercept extrapolates to the zero-variance limit.
VarianceFit variance_extrapolate(const std::vector<std::pair<double, double>>& variance_error,
                                 int order);

struct TargetFraction {
    double mean = 0.0;
    double stddev = 0.0;
};

// Fraction of a target basis recovered by each sampling run.
TargetFraction target_fraction(const std::vector<Bitstring>& target_basis,
                               const std::vector<SampleCounts>& runs);

}  // namespace fsqd

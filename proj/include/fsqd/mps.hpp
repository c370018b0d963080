#pragma once

#include <array>
#include <optional>
#include <vector>

#include "fsqd/bitstring.hpp"
#include "fsqd/tensor.hpp"

namespace fsqd {

// Matrix product state over qubits (physical dimension 2), open boundaries.
//
// Site tensor axes, row-major:   (left bond, physical, right bond)
//
//        0 --[ site i ]-- 2
//               |
//               1
//
// Boundary bonds have extent 1.  If ortho_center >= 0, every site strictly to
// the left is left-isometric and every site strictly to the right is
// right-isometric (within 1e-10); the norm is then carried by the center.
struct MPS {
    long n = 0;
    std::vector<DenseTensor> site;
    long ortho_center = -1;
    long max_bond = 0;  // advisory cap applied by truncating ops (0 = unlimited)

    long bond(long i) const { return site[static_cast<std::size_t>(i)].extent(2); }
    long max_bond_dim() const;
};

// Structural checks (throws validation_error): extents chained, boundaries 1,
// physical dimension 2, and isometry conditions if ortho_center is set.
void validate_mps(const MPS& s, double iso_tol = 1e-10);
bool is_left_isometric(const DenseTensor& t, double tol);
bool is_right_isometric(const DenseTensor& t, double tol);

// Physical-index slice of a rank-3 site tensor: (left x right) matrix view.
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using StridedConstMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
StridedConstMap phys_slice(const DenseTensor& t, long s);
StridedMap phys_slice(DenseTensor& t, long s);

MPS product_state(const Bitstring& bits);
MPS product_state(const std::vector<std::array<cplx, 2>>& local);
MPS random_mps(long n, long bond_dim, Xoshiro256pp& rng);
MPS ghz_state(long n);

// <a|b> (conjugation applied to a).
cplx overlap(const MPS& a, const MPS& b);
double norm(const MPS& s);
void scale(MPS& s, cplx factor);
void normalize(MPS& s);

// Amplitude <bits|s>.
cplx amplitude(const MPS& s, const Bitstring& bits);

// Move the orthogonality center with QR sweeps (no truncation).
void canonicalize(MPS& s, long center);

struct Compressed {
    MPS state;
    double discarded_weight = 0.0;  // sum over bonds of dropped relative squared weight
};

// Right-canonicalize then sweep left-to-right with SVD truncation.  The output
// norm is reduced by the discarded weight (no renormalization).
Compressed compress(const MPS& s, long max_bond, double cutoff);

// Direct-sum superposition ca*a + cb*b (no truncation; compress afterwards).
MPS mps_add(const MPS& a, const MPS& b, cplx ca, cplx cb);

// Perfect (autoregressive) sampling of the computational-basis distribution.
// Requires |norm(s) - 1| <= 1e-6.  Deterministic for a given seed.
SampleCounts sample(const MPS& s, long n_shots, std::uint64_t seed);
// Batch variant drawing shots[k] samples from substream derive_seed(seed, k).
SampleCounts sample_batches(const MPS& s, const std::vector<long>& shots, std::uint64_t seed);

struct Projected {
    MPS state;               // normalized, <0...0|state> = 0
    double removed_weight;   // |<0...0|s>|^2 of the normalized input
};

// Remove the |00...0> component and renormalize.  max_bond = 0 keeps the
// subtraction exact (only the cap would truncate).
Projected project_out_zero(const MPS& s, long max_bond = 0);

// Apply a 4x4 two-site operator at (site, site+1); SVD re-truncation with the
// given cap/cutoff.  The gate matrix acts on the packed physical index
// p = 2*p_site + p_{site+1} (site bit most significant).  The relative weight
// dropped by the split is added to *discarded (callers accumulate over gates).
void apply_two_site(MPS& s, const RowMat& gate, long site, long max_bond, double cutoff,
                    double* discarded = nullptr);

}  // namespace fsqd

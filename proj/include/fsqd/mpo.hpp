#pragma once

#include <cmath>
#include <limits>

#include "fsqd/model.hpp"
#include "fsqd/mps.hpp"

namespace fsqd {

// Matrix product operator over qubits, open boundaries.
//
// Site tensor axes, row-major: (left bond, phys out, phys in, right bond)
struct MPO {
    long n = 0;
    std::vector<DenseTensor> site;
    bool hermitian = false;
    // Sum of operator-term norms when known (NaN otherwise); gives a cheap
    // upper bound on the spectral radius.
    double term_norm_bound = std::numeric_limits<double>::quiet_NaN();

    long bond(long i) const { return site[static_cast<std::size_t>(i)].extent(3); }
    long max_bond_dim() const;
};

void validate_mpo(const MPO& m);

// (phys out, phys in) slice of a rank-4 MPO site tensor: (left x right) view.
StridedConstMap mpo_slice(const DenseTensor& t, long po, long pi);

// Bond-dimension-3 MPO of the open-boundary Ising chain (see model.hpp).
MPO ising_mpo(const IsingParams& p, long n);

// <a|m|b> by the standard three-layer sandwich contraction.
cplx matrix_element(const MPS& a, const MPO& m, const MPS& b);

// <s|m|s> for Hermitian m; the imaginary residue must vanish within 1e-10
// relative tolerance (numerical error otherwise).
double expectation(const MPS& s, const MPO& m);

// <x|m|y> for computational-basis states: product of selected bond matrices.
cplx product_matrix_element(const MPO& m, const Bitstring& x, const Bitstring& y);

// Zip-up application m|s| with SVD truncation (cap, relative cutoff on squared
// singular values), followed by a canonical compression sweep.
MPS apply_mpo(const MPO& m, const MPS& s, long max_bond, double cutoff,
              double* discarded = nullptr);

// In-place canonical compression (QR right-canonicalization, then an SVD
// truncation sweep with the usual cap / relative-cutoff rules).  per_bond,
// when given, accumulates the discarded relative weight of each internal bond.
void compress_mpo(MPO& m, long max_bond, double cutoff,
                  std::vector<double>* per_bond = nullptr);

// Operator product a*b (apply b first), zip-up compressed.  per_bond, when
// given, receives the discarded relative weight of each internal bond.
MPO mpo_product(const MPO& a, const MPO& b, long max_bond, double cutoff,
                std::vector<double>* per_bond = nullptr);
MPO mpo_square(const MPO& m, long max_bond, double cutoff = 1e-12,
               std::vector<double>* per_bond = nullptr);

// Statistical Hermiticity check: <phi|m|psi> == conj(<psi|m|phi>) on random
// state pairs, within tol relative to the element magnitude.
bool hermitian_on_random_states(const MPO& m, long trials, std::uint64_t seed, double tol = 1e-8);

}  // namespace fsqd

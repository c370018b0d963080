#pragma once

#include "fsqd/circuit.hpp"
#include "fsqd/model.hpp"
#include "fsqd/mpo.hpp"
#include "fsqd/mps.hpp"

namespace fsqd {

// Full statevector over n <= 24 qubits.  amp(k): bit of site 1 is the most
// significant bit of k, matching the Bitstring convention.
struct DenseState {
    long n = 0;
    Eigen::VectorXcd amp;
};

inline constexpr long kDenseStateCap = 24;
inline constexpr long kDenseMatrixCap = 14;

DenseState mps_to_dense(const MPS& s);
DenseState dense_from_bitstring(const Bitstring& x);

// Explicit 2^n x 2^n Hamiltonian matrix (n <= 14).
RowMat dense_hamiltonian(const IsingParams& p, long n);

// Matrix-free H|v> for the Ising chain (n <= 24).
Eigen::VectorXcd apply_dense_hamiltonian(const IsingParams& p, long n, const Eigen::VectorXcd& v);

// Lowest eigenpair via restarted Lanczos on the matrix-free apply (n <= 24).
std::pair<double, Eigen::VectorXcd> dense_ground(const IsingParams& p, long n);

// Generic MPO action on a dense state (n <= 24).
Eigen::VectorXcd apply_mpo_dense(const MPO& m, const Eigen::VectorXcd& v);

// Explicit matrix of an MPO (n <= 10; used by small spectrum tests).
RowMat mpo_to_dense(const MPO& m);

// Apply a single two-site gate / a whole brick-wall circuit to a dense state.
void apply_gate_dense(Eigen::VectorXcd& v, long n, const RowMat& u4, long site);
DenseState dense_apply_circuit(const BrickwallCircuit& c, const DenseState& s, bool adjoint);

cplx dense_overlap(const DenseState& a, const DenseState& b);

}  // namespace fsqd

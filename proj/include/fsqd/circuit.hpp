#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "fsqd/mpo.hpp"
#include "fsqd/mps.hpp"

namespace fsqd {

// A two-qubit gate on the adjacent pair (site, site+1), 0-based.  The 4x4
// matrix uses the packed physical index p = 2*b_site + b_{site+1} (left qubit
// is the most significant bit), consistent with apply_two_site().
struct TwoQubitGate {
    long site = 0;
    RowMat u;
};

// Brick-wall circuit: each layer applies gates on pairs (0,1),(2,3),... left
// to right, then on pairs (1,2),(3,4),...  A circuit with L layers on n sites
// holds exactly L*(n-1) gates, stored in application order.
struct BrickwallCircuit {
    long n = 0;
    long layers = 0;
    std::vector<TwoQubitGate> gates;
};

BrickwallCircuit make_brickwall(long n, long layers);  // identity gates
void validate_circuit(const BrickwallCircuit& c, double unitary_tol = 1e-10);

// Gate indices grouped by sublayer (layer + parity), in application order.
std::vector<std::vector<long>> circuit_sublayers(const BrickwallCircuit& c);

// Apply the circuit (or its adjoint: reversed order, conjugate-transposed
// gates) to an MPS.  max_bond = 0 means uncapped.
MPS apply_circuit(const BrickwallCircuit& c, const MPS& s, bool adjoint = false, long max_bond = 0,
                  double cutoff = 1e-14, double* discarded_weight = nullptr);

// Single-gate fidelity tensor F between two states: F(p, q) is the overlap
// <psi_right|psi_left> with the physical legs of the pair (site, site+1) cut
// open; p indexes |psi_left>'s legs, q indexes <psi_right|'s.  The figure of
// merit for a gate u at this pair is f = tr(F u).
RowMat fidelity_tensor(const MPS& psi_left, const MPS& psi_right, long site);

// Maximizer of |tr(F u)| over unitaries: u = Y^dag X^dag from the SVD
// F = X D Y, attaining the optimum sum(D).  Optionally reports that optimum.
RowMat optimal_local_unitary(const RowMat& f, double* best_abs_f = nullptr);

struct EncodeOptions {
    long layers = 2;
    long n_iters = 2000;
    double stall_tol = 1e-12;  // stop when per-iteration gain in |f| drops below this
    long env_bond_cap = 0;     // bond cap for the swept cache states (0 = exact)
    double env_cutoff = 1e-14;
    bool record_updates = false;  // keep every (before, after) pair
};

struct EncodeTrajectory {
    std::vector<double> abs_f;               // |f| after each full iteration
    std::vector<double> infidelity_per_site; // 1 - |f|^(1/n), aligned with abs_f
    std::vector<std::pair<double, double>> updates;  // optional (|f| before, after)
    double min_update_slack = 0.0;  // min over all updates of (after - before)
    double final_abs_f = 0.0;       // |<target|C|input>| recomputed from scratch
    long iterations = 0;
    bool stalled = false;
};

// Alternating-sweep optimizer: updates the gates of c in place to maximize
// |<target| C |input>|.  Both states must be normalized.
EncodeTrajectory encode(BrickwallCircuit& c, const MPS& target, const MPS& input,
                        const EncodeOptions& opt = {});

struct ProjectorEncodeResult {
    BrickwallCircuit circuit;
    EncodeTrajectory trajectory;
    double removed_weight;  // |<0...0|input>|^2 removed by the projection
};

// Encode the unitary that maps `filtered_input` onto its own projection
// orthogonal to |0...0> (normalized).
ProjectorEncodeResult encode_projector_unitary(const MPS& filtered_input, const EncodeOptions& opt = {});

// sqrt(1 - |<a|b>|^2) for normalized pure states (inputs are normalized copies).
double trace_distance(const MPS& a, const MPS& b);

// Conjugated operator C^dag H C as an MPO: gates are absorbed pairwise in
// reverse application order, each two-site block split by SVD at the cutoff
// alone, then the bond cap is imposed by one final compression sweep (far more
// accurate than capping every split).  Records the relative weight discarded
// at each gate split; max_bond = 0 leaves the operator uncompressed.
MPO conjugate_by_circuit(const MPO& h, const BrickwallCircuit& c, long max_bond = 50,
                         double cutoff = 1e-14, std::vector<double>* per_gate_discarded = nullptr);

}  // namespace fsqd

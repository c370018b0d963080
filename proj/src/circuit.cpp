#include "fsqd/circuit.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "fsqd/errors.hpp"

namespace fsqd {

namespace {

// Overlap environments between a bra state B and a ket state K, as
// (bra bond) x (ket bond) matrices.  The bra enters conjugated.

RowMat transfer_left(const RowMat& e, const DenseTensor& b, const DenseTensor& k) {
    RowMat out = RowMat::Zero(b.extent(2), k.extent(2));
    for (int s = 0; s < 2; ++s) {
        out.noalias() += phys_slice(b, s).adjoint() * e * phys_slice(k, s);
    }
    return out;
}

RowMat transfer_right(const RowMat& e, const DenseTensor& b, const DenseTensor& k) {
    RowMat out = RowMat::Zero(b.extent(0), k.extent(0));
    for (int s = 0; s < 2; ++s) {
        out.noalias() += phys_slice(b, s).conjugate() * e * phys_slice(k, s).transpose();
    }
    return out;
}

RowMat left_env(const MPS& bra, const MPS& ket, long upto) {
    RowMat e = RowMat::Ones(1, 1);
    for (long j = 0; j < upto; ++j) e = transfer_left(e, bra.site[j], ket.site[j]);
    return e;
}

RowMat right_env(const MPS& bra, const MPS& ket, long from) {
    RowMat e = RowMat::Ones(1, 1);
    for (long j = bra.n - 1; j >= from; --j) e = transfer_right(e, bra.site[j], ket.site[j]);
    return e;
}

// t[j] = left environment of sites < j, for j = 0..upto.
std::vector<RowMat> left_env_table(const MPS& bra, const MPS& ket, long upto) {
    std::vector<RowMat> t(static_cast<size_t>(bra.n) + 1);
    t[0] = RowMat::Ones(1, 1);
    for (long j = 1; j <= upto; ++j) t[j] = transfer_left(t[j - 1], bra.site[j - 1], ket.site[j - 1]);
    return t;
}

// t[j] = right environment of sites >= j, for j = from..n.
std::vector<RowMat> right_env_table(const MPS& bra, const MPS& ket, long from) {
    std::vector<RowMat> t(static_cast<size_t>(bra.n) + 1);
    t[static_cast<size_t>(bra.n)] = RowMat::Ones(1, 1);
    for (long j = bra.n - 1; j >= from; --j) t[j] = transfer_right(t[j + 1], bra.site[j], ket.site[j]);
    return t;
}

RowMat window_fidelity(const RowMat& el, const RowMat& er, const DenseTensor& b0, const DenseTensor& b1,
                       const DenseTensor& k0, const DenseTensor& k1) {
    std::array<RowMat, 4> ket_side;
    for (int p = 0; p < 4; ++p) {
        RowMat kk = phys_slice(k0, p >> 1) * phys_slice(k1, p & 1);
        ket_side[p] = el * kk * er.transpose();
    }
    RowMat f(4, 4);
    for (int q = 0; q < 4; ++q) {
        RowMat bb = phys_slice(b0, q >> 1) * phys_slice(b1, q & 1);
        for (int p = 0; p < 4; ++p) f(p, q) = bb.conjugate().cwiseProduct(ket_side[p]).sum();
    }
    return f;
}

void check_same_size(const BrickwallCircuit& c, const MPS& s, const char* what) {
    if (c.n != s.n) {
        throw validation_error(std::string(what) + ": circuit is on " + std::to_string(c.n) +
                               " sites, state on " + std::to_string(s.n));
    }
}

void check_normalized(const MPS& s, const char* what) {
    if (std::abs(norm(s) - 1.0) > 1e-6) {
        throw validation_error(std::string(what) + " expects normalized states");
    }
}

// An all-identity circuit pins the objective at exactly zero whenever the
// target is orthogonal to the input (a product target with flipped bits, for
// instance), and zero environments give the local updates nothing to climb.
// Such a start is seeded before sweeping: each first-sublayer gate is set to
// prepare the dominant eigenvector of the target's two-site reduced density
// matrix from |00>.  Circuits that arrive with trained gates, or whose
// identity start already overlaps the target, are left untouched.

bool all_identity(const BrickwallCircuit& c) {
    for (const auto& g : c.gates)
        if (!g.u.isIdentity(0.0)) return false;
    return true;
}

// Householder reflection sending |00> to phi (the phase of phi is irrelevant
// to the objective and is aligned internally).
RowMat reflection_onto(Eigen::Vector4cd phi) {
    phi.normalize();
    const cplx a0 = phi(0);
    if (std::abs(a0) > 0.0) phi *= std::conj(a0) / std::abs(a0);
    Eigen::Vector4cd v = Eigen::Vector4cd::Unit(0) - phi;
    const double vn = v.norm();
    if (vn <= 1e-12) return RowMat::Identity(4, 4);
    v /= vn;
    return RowMat::Identity(4, 4) - 2.0 * (v * v.adjoint());
}

void seed_identity_circuit(BrickwallCircuit& c, const MPS& target, const MPS& input) {
    if (!all_identity(c)) return;
    if (std::abs(overlap(target, input)) > 1e-12) return;
    MPS t = target;
    const auto sublayers = circuit_sublayers(c);
    for (long idx : sublayers.front()) {
        const long i = c.gates[static_cast<size_t>(idx)].site;
        canonicalize(t, i);
        const DenseTensor theta = contract(t.site[static_cast<size_t>(i)],
                                           t.site[static_cast<size_t>(i) + 1], {{2, 0}});
        // theta axes: (left bond, phys i, phys i+1, right bond).  With the
        // center at i the off-window sites contract to identities, so this is
        // the exact reduced density matrix on the pair.
        RowMat rho = RowMat::Zero(4, 4);
        const long dl = theta.extent(0);
        const long dr = theta.extent(3);
        for (long l = 0; l < dl; ++l)
            for (long r = 0; r < dr; ++r)
                for (long s = 0; s < 4; ++s)
                    for (long z = 0; z < 4; ++z)
                        rho(s, z) += theta.at({l, s / 2, s % 2, r}) *
                                     std::conj(theta.at({l, z / 2, z % 2, r}));
        const EighResult er = eigh(rho);
        c.gates[static_cast<size_t>(idx)].u = reflection_onto(er.vectors.col(3));
    }
}

// Alternating gate optimizer.  Both cached states carry a known orthogonality
// center at all times, so every in-sweep move touches only the two sites of
// the current window (plus the neighbor absorbing the gauge factor just left
// behind).  That locality is what keeps the per-sublayer environment tables
// valid without rebuilding them gate by gate.
class SweepEngine {
  public:
    SweepEngine(BrickwallCircuit& c, const MPS& target, const MPS& input, const EncodeOptions& opt,
                EncodeTrajectory& traj)
        : c_(c), target_(target), input_(input), opt_(opt), traj_(traj), subs_(circuit_sublayers(c)) {}

    // Prepare the bra cache for the first forward sweep: the target with the
    // adjoints of all gates after the first applied.
    void bootstrap_bra() {
        bra_ = target_;
        for (long idx = static_cast<long>(c_.gates.size()) - 1; idx >= 1; --idx) {
            RowMat ua = c_.gates[idx].u.adjoint();
            apply_cached(bra_, ua, c_.gates[idx].site);
        }
    }

    double forward() {
        const long m_total = static_cast<long>(c_.gates.size());
        ket_ = input_;
        double last_after = 0.0;
        for (const auto& sl : subs_) {
            RowMat el;
            std::vector<RowMat> er;
            for (size_t j = 0; j < sl.size(); ++j) {
                const long idx = sl[j];
                const long i = c_.gates[idx].site;
                canonicalize(ket_, i);
                canonicalize(bra_, i);
                if (j == 0) {
                    el = left_env(bra_, ket_, i);
                    er = right_env_table(bra_, ket_, i + 2);
                } else {
                    el = transfer_left(el, bra_.site[i - 2], ket_.site[i - 2]);
                    el = transfer_left(el, bra_.site[i - 1], ket_.site[i - 1]);
                }
                // Advance the bra cache to this gate: fold the gate's current
                // value back in (the bra state excludes gates <= idx).
                if (idx != 0) apply_cached(bra_, c_.gates[idx].u, i);
                last_after = update_gate(idx, el, er[static_cast<size_t>(i + 2)]);
                if (idx != m_total - 1) apply_cached(ket_, c_.gates[idx].u, i);
            }
        }
        return last_after;
    }

    double backward() {
        const long m_total = static_cast<long>(c_.gates.size());
        bra_ = target_;
        double last_after = 0.0;
        for (auto s = subs_.rbegin(); s != subs_.rend(); ++s) {
            const auto& sl = *s;
            RowMat er;
            std::vector<RowMat> el;
            for (long j = static_cast<long>(sl.size()) - 1; j >= 0; --j) {
                const long idx = sl[static_cast<size_t>(j)];
                const long i = c_.gates[idx].site;
                canonicalize(ket_, i + 1);
                canonicalize(bra_, i + 1);
                if (j == static_cast<long>(sl.size()) - 1) {
                    er = right_env(bra_, ket_, i + 2);
                    el = left_env_table(bra_, ket_, i);
                } else {
                    er = transfer_right(er, bra_.site[i + 3], ket_.site[i + 3]);
                    er = transfer_right(er, bra_.site[i + 2], ket_.site[i + 2]);
                }
                // Retreat the ket cache: peel this gate off before optimizing it.
                if (idx != m_total - 1) {
                    RowMat ua = c_.gates[idx].u.adjoint();
                    apply_cached(ket_, ua, i);
                }
                last_after = update_gate(idx, el[static_cast<size_t>(i)], er);
                if (idx != 0) {
                    RowMat ua = c_.gates[idx].u.adjoint();
                    apply_cached(bra_, ua, i);
                }
            }
        }
        return last_after;
    }

  private:
    void apply_cached(MPS& s, const RowMat& u, long site) {
        apply_two_site(s, u, site, opt_.env_bond_cap, opt_.env_cutoff);
    }

    double update_gate(long idx, const RowMat& el, const RowMat& er) {
        const long i = c_.gates[idx].site;
        RowMat f = window_fidelity(el, er, bra_.site[i], bra_.site[i + 1], ket_.site[i], ket_.site[i + 1]);
        const double before = std::abs((f * c_.gates[idx].u).trace());
        double after = 0.0;
        RowMat u_new = optimal_local_unitary(f, &after);
        if (opt_.record_updates) traj_.updates.emplace_back(before, after);
        traj_.min_update_slack = std::min(traj_.min_update_slack, after - before);
        c_.gates[idx].u = std::move(u_new);
        return after;
    }

    BrickwallCircuit& c_;
    const MPS& target_;
    const MPS& input_;
    const EncodeOptions& opt_;
    EncodeTrajectory& traj_;
    std::vector<std::vector<long>> subs_;
    MPS ket_;
    MPS bra_;
};

}  // namespace

BrickwallCircuit make_brickwall(long n, long layers) {
    if (n < 2) throw validation_error("make_brickwall: need n >= 2");
    if (layers < 1) throw validation_error("make_brickwall: need layers >= 1");
    BrickwallCircuit c;
    c.n = n;
    c.layers = layers;
    c.gates.reserve(static_cast<size_t>(layers * (n - 1)));
    for (long l = 0; l < layers; ++l) {
        for (long phase = 0; phase < 2; ++phase) {
            for (long i = phase; i + 1 < n; i += 2) {
                c.gates.push_back({i, RowMat::Identity(4, 4)});
            }
        }
    }
    return c;
}

void validate_circuit(const BrickwallCircuit& c, double unitary_tol) {
    if (c.n < 2) throw validation_error("circuit: need n >= 2");
    if (c.layers < 1) throw validation_error("circuit: need layers >= 1");
    const BrickwallCircuit ref = make_brickwall(c.n, c.layers);
    if (c.gates.size() != ref.gates.size()) {
        throw validation_error("circuit: expected " + std::to_string(ref.gates.size()) + " gates, got " +
                               std::to_string(c.gates.size()));
    }
    for (size_t g = 0; g < c.gates.size(); ++g) {
        if (c.gates[g].site != ref.gates[g].site) {
            throw validation_error("circuit: gate " + std::to_string(g) + " breaks the brick-wall order");
        }
        const RowMat& u = c.gates[g].u;
        if (u.rows() != 4 || u.cols() != 4) {
            throw validation_error("circuit: gate " + std::to_string(g) + " is not 4x4");
        }
        const double dev = (u.adjoint() * u - RowMat::Identity(4, 4)).norm();
        if (!(dev <= unitary_tol)) {
            throw validation_error("circuit: gate " + std::to_string(g) + " is not unitary (deviation " +
                                   std::to_string(dev) + ")");
        }
    }
}

std::vector<std::vector<long>> circuit_sublayers(const BrickwallCircuit& c) {
    std::vector<std::vector<long>> subs;
    long idx = 0;
    for (long l = 0; l < c.layers; ++l) {
        for (long phase = 0; phase < 2; ++phase) {
            std::vector<long> sl;
            for (long i = phase; i + 1 < c.n; i += 2) sl.push_back(idx++);
            if (!sl.empty()) subs.push_back(std::move(sl));
        }
    }
    return subs;
}

MPS apply_circuit(const BrickwallCircuit& c, const MPS& s, bool adjoint, long max_bond, double cutoff,
                  double* discarded_weight) {
    check_same_size(c, s, "apply_circuit");
    validate_circuit(c);
    MPS out = s;
    double total_discarded = 0.0;
    double step = 0.0;
    if (!adjoint) {
        for (const auto& g : c.gates) {
            apply_two_site(out, g.u, g.site, max_bond, cutoff, &step);
            total_discarded += step;
        }
    } else {
        for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) {
            RowMat ua = it->u.adjoint();
            apply_two_site(out, ua, it->site, max_bond, cutoff, &step);
            total_discarded += step;
        }
    }
    if (discarded_weight) *discarded_weight = total_discarded;
    return out;
}

RowMat fidelity_tensor(const MPS& psi_left, const MPS& psi_right, long site) {
    if (psi_left.n != psi_right.n) throw validation_error("fidelity_tensor: size mismatch");
    if (site < 0 || site + 1 >= psi_left.n) throw validation_error("fidelity_tensor: site out of range");
    const RowMat el = left_env(psi_right, psi_left, site);
    const RowMat er = right_env(psi_right, psi_left, site + 2);
    return window_fidelity(el, er, psi_right.site[site], psi_right.site[site + 1], psi_left.site[site],
                           psi_left.site[site + 1]);
}

RowMat optimal_local_unitary(const RowMat& f, double* best_abs_f) {
    if (f.rows() != 4 || f.cols() != 4) throw validation_error("optimal_local_unitary: expected 4x4");
    SvdResult sv = svd(f);
    if (best_abs_f) *best_abs_f = sv.s.sum();
    return sv.vt.adjoint() * sv.u.adjoint();
}

EncodeTrajectory encode(BrickwallCircuit& c, const MPS& target, const MPS& input, const EncodeOptions& opt) {
    check_same_size(c, target, "encode");
    check_same_size(c, input, "encode");
    validate_circuit(c);
    check_normalized(target, "encode");
    check_normalized(input, "encode");
    if (opt.n_iters < 1) throw validation_error("encode: need n_iters >= 1");

    EncodeTrajectory traj;
    traj.min_update_slack = std::numeric_limits<double>::infinity();

    seed_identity_circuit(c, target, input);
    SweepEngine engine(c, target, input, opt, traj);
    engine.bootstrap_bra();
    for (long iter = 0; iter < opt.n_iters; ++iter) {
        engine.forward();
        const double f = engine.backward();
        traj.abs_f.push_back(f);
        traj.infidelity_per_site.push_back(f > 0.0 ? 1.0 - std::pow(f, 1.0 / static_cast<double>(c.n))
                                                   : 1.0);
        traj.iterations = iter + 1;
        if (iter > 0 && traj.abs_f[iter] - traj.abs_f[iter - 1] < opt.stall_tol) {
            traj.stalled = true;
            break;
        }
    }
    traj.final_abs_f = std::abs(overlap(target, apply_circuit(c, input, false, 0, 1e-14)));
    return traj;
}

ProjectorEncodeResult encode_projector_unitary(const MPS& filtered_input, const EncodeOptions& opt) {
    Projected pr = project_out_zero(filtered_input);
    ProjectorEncodeResult out;
    out.removed_weight = pr.removed_weight;
    out.circuit = make_brickwall(filtered_input.n, opt.layers);
    out.trajectory = encode(out.circuit, pr.state, filtered_input, opt);
    return out;
}

double trace_distance(const MPS& a, const MPS& b) {
    MPS an = a, bn = b;
    normalize(an);
    normalize(bn);
    const double ov = std::abs(overlap(an, bn));
    return std::sqrt(std::max(0.0, 1.0 - ov * ov));
}

MPO conjugate_by_circuit(const MPO& h, const BrickwallCircuit& c, long max_bond, double cutoff,
                         std::vector<double>* per_gate_discarded) {
    if (h.n != c.n) throw validation_error("conjugate_by_circuit: size mismatch");
    validate_circuit(c);
    if (per_gate_discarded) {
        per_gate_discarded->clear();
        per_gate_discarded->reserve(c.gates.size());
    }
    MPO out = h;
    // C^dag H C: absorb gates in reverse application order, innermost first.
    // Gate splits use the cutoff only; the bond cap is applied once at the end
    // by a global compression sweep, which loses far less than capping each
    // intermediate split (the transient rank during absorption exceeds the
    // rank of the finished operator).  For shallow circuits the intermediate
    // bond saturates at an n-independent value set by the gate light cone.
    for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) {
        const long i = it->site;
        const RowMat& u = it->u;
        const long wl = out.site[i].extent(0);
        const long wr = out.site[i + 1].extent(3);

        // Merge the two site tensors: axes (wl, out_i, in_i, out_j, in_j, wr).
        DenseTensor t = contract(out.site[i], out.site[i + 1], {{3, 0}});
        // Output pair picks up u^dag ...
        t = t.permuted({1, 3, 0, 2, 4, 5});  // (out_i, out_j, wl, in_i, in_j, wr)
        {
            MatMap m = t.matrix(4, t.size() / 4);
            RowMat tmp = u.adjoint() * m;
            m = tmp;
        }
        // ... and the input pair picks up u.
        t = t.permuted({3, 4, 2, 0, 1, 5});  // (in_i, in_j, wl, out_i, out_j, wr)
        {
            MatMap m = t.matrix(4, t.size() / 4);
            RowMat tmp = u.transpose() * m;
            m = tmp;
        }
        // Back to the split layout (wl, out_i, in_i | out_j, in_j, wr).
        t = t.permuted({2, 3, 0, 4, 1, 5});
        MatMap block = t.matrix(wl * 4, 4 * wr);
        SvdResult sv = svd(block);
        TruncationDecision dec = truncate_spectrum(sv.s, 0, cutoff);
        const long k = dec.keep;
        if (per_gate_discarded) {
            const double total = sv.s.squaredNorm();
            per_gate_discarded->push_back(total > 0.0 ? dec.discarded / total : 0.0);
        }
        DenseTensor left({wl, 2, 2, k});
        left.matrix(wl * 4, k) = sv.u.leftCols(k);
        DenseTensor right({k, 2, 2, wr});
        right.matrix(k, 4 * wr) = sv.s.head(k).asDiagonal() * sv.vt.topRows(k);
        out.site[i] = std::move(left);
        out.site[i + 1] = std::move(right);
    }
    if (max_bond > 0 || cutoff > 0.0) compress_mpo(out, max_bond, cutoff, nullptr);
    out.hermitian = h.hermitian;
    out.term_norm_bound = h.term_norm_bound;
    return out;
}

}  // namespace fsqd

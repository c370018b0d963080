#include "fsqd/exact.hpp"

#include <cmath>

#include "fsqd/errors.hpp"
#include "fsqd/lanczos.hpp"
#include "fsqd/rng.hpp"

namespace fsqd {

namespace {

void check_dense_size(long n, long cap, const char* what) {
    if (n < 1 || n > cap) {
        throw validation_error(std::string(what) + " supports 1 <= n <= " + std::to_string(cap) +
                               ", got n = " + std::to_string(n));
    }
}

// Bit of site i (0-based) in basis index k; site 0 is the most significant.
inline int site_bit(long k, long n, long i) { return static_cast<int>((k >> (n - 1 - i)) & 1); }

}  // namespace

DenseState mps_to_dense(const MPS& s) {
    check_dense_size(s.n, kDenseStateCap, "mps_to_dense");
    // Grow the amplitude table site by site: after absorbing i sites we hold a
    // (2^i x bond) matrix whose rows are partial bitstrings.
    RowMat acc(1, s.site[0].extent(0));
    acc.setOnes();
    for (long i = 0; i < s.n; ++i) {
        const long rows = acc.rows();
        const long l = s.site[i].extent(0);
        const long r = s.site[i].extent(2);
        RowMat next(rows * 2, r);
        for (int b = 0; b < 2; ++b) {
            RowMat branch = acc * phys_slice(s.site[i], b);
            // Row (x, b) of `next` is row x of `branch`: stride-2 rows offset b.
            StridedMap view(next.data() + b * r, rows, r, Eigen::OuterStride<>(2 * r));
            view = branch;
        }
        acc.swap(next);
        (void)l;
    }
    DenseState out;
    out.n = s.n;
    out.amp = acc.col(0);
    return out;
}

DenseState dense_from_bitstring(const Bitstring& x) {
    const long n = static_cast<long>(x.size());
    check_dense_size(n, kDenseStateCap, "dense_from_bitstring");
    validate_bitstring(x, n);
    DenseState out;
    out.n = n;
    out.amp = Eigen::VectorXcd::Zero(1L << n);
    out.amp(static_cast<long>(bitstring_to_index(x))) = 1.0;
    return out;
}

RowMat dense_hamiltonian(const IsingParams& p, long n) {
    check_dense_size(n, kDenseMatrixCap, "dense_hamiltonian");
    const long dim = 1L << n;
    RowMat h = RowMat::Zero(dim, dim);
    for (long k = 0; k < dim; ++k) {
        double diag = 0.0;
        for (long i = 0; i + 1 < n; ++i) {
            const double zi = site_bit(k, n, i) ? -1.0 : 1.0;
            const double zj = site_bit(k, n, i + 1) ? -1.0 : 1.0;
            diag += -p.J * zi * zj;
        }
        for (long i = 0; i < n; ++i) diag += -p.hz * (site_bit(k, n, i) ? -1.0 : 1.0);
        h(k, k) = diag;
        for (long i = 0; i < n; ++i) h(k ^ (1L << (n - 1 - i)), k) += -p.hx;
    }
    return h;
}

Eigen::VectorXcd apply_dense_hamiltonian(const IsingParams& p, long n, const Eigen::VectorXcd& v) {
    check_dense_size(n, kDenseStateCap, "apply_dense_hamiltonian");
    const long dim = 1L << n;
    if (v.size() != dim) throw validation_error("apply_dense_hamiltonian: state dimension mismatch");
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(dim);
    for (long k = 0; k < dim; ++k) {
        double diag = 0.0;
        double zprev = site_bit(k, n, 0) ? -1.0 : 1.0;
        diag += -p.hz * zprev;
        for (long i = 1; i < n; ++i) {
            const double zi = site_bit(k, n, i) ? -1.0 : 1.0;
            diag += -p.J * zprev * zi - p.hz * zi;
            zprev = zi;
        }
        w(k) += diag * v(k);
    }
    for (long i = 0; i < n; ++i) {
        const long mask = 1L << (n - 1 - i);
        for (long k = 0; k < dim; ++k) w(k ^ mask) += -p.hx * v(k);
    }
    return w;
}

std::pair<double, Eigen::VectorXcd> dense_ground(const IsingParams& p, long n) {
    check_dense_size(n, kDenseStateCap, "dense_ground");
    const long dim = 1L << n;
    Xoshiro256pp rng(0x9e3779b97f4a7c15ULL);
    Eigen::VectorXcd v0(dim);
    for (long k = 0; k < dim; ++k) v0(k) = cplx(rng.normal(), rng.normal());
    // Bias toward the polarized sector so the start overlaps the ground state
    // strongly even at large n.
    v0 *= 1e-2 / v0.norm();
    v0(0) += 1.0;

    LanczosOptions opt;
    opt.krylov_dim = std::min<long>(dim, n <= 16 ? 40 : 20);
    opt.max_restarts = 500;
    opt.tol = 1e-11;
    auto apply = [&](const Eigen::VectorXcd& x) { return apply_dense_hamiltonian(p, n, x); };
    LanczosResult res = lanczos_lowest(apply, v0, opt);
    if (!res.converged) throw numerical_error("dense_ground: Lanczos did not converge");
    return {res.value, std::move(res.vector)};
}

Eigen::VectorXcd apply_mpo_dense(const MPO& m, const Eigen::VectorXcd& v) {
    check_dense_size(m.n, kDenseStateCap, "apply_mpo_dense");
    const long dim = 1L << m.n;
    if (v.size() != dim) throw validation_error("apply_mpo_dense: state dimension mismatch");
    // Partial tensor P over (processed output bits, MPO bond, remaining input
    // bits), stored as a vector of bond-indexed matrices (2^i rows of output
    // prefixes, 2^(n-i-1..) columns of input suffixes handled implicitly).
    //
    // Layout: flat array indexed by (prefix, w, suffix), suffix fastest.
    long wl = 1;
    std::vector<cplx> cur(v.data(), v.data() + dim);  // (1 prefix, w=1, 2^n suffix)
    std::vector<cplx> nxt;
    long prefixes = 1;
    long suffix = dim;
    for (long i = 0; i < m.n; ++i) {
        const long wr = m.site[i].extent(3);
        const long half = suffix / 2;
        nxt.assign(static_cast<size_t>(prefixes) * 2 * wr * half, cplx(0.0, 0.0));
        const DenseTensor& w = m.site[i];
        for (long x = 0; x < prefixes; ++x) {
            for (long a = 0; a < wl; ++a) {
                const cplx* src = cur.data() + (x * wl + a) * suffix;
                for (int po = 0; po < 2; ++po) {
                    for (int pi = 0; pi < 2; ++pi) {
                        for (long b = 0; b < wr; ++b) {
                            const cplx coef = w.at({a, po, pi, b});
                            if (coef == cplx(0.0, 0.0)) continue;
                            cplx* dst = nxt.data() + (((x * 2 + po) * wr) + b) * half;
                            const cplx* s = src + pi * half;
                            for (long t = 0; t < half; ++t) dst[t] += coef * s[t];
                        }
                    }
                }
            }
        }
        cur.swap(nxt);
        prefixes *= 2;
        wl = wr;
        suffix = half;
    }
    // Final layout: (2^n prefixes, w=1, suffix=1).
    return Eigen::Map<const Eigen::VectorXcd>(cur.data(), dim);
}

RowMat mpo_to_dense(const MPO& m) {
    check_dense_size(m.n, 10, "mpo_to_dense");
    const long dim = 1L << m.n;
    // Ladder contraction with both physical legs open: after i sites the
    // partial is indexed by (row prefix, column prefix, right bond), so the
    // cost is sum_i 4^i * 4 * w_i * w_{i+1} instead of the 2^n-fold column
    // application.
    long wl = 1;
    std::vector<cplx> cur{cplx(1.0, 0.0)};
    std::vector<cplx> nxt;
    long prefixes = 1;  // 2^i rows and 2^i columns processed so far
    for (long i = 0; i < m.n; ++i) {
        const DenseTensor& w = m.site[static_cast<size_t>(i)];
        const long wr = w.extent(3);
        RowMat slice[2][2];
        for (int so = 0; so < 2; ++so) {
            for (int si = 0; si < 2; ++si) {
                slice[so][si].resize(wl, wr);
                for (long a = 0; a < wl; ++a)
                    for (long b = 0; b < wr; ++b) slice[so][si](a, b) = w.at({a, so, si, b});
            }
        }
        nxt.assign(static_cast<size_t>(prefixes) * prefixes * 4 * wr, cplx(0.0, 0.0));
        for (long po = 0; po < prefixes; ++po) {
            // All column prefixes for this row prefix at once: (prefixes x wl)
            // times (wl x wr), scattered into the si-interleaved destination.
            const Eigen::Map<const RowMat> src(cur.data() + po * prefixes * wl, prefixes, wl);
            for (int so = 0; so < 2; ++so) {
                for (int si = 0; si < 2; ++si) {
                    Eigen::Map<RowMat, 0, Eigen::OuterStride<>> dst(
                        nxt.data() + ((po * 2 + so) * prefixes * 2 + si) * wr, prefixes, wr,
                        Eigen::OuterStride<>(2 * wr));
                    dst.noalias() += src * slice[so][si];
                }
            }
        }
        cur.swap(nxt);
        prefixes *= 2;
        wl = wr;
    }
    // Final layout: (row, column, bond w = 1), row-major.
    return Eigen::Map<const RowMat>(cur.data(), dim, dim);
}

void apply_gate_dense(Eigen::VectorXcd& v, long n, const RowMat& u4, long site) {
    if (site < 0 || site + 1 >= n) throw validation_error("apply_gate_dense: gate site out of range");
    if (u4.rows() != 4 || u4.cols() != 4) throw validation_error("apply_gate_dense: gate must be 4x4");
    const long dim = 1L << n;
    if (v.size() != dim) throw validation_error("apply_gate_dense: state dimension mismatch");
    const long m1 = 1L << (n - 1 - site);      // bit of the left qubit
    const long m2 = 1L << (n - 2 - site);      // bit of the right qubit
    Eigen::Vector4cd in, out;
    for (long k = 0; k < dim; ++k) {
        if ((k & m1) || (k & m2)) continue;
        const long k00 = k, k01 = k | m2, k10 = k | m1, k11 = k | m1 | m2;
        in << v(k00), v(k01), v(k10), v(k11);
        out.noalias() = u4 * in;
        v(k00) = out(0);
        v(k01) = out(1);
        v(k10) = out(2);
        v(k11) = out(3);
    }
}

DenseState dense_apply_circuit(const BrickwallCircuit& c, const DenseState& s, bool adjoint) {
    if (c.n != s.n) throw validation_error("dense_apply_circuit: size mismatch");
    DenseState out = s;
    if (!adjoint) {
        for (const auto& g : c.gates) apply_gate_dense(out.amp, out.n, g.u, g.site);
    } else {
        for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) {
            RowMat ua = it->u.adjoint();
            apply_gate_dense(out.amp, out.n, ua, it->site);
        }
    }
    return out;
}

cplx dense_overlap(const DenseState& a, const DenseState& b) {
    if (a.n != b.n) throw validation_error("dense_overlap: size mismatch");
    return a.amp.dot(b.amp);  // Eigen's dot conjugates the first argument
}

}  // namespace fsqd

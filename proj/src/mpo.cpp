#include "fsqd/mpo.hpp"

#include <algorithm>
#include <cstdio>

namespace fsqd {

namespace {

DenseTensor tensor_from(const RowMat& m, std::vector<long> shape) {
    DenseTensor t(std::move(shape));
    if (t.size() != m.size()) throw validation_error("tensor_from size mismatch");
    t.matrix(m.rows(), m.cols()) = m;
    return t;
}

}  // namespace

long MPO::max_bond_dim() const {
    long m = 1;
    for (const auto& t : site) m = std::max(m, t.extent(3));
    return m;
}

void validate_mpo(const MPO& m) {
    if (m.n < 1) throw validation_error("MPO needs at least one site");
    if (static_cast<long>(m.site.size()) != m.n) throw validation_error("MPO site count mismatch");
    for (long i = 0; i < m.n; ++i) {
        const auto& t = m.site[static_cast<std::size_t>(i)];
        if (t.rank() != 4 || t.extent(1) != 2 || t.extent(2) != 2)
            throw validation_error("MPO site tensors must be (left, 2, 2, right)");
        if (i == 0 && t.extent(0) != 1) throw validation_error("left boundary bond must be 1");
        if (i == m.n - 1 && t.extent(3) != 1) throw validation_error("right boundary bond must be 1");
        if (i + 1 < m.n && t.extent(3) != m.site[static_cast<std::size_t>(i + 1)].extent(0))
            throw validation_error("MPO bond extents are inconsistent");
    }
}

StridedConstMap mpo_slice(const DenseTensor& t, long po, long pi) {
    const long l = t.extent(0), r = t.extent(3);
    return StridedConstMap(t.data() + (po * 2 + pi) * r, l, r, Eigen::OuterStride<>(4 * r));
}

MPO ising_mpo(const IsingParams& p, long n) {
    if (n < 2) throw validation_error("ising_mpo requires n >= 2");
    MPO m;
    m.n = n;
    m.hermitian = true;
    m.term_norm_bound = ising_term_norm_bound(p, n);

    // Local operators as 2x2 blocks (row = phys out, col = phys in).
    const auto set_block = [](DenseTensor& t, long wl, long wr, const RowMat& op, cplx f = cplx(1)) {
        for (long po = 0; po < 2; ++po)
            for (long pi = 0; pi < 2; ++pi) t.at({wl, po, pi, wr}) += f * op(po, pi);
    };
    RowMat id = RowMat::Identity(2, 2);
    RowMat sz = RowMat::Zero(2, 2), sx = RowMat::Zero(2, 2);
    sz(0, 0) = 1;
    sz(1, 1) = -1;
    sx(0, 1) = 1;
    sx(1, 0) = 1;
    const RowMat onsite = -p.hx * sx - p.hz * sz;

    for (long i = 0; i < n; ++i) {
        const bool first = (i == 0), last = (i == n - 1);
        const long l = first ? 1 : 3, r = last ? 1 : 3;
        DenseTensor t({l, 2, 2, r});
        // Full 3x3 transfer block:
        //   [ I      0      0 ]
        //   [ sz     0      0 ]
        //   [ onsite -J*sz  I ]
        // First site keeps only the bottom row, last site only the first column.
        if (first) {
            set_block(t, 0, 0, onsite);
            set_block(t, 0, 1, sz, -p.J);
            set_block(t, 0, 2, id);
        } else if (last) {
            set_block(t, 0, 0, id);
            set_block(t, 1, 0, sz);
            set_block(t, 2, 0, onsite);
        } else {
            set_block(t, 0, 0, id);
            set_block(t, 1, 0, sz);
            set_block(t, 2, 0, onsite);
            set_block(t, 2, 1, sz, -p.J);
            set_block(t, 2, 2, id);
        }
        m.site.push_back(std::move(t));
    }
    return m;
}

cplx matrix_element(const MPS& a, const MPO& m, const MPS& b) {
    if (a.n != m.n || b.n != m.n)
        throw validation_error("matrix_element: site counts disagree");
    // env(la, wl, lb), updated site by site.
    DenseTensor env({1, 1, 1});
    env.flat(0) = cplx(1);
    for (long i = 0; i < m.n; ++i) {
        const auto& ta = a.site[static_cast<std::size_t>(i)];
        const auto& tw = m.site[static_cast<std::size_t>(i)];
        const auto& tb = b.site[static_cast<std::size_t>(i)];
        const long la = ta.extent(0), ra = ta.extent(2);
        const long wl = tw.extent(0), wr = tw.extent(3);
        const long lb = tb.extent(0), rb = tb.extent(2);
        DenseTensor next({ra, wr, rb});
        for (long w = 0; w < wl; ++w) {
            const StridedConstMap env_w(env.data() + w * lb, la, lb, Eigen::OuterStride<>(wl * lb));
            for (long so = 0; so < 2; ++so)
                for (long si = 0; si < 2; ++si) {
                    // Skip all-zero operator blocks (common for sparse MPOs).
                    bool nonzero = false;
                    for (long w2 = 0; w2 < wr && !nonzero; ++w2)
                        nonzero = std::abs(tw.at({w, so, si, w2})) != 0.0;
                    if (!nonzero) continue;
                    const RowMat mid = phys_slice(ta, so).adjoint() * env_w * phys_slice(tb, si);
                    for (long w2 = 0; w2 < wr; ++w2) {
                        const cplx coef = tw.at({w, so, si, w2});
                        if (coef == cplx(0)) continue;
                        StridedMap out(next.data() + w2 * rb, ra, rb, Eigen::OuterStride<>(wr * rb));
                        out += coef * mid;
                    }
                }
        }
        env = std::move(next);
    }
    return env.flat(0);
}

double expectation(const MPS& s, const MPO& m) {
    const cplx val = matrix_element(s, m, s);
    char msg[96];
    if (std::abs(val.imag()) > 1e-8 * std::max(1.0, std::abs(val.real()))) {
        std::snprintf(msg, sizeof msg, "expectation has imaginary residue %.3e (real part %.3e)",
                      val.imag(), val.real());
        throw numerical_error(msg);
    }
    return val.real();
}

cplx product_matrix_element(const MPO& m, const Bitstring& x, const Bitstring& y) {
    validate_bitstring(x, m.n);
    validate_bitstring(y, m.n);
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (long i = 0; i < m.n; ++i) {
        const long po = x[static_cast<std::size_t>(i)] == '1' ? 1 : 0;
        const long pi = y[static_cast<std::size_t>(i)] == '1' ? 1 : 0;
        v = v * mpo_slice(m.site[static_cast<std::size_t>(i)], po, pi);
    }
    return v(0);
}

MPS apply_mpo(const MPO& m, const MPS& s, long max_bond, double cutoff, double* discarded) {
    if (m.n != s.n) throw validation_error("apply_mpo: site counts disagree");
    MPS out;
    out.n = s.n;
    out.max_bond = (max_bond > 0) ? max_bond : s.max_bond;
    out.site.resize(static_cast<std::size_t>(s.n));

    // carry(c, wr, ar), starting as the trivial boundary scalar.
    DenseTensor carry({1, 1, 1});
    carry.flat(0) = cplx(1);
    double dropped_total = 0;
    for (long i = 0; i < s.n; ++i) {
        const auto& w = m.site[static_cast<std::size_t>(i)];
        const auto& a = s.site[static_cast<std::size_t>(i)];
        // T(wl, po, wr, al, ar) = sum_pi W(wl,po,pi,wr) A(al,pi,ar)
        const DenseTensor t = contract(w, a, {{2, 1}});
        // M(c, po, wr, ar) = sum_{wl,al} carry(c,wl,al) T(wl,po,wr,al,ar)
        DenseTensor block = contract(carry, t, {{1, 0}, {2, 3}});
        const long c = block.extent(0), wr = block.extent(2), ar = block.extent(3);
        if (i == s.n - 1) {
            out.site[static_cast<std::size_t>(i)] = std::move(block).reshaped({c, 2, 1});
            break;
        }
        const auto f = svd(block.matrix(c * 2, wr * ar));
        double total_sq = 0;
        for (long j = 0; j < f.s.size(); ++j) total_sq += f.s[j] * f.s[j];
        const auto dec = truncate_spectrum(f.s, max_bond, cutoff);
        if (total_sq > 0) dropped_total += dec.discarded / total_sq;
        const long k = dec.keep;
        out.site[static_cast<std::size_t>(i)] = tensor_from(f.u.leftCols(k), {c, 2, k});
        carry = tensor_from(RowMat(f.s.head(k).asDiagonal() * f.vt.topRows(k)), {k, wr, ar});
    }
    out.ortho_center = out.n - 1;

    // Final canonical compression pass (zip-up truncations are one-sided).
    Compressed comp = compress(out, max_bond, cutoff);
    if (discarded != nullptr) *discarded += dropped_total + comp.discarded_weight;
    return std::move(comp.state);
}

// MPO compression: QR right-canonicalization followed by an SVD sweep, the
// (po, pi) pair treated as a single physical leg of dimension 4.
void compress_mpo(MPO& m, long max_bond, double cutoff, std::vector<double>* per_bond) {
    for (long i = m.n - 1; i > 0; --i) {
        auto& t = m.site[static_cast<std::size_t>(i)];
        const long l = t.extent(0), r = t.extent(3);
        Eigen::HouseholderQR<RowMat> qr(RowMat(t.matrix(l, 4 * r).adjoint()));
        const long k = std::min(l, 4 * r);
        const RowMat q = qr.householderQ() * RowMat::Identity(4 * r, k);
        const RowMat rem = RowMat(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>());
        t = tensor_from(RowMat(q.adjoint()), {k, 2, 2, r});
        auto& prv = m.site[static_cast<std::size_t>(i - 1)];
        const long l0 = prv.extent(0);
        prv = tensor_from(RowMat(prv.matrix(l0 * 4, l) * rem.adjoint()), {l0, 2, 2, k});
    }
    for (long i = 0; i + 1 < m.n; ++i) {
        auto& t = m.site[static_cast<std::size_t>(i)];
        const long l = t.extent(0), r = t.extent(3);
        const auto f = svd(t.matrix(l * 4, r));
        double total_sq = 0;
        for (long j = 0; j < f.s.size(); ++j) total_sq += f.s[j] * f.s[j];
        const auto dec = truncate_spectrum(f.s, max_bond, cutoff);
        if (per_bond != nullptr && total_sq > 0)
            (*per_bond)[static_cast<std::size_t>(i)] += dec.discarded / total_sq;
        const long k = dec.keep;
        t = tensor_from(f.u.leftCols(k), {l, 2, 2, k});
        const RowMat carry = f.s.head(k).asDiagonal() * f.vt.topRows(k);
        auto& nxt = m.site[static_cast<std::size_t>(i + 1)];
        const long r2 = nxt.extent(3);
        nxt = tensor_from(RowMat(carry * nxt.matrix(r, 4 * r2)), {k, 2, 2, r2});
    }
}

MPO mpo_product(const MPO& a, const MPO& b, long max_bond, double cutoff,
                std::vector<double>* per_bond) {
    if (a.n != b.n) throw validation_error("mpo_product: site counts disagree");
    MPO out;
    out.n = a.n;
    out.site.resize(static_cast<std::size_t>(a.n));
    if (per_bond != nullptr) per_bond->assign(static_cast<std::size_t>(a.n - 1), 0.0);

    // carry(c, ar, br) over the two incoming operator bonds.
    DenseTensor carry({1, 1, 1});
    carry.flat(0) = cplx(1);
    for (long i = 0; i < a.n; ++i) {
        const auto& ta = a.site[static_cast<std::size_t>(i)];
        const auto& tb = b.site[static_cast<std::size_t>(i)];
        // T(al, po, ar, bl, pi, br) = sum_mid A(al,po,mid,ar) B(bl,mid,pi,br)
        const DenseTensor t = contract(ta, tb, {{2, 1}});
        // M(c, po, ar, pi, br) -> permute to (c, po, pi, ar, br)
        DenseTensor block = contract(carry, t, {{1, 0}, {2, 3}}).permuted({0, 1, 3, 2, 4});
        const long c = block.extent(0), ar = block.extent(3), br = block.extent(4);
        if (i == a.n - 1) {
            out.site[static_cast<std::size_t>(i)] = std::move(block).reshaped({c, 2, 2, 1});
            break;
        }
        const auto f = svd(block.matrix(c * 4, ar * br));
        double total_sq = 0;
        for (long j = 0; j < f.s.size(); ++j) total_sq += f.s[j] * f.s[j];
        const auto dec = truncate_spectrum(f.s, max_bond, cutoff);
        if (per_bond != nullptr && total_sq > 0)
            (*per_bond)[static_cast<std::size_t>(i)] += dec.discarded / total_sq;
        const long k = dec.keep;
        out.site[static_cast<std::size_t>(i)] = tensor_from(f.u.leftCols(k), {c, 2, 2, k});
        carry = tensor_from(RowMat(f.s.head(k).asDiagonal() * f.vt.topRows(k)), {k, ar, br});
    }
    compress_mpo(out, max_bond, cutoff, per_bond);
    return out;
}

MPO mpo_square(const MPO& m, long max_bond, double cutoff, std::vector<double>* per_bond) {
    MPO sq = mpo_product(m, m, max_bond, cutoff, per_bond);
    sq.hermitian = m.hermitian;
    if (!std::isnan(m.term_norm_bound)) sq.term_norm_bound = m.term_norm_bound * m.term_norm_bound;
    return sq;
}

bool hermitian_on_random_states(const MPO& m, long trials, std::uint64_t seed, double tol) {
    Xoshiro256pp rng(seed);
    for (long t = 0; t < trials; ++t) {
        MPS phi = random_mps(m.n, 4, rng);
        MPS psi = random_mps(m.n, 4, rng);
        const cplx ab = matrix_element(phi, m, psi);
        const cplx ba = matrix_element(psi, m, phi);
        const double scale = std::max({1.0, std::abs(ab), std::abs(ba)});
        if (std::abs(ab - std::conj(ba)) > tol * scale) return false;
    }
    return true;
}

}  // namespace fsqd

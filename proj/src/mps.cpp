#include "fsqd/mps.hpp"

#include <algorithm>
#include <cmath>

namespace fsqd {

namespace {

DenseTensor tensor_from(const RowMat& m, std::vector<long> shape) {
    DenseTensor t(std::move(shape));
    if (t.size() != m.size()) throw validation_error("tensor_from size mismatch");
    t.matrix(m.rows(), m.cols()) = m;
    return t;
}

// QR with orthonormal columns: m = q * r, q (rows x k), r (k x cols).
void thin_qr(const RowMat& m, RowMat& q, RowMat& r) {
    const long k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<RowMat> qr(m);
    q = qr.householderQ() * RowMat::Identity(m.rows(), k);
    r = RowMat(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>());
}

// Left-orthonormalize site i, pushing the remainder into site i+1.
void left_step(MPS& s, long i) {
    auto& t = s.site[static_cast<std::size_t>(i)];
    const long l = t.extent(0), r = t.extent(2);
    RowMat q, rem;
    thin_qr(t.matrix(l * 2, r), q, rem);
    const long k = q.cols();
    t = tensor_from(q, {l, 2, k});
    auto& nxt = s.site[static_cast<std::size_t>(i + 1)];
    const long r2 = nxt.extent(2);
    nxt = tensor_from(RowMat(rem * nxt.matrix(r, 2 * r2)), {k, 2, r2});
}

// Right-orthonormalize site i, pushing the remainder into site i-1.
void right_step(MPS& s, long i) {
    auto& t = s.site[static_cast<std::size_t>(i)];
    const long l = t.extent(0), r = t.extent(2);
    RowMat q, rem;
    thin_qr(RowMat(t.matrix(l, 2 * r).adjoint()), q, rem);
    const long k = q.cols();
    t = tensor_from(RowMat(q.adjoint()), {k, 2, r});
    auto& prv = s.site[static_cast<std::size_t>(i - 1)];
    const long l0 = prv.extent(0);
    prv = tensor_from(RowMat(prv.matrix(l0 * 2, l) * rem.adjoint()), {l0, 2, k});
}

}  // namespace

long MPS::max_bond_dim() const {
    long m = 1;
    for (const auto& t : site) m = std::max(m, t.extent(2));
    return m;
}

StridedConstMap phys_slice(const DenseTensor& t, long s) {
    const long l = t.extent(0), r = t.extent(2);
    return StridedConstMap(t.data() + s * r, l, r, Eigen::OuterStride<>(2 * r));
}

StridedMap phys_slice(DenseTensor& t, long s) {
    const long l = t.extent(0), r = t.extent(2);
    return StridedMap(t.data() + s * r, l, r, Eigen::OuterStride<>(2 * r));
}

bool is_left_isometric(const DenseTensor& t, double tol) {
    const long l = t.extent(0), r = t.extent(2);
    const auto m = t.matrix(l * 2, r);
    return (m.adjoint() * m - RowMat::Identity(r, r)).norm() <= tol;
}

bool is_right_isometric(const DenseTensor& t, double tol) {
    const long l = t.extent(0), r = t.extent(2);
    const auto m = t.matrix(l, 2 * r);
    return (m * m.adjoint() - RowMat::Identity(l, l)).norm() <= tol;
}

void validate_mps(const MPS& s, double iso_tol) {
    if (s.n < 1) throw validation_error("MPS needs at least one site");
    if (static_cast<long>(s.site.size()) != s.n) throw validation_error("MPS site count mismatch");
    for (long i = 0; i < s.n; ++i) {
        const auto& t = s.site[static_cast<std::size_t>(i)];
        if (t.rank() != 3 || t.extent(1) != 2)
            throw validation_error("MPS site tensors must be (left, 2, right)");
        if (i == 0 && t.extent(0) != 1) throw validation_error("left boundary bond must be 1");
        if (i == s.n - 1 && t.extent(2) != 1) throw validation_error("right boundary bond must be 1");
        if (i + 1 < s.n && t.extent(2) != s.site[static_cast<std::size_t>(i + 1)].extent(0))
            throw validation_error("MPS bond extents are inconsistent");
    }
    if (s.ortho_center >= 0) {
        if (s.ortho_center >= s.n) throw validation_error("ortho_center out of range");
        for (long i = 0; i < s.ortho_center; ++i)
            if (!is_left_isometric(s.site[static_cast<std::size_t>(i)], iso_tol))
                throw validation_error("site left of center is not left-isometric");
        for (long i = s.ortho_center + 1; i < s.n; ++i)
            if (!is_right_isometric(s.site[static_cast<std::size_t>(i)], iso_tol))
                throw validation_error("site right of center is not right-isometric");
    }
}

MPS product_state(const Bitstring& bits) {
    const long n = static_cast<long>(bits.size());
    validate_bitstring(bits, n);
    std::vector<std::array<cplx, 2>> local(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        local[static_cast<std::size_t>(i)] = {cplx(0), cplx(0)};
        local[static_cast<std::size_t>(i)][bits[static_cast<std::size_t>(i)] == '1' ? 1 : 0] = cplx(1);
    }
    return product_state(local);
}

MPS product_state(const std::vector<std::array<cplx, 2>>& local) {
    MPS s;
    s.n = static_cast<long>(local.size());
    if (s.n < 1) throw validation_error("product_state needs at least one site");
    for (const auto& amp : local) {
        DenseTensor t({1, 2, 1});
        t.flat(0) = amp[0];
        t.flat(1) = amp[1];
        s.site.push_back(std::move(t));
    }
    s.ortho_center = 0;
    s.max_bond = 1;
    return s;
}

MPS random_mps(long n, long bond_dim, Xoshiro256pp& rng) {
    if (n < 1 || bond_dim < 1) throw validation_error("random_mps needs n >= 1, bond >= 1");
    MPS s;
    s.n = n;
    s.max_bond = bond_dim;
    long left = 1;
    for (long i = 0; i < n; ++i) {
        // Bond profile capped by the exact Schmidt-rank bound 2^min(i+1, n-1-i).
        const double cap_exp = static_cast<double>(std::min(i + 1, n - 1 - i));
        long right = bond_dim;
        if (cap_exp < 40 && std::pow(2.0, cap_exp) < static_cast<double>(bond_dim))
            right = static_cast<long>(std::pow(2.0, cap_exp));
        if (i == n - 1) right = 1;
        s.site.push_back(random_tensor({left, 2, right}, rng));
        left = right;
    }
    normalize(s);
    return s;
}

MPS ghz_state(long n) {
    if (n < 2) throw validation_error("ghz_state needs n >= 2");
    MPS s;
    s.n = n;
    s.max_bond = 2;
    s.site.resize(static_cast<std::size_t>(n));
    const double c = 1.0 / std::sqrt(2.0);
    for (long i = 0; i < n; ++i) {
        const long l = (i == 0) ? 1 : 2, r = (i == n - 1) ? 1 : 2;
        DenseTensor t({l, 2, r});
        if (i == 0) {
            t.at({0, 0, 0}) = c;
            t.at({0, 1, 1}) = c;
        } else if (i == n - 1) {
            t.at({0, 0, 0}) = 1;
            t.at({1, 1, 0}) = 1;
        } else {
            t.at({0, 0, 0}) = 1;
            t.at({1, 1, 1}) = 1;
        }
        s.site[static_cast<std::size_t>(i)] = std::move(t);
    }
    return s;
}

cplx overlap(const MPS& a, const MPS& b) {
    if (a.n != b.n) throw validation_error("overlap of states with different site counts");
    RowMat env = RowMat::Ones(1, 1);
    for (long i = 0; i < a.n; ++i) {
        const auto& ta = a.site[static_cast<std::size_t>(i)];
        const auto& tb = b.site[static_cast<std::size_t>(i)];
        RowMat next = RowMat::Zero(ta.extent(2), tb.extent(2));
        for (long s = 0; s < 2; ++s)
            next.noalias() += phys_slice(ta, s).adjoint() * env * phys_slice(tb, s);
        env = std::move(next);
    }
    return env(0, 0);
}

double norm(const MPS& s) {
    if (s.ortho_center >= 0)
        return s.site[static_cast<std::size_t>(s.ortho_center)].norm();
    return std::sqrt(std::abs(overlap(s, s).real()));
}

void scale(MPS& s, cplx factor) {
    // Scaling any single tensor scales the state; prefer the center so
    // isometry bookkeeping stays intact.
    const long i = (s.ortho_center >= 0) ? s.ortho_center : 0;
    s.site[static_cast<std::size_t>(i)] *= factor;
}

void normalize(MPS& s) {
    if (s.ortho_center < 0) canonicalize(s, 0);
    const double nrm = norm(s);
    if (!(nrm > 0)) throw validation_error("cannot normalize a zero state");
    scale(s, cplx(1.0 / nrm));
}

cplx amplitude(const MPS& s, const Bitstring& bits) {
    validate_bitstring(bits, s.n);
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (long i = 0; i < s.n; ++i) {
        const long b = bits[static_cast<std::size_t>(i)] == '1' ? 1 : 0;
        v = v * phys_slice(s.site[static_cast<std::size_t>(i)], b);
    }
    return v(0);
}

void canonicalize(MPS& s, long center) {
    if (center < 0 || center >= s.n) throw validation_error("ortho center out of range");
    if (s.ortho_center < 0) {
        for (long i = 0; i < center; ++i) left_step(s, i);
        for (long i = s.n - 1; i > center; --i) right_step(s, i);
    } else {
        while (s.ortho_center < center) left_step(s, s.ortho_center++);
        while (s.ortho_center > center) right_step(s, s.ortho_center--);
    }
    s.ortho_center = center;
}

Compressed compress(const MPS& s, long max_bond, double cutoff) {
    Compressed out;
    out.state = s;
    MPS& t = out.state;
    canonicalize(t, 0);
    for (long i = 0; i + 1 < t.n; ++i) {
        auto& ti = t.site[static_cast<std::size_t>(i)];
        const long l = ti.extent(0), r = ti.extent(2);
        const auto f = svd(ti.matrix(l * 2, r));
        double total_sq = 0;
        for (long j = 0; j < f.s.size(); ++j) total_sq += f.s[j] * f.s[j];
        const auto dec = truncate_spectrum(f.s, max_bond, cutoff);
        if (total_sq > 0) out.discarded_weight += dec.discarded / total_sq;
        const long k = dec.keep;
        ti = tensor_from(f.u.leftCols(k), {l, 2, k});
        const RowMat carry = f.s.head(k).asDiagonal() * f.vt.topRows(k);
        auto& nxt = t.site[static_cast<std::size_t>(i + 1)];
        const long r2 = nxt.extent(2);
        nxt = tensor_from(RowMat(carry * nxt.matrix(r, 2 * r2)), {k, 2, r2});
    }
    t.ortho_center = t.n - 1;
    if (max_bond > 0) t.max_bond = max_bond;
    return out;
}

MPS mps_add(const MPS& a, const MPS& b, cplx ca, cplx cb) {
    if (a.n != b.n) throw validation_error("mps_add requires equal site counts");
    MPS out;
    out.n = a.n;
    out.max_bond = std::max(a.max_bond, b.max_bond);
    if (a.n == 1) {
        DenseTensor t({1, 2, 1});
        for (long p = 0; p < 2; ++p)
            t.at({0, p, 0}) = ca * a.site[0].at({0, p, 0}) + cb * b.site[0].at({0, p, 0});
        out.site.push_back(std::move(t));
        return out;
    }
    for (long i = 0; i < a.n; ++i) {
        const auto& ta = a.site[static_cast<std::size_t>(i)];
        const auto& tb = b.site[static_cast<std::size_t>(i)];
        const long la = ta.extent(0), ra = ta.extent(2);
        const long lb = tb.extent(0), rb = tb.extent(2);
        const bool first = (i == 0), last = (i == a.n - 1);
        const long l = first ? 1 : la + lb;
        const long r = last ? 1 : ra + rb;
        DenseTensor t({l, 2, r});
        const cplx fa = first ? ca : cplx(1);
        const cplx fb = first ? cb : cplx(1);
        for (long p = 0; p < 2; ++p) {
            auto dst = phys_slice(t, p);
            const auto sa = phys_slice(ta, p);
            const auto sb = phys_slice(tb, p);
            dst.block(0, 0, la, ra) = fa * sa;
            dst.block(first ? 0 : la, last ? 0 : ra, lb, rb) = fb * sb;
        }
        out.site.push_back(std::move(t));
    }
    return out;
}

namespace {

void sample_into(const MPS& canonical, long shots, Xoshiro256pp& rng, SampleCounts& out) {
    const long n = canonical.n;
    Bitstring x(static_cast<std::size_t>(n), '0');
    for (long shot = 0; shot < shots; ++shot) {
        Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
        for (long i = 0; i < n; ++i) {
            const auto& t = canonical.site[static_cast<std::size_t>(i)];
            const Eigen::RowVectorXcd t0 = v * phys_slice(t, 0);
            const Eigen::RowVectorXcd t1 = v * phys_slice(t, 1);
            const double p0 = t0.squaredNorm(), p1 = t1.squaredNorm();
            const double u = rng.uniform() * (p0 + p1);
            if (u < p0) {
                x[static_cast<std::size_t>(i)] = '0';
                v = t0 / std::sqrt(p0);
            } else {
                x[static_cast<std::size_t>(i)] = '1';
                v = t1 / std::sqrt(p1);
            }
        }
        ++out[x];
    }
}

MPS sampling_form(const MPS& s) {
    MPS t = s;
    canonicalize(t, 0);
    const double nrm = norm(t);
    if (std::abs(nrm - 1.0) > 1e-6)
        throw validation_error("sample requires a normalized state (|norm-1| <= 1e-6)");
    return t;
}

}  // namespace

SampleCounts sample(const MPS& s, long n_shots, std::uint64_t seed) {
    if (n_shots < 0) throw validation_error("negative shot count");
    const MPS t = sampling_form(s);
    SampleCounts out;
    Xoshiro256pp rng(seed);
    sample_into(t, n_shots, rng, out);
    return out;
}

SampleCounts sample_batches(const MPS& s, const std::vector<long>& shots, std::uint64_t seed) {
    const MPS t = sampling_form(s);
    SampleCounts out;
    for (std::size_t k = 0; k < shots.size(); ++k) {
        if (shots[k] < 0) throw validation_error("negative shot count");
        Xoshiro256pp rng(derive_seed(seed, k));
        sample_into(t, shots[k], rng, out);
    }
    return out;
}

Projected project_out_zero(const MPS& s, long max_bond) {
    MPS t = s;
    normalize(t);
    const cplx c0 = amplitude(t, zero_bitstring(t.n));
    const double w = std::norm(c0);
    if (w >= 1.0 - 1e-12)
        throw validation_error("project_out_zero: state has no weight outside |00...0>");
    Projected out;
    out.removed_weight = w;
    if (w == 0.0) {
        out.state = std::move(t);
        return out;
    }
    // Exact subtraction (cutoff 0): only the explicit cap may truncate, so the
    // orthogonality <0...0|out> = 0 survives to fp accuracy.
    MPS sum = mps_add(t, product_state(zero_bitstring(t.n)), cplx(1), -c0);
    out.state = compress(sum, max_bond, 0.0).state;
    normalize(out.state);
    const double leak = std::abs(amplitude(out.state, zero_bitstring(t.n)));
    if (leak > 1e-8)
        throw numerical_error("project_out_zero left residual zero-state amplitude " +
                              std::to_string(leak));
    return out;
}

void apply_two_site(MPS& s, const RowMat& gate, long site, long max_bond, double cutoff,
                    double* discarded) {
    if (site < 0 || site + 1 >= s.n) throw validation_error("two-site gate position out of range");
    if (gate.rows() != 4 || gate.cols() != 4) throw validation_error("two-site gate must be 4x4");
    if (s.ortho_center < 0 || s.ortho_center < site || s.ortho_center > site + 1)
        canonicalize(s, site);

    auto& t1 = s.site[static_cast<std::size_t>(site)];
    auto& t2 = s.site[static_cast<std::size_t>(site + 1)];
    const long l = t1.extent(0), m = t1.extent(2), r = t2.extent(2);

    // Theta(l, s1, s2, r) as (l*2 x 2*r).
    RowMat theta = t1.matrix(l * 2, m) * t2.matrix(m, 2 * r);
    // Regroup to (s1 s2) x (l r), apply the gate, and regroup back.
    RowMat grouped(4, l * r);
    for (long s1 = 0; s1 < 2; ++s1)
        for (long s2 = 0; s2 < 2; ++s2)
            for (long li = 0; li < l; ++li)
                grouped.block(s1 * 2 + s2, li * r, 1, r) =
                    theta.block(li * 2 + s1, s2 * r, 1, r);
    grouped = gate * grouped;
    for (long s1 = 0; s1 < 2; ++s1)
        for (long s2 = 0; s2 < 2; ++s2)
            for (long li = 0; li < l; ++li)
                theta.block(li * 2 + s1, s2 * r, 1, r) =
                    grouped.block(s1 * 2 + s2, li * r, 1, r);

    const auto f = svd(theta);
    double total_sq = 0;
    for (long j = 0; j < f.s.size(); ++j) total_sq += f.s[j] * f.s[j];
    const auto dec = truncate_spectrum(f.s, max_bond, cutoff);
    if (discarded != nullptr && total_sq > 0) *discarded += dec.discarded / total_sq;
    const long k = dec.keep;
    t1 = tensor_from(f.u.leftCols(k), {l, 2, k});
    t2 = tensor_from(RowMat(f.s.head(k).asDiagonal() * f.vt.topRows(k)), {k, 2, r});
    s.ortho_center = site + 1;
}

}  // namespace fsqd

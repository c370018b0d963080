#include "fsqd/dmrg.hpp"

#include <algorithm>
#include <cmath>

#include "fsqd/errors.hpp"
#include "fsqd/lanczos.hpp"
#include "fsqd/rng.hpp"

namespace fsqd {

namespace {

// Hamiltonian environments around a two-site window, stored as rank-3 tensors
// (bra bond, operator bond, ket bond).

DenseTensor boundary_env() {
    DenseTensor e({1, 1, 1});
    e.flat(0) = 1.0;
    return e;
}

DenseTensor grow_left(const DenseTensor& l, const DenseTensor& w, const DenseTensor& a) {
    DenseTensor t1 = contract(l, a, {{2, 0}});                  // (a, w, s, b')
    DenseTensor t2 = contract(t1, w, {{1, 0}, {2, 2}});         // (a, b', po, w')
    DenseTensor t3 = contract(a.conjugated(), t2, {{0, 0}, {1, 2}});  // (a', b', w')
    return t3.permuted({0, 2, 1});                              // (a', w', b')
}

DenseTensor grow_right(const DenseTensor& r, const DenseTensor& w, const DenseTensor& a) {
    DenseTensor t1 = contract(a, r, {{2, 2}});                  // (b', s, a, w)
    DenseTensor t2 = contract(w, t1, {{2, 1}, {3, 3}});         // (w', po, b', a)
    DenseTensor t3 = contract(a.conjugated(), t2, {{1, 1}, {2, 3}});  // (a', w', b')
    return t3;
}

// theta and the result are (left bond, s_i, s_{i+1}, right bond).
DenseTensor apply_effective(const DenseTensor& l, const DenseTensor& wi, const DenseTensor& wj,
                            const DenseTensor& r, const DenseTensor& theta) {
    DenseTensor t1 = contract(l, theta, {{2, 0}});              // (al, wl, s1, s2, br)
    DenseTensor t2 = contract(t1, wi, {{1, 0}, {2, 2}});        // (al, s2, br, po1, w1)
    DenseTensor t3 = contract(t2, wj, {{4, 0}, {1, 2}});        // (al, br, po1, po2, w2)
    DenseTensor t4 = contract(t3, r, {{4, 1}, {1, 2}});         // (al, po1, po2, ar)
    return t4;
}

struct LocalSolve {
    DenseTensor theta;
    double energy;
};

LocalSolve solve_window(const DenseTensor& l, const DenseTensor& wi, const DenseTensor& wj,
                        const DenseTensor& r, const DenseTensor& theta0, long krylov_dim) {
    const std::vector<long> shape = theta0.shape();
    const long dim = theta0.size();
    auto apply = [&](const Eigen::VectorXcd& v) {
        DenseTensor t(shape);
        std::copy(v.data(), v.data() + dim, t.data());
        DenseTensor out = apply_effective(l, wi, wj, r, t);
        return Eigen::Map<const Eigen::VectorXcd>(out.data(), dim).eval();
    };
    Eigen::Map<const Eigen::VectorXcd> v0(theta0.data(), dim);
    LanczosOptions opt;
    opt.krylov_dim = krylov_dim;
    opt.max_restarts = 3;
    opt.tol = 1e-10;
    LanczosResult res = lanczos_lowest(apply, v0.eval(), opt);
    LocalSolve out{DenseTensor(shape), res.value};
    std::copy(res.vector.data(), res.vector.data() + dim, out.theta.data());
    return out;
}

}  // namespace

DmrgResult ground_state(const MPO& h, const DmrgConfig& cfg, std::uint64_t seed) {
    validate_mpo(h);
    if (!h.hermitian) throw validation_error("ground_state: operator must be flagged Hermitian");
    if (h.n < 2) throw validation_error("ground_state: need n >= 2");
    if (cfg.max_bond < 1) throw validation_error("ground_state: need max_bond >= 1");
    if (cfg.n_sweeps < 1) throw validation_error("ground_state: need n_sweeps >= 1");
    if (cfg.lanczos_dim < 2) throw validation_error("ground_state: need lanczos_dim >= 2");

    const long n = h.n;
    Xoshiro256pp rng(derive_seed(seed, 0));
    MPS psi = random_mps(n, cfg.max_bond, rng);
    canonicalize(psi, 0);

    // env_left[i] covers sites < i; env_right[i] covers sites >= i.
    std::vector<DenseTensor> env_left(static_cast<size_t>(n) + 1);
    std::vector<DenseTensor> env_right(static_cast<size_t>(n) + 1);
    env_left[0] = boundary_env();
    env_right[static_cast<size_t>(n)] = boundary_env();
    for (long i = n - 1; i >= 2; --i) {
        env_right[static_cast<size_t>(i)] =
            grow_right(env_right[static_cast<size_t>(i + 1)], h.site[i], psi.site[i]);
    }

    Xoshiro256pp noise_rng(derive_seed(seed, 1));
    DmrgResult result;
    double prev_energy = 0.0;
    bool have_prev = false;

    for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
        const bool noisy = cfg.noise > 0.0 && sweep + 2 < cfg.n_sweeps;
        double sweep_energy = 0.0;
        double max_discarded = 0.0;

        auto optimize_window = [&](long i, bool moving_right) {
            DenseTensor theta = contract(psi.site[i], psi.site[i + 1], {{2, 0}});
            LocalSolve sol = solve_window(env_left[static_cast<size_t>(i)], h.site[i], h.site[i + 1],
                                          env_right[static_cast<size_t>(i + 2)], theta, cfg.lanczos_dim);
            sweep_energy = sol.energy;
            if (noisy) {
                const double scale = cfg.noise * sol.theta.norm();
                for (long k = 0; k < sol.theta.size(); ++k) {
                    sol.theta.flat(k) += scale * cplx(noise_rng.normal(), noise_rng.normal());
                }
            }
            const long dl = sol.theta.extent(0);
            const long dr = sol.theta.extent(3);
            SvdResult sv = svd(sol.theta.matrix(dl * 2, 2 * dr));
            TruncationDecision dec = truncate_spectrum(sv.s, cfg.max_bond, cfg.cutoff);
            const long k = dec.keep;
            const double total = sv.s.squaredNorm();
            if (total > 0.0) max_discarded = std::max(max_discarded, dec.discarded / total);
            Eigen::VectorXd kept = sv.s.head(k);
            kept /= kept.norm();  // keep the state normalized after truncation
            DenseTensor left({dl, 2, k});
            DenseTensor right({k, 2, dr});
            if (moving_right) {
                left.matrix(dl * 2, k) = sv.u.leftCols(k);
                right.matrix(k, 2 * dr) = kept.asDiagonal() * sv.vt.topRows(k);
                psi.ortho_center = i + 1;
            } else {
                left.matrix(dl * 2, k) = sv.u.leftCols(k) * kept.asDiagonal();
                right.matrix(k, 2 * dr) = sv.vt.topRows(k);
                psi.ortho_center = i;
            }
            psi.site[i] = std::move(left);
            psi.site[i + 1] = std::move(right);
        };

        for (long i = 0; i <= n - 2; ++i) {
            optimize_window(i, true);
            if (i < n - 2) {
                env_left[static_cast<size_t>(i + 1)] =
                    grow_left(env_left[static_cast<size_t>(i)], h.site[i], psi.site[i]);
            }
        }
        for (long i = n - 2; i >= 0; --i) {
            optimize_window(i, false);
            env_right[static_cast<size_t>(i + 1)] =
                grow_right(env_right[static_cast<size_t>(i + 2)], h.site[i + 1], psi.site[i + 1]);
        }

        result.sweep_log.push_back({sweep + 1, sweep_energy, max_discarded});
        if (have_prev && std::abs(sweep_energy - prev_energy) <
                             cfg.convergence_tol * static_cast<double>(n)) {
            result.converged = true;
            prev_energy = sweep_energy;
            break;
        }
        prev_energy = sweep_energy;
        have_prev = true;
    }

    normalize(psi);
    result.state = std::move(psi);
    result.energy = expectation(result.state, h);
    return result;
}

}  // namespace fsqd

#include "fsqd/sqd.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "fsqd/errors.hpp"
#include "fsqd/exact.hpp"
#include "fsqd/lanczos.hpp"
#include "fsqd/rng.hpp"

namespace fsqd {

namespace {

void check_basis(const std::vector<Bitstring>& basis, long n) {
    if (basis.empty()) throw validation_error("subspace basis is empty");
    std::set<Bitstring> seen;
    for (const auto& x : basis) {
        validate_bitstring(x, n);
        if (!seen.insert(x).second) throw validation_error("subspace basis contains duplicates: " + x);
    }
}

long lcp_length(const Bitstring& a, const Bitstring& b) {
    const long n = static_cast<long>(std::min(a.size(), b.size()));
    long d = 0;
    while (d < n && a[static_cast<size_t>(d)] == b[static_cast<size_t>(d)]) ++d;
    return d;
}

double clamp_variance(double var, double scale) {
    if (var < -1e-6 * std::max(1.0, scale)) {
        throw numerical_error("variance came out negative beyond roundoff: " + std::to_string(var));
    }
    return std::max(var, 0.0);
}

}  // namespace

SampledSubspace select_subspace(const SampleCounts& counts, long n, long max_states,
                                bool force_include_zero) {
    if (n < 1) throw validation_error("select_subspace: need n >= 1");
    if (max_states < 1) throw validation_error("select_subspace: need max_states >= 1");

    SampledSubspace out;
    out.n = n;
    std::vector<std::pair<Bitstring, long>> entries;
    entries.reserve(counts.size());
    for (const auto& [x, c] : counts) {
        validate_bitstring(x, n);
        if (c < 0) throw validation_error("select_subspace: negative count for " + x);
        out.total_shots += c;
        entries.emplace_back(x, c);
    }
    // Map iteration is already ordered by bitstring; a stable sort on count
    // keeps that order within ties.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (static_cast<long>(entries.size()) > max_states) entries.resize(static_cast<size_t>(max_states));

    if (force_include_zero) {
        const Bitstring zeros = zero_bitstring(n);
        const bool kept = std::any_of(entries.begin(), entries.end(),
                                      [&](const auto& e) { return e.first == zeros; });
        if (!kept) {
            auto it = counts.find(zeros);
            const long c = it == counts.end() ? 0 : it->second;
            if (static_cast<long>(entries.size()) >= max_states && !entries.empty()) entries.pop_back();
            entries.insert(entries.begin(), {zeros, c});
            out.zero_forced = true;
        }
    }
    if (entries.empty()) throw validation_error("select_subspace: no samples and nothing forced");

    out.basis.reserve(entries.size());
    out.counts.reserve(entries.size());
    for (auto& [x, c] : entries) {
        out.basis.push_back(std::move(x));
        out.counts.push_back(c);
    }
    return out;
}

RowMat truncated_hamiltonian(const MPO& h, const std::vector<Bitstring>& basis, int n_threads) {
    validate_mpo(h);
    check_basis(basis, h.n);
    const long n = h.n;
    const long size = static_cast<long>(basis.size());

    // Lexicographic visiting order maximizes shared prefixes between
    // consecutive rows of a column.
    std::vector<long> order(static_cast<size_t>(size));
    for (long i = 0; i < size; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](long a, long b) { return basis[static_cast<size_t>(a)] < basis[static_cast<size_t>(b)]; });

    RowMat a(size, size);
    const int threads = std::max(1, std::min<int>(n_threads, static_cast<int>(size)));

    auto column_worker = [&](int tid) {
        // partial[d] holds the product of the first d site slices of the
        // current row string against this column's string.
        std::vector<Eigen::RowVectorXcd> partial(static_cast<size_t>(n) + 1);
        partial[0] = Eigen::RowVectorXcd::Ones(1);
        for (long j = tid; j < size; j += threads) {
            const Bitstring& y = basis[static_cast<size_t>(j)];
            const Bitstring* prev = nullptr;
            for (long pos = 0; pos < size; ++pos) {
                const long i = order[static_cast<size_t>(pos)];
                if (i > j) continue;
                const Bitstring& x = basis[static_cast<size_t>(i)];
                long d = prev ? lcp_length(*prev, x) : 0;
                for (; d < n; ++d) {
                    partial[static_cast<size_t>(d + 1)].noalias() =
                        partial[static_cast<size_t>(d)] *
                        mpo_slice(h.site[static_cast<size_t>(d)], x[static_cast<size_t>(d)] - '0',
                                  y[static_cast<size_t>(d)] - '0');
                }
                const cplx val = partial[static_cast<size_t>(n)](0);
                if (i == j) {
                    a(j, j) = val.real();
                } else {
                    a(i, j) = val;
                    a(j, i) = std::conj(val);
                }
                prev = &x;
            }
        }
    };

    if (threads == 1) {
        column_worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(column_worker, t);
        for (auto& th : pool) th.join();
    }
    return a;
}

SubspaceGround subspace_ground(const RowMat& h, long dense_cap, double tol) {
    const long size = h.rows();
    if (size < 1 || h.cols() != size) throw validation_error("subspace_ground: matrix must be square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).norm() > 1e-8 * scale * std::sqrt(static_cast<double>(size))) {
        throw validation_error("subspace_ground: matrix is not Hermitian");
    }

    SubspaceGround out;
    if (size <= dense_cap) {
        EighResult e = eigh(h);
        out.energy = e.values(0);
        out.vector = e.vectors.col(0);
        out.used_dense = true;
    } else {
        Xoshiro256pp rng(0xfeedc0de12345678ULL);
        Eigen::VectorXcd v0(size);
        for (long k = 0; k < size; ++k) v0(k) = cplx(rng.normal(), rng.normal());
        v0 *= 1e-3 / v0.norm();
        v0(0) += 1.0;  // bias toward the most-sampled configuration
        LanczosOptions opt;
        opt.krylov_dim = std::min<long>(size, 80);
        opt.max_restarts = 300;
        opt.tol = tol;
        auto apply = [&](const Eigen::VectorXcd& v) { return (h * v).eval(); };
        LanczosResult res = lanczos_lowest(apply, v0, opt);
        if (!res.converged) throw numerical_error("subspace_ground: Lanczos did not converge");
        out.energy = res.value;
        out.vector = std::move(res.vector);
        out.used_dense = false;
    }
    out.vector /= out.vector.norm();
    out.residual = (h * out.vector - out.energy * out.vector).norm();
    return out;
}

double energy_variance(const MPO& h, const MPO& h_squared, const std::vector<Bitstring>& basis,
                       const Eigen::VectorXcd& ground, int n_threads) {
    if (h.n != h_squared.n) throw validation_error("energy_variance: operator size mismatch");
    if (ground.size() != static_cast<long>(basis.size())) {
        throw validation_error("energy_variance: vector length does not match basis");
    }
    Eigen::VectorXcd v = ground / ground.norm();
    const RowMat a = truncated_hamiltonian(h, basis, n_threads);
    const RowMat b = truncated_hamiltonian(h_squared, basis, n_threads);
    const double m1 = std::real(v.dot(a * v));
    const double m2 = std::real(v.dot(b * v));
    return clamp_variance(m2 - m1 * m1, std::abs(m2));
}

double energy_variance_dense(const IsingParams& p, long n, const BrickwallCircuit* filter,
                             const std::vector<Bitstring>& basis, const Eigen::VectorXcd& ground) {
    check_basis(basis, n);
    if (n > kDenseStateCap) throw validation_error("energy_variance_dense: n too large");
    if (ground.size() != static_cast<long>(basis.size())) {
        throw validation_error("energy_variance_dense: vector length does not match basis");
    }
    DenseState st;
    st.n = n;
    st.amp = Eigen::VectorXcd::Zero(1L << n);
    for (size_t i = 0; i < basis.size(); ++i) {
        st.amp(static_cast<long>(bitstring_to_index(basis[i]))) = ground(static_cast<long>(i));
    }
    st.amp /= st.amp.norm();
    if (filter) st = dense_apply_circuit(*filter, st, false);
    const Eigen::VectorXcd w = apply_dense_hamiltonian(p, n, st.amp);
    const double m1 = std::real(st.amp.dot(w));
    const double m2 = w.squaredNorm();
    return clamp_variance(m2 - m1 * m1, std::abs(m2));
}

std::vector<EnergyPoint> run_protocol(const ProtocolContext& ctx, const ProtocolSpec& spec,
                                      std::uint64_t seed, SampleCounts* final_counts) {
    if (!ctx.hamiltonian || !ctx.sampler) throw validation_error("run_protocol: missing operator or sampler");
    const MPO& h = *ctx.hamiltonian;
    if (h.n != ctx.sampler->n) throw validation_error("run_protocol: operator/sampler size mismatch");
    if (spec.shot_schedule.empty()) throw validation_error("run_protocol: empty shot schedule");
    long prev = 0;
    for (long s : spec.shot_schedule) {
        if (s <= prev) throw validation_error("run_protocol: shot schedule must be strictly increasing");
        prev = s;
    }
    const long n = h.n;
    MPS sampler = *ctx.sampler;
    normalize(sampler);
    canonicalize(sampler, 0);

    MPO h_squared;
    if (spec.variance == VarianceMode::elements) {
        h_squared = mpo_square(h, spec.square_bond_cap);
    }
    if (spec.variance == VarianceMode::dense) {
        if (!ctx.params) throw validation_error("run_protocol: dense variance needs model parameters");
        if (n > kDenseStateCap) throw validation_error("run_protocol: dense variance needs n <= 24");
    }
    const Bitstring zeros = zero_bitstring(n);
    const double anchor = std::real(product_matrix_element(h, zeros, zeros));
    const bool force_zero = spec.force_include_zero && spec.kind != ProtocolKind::sqd;

    std::vector<EnergyPoint> points;
    points.reserve(spec.shot_schedule.size());
    SampleCounts counts;
    long drawn = 0;
    for (size_t k = 0; k < spec.shot_schedule.size(); ++k) {
        const long total = spec.shot_schedule[k];
        SampleCounts batch = sample(sampler, total - drawn, derive_seed(seed, k));
        counts = merge_counts(counts, batch);
        drawn = total;

        SampledSubspace sub = select_subspace(counts, n, spec.max_states, force_zero);
        RowMat hs = truncated_hamiltonian(h, sub.basis, spec.n_threads);
        SubspaceGround g = subspace_ground(hs, spec.dense_eig_cap, spec.eig_tol);

        EnergyPoint pt;
        pt.n_shots = total;
        pt.n_states = static_cast<long>(sub.basis.size());
        pt.energy = g.energy;
        pt.error = g.energy - ctx.e_ref;
        pt.anchor_energy = anchor;
        if (spec.variance == VarianceMode::elements) {
            pt.variance = energy_variance(h, h_squared, sub.basis, g.vector, spec.n_threads);
        } else if (spec.variance == VarianceMode::dense) {
            pt.variance = energy_variance_dense(*ctx.params, n, ctx.filter, sub.basis, g.vector);
        }
        points.push_back(std::move(pt));
    }
    if (final_counts) *final_counts = std::move(counts);
    return points;
}

DecayFit fit_decay_exponent(const std::vector<EnergyPoint>& points, long n, long min_shots) {
    if (n < 1) throw validation_error("fit_decay_exponent: need n >= 1");
    std::vector<double> xs, ys;
    for (const auto& p : points) {
        if (p.n_shots < min_shots || !(p.error > 0.0)) continue;
        xs.push_back(std::log(static_cast<double>(p.n_shots)));
        ys.push_back(std::log(p.error / static_cast<double>(n)));
    }
    const long k = static_cast<long>(xs.size());
    if (k < 3) throw validation_error("fit_decay_exponent: need at least 3 usable points");
    double xbar = 0.0, ybar = 0.0;
    for (long i = 0; i < k; ++i) {
        xbar += xs[static_cast<size_t>(i)];
        ybar += ys[static_cast<size_t>(i)];
    }
    xbar /= static_cast<double>(k);
    ybar /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (long i = 0; i < k; ++i) {
        const double dx = xs[static_cast<size_t>(i)] - xbar;
        sxx += dx * dx;
        sxy += dx * (ys[static_cast<size_t>(i)] - ybar);
    }
    if (sxx <= 0.0) throw validation_error("fit_decay_exponent: degenerate abscissae");
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (long i = 0; i < k; ++i) {
        const double r = ys[static_cast<size_t>(i)] - ybar - slope * (xs[static_cast<size_t>(i)] - xbar);
        rss += r * r;
    }
    DecayFit fit;
    fit.tau = -slope;
    fit.log_prefactor = ybar - slope * xbar;
    fit.points_used = k;
    fit.stderr_ = k > 2 ? std::sqrt(rss / static_cast<double>(k - 2) / sxx) : 0.0;
    return fit;
}

VarianceFit variance_extrapolate(const std::vector<std::pair<double, double>>& variance_error,
                                 int order) {
    if (order != 1 && order != 2) throw validation_error("variance_extrapolate: order must be 1 or 2");
    std::vector<std::pair<double, double>> pts;
    for (const auto& [v, e] : variance_error) {
        if (std::isfinite(v) && std::isfinite(e) && v >= 0.0) pts.emplace_back(v, e);
    }
    const long k = static_cast<long>(pts.size());
    if (k < order + 2) {
        throw validation_error("variance_extrapolate: need at least order + 2 usable points");
    }
    Eigen::MatrixXd x(k, order + 1);
    Eigen::VectorXd y(k);
    for (long i = 0; i < k; ++i) {
        double pw = 1.0;
        for (int p = 0; p <= order; ++p) {
            x(i, p) = pw;
            pw *= pts[static_cast<size_t>(i)].first;
        }
        y(i) = pts[static_cast<size_t>(i)].second;
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
    const double rss = (y - x * beta).squaredNorm();
    const double sigma2 = k > order + 1 ? rss / static_cast<double>(k - order - 1) : 0.0;
    const Eigen::MatrixXd xtx_inv =
        (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(order + 1, order + 1));

    VarianceFit fit;
    fit.intercept = beta(0);
    fit.stderr_ = std::sqrt(std::max(0.0, sigma2 * xtx_inv(0, 0)));
    fit.coeffs = beta;
    fit.order = order;
    fit.points_used = k;
    return fit;
}

TargetFraction target_fraction(const std::vector<Bitstring>& target_basis,
                               const std::vector<SampleCounts>& runs) {
    if (target_basis.empty()) throw validation_error("target_fraction: empty target basis");
    if (runs.empty()) throw validation_error("target_fraction: no runs");
    std::vector<double> fracs;
    fracs.reserve(runs.size());
    for (const auto& run : runs) {
        long hit = 0;
        for (const auto& x : target_basis) {
            if (run.count(x)) ++hit;
        }
        fracs.push_back(static_cast<double>(hit) / static_cast<double>(target_basis.size()));
    }
    TargetFraction out;
    for (double f : fracs) out.mean += f;
    out.mean /= static_cast<double>(fracs.size());
    if (fracs.size() > 1) {
        double ss = 0.0;
        for (double f : fracs) ss += (f - out.mean) * (f - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(fracs.size() - 1));
    }
    return out;
}

}  // namespace fsqd

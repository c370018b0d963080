#include "fsqd/sparsity.hpp"

#include <algorithm>
#include <cmath>

#include "fsqd/errors.hpp"
#include "fsqd/lanczos.hpp"

namespace fsqd {

namespace {

constexpr double kEulerGamma = 0.57721566490153286;

double pow2_states(long n) {
    if (n < 1) throw validation_error("weight distribution: need n >= 1");
    return std::ldexp(1.0, static_cast<int>(n));
}

WeightDistribution finish_distribution(std::vector<double> w, long n) {
    const double n_states = pow2_states(n);
    std::vector<double> kept;
    kept.reserve(w.size());
    double total = 0.0;
    for (double v : w) {
        if (v < 0.0) throw validation_error("weight distribution: negative weight");
        if (v > 0.0) {
            kept.push_back(v);
            total += v;
        }
    }
    if (kept.empty()) throw validation_error("weight distribution: all weights vanish");
    if (static_cast<double>(kept.size()) > n_states) {
        throw validation_error("weight distribution: more weights than basis states");
    }
    for (double& v : kept) v /= total;
    std::sort(kept.begin(), kept.end());
    WeightDistribution d;
    d.n = n;
    d.n_states = n_states;
    d.zero_states = n_states - static_cast<double>(kept.size());
    d.weights = std::move(kept);
    return d;
}

double rescaled_accuracy(double eps, double rho, bool real_amplitudes) {
    if (!(eps > 0.0)) throw validation_error("resource bound: need eps > 0");
    if (!(rho > 0.0)) throw validation_error("resource bound: need rho > 0");
    return eps / ((real_amplitudes ? 2.0 : 2.0 * std::sqrt(2.0)) * rho);
}

void check_eta(double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw validation_error("resource bound: need 0 < eta < 1");
}

}  // namespace

WeightDistribution weight_distribution_from_dense(const DenseState& psi) {
    const double nrm = psi.amp.norm();
    if (std::abs(nrm - 1.0) > 1e-6) {
        throw validation_error("weight_distribution_from_dense: state is not normalized");
    }
    std::vector<double> w(static_cast<size_t>(psi.amp.size()));
    for (long k = 0; k < psi.amp.size(); ++k) w[static_cast<size_t>(k)] = std::norm(psi.amp(k));
    return finish_distribution(std::move(w), psi.n);
}

WeightDistribution weight_distribution_from_counts(const SampleCounts& counts, long n) {
    std::vector<double> w;
    w.reserve(counts.size());
    double total = 0.0;
    for (const auto& [x, c] : counts) {
        validate_bitstring(x, n);
        if (c < 0) throw validation_error("weight_distribution_from_counts: negative count");
        total += static_cast<double>(c);
        w.push_back(static_cast<double>(c));
    }
    if (total <= 0.0) throw validation_error("weight_distribution_from_counts: no samples");
    return finish_distribution(std::move(w), n);
}

WeightDistribution weight_distribution(std::vector<double> weights, long n) {
    return finish_distribution(std::move(weights), n);
}

LorenzCurve lorenz(const WeightDistribution& d) {
    LorenzCurve c;
    c.n = d.n;
    c.n_states = d.n_states;
    c.w = d.weights;
    c.cum.resize(c.w.size());
    double run = 0.0;
    for (size_t j = 0; j < c.w.size(); ++j) {
        run += c.w[j];
        c.cum[j] = run;
    }
    return c;
}

double LorenzCurve::value(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw validation_error("lorenz value: x must lie in [0, 1]");
    const double zero_states = n_states - static_cast<double>(w.size());
    const double pos = x * n_states - zero_states;  // position inside the positive block
    if (pos <= 0.0) return 0.0;
    const auto k = static_cast<double>(w.size());
    if (pos >= k) return 1.0;
    const auto full = static_cast<size_t>(pos);
    const double base = full == 0 ? 0.0 : cum[full - 1];
    return base + (pos - static_cast<double>(full)) * w[full];
}

double LorenzCurve::inverse(double y) const {
    if (!(y > 0.0 && y <= 1.0)) throw validation_error("lorenz inverse: y must lie in (0, 1]");
    // Work in index space (states counted from the top) to stay accurate when
    // n_states dwarfs the number of carried weights.
    const auto k = static_cast<long>(w.size());
    long j = static_cast<long>(std::lower_bound(cum.begin(), cum.end(), y) - cum.begin());
    for (; j < k && !(cum[static_cast<size_t>(j)] > y); ++j) {
    }
    if (j >= k) return 1.0;
    const double base = j == 0 ? 0.0 : cum[static_cast<size_t>(j - 1)];
    const double t = (y - base) / w[static_cast<size_t>(j)];
    const double states_above = static_cast<double>(k - j) - t;
    return 1.0 - states_above / n_states;
}

double LorenzCurve::slope(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw validation_error("lorenz slope: x must lie in [0, 1]");
    const double zero_states = n_states - static_cast<double>(w.size());
    const double pos = x * n_states - zero_states;
    if (pos < 0.0) return 0.0;
    auto j = static_cast<size_t>(std::max(0.0, pos));
    if (j >= w.size()) j = w.size() - 1;  // left derivative at the right edge
    return w[j] * n_states;
}

double gini_complement(const WeightDistribution& d) {
    // 1 - G = (2/N) * sum_j w_j (N - I_j + 1/2) with ascending global rank
    // I_j; zero-weight states drop out, leaving ranks counted from the top.
    const auto k = static_cast<double>(d.weights.size());
    double acc = 0.0;
    for (size_t j = 0; j < d.weights.size(); ++j) {
        acc += d.weights[j] * (k - static_cast<double>(j + 1) + 0.5);
    }
    return 2.0 * acc / d.n_states;
}

double gini(const WeightDistribution& d) { return 1.0 - gini_complement(d); }

ResourceBound theorem_bounds(const LorenzCurve& curve, double eps, double rho, double eta,
                             bool real_amplitudes) {
    check_eta(eta);
    ResourceBound b;
    b.eps_tilde = rescaled_accuracy(eps, rho, real_amplitudes);
    const double y = b.eps_tilde * b.eps_tilde;
    const auto k = static_cast<long>(curve.w.size());
    if (b.eps_tilde >= 1.0 || !(y < curve.cum[static_cast<size_t>(k - 1)])) {
        // The accuracy budget already admits the trivial one-state subspace;
        // shots are only needed to observe the top state once.
        b.degenerate = true;
        b.n_r = 1.0;
        b.n_s = std::max(1.0, std::ceil(std::log(1.0 / eta) / curve.w[static_cast<size_t>(k - 1)]));
        return b;
    }
    long j = static_cast<long>(std::lower_bound(curve.cum.begin(), curve.cum.end(), y) -
                               curve.cum.begin());
    while (j < k && !(curve.cum[static_cast<size_t>(j)] > y)) ++j;
    const double base = j == 0 ? 0.0 : curve.cum[static_cast<size_t>(j - 1)];
    const double t = (y - base) / curve.w[static_cast<size_t>(j)];
    const double states = static_cast<double>(k - j) - t;  // (1 - Linv(y)) * N
    b.n_r = std::max(1.0, std::ceil(states));
    b.n_s = std::max(1.0, std::ceil(std::log(states / eta) / curve.w[static_cast<size_t>(j)]));
    return b;
}

ResourceBound corollary_bounds(double one_minus_g, double n_states, double eps, double rho,
                               double eta, bool real_amplitudes) {
    check_eta(eta);
    if (!(one_minus_g > 0.0 && one_minus_g <= 1.0)) {
        throw validation_error("corollary_bounds: need 0 < 1-G <= 1");
    }
    ResourceBound b;
    b.eps_tilde = rescaled_accuracy(eps, rho, real_amplitudes);
    if (b.eps_tilde >= 1.0) {
        b.degenerate = true;
        b.n_r = 1.0;
        b.n_s = 1.0;
        return b;
    }
    const double base = one_minus_g * n_states * (1.0 - b.eps_tilde * b.eps_tilde);
    b.n_r = std::max(1.0, std::floor(base));
    b.n_s = std::max(1.0, std::floor(base * std::log(base / eta)));
    return b;
}

AnalyticCurve analytic_curve(CurveFamily family, double lambda, double gamma, long n) {
    if (!(lambda > 0.0)) throw validation_error("analytic_curve: need lambda > 0");
    if (family == CurveFamily::power_law && !(gamma > 1.0)) {
        throw validation_error("analytic_curve: power law needs gamma > 1");
    }
    AnalyticCurve c;
    c.family = family;
    c.lambda = lambda;
    c.gamma = gamma;
    c.n_states = pow2_states(n);
    return c;
}

double AnalyticCurve::value(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw validation_error("analytic value: x must lie in [0, 1]");
    const double ln = lambda * n_states;
    if (family == CurveFamily::exponential) return std::exp(-ln * (1.0 - x));
    const double t = 1.0 + 1.0 / ln - x;
    return std::pow(ln * t, 1.0 - gamma);
}

double AnalyticCurve::inverse(double y) const {
    if (!(y > 0.0 && y <= 1.0)) throw validation_error("analytic inverse: y must lie in (0, 1]");
    const double ln = lambda * n_states;
    double x;
    if (family == CurveFamily::exponential) {
        x = 1.0 - std::log(1.0 / y) / ln;
    } else {
        x = 1.0 + 1.0 / ln - std::pow(y, 1.0 / (1.0 - gamma)) / ln;
    }
    // The model curve starts above zero at x = 0, so demands below that left-
    // edge value saturate: the whole basis is needed.
    return std::clamp(x, 0.0, 1.0);
}

double AnalyticCurve::slope(double x) const {
    const double ln = lambda * n_states;
    if (family == CurveFamily::exponential) return ln * value(x);
    const double t = 1.0 + 1.0 / ln - x;
    return (gamma - 1.0) * ln * std::pow(ln * t, -gamma);
}

double AnalyticCurve::gini_complement() const {
    const double ln = lambda * n_states;
    if (family == CurveFamily::exponential) return 2.0 * (1.0 - std::exp(-ln)) / ln;
    if (gamma == 2.0) return 2.0 * std::log1p(ln) / ln;
    if (gamma > 2.0) return 2.0 / ((gamma - 2.0) * ln);
    throw validation_error("analytic gini: power law closed form needs gamma >= 2");
}

double AnalyticCurve::bound_states(double eps_tilde) const {
    if (!(eps_tilde > 0.0 && eps_tilde < 1.0)) {
        throw validation_error("analytic bound: need 0 < eps_tilde < 1");
    }
    if (family == CurveFamily::exponential) return std::log(1.0 / (eps_tilde * eps_tilde)) / lambda;
    return (std::pow(eps_tilde, 2.0 / (1.0 - gamma)) - 1.0) / lambda;
}

double AnalyticCurve::bound_shots(double eps_tilde, double eta) const {
    check_eta(eta);
    const double n_r = bound_states(eps_tilde);
    if (family == CurveFamily::exponential) {
        return std::log(n_r / eta) / (lambda * eps_tilde * eps_tilde);
    }
    return std::log(n_r / eta) /
           ((gamma - 1.0) * lambda * std::pow(eps_tilde, 2.0 * gamma / (gamma - 1.0)));
}

std::vector<double> synthetic_weights(CurveFamily family, double lambda, double gamma, long n) {
    if (n < 1 || n > kDenseStateCap) throw validation_error("synthetic_weights: need 1 <= n <= 24");
    if (!(lambda > 0.0)) throw validation_error("synthetic_weights: need lambda > 0");
    if (family == CurveFamily::power_law && !(gamma > 1.0)) {
        throw validation_error("synthetic_weights: power law needs gamma > 1");
    }
    const long count = 1L << n;
    std::vector<double> w(static_cast<size_t>(count));
    double total = 0.0;
    for (long i = 0; i < count; ++i) {
        const auto rank_from_top = static_cast<double>(count - 1 - i);  // ascending order
        double v;
        if (family == CurveFamily::exponential) {
            v = std::exp(-lambda * rank_from_top);
        } else {
            v = std::pow(rank_from_top + 1.0 / lambda, -gamma);
        }
        w[static_cast<size_t>(i)] = v;
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

double coupon_collector_shots(double n_r) {
    if (!(n_r >= 1.0)) throw validation_error("coupon_collector_shots: need n_r >= 1");
    if (n_r <= 2e6) {
        const auto m = static_cast<long>(std::llround(n_r));
        double h = 0.0;
        for (long k = 1; k <= m; ++k) h += 1.0 / static_cast<double>(k);
        return static_cast<double>(m) * h;
    }
    return n_r * (std::log(n_r) + kEulerGamma + 0.5 / n_r);
}

GiniScalingFit fit_gini_scaling(const std::vector<std::pair<long, double>>& n_and_complement) {
    if (n_and_complement.size() < 2) throw validation_error("fit_gini_scaling: need >= 2 points");
    double xbar = 0.0, ybar = 0.0;
    std::vector<double> xs, ys;
    for (const auto& [n, omg] : n_and_complement) {
        if (!(omg > 0.0)) throw validation_error("fit_gini_scaling: need 1-G > 0");
        xs.push_back(static_cast<double>(n));
        ys.push_back(static_cast<double>(n) + std::log2(omg));  // log2((1-G) 2^n)
    }
    for (size_t i = 0; i < xs.size(); ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= static_cast<double>(xs.size());
    ybar /= static_cast<double>(ys.size());
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    if (sxx <= 0.0) throw validation_error("fit_gini_scaling: degenerate sizes");
    GiniScalingFit fit;
    fit.g = sxy / sxx;
    fit.intercept = ybar - fit.g * xbar;
    double rss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - fit.intercept - fit.g * xs[i];
        rss += r * r;
    }
    fit.rms_residual = std::sqrt(rss / static_cast<double>(xs.size()));
    return fit;
}

double spectral_norm(const MPO& h, NormMode mode) {
    if (mode == NormMode::term_bound) {
        if (!std::isfinite(h.term_norm_bound) || h.term_norm_bound <= 0.0) {
            throw validation_error("spectral_norm: operator carries no term bound");
        }
        return h.term_norm_bound;
    }
    if (h.n > kDenseMatrixCap) throw validation_error("spectral_norm: exact mode needs n <= 14");
    if (!h.hermitian) throw validation_error("spectral_norm: exact mode needs a Hermitian operator");
    const long dim = 1L << h.n;
    Xoshiro256pp rng(0x5ca1ab1e5ca1ab1eULL);
    Eigen::VectorXcd v0(dim);
    for (long k = 0; k < dim; ++k) v0(k) = cplx(rng.normal(), rng.normal());
    LanczosOptions opt;
    opt.krylov_dim = std::min<long>(dim, 40);
    opt.max_restarts = 400;
    opt.tol = 1e-10;
    auto lowest_of = [&](double sign) {
        auto apply = [&](const Eigen::VectorXcd& v) {
            Eigen::VectorXcd w = apply_mpo_dense(h, v);
            if (sign < 0.0) w = -w;
            return w;
        };
        LanczosResult res = lanczos_lowest(apply, v0, opt);
        if (!res.converged) throw numerical_error("spectral_norm: Lanczos did not converge");
        return res.value;
    };
    const double lo = lowest_of(1.0);
    const double hi = -lowest_of(-1.0);
    return std::max(std::abs(lo), std::abs(hi));
}

}  // namespace fsqd

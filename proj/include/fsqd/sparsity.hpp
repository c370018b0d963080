#pragma once

#include <utility>
#include <vector>

#include "fsqd/bitstring.hpp"
#include "fsqd/exact.hpp"
#include "fsqd/mpo.hpp"

namespace fsqd {

// Probability-weight profile of a state over the computational basis.  Only
// strictly positive weights are stored (ascending); zero-weight states are
// tracked by count so the representation works far beyond n = 24.
struct WeightDistribution {
    long n = 0;
    double n_states = 0.0;   // 2^n
    double zero_states = 0.0;
    std::vector<double> weights;  // ascending, summing to 1
};

WeightDistribution weight_distribution_from_dense(const DenseState& psi);
WeightDistribution weight_distribution_from_counts(const SampleCounts& counts, long n);
WeightDistribution weight_distribution(std::vector<double> weights, long n);

// Piecewise-linear cumulative weight share L(x): the fraction of total weight
// held by the least-weighted fraction x of all basis states.
struct LorenzCurve {
    long n = 0;
    double n_states = 0.0;
    std::vector<double> w;    // ascending positive weights
    std::vector<double> cum;  // prefix sums of w

    double value(double x) const;
    double inverse(double y) const;  // sup{x : L(x) <= y} for 0 < y <= 1
    double slope(double x) const;    // right derivative
};

LorenzCurve lorenz(const WeightDistribution& d);

// 1 - G evaluated directly from the ascending weights; well conditioned even
// when G approaches its maximum 1 - 2^-n.
double gini_complement(const WeightDistribution& d);
double gini(const WeightDistribution& d);

struct ResourceBound {
    double n_r = 0.0;
    double n_s = 0.0;
    bool degenerate = false;  // accuracy demand so loose a single state suffices
    double eps_tilde = 0.0;
};

// Sufficient subspace size and sample count for trace-distance accuracy eps,
// given the spectral norm rho of the shifted operator and failure probability
// eta.  real_amplitudes tightens the rescaling by sqrt(2).
ResourceBound theorem_bounds(const LorenzCurve& curve, double eps, double rho, double eta,
                             bool real_amplitudes = false);

// Gini-only estimates of the same counts (floored); never exceed the
// curve-based counts on the same distribution.
ResourceBound corollary_bounds(double one_minus_g, double n_states, double eps, double rho,
                               double eta, bool real_amplitudes = false);

enum class CurveFamily { exponential, power_law };

// Closed-form curve for exponentially or algebraically decaying weights.
struct AnalyticCurve {
    CurveFamily family = CurveFamily::exponential;
    double lambda = 0.0;
    double gamma = 0.0;  // power-law exponent; unused for exponential
    double n_states = 0.0;

    double value(double x) const;
    double inverse(double y) const;  // clamped to [0, 1]; saturates at 0 below value(0)
    double slope(double x) const;
    // Closed form; exact for the exponential and gamma = 2 families, and
    // asymptotic in lambda * 2^n (relative correction (1 + lambda 2^n)^(2-gamma))
    // for gamma > 2.
    double gini_complement() const;
    double bound_states(double eps_tilde) const;
    double bound_shots(double eps_tilde, double eta) const;
};

AnalyticCurve analytic_curve(CurveFamily family, double lambda, double gamma, long n);

// Discrete weight profile matching an analytic family (n <= 24), normalized.
std::vector<double> synthetic_weights(CurveFamily family, double lambda, double gamma, long n);

// Expected number of uniform draws over n_r equally prominent states until
// every one has appeared at least once.
double coupon_collector_shots(double n_r);

struct GiniScalingFit {
    double g = 0.0;  // slope of log2((1-G) 2^n) against n
    double intercept = 0.0;
    double rms_residual = 0.0;
};

GiniScalingFit fit_gini_scaling(const std::vector<std::pair<long, double>>& n_and_complement);

enum class NormMode { exact_small, term_bound };

// Largest eigenvalue magnitude: exact via Lanczos at n <= 14, or the recorded
// sum of term magnitudes.
double spectral_norm(const MPO& h, NormMode mode);

}  // namespace fsqd

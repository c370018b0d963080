#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsqd/exact.hpp"
#include "fsqd/mps.hpp"

using namespace fsqd;

namespace {

// Reference amplitudes via the dense statevector (independent contraction path).
double dense_distance(const MPS& s, const Eigen::VectorXcd& ref) {
    return (mps_to_dense(s).amp - ref).norm();
}

MPS random_normalized(long n, long bond, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    MPS s = random_mps(n, bond, rng);
    normalize(s);
    return s;
}

}  // namespace

TEST_CASE("product_state: basis strings place a single unit amplitude") {
    const MPS s = product_state("0110");
    CHECK(s.n == 4);
    CHECK(norm(s) == doctest::Approx(1.0));
    CHECK(std::abs(amplitude(s, "0110") - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(amplitude(s, "0111")) < 1e-14);
    const DenseState d = mps_to_dense(s);
    CHECK(std::abs(d.amp(0b0110) - cplx(1, 0)) < 1e-14);
    CHECK(d.amp.norm() == doctest::Approx(1.0));
}

TEST_CASE("product_state: local spinors multiply") {
    const cplx a(0.6, 0.0), b(0.0, 0.8);
    const MPS s = product_state({{a, b}, {b, a}});
    CHECK(std::abs(amplitude(s, "00") - a * b) < 1e-14);
    CHECK(std::abs(amplitude(s, "01") - a * a) < 1e-14);
    CHECK(std::abs(amplitude(s, "10") - b * b) < 1e-14);
    CHECK(std::abs(amplitude(s, "11") - b * a) < 1e-14);
}

TEST_CASE("ghz_state: two equal branches, bond dimension 2") {
    const MPS g = ghz_state(5);
    CHECK(g.max_bond_dim() == 2);
    CHECK(norm(g) == doctest::Approx(1.0));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(amplitude(g, "00000") - cplx(r, 0)) < 1e-14);
    CHECK(std::abs(amplitude(g, "11111") - cplx(r, 0)) < 1e-14);
    CHECK(std::abs(amplitude(g, "01011")) < 1e-14);
}

TEST_CASE("amplitude agrees with the dense statevector on random states") {
    const MPS s = random_normalized(6, 7, 11);
    const DenseState d = mps_to_dense(s);
    for (std::uint64_t k = 0; k < 64; k += 5) {
        const Bitstring x = index_to_bitstring(k, 6);
        CHECK(std::abs(amplitude(s, x) - d.amp(static_cast<long>(k))) < 1e-12);
    }
}

TEST_CASE("overlap matches the dense inner product and conjugates its first argument") {
    const MPS a = random_normalized(5, 6, 21);
    const MPS b = random_normalized(5, 4, 22);
    const cplx dense = mps_to_dense(a).amp.dot(mps_to_dense(b).amp);
    CHECK(std::abs(overlap(a, b) - dense) < 1e-12);
    CHECK(std::abs(overlap(b, a) - std::conj(dense)) < 1e-12);
    CHECK(std::abs(overlap(a, a) - cplx(1, 0)) < 1e-12);
}

TEST_CASE("scale and norm are consistent") {
    MPS s = random_normalized(4, 3, 31);
    scale(s, cplx(0, 2));
    CHECK(norm(s) == doctest::Approx(2.0));
    normalize(s);
    CHECK(norm(s) == doctest::Approx(1.0));
}

TEST_CASE("canonicalize: moves the center without changing the state") {
    MPS s = random_normalized(7, 8, 41);
    const Eigen::VectorXcd ref = mps_to_dense(s).amp;
    for (long center : {0L, 3L, 6L, 2L}) {
        canonicalize(s, center);
        CHECK(s.ortho_center == center);
        validate_mps(s);
        CHECK(dense_distance(s, ref) < 1e-12);
    }
}

TEST_CASE("validate_mps: rejects broken bond chains and boundaries") {
    MPS s = random_normalized(4, 3, 51);
    MPS bad = s;
    bad.site[1] = DenseTensor({5, 2, 3});  // left extent disagrees with site 0
    CHECK_THROWS_AS(validate_mps(bad), validation_error);
    bad = s;
    bad.site[0] = DenseTensor({2, 2, 3});  // left boundary must be 1
    CHECK_THROWS_AS(validate_mps(bad), validation_error);
    bad = s;
    bad.ortho_center = 2;  // random tensors are not isometric
    CHECK_THROWS_AS(validate_mps(bad), validation_error);
}

TEST_CASE("compress: lossless when uncapped, exact bookkeeping when capped") {
    const MPS s = random_normalized(6, 10, 61);
    const Eigen::VectorXcd ref = mps_to_dense(s).amp;
    const Compressed full = compress(s, 0, 0.0);
    CHECK(full.discarded_weight == 0.0);
    CHECK(dense_distance(full.state, ref) < 1e-12);

    const Compressed capped = compress(s, 3, 0.0);
    CHECK(capped.state.max_bond_dim() <= 3);
    // The norm lost equals the discarded weight, to first order exactly for
    // a single truncated bond and within the stacking bound otherwise.
    const double kept = norm(capped.state);
    CHECK(kept * kept == doctest::Approx(1.0 - capped.discarded_weight).epsilon(0.05));
}

TEST_CASE("compress: GHZ to bond 1 keeps exactly half the weight") {
    const MPS g = ghz_state(6);
    const Compressed c = compress(g, 1, 0.0);
    CHECK(c.state.max_bond_dim() == 1);
    CHECK(c.discarded_weight == doctest::Approx(0.5).epsilon(1e-12));
    MPS kept = c.state;
    normalize(kept);
    const double fidelity = std::norm(overlap(g, kept));
    CHECK(fidelity == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mps_add: dense linearity") {
    const MPS a = random_normalized(5, 4, 71);
    const MPS b = random_normalized(5, 5, 72);
    const cplx ca(0.3, -1.1), cb(-0.2, 0.4);
    const MPS sum = mps_add(a, b, ca, cb);
    const Eigen::VectorXcd ref = ca * mps_to_dense(a).amp + cb * mps_to_dense(b).amp;
    CHECK(dense_distance(sum, ref) < 1e-12);
    CHECK(sum.max_bond_dim() <= a.max_bond_dim() + b.max_bond_dim());
}

TEST_CASE("apply_two_site: matches the dense gate at every pair position") {
    const long n = 6;
    Xoshiro256pp rng(81);
    const MPS s0 = random_normalized(n, 6, 82);
    for (long site = 0; site + 1 < n; ++site) {
        const RowMat u = random_unitary(4, rng);
        MPS s = s0;
        apply_two_site(s, u, site, 0, 0.0);
        validate_mps(s);
        Eigen::VectorXcd ref = mps_to_dense(s0).amp;
        apply_gate_dense(ref, n, u, site);
        CHECK(dense_distance(s, ref) < 1e-12);
        CHECK(norm(s) == doctest::Approx(1.0));
    }
}

TEST_CASE("apply_two_site: respects the bond cap and reports the discarded weight") {
    Xoshiro256pp rng(91);
    MPS s = random_normalized(4, 4, 92);
    const RowMat u = random_unitary(4, rng);
    double discarded = 0.0;
    apply_two_site(s, u, 1, 2, 0.0, &discarded);
    CHECK(s.bond(1) <= 2);
    CHECK(discarded >= 0.0);
    const double kept = norm(s);
    CHECK(kept * kept == doctest::Approx(1.0 - discarded).epsilon(1e-10));
}

TEST_CASE("project_out_zero: removes the component and reports its weight") {
    MPS s = random_normalized(5, 6, 101);
    const double w = std::norm(amplitude(s, zero_bitstring(5)));
    const Projected p = project_out_zero(s);
    CHECK(p.removed_weight == doctest::Approx(w).epsilon(1e-10));
    CHECK(std::abs(amplitude(p.state, zero_bitstring(5))) < 1e-8);
    CHECK(norm(p.state) == doctest::Approx(1.0));
    // Dense check: the projected state is (psi - c |0..0>) renormalized.
    Eigen::VectorXcd ref = mps_to_dense(s).amp;
    ref(0) = 0.0;
    ref /= ref.norm();
    const Eigen::VectorXcd got = mps_to_dense(p.state).amp;
    const cplx phase = ref.dot(got);
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-10);
    CHECK((got - phase * ref).norm() < 1e-10);
}

TEST_CASE("project_out_zero: rejects states that are pure |0...0>") {
    const MPS z = product_state(zero_bitstring(4));
    CHECK_THROWS_AS(project_out_zero(z), validation_error);
}

TEST_CASE("sample: deterministic for a seed, distinct across seeds") {
    const MPS s = random_normalized(5, 5, 111);
    const SampleCounts a = sample(s, 2000, 7);
    const SampleCounts b = sample(s, 2000, 7);
    const SampleCounts c = sample(s, 2000, 8);
    CHECK(a == b);
    CHECK(a != c);
    long total = 0;
    for (const auto& [k, v] : a) total += v;
    CHECK(total == 2000);
}

TEST_CASE("sample: frequencies match dense Born probabilities within 5 sigma") {
    const MPS s = random_normalized(4, 5, 121);
    const Eigen::VectorXcd amp = mps_to_dense(s).amp;
    const long shots = 200000;
    const SampleCounts counts = sample(s, shots, 13);
    for (long k = 0; k < amp.size(); ++k) {
        const double p = std::norm(amp(k));
        const auto it = counts.find(index_to_bitstring(static_cast<std::uint64_t>(k), 4));
        const double f = it == counts.end() ? 0.0 : static_cast<double>(it->second) / shots;
        const double sigma = std::sqrt(std::max(p * (1.0 - p) / shots, 1e-12));
        CHECK(std::abs(f - p) < 5.0 * sigma + 2.0 / shots);
    }
}

TEST_CASE("sample: GHZ produces only the two branch strings") {
    const MPS g = ghz_state(8);
    const SampleCounts counts = sample(g, 5000, 17);
    long total = 0;
    for (const auto& [k, v] : counts) {
        CHECK((k == Bitstring(8, '0') || k == Bitstring(8, '1')));
        total += v;
    }
    CHECK(total == 5000);
    // Both branches show up: P(miss) = 2^-4999.
    CHECK(counts.size() == 2);
}

TEST_CASE("sample_batches: equals the merge of per-batch substream draws") {
    const MPS s = random_normalized(5, 4, 131);
    const std::vector<long> shots{100, 300, 50};
    const SampleCounts whole = sample_batches(s, shots, 19);
    SampleCounts merged;
    for (std::size_t k = 0; k < shots.size(); ++k)
        merged = merge_counts(merged, sample(s, shots[k], derive_seed(19, k)));
    CHECK(whole == merged);
}

TEST_CASE("sample: rejects unnormalized states") {
    MPS s = random_normalized(4, 3, 141);
    scale(s, 1.5);
    CHECK_THROWS_AS(sample(s, 10, 1), validation_error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fsqd/serialize.hpp"

using namespace fsqd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("fsqd_serialize_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& p) { return read_text_file(p); }

MPS random_normalized(long n, long bond, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    MPS s = random_mps(n, bond, rng);
    normalize(s);
    canonicalize(s, 1);
    return s;
}

BrickwallCircuit random_circuit(long n, long layers, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    BrickwallCircuit c = make_brickwall(n, layers);
    for (auto& g : c.gates) g.u = random_unitary(4, rng);
    return c;
}

bool tensors_equal(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) return false;
    for (long i = 0; i < a.size(); ++i)
        if (a.flat(i) != b.flat(i)) return false;
    return true;
}

}  // namespace

TEST_CASE("mps round trip is bit-exact and reserializes identically") {
    TempDir t;
    const MPS s = random_normalized(6, 5, 1);
    save_mps(t.path("a.mps"), s);
    const MPS r = load_mps(t.path("a.mps"));
    CHECK(r.n == s.n);
    CHECK(r.ortho_center == s.ortho_center);
    CHECK(r.max_bond == s.max_bond);
    for (long i = 0; i < s.n; ++i)
        CHECK(tensors_equal(r.site[static_cast<std::size_t>(i)], s.site[static_cast<std::size_t>(i)]));
    save_mps(t.path("b.mps"), r);
    CHECK(slurp(t.path("a.mps")) == slurp(t.path("b.mps")));
}

TEST_CASE("mpo round trip preserves flags and the norm bound") {
    TempDir t;
    const MPO h = ising_mpo(IsingParams{0.9, 1.2, 0.04}, 5);
    save_mpo(t.path("h.mpo"), h);
    const MPO r = load_mpo(t.path("h.mpo"));
    CHECK(r.n == h.n);
    CHECK(r.hermitian == h.hermitian);
    CHECK(r.term_norm_bound == h.term_norm_bound);
    for (long i = 0; i < h.n; ++i)
        CHECK(tensors_equal(r.site[static_cast<std::size_t>(i)], h.site[static_cast<std::size_t>(i)]));
}

TEST_CASE("circuit binary round trip is bit-exact") {
    TempDir t;
    const BrickwallCircuit c = random_circuit(7, 2, 3);
    save_circuit(t.path("c.circuit"), c);
    const BrickwallCircuit r = load_circuit(t.path("c.circuit"));
    CHECK(r.n == c.n);
    CHECK(r.layers == c.layers);
    REQUIRE(r.gates.size() == c.gates.size());
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        CHECK(r.gates[i].site == c.gates[i].site);
        CHECK(r.gates[i].u == c.gates[i].u);
    }
    save_circuit(t.path("c2.circuit"), r);
    CHECK(slurp(t.path("c.circuit")) == slurp(t.path("c2.circuit")));
}

TEST_CASE("circuit text form round trips through %.17g") {
    const BrickwallCircuit c = random_circuit(5, 3, 4);
    const std::string text = circuit_to_text(c);
    const BrickwallCircuit r = circuit_from_text(text);
    CHECK(r.n == c.n);
    CHECK(r.layers == c.layers);
    REQUIRE(r.gates.size() == c.gates.size());
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        CHECK(r.gates[i].site == c.gates[i].site);
        CHECK(r.gates[i].u == c.gates[i].u);  // exact: %.17g preserves doubles
    }
    CHECK(circuit_to_text(r) == text);
}

TEST_CASE("mps text rendering mentions every tensor") {
    const MPS s = random_normalized(4, 3, 5);
    const std::string text = mps_to_text(s);
    CHECK(text.find("n 4") != std::string::npos);
    // One line per site tensor plus header material.
    CHECK(std::count(text.begin(), text.end(), '\n') >= 4);
}

TEST_CASE("corrupt files are rejected with io_error") {
    TempDir t;
    const MPS s = random_normalized(4, 3, 6);
    save_mps(t.path("x.mps"), s);

    SUBCASE("missing file") { CHECK_THROWS_AS(load_mps(t.path("nope.mps")), io_error); }
    SUBCASE("wrong magic") {
        std::string bytes = slurp(t.path("x.mps"));
        bytes[0] ^= 0x5A;
        write_text_file(t.path("bad.mps"), bytes);
        CHECK_THROWS_AS(load_mps(t.path("bad.mps")), io_error);
    }
    SUBCASE("truncated payload") {
        std::string bytes = slurp(t.path("x.mps"));
        bytes.resize(bytes.size() / 2);
        write_text_file(t.path("cut.mps"), bytes);
        CHECK_THROWS_AS(load_mps(t.path("cut.mps")), io_error);
    }
    SUBCASE("wrong container") {
        save_mps(t.path("y.mps"), s);
        CHECK_THROWS_AS(load_mpo(t.path("y.mps")), io_error);
        CHECK_THROWS_AS(load_circuit(t.path("y.mps")), io_error);
    }
}

TEST_CASE("fmt_g17 round-trips doubles exactly") {
    const double values[] = {0.1, 1.0 / 3.0, -2.5e-300, 9.87654321e17,
                             0.49999999999999994, 1e-17, 0.0};
    for (const double v : values) {
        const std::string s = fmt_g17(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("write_doubles / read_doubles round trip") {
    TempDir t;
    const std::vector<double> xs{0.1, -3.25, 1e300, 5e-324, 0.0};
    write_doubles(t.path("d.bin"), xs);
    CHECK(read_doubles(t.path("d.bin")) == xs);
}

TEST_CASE("text file helpers preserve bytes including newlines") {
    TempDir t;
    const std::string content("line1\nline2\r\nraw\0tail\n", 22);  // embedded NUL
    write_text_file(t.path("f.txt"), content);
    CHECK(read_text_file(t.path("f.txt")) == content);
}

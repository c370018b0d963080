#include "fsqd/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fsqd/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");
static_assert(sizeof(double) == 8, "serialization assumes IEEE-754 binary64");

namespace fsqd {

namespace {

constexpr std::uint32_t kMagicMps = 0x4653'5053u;      // "FSPS"
constexpr std::uint32_t kMagicMpo = 0x4653'504fu;      // "FSPO"
constexpr std::uint32_t kMagicCircuit = 0x4653'4351u;  // "FSCQ"
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
  public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw io_error("cannot open for writing: " + path);
    }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void complex_array(const cplx* data, size_t count) { raw(data, count * sizeof(cplx)); }
    void close() {
        out_.close();
        if (!out_) throw io_error("write failed: " + path_);
    }

  private:
    void raw(const void* p, size_t bytes) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
        if (!out_) throw io_error("write failed: " + path_);
    }
    std::string path_;
    std::ofstream out_;
};

class Reader {
  public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw io_error("cannot open for reading: " + path);
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::int64_t i64() {
        std::int64_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    void complex_array(cplx* data, size_t count) { raw(data, count * sizeof(cplx)); }
    void expect_magic(std::uint32_t magic, const char* what) {
        if (u32() != magic) throw io_error(std::string("not a ") + what + " file: " + path_);
        const std::uint32_t version = u32();
        if (version != kFormatVersion) {
            throw io_error(std::string("unsupported ") + what + " format version " +
                           std::to_string(version) + ": " + path_);
        }
    }

  private:
    void raw(void* p, size_t bytes) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
        if (in_.gcount() != static_cast<std::streamsize>(bytes)) {
            throw io_error("unexpected end of file: " + path_);
        }
    }
    std::string path_;
    std::ifstream in_;
};

void write_tensor(Writer& w, const DenseTensor& t) {
    w.i64(t.rank());
    for (long d = 0; d < t.rank(); ++d) w.i64(t.extent(d));
    w.complex_array(t.data(), static_cast<size_t>(t.size()));
}

DenseTensor read_tensor(Reader& r) {
    const long rank = static_cast<long>(r.i64());
    if (rank < 0 || rank > 8) throw io_error("corrupt tensor rank");
    std::vector<long> shape(static_cast<size_t>(rank));
    for (auto& d : shape) {
        d = static_cast<long>(r.i64());
        if (d < 1 || d > (1L << 30)) throw io_error("corrupt tensor extent");
    }
    DenseTensor t(shape);
    r.complex_array(t.data(), static_cast<size_t>(t.size()));
    return t;
}

}  // namespace

void save_mps(const std::string& path, const MPS& s) {
    validate_mps(s);
    Writer w(path);
    w.u32(kMagicMps);
    w.u32(kFormatVersion);
    w.i64(s.n);
    w.i64(s.ortho_center);
    w.i64(s.max_bond);
    for (const auto& t : s.site) write_tensor(w, t);
    w.close();
}

MPS load_mps(const std::string& path) {
    Reader r(path);
    r.expect_magic(kMagicMps, "MPS");
    MPS s;
    s.n = static_cast<long>(r.i64());
    if (s.n < 1 || s.n > 100000) throw io_error("corrupt MPS header: " + path);
    s.ortho_center = static_cast<long>(r.i64());
    s.max_bond = static_cast<long>(r.i64());
    s.site.reserve(static_cast<size_t>(s.n));
    for (long i = 0; i < s.n; ++i) s.site.push_back(read_tensor(r));
    validate_mps(s);
    return s;
}

void save_mpo(const std::string& path, const MPO& m) {
    validate_mpo(m);
    Writer w(path);
    w.u32(kMagicMpo);
    w.u32(kFormatVersion);
    w.i64(m.n);
    w.i64(m.hermitian ? 1 : 0);
    w.f64(m.term_norm_bound);
    for (const auto& t : m.site) write_tensor(w, t);
    w.close();
}

MPO load_mpo(const std::string& path) {
    Reader r(path);
    r.expect_magic(kMagicMpo, "MPO");
    MPO m;
    m.n = static_cast<long>(r.i64());
    if (m.n < 1 || m.n > 100000) throw io_error("corrupt MPO header: " + path);
    m.hermitian = r.i64() != 0;
    m.term_norm_bound = r.f64();
    m.site.reserve(static_cast<size_t>(m.n));
    for (long i = 0; i < m.n; ++i) m.site.push_back(read_tensor(r));
    validate_mpo(m);
    return m;
}

void save_circuit(const std::string& path, const BrickwallCircuit& c) {
    validate_circuit(c);
    Writer w(path);
    w.u32(kMagicCircuit);
    w.u32(kFormatVersion);
    w.i64(c.n);
    w.i64(c.layers);
    w.i64(static_cast<std::int64_t>(c.gates.size()));
    for (const auto& g : c.gates) {
        w.i64(g.site);
        w.complex_array(g.u.data(), 16);
    }
    w.close();
}

BrickwallCircuit load_circuit(const std::string& path) {
    Reader r(path);
    r.expect_magic(kMagicCircuit, "circuit");
    BrickwallCircuit c;
    c.n = static_cast<long>(r.i64());
    c.layers = static_cast<long>(r.i64());
    const auto count = r.i64();
    if (c.n < 2 || count < 0 || count > 100000000) throw io_error("corrupt circuit header: " + path);
    c.gates.resize(static_cast<size_t>(count));
    for (auto& g : c.gates) {
        g.site = static_cast<long>(r.i64());
        g.u.resize(4, 4);
        r.complex_array(g.u.data(), 16);
    }
    validate_circuit(c);
    return c;
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string circuit_to_text(const BrickwallCircuit& c) {
    std::ostringstream os;
    os << "circuit v1\n";
    os << "n " << c.n << "\nlayers " << c.layers << "\ngates " << c.gates.size() << "\n";
    for (const auto& g : c.gates) {
        os << "gate " << g.site;
        for (long i = 0; i < 4; ++i) {
            for (long j = 0; j < 4; ++j) {
                os << ' ' << fmt_g17(g.u(i, j).real()) << ' ' << fmt_g17(g.u(i, j).imag());
            }
        }
        os << '\n';
    }
    return os.str();
}

BrickwallCircuit circuit_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    auto need = [&](const char* expect) {
        if (!(is >> tok) || tok != expect) throw io_error("malformed circuit text near '" + tok + "'");
    };
    need("circuit");
    need("v1");
    BrickwallCircuit c;
    size_t count = 0;
    need("n");
    is >> c.n;
    need("layers");
    is >> c.layers;
    need("gates");
    is >> count;
    if (!is) throw io_error("malformed circuit text header");
    c.gates.resize(count);
    for (auto& g : c.gates) {
        need("gate");
        is >> g.site;
        g.u.resize(4, 4);
        for (long i = 0; i < 4; ++i) {
            for (long j = 0; j < 4; ++j) {
                double re, im;
                is >> re >> im;
                g.u(i, j) = cplx(re, im);
            }
        }
        if (!is) throw io_error("malformed circuit text gate block");
    }
    validate_circuit(c);
    return c;
}

std::string mps_to_text(const MPS& s) {
    validate_mps(s);
    std::ostringstream os;
    os << "mps v1\nn " << s.n << "\ncenter " << s.ortho_center << "\n";
    for (long i = 0; i < s.n; ++i) {
        const auto& t = s.site[i];
        os << "site " << i << " " << t.extent(0) << " " << t.extent(2) << "\n";
        for (long k = 0; k < t.size(); ++k) {
            os << fmt_g17(t.flat(k).real()) << ' ' << fmt_g17(t.flat(k).imag()) << '\n';
        }
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);  // binary: no newline translation
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw io_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_doubles(const std::string& path, const std::vector<double>& values) {
    Writer w(path);
    w.i64(static_cast<std::int64_t>(values.size()));
    for (double v : values) w.f64(v);
    w.close();
}

std::vector<double> read_doubles(const std::string& path) {
    Reader r(path);
    const auto count = r.i64();
    if (count < 0 || count > (1LL << 32)) throw io_error("corrupt doubles file: " + path);
    std::vector<double> values(static_cast<size_t>(count));
    for (auto& v : values) v = r.f64();
    return values;
}

}  // namespace fsqd

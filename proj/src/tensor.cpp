#include "fsqd/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fsqd {

namespace {

long checked_total(const std::vector<long>& shape) {
    long total = 1;
    for (long e : shape) {
        if (e <= 0) throw validation_error("tensor extents must be positive");
        total *= e;
    }
    return total;
}

std::string shape_str(const std::vector<long>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? "," : "") + std::to_string(shape[i]);
    return s + ")";
}

}  // namespace

DenseTensor::DenseTensor(std::vector<long> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(checked_total(shape_)), cplx(0)) {}

DenseTensor::DenseTensor(std::vector<long> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_total(shape_) != static_cast<long>(data_.size()))
        throw validation_error("tensor data size does not match shape " + shape_str(shape_));
}

DenseTensor DenseTensor::scalar(cplx v) {
    DenseTensor t;
    t.data_.assign(1, v);
    return t;
}

cplx& DenseTensor::at(const std::vector<long>& idx) {
    return const_cast<cplx&>(std::as_const(*this).at(idx));
}

const cplx& DenseTensor::at(const std::vector<long>& idx) const {
    if (static_cast<long>(idx.size()) != rank()) throw validation_error("index rank mismatch");
    long flat = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= shape_[k]) throw validation_error("tensor index out of range");
        flat = flat * shape_[k] + idx[k];
    }
    return data_[static_cast<std::size_t>(flat)];
}

MatMap DenseTensor::matrix(long rows, long cols) {
    if (rows * cols != size()) throw validation_error("matrix view size mismatch");
    return MatMap(data_.data(), rows, cols);
}

ConstMatMap DenseTensor::matrix(long rows, long cols) const {
    if (rows * cols != size()) throw validation_error("matrix view size mismatch");
    return ConstMatMap(data_.data(), rows, cols);
}

DenseTensor DenseTensor::reshaped(std::vector<long> new_shape) const& {
    DenseTensor t(*this);
    return std::move(t).reshaped(std::move(new_shape));
}

DenseTensor DenseTensor::reshaped(std::vector<long> new_shape) && {
    if (checked_total(new_shape) != size())
        throw validation_error("reshape size mismatch: " + shape_str(shape_) + " -> " + shape_str(new_shape));
    shape_ = std::move(new_shape);
    return std::move(*this);
}

DenseTensor DenseTensor::permuted(const std::vector<long>& perm) const {
    const long r = rank();
    if (static_cast<long>(perm.size()) != r) throw validation_error("permutation rank mismatch");
    std::vector<bool> seen(static_cast<std::size_t>(r), false);
    std::vector<long> new_shape(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
        if (perm[k] < 0 || perm[k] >= r || seen[static_cast<std::size_t>(perm[k])])
            throw validation_error("invalid axis permutation");
        seen[static_cast<std::size_t>(perm[k])] = true;
        new_shape[k] = shape_[static_cast<std::size_t>(perm[k])];
    }

    // Row-major strides of the source, gathered in destination-axis order.
    std::vector<long> src_stride(static_cast<std::size_t>(r), 1);
    for (long k = r - 2; k >= 0; --k)
        src_stride[static_cast<std::size_t>(k)] =
            src_stride[static_cast<std::size_t>(k + 1)] * shape_[static_cast<std::size_t>(k + 1)];
    std::vector<long> gather(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k)
        gather[k] = src_stride[static_cast<std::size_t>(perm[k])];

    DenseTensor out(new_shape);
    const long total = size();
    std::vector<long> idx(static_cast<std::size_t>(r), 0);
    long src = 0;
    for (long flat = 0; flat < total; ++flat) {
        out.data_[static_cast<std::size_t>(flat)] = data_[static_cast<std::size_t>(src)];
        for (long k = r - 1; k >= 0; --k) {
            auto ku = static_cast<std::size_t>(k);
            if (++idx[ku] < new_shape[ku]) {
                src += gather[ku];
                break;
            }
            src -= gather[ku] * (new_shape[ku] - 1);
            idx[ku] = 0;
        }
    }
    return out;
}

DenseTensor DenseTensor::conjugated() const {
    DenseTensor t(*this);
    for (auto& v : t.data_) v = std::conj(v);
    return t;
}

double DenseTensor::norm() const {
    double acc = 0;
    for (const auto& v : data_) acc += std::norm(v);
    return std::sqrt(acc);
}

cplx DenseTensor::scalar_value() const {
    if (size() != 1) throw validation_error("scalar_value on non-scalar tensor");
    return data_[0];
}

DenseTensor& DenseTensor::operator*=(cplx v) {
    for (auto& x : data_) x *= v;
    return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
    if (shape_ != other.shape_) throw validation_error("tensor addition shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<long, long>>& axis_pairs) {
    std::vector<bool> a_contracted(static_cast<std::size_t>(a.rank()), false);
    std::vector<bool> b_contracted(static_cast<std::size_t>(b.rank()), false);
    for (auto [ai, bi] : axis_pairs) {
        if (ai < 0 || ai >= a.rank() || bi < 0 || bi >= b.rank())
            throw validation_error("contraction axis out of range");
        if (a_contracted[static_cast<std::size_t>(ai)] || b_contracted[static_cast<std::size_t>(bi)])
            throw validation_error("contraction axis repeated");
        if (a.extent(ai) != b.extent(bi))
            throw validation_error("contraction dimension mismatch: a axis " + std::to_string(ai) +
                                   " extent " + std::to_string(a.extent(ai)) + " vs b axis " +
                                   std::to_string(bi) + " extent " + std::to_string(b.extent(bi)));
        a_contracted[static_cast<std::size_t>(ai)] = true;
        b_contracted[static_cast<std::size_t>(bi)] = true;
    }

    std::vector<long> a_perm, b_perm, out_shape;
    long m = 1, k = 1, n = 1;
    for (long ax = 0; ax < a.rank(); ++ax)
        if (!a_contracted[static_cast<std::size_t>(ax)]) {
            a_perm.push_back(ax);
            out_shape.push_back(a.extent(ax));
            m *= a.extent(ax);
        }
    for (auto [ai, bi] : axis_pairs) {
        (void)bi;
        a_perm.push_back(ai);
        k *= a.extent(ai);
    }
    for (auto [ai, bi] : axis_pairs) {
        (void)ai;
        b_perm.push_back(bi);
    }
    for (long bx = 0; bx < b.rank(); ++bx)
        if (!b_contracted[static_cast<std::size_t>(bx)]) {
            b_perm.push_back(bx);
            out_shape.push_back(b.extent(bx));
            n *= b.extent(bx);
        }

    const DenseTensor ap = a.permuted(a_perm);
    const DenseTensor bp = b.permuted(b_perm);
    DenseTensor out(out_shape.empty() ? std::vector<long>{} : out_shape);
    if (out_shape.empty()) out = DenseTensor::scalar(cplx(0));
    out.matrix(m, n).noalias() = ap.matrix(m, k) * bp.matrix(k, n);
    return out;
}

SvdResult svd(const RowMat& m) {
    SvdResult r;
    // Jacobi is more accurate for small blocks; divide-and-conquer for the rest.
    if (std::min(m.rows(), m.cols()) <= 16) {
        Eigen::JacobiSVD<RowMat> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        r.u = solver.matrixU();
        r.s = solver.singularValues();
        r.vt = solver.matrixV().adjoint();
    } else {
        Eigen::BDCSVD<RowMat> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        r.u = solver.matrixU();
        r.s = solver.singularValues();
        r.vt = solver.matrixV().adjoint();
    }
    return r;
}

EighResult eigh(const RowMat& m) {
    if (m.rows() != m.cols()) throw validation_error("eigh requires a square matrix");
    const double scale = m.norm();
    const double asym = (m - m.adjoint()).norm();
    if (asym > 1e-8 * std::max(scale, 1e-300))
        throw validation_error("eigh input is not Hermitian within tolerance");
    const RowMat sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<RowMat> solver(sym);
    if (solver.info() != Eigen::Success) throw numerical_error("eigh failed to converge");
    EighResult r;
    r.values = solver.eigenvalues();
    r.vectors = solver.eigenvectors();
    return r;
}

TruncationDecision truncate_spectrum(const Eigen::VectorXd& s, long max_keep, double rel_cutoff) {
    TruncationDecision d;
    const long len = s.size();
    if (len == 0) throw validation_error("truncate_spectrum on empty spectrum");
    double total = 0;
    for (long i = 0; i < len; ++i) total += s[i] * s[i];
    const double budget = rel_cutoff * total;
    long keep = len;
    double dropped = 0;
    while (keep > 1) {
        const double w = s[keep - 1] * s[keep - 1];
        if (dropped + w > budget) break;
        dropped += w;
        --keep;
    }
    if (max_keep > 0 && keep > max_keep) {
        for (long i = max_keep; i < keep; ++i) dropped += s[i] * s[i];
        keep = max_keep;
    }
    d.keep = keep;
    d.discarded = dropped;
    return d;
}

DenseTensor random_tensor(const std::vector<long>& shape, Xoshiro256pp& rng) {
    DenseTensor t(shape);
    for (long i = 0; i < t.size(); ++i) t.flat(i) = cplx(rng.normal(), rng.normal());
    return t;
}

RowMat random_matrix(long rows, long cols, Xoshiro256pp& rng) {
    RowMat m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = cplx(rng.normal(), rng.normal());
    return m;
}

RowMat random_unitary(long dim, Xoshiro256pp& rng) {
    const RowMat g = random_matrix(dim, dim, rng);
    Eigen::HouseholderQR<RowMat> qr(g);
    RowMat q = qr.householderQ() * RowMat::Identity(dim, dim);
    const RowMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the phase gauge so the result is deterministic and well-spread.
    for (long j = 0; j < dim; ++j) {
        const cplx d = r(j, j);
        q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : cplx(1);
    }
    return q;
}

RowMat random_hermitian(long dim, Xoshiro256pp& rng) {
    const RowMat g = random_matrix(dim, dim, rng);
    return 0.5 * (g + g.adjoint());
}

}  // namespace fsqd

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "fsqd/errors.hpp"
#include "fsqd/rng.hpp"

namespace fsqd {

using cplx = std::complex<double>;

// All matrix views over tensor storage are row-major to match the tensor
// layout convention below.
using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Dense complex tensor with explicit shape.  Storage is row-major: the last
// axis varies fastest, so reshapes that merge adjacent axes are free.
class DenseTensor {
  public:
    DenseTensor() = default;
    explicit DenseTensor(std::vector<long> shape);
    DenseTensor(std::vector<long> shape, std::vector<cplx> data);

    static DenseTensor scalar(cplx v);

    long rank() const { return static_cast<long>(shape_.size()); }
    const std::vector<long>& shape() const { return shape_; }
    long extent(long axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
    long size() const { return static_cast<long>(data_.size()); }

    cplx* data() { return data_.data(); }
    const cplx* data() const { return data_.data(); }
    cplx& flat(long i) { return data_[static_cast<std::size_t>(i)]; }
    const cplx& flat(long i) const { return data_[static_cast<std::size_t>(i)]; }

    // Multi-index element access (slow; for tests and cold paths).
    cplx& at(const std::vector<long>& idx);
    const cplx& at(const std::vector<long>& idx) const;

    // View the full storage as a rows x cols row-major matrix (rows*cols == size()).
    MatMap matrix(long rows, long cols);
    ConstMatMap matrix(long rows, long cols) const;

    // Same data, new shape (sizes must agree).
    DenseTensor reshaped(std::vector<long> new_shape) const&;
    DenseTensor reshaped(std::vector<long> new_shape) &&;

    // Axis permutation: result axis k is input axis perm[k].
    DenseTensor permuted(const std::vector<long>& perm) const;

    DenseTensor conjugated() const;
    double norm() const;  // Frobenius
    cplx scalar_value() const;

    DenseTensor& operator*=(cplx v);
    DenseTensor& operator+=(const DenseTensor& other);

  private:
    std::vector<long> shape_;
    std::vector<cplx> data_;
};

// Pairwise tensor contraction.  axis_pairs lists (axis of a, axis of b) to be
// contracted; paired extents must match (validation error otherwise).  Result
// axes are the uncontracted axes of a (in order) followed by those of b.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<long, long>>& axis_pairs);

// Thin SVD, m = u * diag(s) * vt, singular values non-increasing, u / vt with
// orthonormal columns / rows.
struct SvdResult {
    RowMat u;
    Eigen::VectorXd s;
    RowMat vt;
};
SvdResult svd(const RowMat& m);

// Hermitian eigendecomposition (ascending eigenvalues).  The input must be
// Hermitian within 1e-8 relative Frobenius tolerance (validation error
// otherwise); it is symmetrized internally before factorization.
struct EighResult {
    Eigen::VectorXd values;
    RowMat vectors;  // columns are eigenvectors
};
EighResult eigh(const RowMat& m);

// How many leading singular values to keep under a rank cap (0 = no cap) and a
// relative cutoff on squared singular values: trailing values are dropped
// while the dropped squared sum stays <= rel_cutoff * total squared sum.
// Always keeps at least one.  `discarded` is the dropped squared sum.
struct TruncationDecision {
    long keep = 0;
    double discarded = 0.0;
};
TruncationDecision truncate_spectrum(const Eigen::VectorXd& s, long max_keep, double rel_cutoff);

// Test/init helpers with deterministic seeding.
DenseTensor random_tensor(const std::vector<long>& shape, Xoshiro256pp& rng);
RowMat random_matrix(long rows, long cols, Xoshiro256pp& rng);
RowMat random_unitary(long dim, Xoshiro256pp& rng);
RowMat random_hermitian(long dim, Xoshiro256pp& rng);

}  // namespace fsqd

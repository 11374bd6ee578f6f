#ifndef LYAPSPLIT_TYPES_HPP
#define LYAPSPLIT_TYPES_HPP

#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace lyapsplit {

using Index = Eigen::Index;

/// A real matrix stored either as sparse (compressed coordinate, 0-based
/// indices, duplicates summed on construction) or dense column-major.
/// Immutable after construction and safe to share across threads.
class MatrixHandle {
public:
    enum class Storage { SparseCoordinate, DenseColumnMajor };

    static MatrixHandle sparse_from_triplets(Index rows, Index cols,
                                             const std::vector<Eigen::Triplet<double>>& entries);
    static MatrixHandle dense(Eigen::MatrixXd values);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }
    Storage storage() const { return storage_; }

    const Eigen::SparseMatrix<double>& sparse() const;
    const Eigen::MatrixXd& dense_values() const;
    Eigen::MatrixXd to_dense() const;

    /// A * X for a dense block X.
    Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
    /// (A + shift*I) * X. Requires a square handle.
    Eigen::MatrixXd apply_shifted(double shift, const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    double fnorm() const;
    Index nonzeros() const;

private:
    MatrixHandle() = default;

    Storage storage_ = Storage::DenseColumnMajor;
    Index rows_ = 0;
    Index cols_ = 0;
    Eigen::SparseMatrix<double> sparse_;
    Eigen::MatrixXd dense_;
};

/// Problem data for A P + P A^T = -B B^T. A must be square, B dense with
/// matching row count. stability_checked records whether some caller has
/// verified that every eigenvalue estimate of A has negative real part;
/// construction never checks spectra.
struct StableSystem {
    MatrixHandle A;
    MatrixHandle B;
    bool stability_checked = false;

    static StableSystem make(MatrixHandle A, MatrixHandle B, bool stability_checked = false);

    Index n() const { return A.rows(); }
    Index p() const { return B.cols(); }
};

/// Strictly positive splitting shift.
class ShiftParameter {
public:
    explicit ShiftParameter(double sigma) : sigma_(sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    }
    double value() const { return sigma_; }

private:
    double sigma_;
};

}  // namespace lyapsplit

#endif  // LYAPSPLIT_TYPES_HPP

#include "lyapsplit/types.hpp"

#include <cmath>

namespace lyapsplit {

MatrixHandle MatrixHandle::sparse_from_triplets(Index rows, Index cols,
                                                const std::vector<Eigen::Triplet<double>>& entries) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("matrix dimensions must be positive");
    for (const auto& t : entries) {
        if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= cols)
            throw std::out_of_range("sparse entry index out of bounds");
    }
    MatrixHandle h;
    h.storage_ = Storage::SparseCoordinate;
    h.rows_ = rows;
    h.cols_ = cols;
    h.sparse_.resize(rows, cols);
    h.sparse_.setFromTriplets(entries.begin(), entries.end());  // duplicates summed
    h.sparse_.makeCompressed();
    return h;
}

MatrixHandle MatrixHandle::dense(Eigen::MatrixXd values) {
    if (values.rows() <= 0 || values.cols() <= 0)
        throw std::invalid_argument("matrix dimensions must be positive");
    MatrixHandle h;
    h.storage_ = Storage::DenseColumnMajor;
    h.rows_ = values.rows();
    h.cols_ = values.cols();
    h.dense_ = std::move(values);
    return h;
}

const Eigen::SparseMatrix<double>& MatrixHandle::sparse() const {
    if (storage_ != Storage::SparseCoordinate)
        throw std::logic_error("matrix handle is not sparse");
    return sparse_;
}

const Eigen::MatrixXd& MatrixHandle::dense_values() const {
    if (storage_ != Storage::DenseColumnMajor)
        throw std::logic_error("matrix handle is not dense");
    return dense_;
}

Eigen::MatrixXd MatrixHandle::to_dense() const {
    if (storage_ == Storage::DenseColumnMajor) return dense_;
    return Eigen::MatrixXd(sparse_);
}

Eigen::MatrixXd MatrixHandle::apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.rows() != cols_) throw std::invalid_argument("dimension mismatch in matrix apply");
    if (storage_ == Storage::DenseColumnMajor) return dense_ * X;
    return sparse_ * X;
}

Eigen::MatrixXd MatrixHandle::apply_shifted(double shift, const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (!is_square()) throw std::invalid_argument("shifted apply requires a square matrix");
    Eigen::MatrixXd Y = apply(X);
    Y += shift * X;
    return Y;
}

double MatrixHandle::fnorm() const {
    if (storage_ == Storage::DenseColumnMajor) return dense_.norm();
    return sparse_.norm();
}

Index MatrixHandle::nonzeros() const {
    if (storage_ == Storage::DenseColumnMajor) return rows_ * cols_;
    return sparse_.nonZeros();
}

StableSystem StableSystem::make(MatrixHandle A, MatrixHandle B, bool stability_checked) {
    if (!A.is_square()) throw std::invalid_argument("A must be square");
    if (B.rows() != A.rows())
        throw std::invalid_argument("B row count does not match A");
    if (B.storage() != MatrixHandle::Storage::DenseColumnMajor)
        throw std::invalid_argument("B must be a dense handle");
    return StableSystem{std::move(A), std::move(B), stability_checked};
}

}  // namespace lyapsplit

#ifndef LYAPSPLIT_ORACLE_HPP
#define LYAPSPLIT_ORACLE_HPP

#include "lyapsplit/types.hpp"

namespace lyapsplit {
namespace oracle {

/// Dense n^2 x n^2 operator of the vectorized equation, under column-stacking
/// vectorization (vec(A X B) = (B^T kron A) vec(X)):
///   plain:   I kron A + A kron I
///   shifted: I kron (A - sI) + (A + sI) kron I   (identical in exact arithmetic)
struct KroneckerOperator {
    Index n = 0;
    Eigen::MatrixXd matrix;

    static KroneckerOperator plain(const MatrixHandle& A);
    static KroneckerOperator shifted(const MatrixHandle& A, double sigma);
};

Eigen::MatrixXd kron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B);

struct KronOptions {
    Index cap = 60;                  // refuse n above this (dense n^2 solve)
    double asym_tol = 1e-9;          // allowed relative asymmetry of the result
    double psd_tol = 1e-10;          // allowed relative negativity of eigenvalues
};

/// Ground-truth solve of A P + P A^T = -B B^T through the dense Kronecker
/// system. The result is symmetrized and checked for symmetry and positive
/// semidefiniteness to tolerance.
Eigen::MatrixXd kron_solve(const StableSystem& sys, const KronOptions& opts = {});

struct EigOptions {
    Index cap = 60;
    double cond_cap = 1e8;  // reject eigenvector matrices more ill-conditioned
};

/// Closed-form solution through the full eigendecomposition A V = V D:
/// P = Re(V (-C o (R R^H)) V^H) with R = V^{-1} B and the Cauchy matrix C.
Eigen::MatrixXd eig_closed_form(const StableSystem& sys, const EigOptions& opts = {});

/// Spectral radius of the dense iteration matrix -(A + sI) kron (A - sI)^{-1}.
double iteration_matrix_radius(const MatrixHandle& A, const ShiftParameter& sigma, Index cap = 12);

}  // namespace oracle
}  // namespace lyapsplit

#endif  // LYAPSPLIT_ORACLE_HPP

#ifndef LYAPSPLIT_WARMSTART_HPP
#define LYAPSPLIT_WARMSTART_HPP

#include <complex>

#include "lyapsplit/solver.hpp"
#include "lyapsplit/types.hpp"

namespace lyapsplit {

/// Approximate eigenpairs of A: columns of V paired with entries of lambda.
/// closed_under_conjugation means every non-real eigenvalue appears together
/// with its conjugate (and the conjugate eigenvector), which makes the warm
/// start real-symmetric.
struct EigenBasis {
    Eigen::MatrixXcd V;       // n x k
    Eigen::VectorXcd lambda;  // k
    bool closed_under_conjugation = false;

    Index k() const { return V.cols(); }
};

struct SelectOptions {
    Index dense_cap = 500;       // candidate pool comes from a dense eigensolve
    double rank_tol = 1e-10;     // relative threshold for basis rank checks
};

/// Pick k eigenpairs whose span comes closest to span(B), greedily reducing
/// the projection residual ||B - V V^+ B||_F, then close the set under
/// conjugation (which may enlarge k by the number of unmatched pairs).
EigenBasis select_eigenpairs(const MatrixHandle& A, const MatrixHandle& B, Index k,
                             const SelectOptions& opts = {});

/// Largest relative eigenpair defect max_j ||A v_j - lambda_j v_j|| / (||A||_F ||v_j||).
double max_eigenpair_residual(const MatrixHandle& A, const EigenBasis& basis);

/// C[i][j] = 1 / (lambda_i + conj(lambda_j)). Requires Re(lambda) < 0, which
/// keeps every denominator away from zero. Hermitian whenever the list is
/// closed under conjugation.
Eigen::MatrixXcd cauchy_core(const Eigen::Ref<const Eigen::VectorXcd>& lambda);

/// Starting value from an eigenbasis: least-squares R with V R ~ B,
/// X = -C o (R R^H), P0 = Re(V X V^H) packaged as a homogeneous-only
/// iterate. Exact solution of the Lyapunov equation when B lies in span(V).
struct WarmStartResult {
    FactoredIterate P0;
    double projection_residual = 0.0;  // ||B - V R||_F
    Eigen::MatrixXcd X;                // k x k core
};

WarmStartResult warm_start(const EigenBasis& basis, const MatrixHandle& B,
                           double rank_tol = 1e-10);

}  // namespace lyapsplit

#endif  // LYAPSPLIT_WARMSTART_HPP

#include "lyapsplit/oracle.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lyapsplit/warmstart.hpp"

namespace lyapsplit {
namespace oracle {

Eigen::MatrixXd kron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

KroneckerOperator KroneckerOperator::plain(const MatrixHandle& A) {
    if (!A.is_square()) throw std::invalid_argument("A must be square");
    const Index n = A.rows();
    const Eigen::MatrixXd Ad = A.to_dense();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    KroneckerOperator op;
    op.n = n;
    op.matrix = kron(I, Ad) + kron(Ad, I);
    return op;
}

KroneckerOperator KroneckerOperator::shifted(const MatrixHandle& A, double sigma) {
    if (!A.is_square()) throw std::invalid_argument("A must be square");
    const Index n = A.rows();
    const Eigen::MatrixXd Ad = A.to_dense();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd minus = Ad - sigma * I;
    Eigen::MatrixXd plus = Ad + sigma * I;
    KroneckerOperator op;
    op.n = n;
    op.matrix = kron(I, minus) + kron(plus, I);
    return op;
}

Eigen::MatrixXd kron_solve(const StableSystem& sys, const KronOptions& opts) {
    const Index n = sys.n();
    if (n > opts.cap) throw std::invalid_argument("system exceeds the Kronecker solve cap");

    const KroneckerOperator op = KroneckerOperator::plain(sys.A);
    const Eigen::MatrixXd Bd = sys.B.to_dense();
    const Eigen::MatrixXd BBt = Bd * Bd.transpose();
    const Eigen::VectorXd b = -Eigen::Map<const Eigen::VectorXd>(BBt.data(), n * n);

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(op.matrix);
    Eigen::VectorXd pvec = lu.solve(b);
    const double scale = std::max(1.0, op.matrix.norm() * pvec.norm() + b.norm());
    if (!pvec.allFinite() || (op.matrix * pvec - b).norm() > 1e-8 * scale)
        throw std::runtime_error("singular Kronecker operator: A is not stable");

    Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(pvec.data(), n, n);
    const double pnorm = std::max(1.0, P.norm());
    const double asym = 0.5 * (P - P.transpose()).norm();
    if (asym > opts.asym_tol * pnorm)
        throw std::runtime_error("Kronecker solution failed the symmetry check");
    P = 0.5 * (P + P.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -opts.psd_tol * pnorm)
        throw std::runtime_error("Kronecker solution failed the semidefiniteness check");
    return P;
}

Eigen::MatrixXd eig_closed_form(const StableSystem& sys, const EigOptions& opts) {
    const Index n = sys.n();
    if (n > opts.cap) throw std::invalid_argument("system exceeds the eigendecomposition cap");

    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A.to_dense(), /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    const Eigen::MatrixXcd V = es.eigenvectors();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const double smin = svd.singularValues().minCoeff();
    if (smin == 0.0 || svd.singularValues().maxCoeff() / smin > opts.cond_cap)
        throw std::runtime_error("A is near-defective: eigenvector matrix is too ill-conditioned");

    const Eigen::MatrixXcd R = V.partialPivLu().solve(sys.B.to_dense().cast<std::complex<double>>());
    const Eigen::MatrixXcd C = cauchy_core(es.eigenvalues());
    const Eigen::MatrixXcd X = -C.cwiseProduct(R * R.adjoint());
    Eigen::MatrixXd P = (V * X * V.adjoint()).real();
    return 0.5 * (P + P.transpose()).eval();
}

double iteration_matrix_radius(const MatrixHandle& A, const ShiftParameter& sigma, Index cap) {
    if (!A.is_square()) throw std::invalid_argument("A must be square");
    const Index n = A.rows();
    if (n > cap) throw std::invalid_argument("system exceeds the iteration-matrix cap");

    const double s = sigma.value();
    const Eigen::MatrixXd Ad = A.to_dense();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd minus_inv = (Ad - s * I).partialPivLu().solve(I);
    Eigen::MatrixXd T = -kron(Ad + s * I, minus_inv);

    Eigen::EigenSolver<Eigen::MatrixXd> es(T, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace oracle
}  // namespace lyapsplit

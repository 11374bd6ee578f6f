#ifndef LYAPSPLIT_TESTS_SUPPORT_HPP
#define LYAPSPLIT_TESTS_SUPPORT_HPP

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lyapsplit/spectral.hpp"
#include "lyapsplit/types.hpp"

namespace lyapsplit::testing {

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd M(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) M(i, j) = gauss(rng);
    return M;
}

inline std::vector<std::complex<double>> eigenvalues_of(const Eigen::MatrixXd& A) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> evs(static_cast<size_t>(A.rows()));
    for (Index i = 0; i < A.rows(); ++i) evs[static_cast<size_t>(i)] = es.eigenvalues()[i];
    return evs;
}

/// Random stable system A = Q - c I with c chosen from the spectrum of Q so
/// that every eigenvalue ends up with Re <= -margin.
inline StableSystem random_stable_system(Index n, Index p, unsigned seed, double margin = 0.6) {
    std::mt19937 rng(seed);
    Eigen::MatrixXd Q = random_matrix(n, n, rng);
    double max_re = 0.0;
    for (const auto& ev : eigenvalues_of(Q)) max_re = std::max(max_re, ev.real());
    Eigen::MatrixXd A = Q - (max_re + margin) * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd B = random_matrix(n, p, rng);
    return StableSystem::make(MatrixHandle::dense(std::move(A)), MatrixHandle::dense(std::move(B)),
                              /*stability_checked=*/true);
}

/// Random stable spectrum closed under conjugation, n entries.
inline std::vector<std::complex<double>> random_stable_spectrum(Index n, unsigned seed,
                                                                double max_im_over_re = 4.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> re_dist(0.05, 5.0);
    std::uniform_real_distribution<double> ratio_dist(0.0, max_im_over_re);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::complex<double>> evs;
    while (static_cast<Index>(evs.size()) < n) {
        const double re = -re_dist(rng);
        if (coin(rng) < 0.5 || static_cast<Index>(evs.size()) + 2 > n) {
            evs.emplace_back(re, 0.0);
        } else {
            const double im = ratio_dist(rng) * std::abs(re);
            evs.emplace_back(re, im);
            evs.emplace_back(re, -im);
        }
    }
    return evs;
}

/// Dense residual ||A P + P A^T + B B^T||_F for cross-checking.
inline double dense_residual(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& B) {
    return (A * P + P * A.transpose() + B * B.transpose()).norm();
}

/// Stable system whose B lies inside a conjugation-closed invariant subspace
/// of dimension k (possibly k+1 when a conjugate pair must be completed).
/// Returns the system and the subspace dimension actually used.
inline std::pair<StableSystem, Index> eigenspace_embedded_system(Index n, Index k, Index p,
                                                                 unsigned seed) {
    std::mt19937 rng(seed);
    const StableSystem base = random_stable_system(n, p, seed);
    Eigen::EigenSolver<Eigen::MatrixXd> es(base.A.to_dense(), /*computeEigenvectors=*/true);

    // Walk the eigenpairs in order, taking conjugate pairs whole.
    std::vector<Index> picked;
    std::vector<bool> used(static_cast<size_t>(n), false);
    for (Index i = 0; i < n && static_cast<Index>(picked.size()) < k; ++i) {
        if (used[static_cast<size_t>(i)]) continue;
        picked.push_back(i);
        used[static_cast<size_t>(i)] = true;
        const auto lam = es.eigenvalues()[i];
        if (std::abs(lam.imag()) > 0.0) {
            for (Index j = 0; j < n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                if (std::abs(es.eigenvalues()[j] - std::conj(lam)) <= 1e-9 * std::abs(lam)) {
                    picked.push_back(j);
                    used[static_cast<size_t>(j)] = true;
                    break;
                }
            }
        }
    }

    // Real basis of the invariant subspace: Re(v) for real pairs, Re/Im once
    // per conjugate pair.
    std::vector<Eigen::VectorXd> cols;
    std::vector<bool> emitted(static_cast<size_t>(n), false);
    for (Index idx : picked) {
        if (emitted[static_cast<size_t>(idx)]) continue;
        emitted[static_cast<size_t>(idx)] = true;
        const auto lam = es.eigenvalues()[idx];
        const Eigen::VectorXcd v = es.eigenvectors().col(idx);
        if (std::abs(lam.imag()) == 0.0) {
            cols.push_back(v.real());
        } else {
            cols.push_back(v.real());
            cols.push_back(v.imag());
            for (Index j : picked)
                if (!emitted[static_cast<size_t>(j)] &&
                    std::abs(es.eigenvalues()[j] - std::conj(lam)) <= 1e-9 * std::abs(lam))
                    emitted[static_cast<size_t>(j)] = true;
        }
    }
    Eigen::MatrixXd basis(n, static_cast<Index>(cols.size()));
    for (size_t c = 0; c < cols.size(); ++c) basis.col(static_cast<Index>(c)) = cols[c];

    const Eigen::MatrixXd coef = random_matrix(basis.cols(), p, rng);
    Eigen::MatrixXd B = basis * coef;
    B *= 1.0 / std::max(1e-12, B.norm());

    return {StableSystem::make(base.A, MatrixHandle::dense(std::move(B)), true),
            static_cast<Index>(picked.size())};
}

}  // namespace lyapsplit::testing

#endif  // LYAPSPLIT_TESTS_SUPPORT_HPP

#include "lyapsplit/warmstart.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace lyapsplit {

namespace {

double projection_residual_of(const Eigen::MatrixXcd& V, const Eigen::MatrixXd& B) {
    if (V.cols() == 0) return B.norm();
    Eigen::MatrixXcd R = V.colPivHouseholderQr().solve(B.cast<std::complex<double>>());
    return (B.cast<std::complex<double>>() - V * R).norm();
}

}  // namespace

EigenBasis select_eigenpairs(const MatrixHandle& A, const MatrixHandle& B, Index k,
                             const SelectOptions& opts) {
    if (!A.is_square()) throw std::invalid_argument("A must be square");
    if (B.rows() != A.rows()) throw std::invalid_argument("B row count does not match A");
    const Index n = A.rows();
    if (k < 1 || k > n) throw std::invalid_argument("requested eigenpair count k must satisfy 1 <= k <= n");
    if (n > opts.dense_cap) throw std::invalid_argument("matrix exceeds the eigensolver cap");

    Eigen::EigenSolver<Eigen::MatrixXd> es(A.to_dense(), /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    const auto& evals = es.eigenvalues();

    // For a real B the meaningful selection unit is conjugation-closed: a
    // real eigenvector alone, or a conjugate pair as a whole. Picking pair
    // members individually lets an unrelated real direction out-correlate
    // half of the pair that actually spans B.
    struct Unit {
        std::vector<std::pair<std::complex<double>, Eigen::VectorXcd>> members;
        std::complex<double> rep;
        Index width() const { return static_cast<Index>(members.size()); }
    };
    std::vector<Unit> units;
    {
        std::vector<bool> grouped(static_cast<size_t>(n), false);
        for (Index i = 0; i < n; ++i) {
            if (grouped[static_cast<size_t>(i)]) continue;
            grouped[static_cast<size_t>(i)] = true;
            const auto lam = evals[i];
            const Eigen::VectorXcd v = es.eigenvectors().col(i).normalized();
            Unit u;
            if (std::abs(lam.imag()) == 0.0) {
                u.members = {{lam, v}};
                u.rep = lam;
            } else {
                Index mate = -1;
                for (Index j = 0; j < n; ++j) {
                    if (grouped[static_cast<size_t>(j)]) continue;
                    if (std::abs(evals[j] - std::conj(lam)) <= 1e-10 * std::max(1.0, std::abs(lam))) {
                        mate = j;
                        break;
                    }
                }
                if (mate >= 0) grouped[static_cast<size_t>(mate)] = true;
                // emit the mate as the exact conjugate so the unit is closed
                u.members = {{lam, v}, {std::conj(lam), v.conjugate()}};
                u.rep = lam.imag() >= 0 ? lam : std::conj(lam);
            }
            units.push_back(std::move(u));
        }
        // deterministic order: real-most units first, then slowest modes
        std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) {
            if (std::abs(a.rep.imag()) != std::abs(b.rep.imag()))
                return std::abs(a.rep.imag()) < std::abs(b.rep.imag());
            if (a.rep.real() != b.rep.real()) return a.rep.real() > b.rep.real();
            return std::abs(a.rep) < std::abs(b.rep);
        });
    }

    const Eigen::MatrixXd Bd = B.to_dense();
    const size_t unit_count = units.size();
    std::vector<bool> taken(unit_count, false);
    std::vector<size_t> selection;
    Index width = 0;

    auto residual_of = [&](const std::vector<size_t>& sel) {
        Index cols = 0;
        for (size_t u : sel) cols += units[u].width();
        Eigen::MatrixXcd V(n, cols);
        Index at = 0;
        for (size_t u : sel)
            for (const auto& m : units[u].members) V.col(at++) = m.second;
        return projection_residual_of(V, Bd);
    };

    // Greedy unit selection by projection-residual reduction; a final pair
    // pick may overshoot k by one, which is the conjugation-closure rule.
    while (width < k) {
        double best = std::numeric_limits<double>::infinity();
        int best_unit = -1;
        for (size_t u = 0; u < unit_count; ++u) {
            if (taken[u]) continue;
            std::vector<size_t> trial = selection;
            trial.push_back(u);
            const double res = residual_of(trial);
            if (best_unit < 0 || res < best - 1e-14 * (1.0 + best)) {
                best = res;
                best_unit = static_cast<int>(u);
            }
        }
        if (best_unit < 0) break;
        taken[static_cast<size_t>(best_unit)] = true;
        selection.push_back(static_cast<size_t>(best_unit));
        width += units[static_cast<size_t>(best_unit)].width();
    }

    // Greedy can still commit to a unit that merely correlates with the
    // target span; deterministic swap passes repair such picks.
    const Index width_cap = std::max(width, k + 1);
    double current = residual_of(selection);
    for (int pass = 0; pass < 3 && current > 1e-13 * (1.0 + Bd.norm()); ++pass) {
        bool improved = false;
        for (size_t slot = 0; slot < selection.size(); ++slot) {
            for (size_t cand = 0; cand < unit_count; ++cand) {
                if (taken[cand]) continue;
                const Index new_width =
                    width - units[selection[slot]].width() + units[cand].width();
                if (new_width > width_cap) continue;
                std::vector<size_t> trial = selection;
                trial[slot] = cand;
                const double res = residual_of(trial);
                if (res < current - 1e-12 * (1.0 + current)) {
                    taken[selection[slot]] = false;
                    taken[cand] = true;
                    selection = std::move(trial);
                    width = new_width;
                    current = res;
                    improved = true;
                }
            }
        }
        if (!improved) break;
    }

    EigenBasis basis;
    basis.V.resize(n, width);
    basis.lambda.resize(width);
    Index at = 0;
    for (size_t u : selection) {
        for (const auto& m : units[u].members) {
            basis.lambda[at] = m.first;
            basis.V.col(at) = m.second;
            ++at;
        }
    }
    basis.closed_under_conjugation = true;
    return basis;
}

double max_eigenpair_residual(const MatrixHandle& A, const EigenBasis& basis) {
    const double anorm = A.fnorm();
    if (anorm == 0.0) return 0.0;
    const Eigen::MatrixXd Ad = A.to_dense();
    double worst = 0.0;
    for (Index j = 0; j < basis.k(); ++j) {
        const Eigen::VectorXcd v = basis.V.col(j);
        const double vn = v.norm();
        if (vn == 0.0) return std::numeric_limits<double>::infinity();
        const double defect = (Ad * v - basis.lambda[j] * v).norm() / (anorm * vn);
        worst = std::max(worst, defect);
    }
    return worst;
}

Eigen::MatrixXcd cauchy_core(const Eigen::Ref<const Eigen::VectorXcd>& lambda) {
    const Index k = lambda.size();
    for (Index i = 0; i < k; ++i)
        if (!(lambda[i].real() < 0.0))
            throw std::invalid_argument("Cauchy core requires eigenvalues with negative real part");
    Eigen::MatrixXcd C(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j)
            C(i, j) = 1.0 / (lambda[i] + std::conj(lambda[j]));
    return C;
}

WarmStartResult warm_start(const EigenBasis& basis, const MatrixHandle& B, double rank_tol) {
    const Index n = basis.V.rows();
    const Index k = basis.k();
    if (B.rows() != n) throw std::invalid_argument("B row count does not match the basis");
    if (k == 0) throw std::invalid_argument("empty eigenbasis");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(basis.V);
    qr.setThreshold(rank_tol);
    if (qr.rank() < k) {
        std::ostringstream msg;
        msg << "rank-deficient eigenbasis: column rank " << qr.rank() << " < k = " << k
            << " (eigenvalues";
        for (Index i = 0; i < k; ++i)
            msg << " " << basis.lambda[i].real() << (basis.lambda[i].imag() >= 0 ? "+" : "")
                << basis.lambda[i].imag() << "i";
        msg << ")";
        throw std::runtime_error(msg.str());
    }

    const Eigen::MatrixXd Bd = B.to_dense();
    const Eigen::MatrixXcd Bc = Bd.cast<std::complex<double>>();
    const Eigen::MatrixXcd R = qr.solve(Bc);

    WarmStartResult result;
    result.projection_residual = (Bc - basis.V * R).norm();

    const Eigen::MatrixXcd C = cauchy_core(basis.lambda);
    result.X = -C.cwiseProduct(R * R.adjoint());

    // Real packaging of Re(V X V^H): with G = V X,
    //   Re(G V^H) = Re(G) Re(V)^T + Im(G) Im(V)^T.
    const Eigen::MatrixXcd G = basis.V * result.X;
    const bool complex_part = basis.V.imag().cwiseAbs().maxCoeff() > 0.0 ||
                              G.imag().cwiseAbs().maxCoeff() > 0.0;
    const Index w = complex_part ? 2 * k : k;
    Eigen::MatrixXd U0(n, w), W0(n, w);
    U0.leftCols(k) = G.real();
    W0.leftCols(k) = basis.V.real();
    if (complex_part) {
        U0.rightCols(k) = G.imag();
        W0.rightCols(k) = basis.V.imag();
    }

    result.P0.n = n;
    result.P0.p = B.cols();
    result.P0.hom = FactoredIterate::Block{std::move(U0), std::move(W0), 1.0};
    return result;
}

}  // namespace lyapsplit

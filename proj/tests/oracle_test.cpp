#include <doctest.h>

#include <cmath>

#include "lyapsplit/oracle.hpp"
#include "support.hpp"

using namespace lyapsplit;
using namespace lyapsplit::oracle;
namespace lt = lyapsplit::testing;

namespace {

StableSystem diag_system(std::initializer_list<double> diag, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Index>(diag.size()),
                                              static_cast<Index>(diag.size()));
    Index i = 0;
    for (double d : diag) A(i, i) = d, ++i;
    return StableSystem::make(MatrixHandle::dense(A), MatrixHandle::dense(B), true);
}

}  // namespace

TEST_CASE("kron_solve on hand-checked systems") {
    const StableSystem d = diag_system({-1.0, -2.0}, Eigen::MatrixXd::Ones(2, 1));
    const Eigen::MatrixXd P = kron_solve(d);
    CHECK(P(0, 0) == doctest::Approx(0.5));
    CHECK(P(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(P(1, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(P(1, 1) == doctest::Approx(0.25));

    const StableSystem s = diag_system({-1.0}, Eigen::MatrixXd::Ones(1, 1));
    CHECK(kron_solve(s)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("kron_solve rejects unstable operators and oversized systems") {
    const StableSystem zero = diag_system({0.0}, Eigen::MatrixXd::Ones(1, 1));
    CHECK_THROWS_AS(kron_solve(zero), std::runtime_error);

    KronOptions opts;
    opts.cap = 3;
    const StableSystem big = lt::random_stable_system(4, 1, 1u);
    CHECK_THROWS_AS(kron_solve(big, opts), std::invalid_argument);
}

TEST_CASE("eig_closed_form matches kron_solve") {
    const StableSystem d = diag_system({-1.0, -2.0}, Eigen::MatrixXd::Ones(2, 1));
    const Eigen::MatrixXd P = eig_closed_form(d);
    CHECK(P(0, 0) == doctest::Approx(0.5));
    CHECK(P(0, 1) == doctest::Approx(1.0 / 3.0));

    Eigen::MatrixXd C(2, 2);
    C << -1.0, 2.0, -2.0, -1.0;
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(2, 1);
    e1(0, 0) = 1.0;
    const StableSystem rot = StableSystem::make(MatrixHandle::dense(C), MatrixHandle::dense(e1), true);
    CHECK((eig_closed_form(rot) - kron_solve(rot)).norm() <= 1e-10);

    // repeated eigenvalue with a full eigenbasis
    Eigen::MatrixXd b10(2, 1);
    b10 << 1.0, 0.0;
    const StableSystem rep = diag_system({-1.0, -1.0}, b10);
    const Eigen::MatrixXd Pr = eig_closed_form(rep);
    CHECK(Pr(0, 0) == doctest::Approx(0.5));
    CHECK(std::abs(Pr(0, 1)) <= 1e-12);
    CHECK(std::abs(Pr(1, 1)) <= 1e-12);
}

TEST_CASE("eig_closed_form rejects near-defective matrices") {
    Eigen::MatrixXd J(2, 2);
    J << -1.0, 1.0, 0.0, -1.0;  // Jordan block
    const StableSystem sys =
        StableSystem::make(MatrixHandle::dense(J), MatrixHandle::dense(Eigen::MatrixXd::Ones(2, 1)), true);
    CHECK_THROWS_WITH_AS(eig_closed_form(sys), doctest::Contains("near-defective"),
                         std::runtime_error);
}

TEST_CASE("iteration matrix radius on known cases") {
    const MatrixHandle a2 = MatrixHandle::dense(Eigen::MatrixXd::Constant(1, 1, -2.0));
    CHECK(iteration_matrix_radius(a2, ShiftParameter(1.0)) == doctest::Approx(1.0 / 3.0));

    const MatrixHandle a1 = MatrixHandle::dense(Eigen::MatrixXd::Constant(1, 1, -1.0));
    CHECK(iteration_matrix_radius(a1, ShiftParameter(1.0)) == doctest::Approx(0.0));

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
    D(0, 0) = -1.0;
    D(1, 1) = -3.0;
    CHECK(iteration_matrix_radius(MatrixHandle::dense(D), ShiftParameter(1.0)) ==
          doctest::Approx(1.0));

    CHECK_THROWS_AS(iteration_matrix_radius(MatrixHandle::dense(-Eigen::MatrixXd::Identity(13, 13)),
                                            ShiftParameter(1.0)),
                    std::invalid_argument);
}

TEST_CASE("the shift cancels in the Kronecker operator") {
    std::mt19937 rng(88u);
    std::uniform_real_distribution<double> sig(0.1, 5.0);
    for (unsigned seed : {201u, 202u, 203u, 204u}) {
        const Index n = 3 + seed % 6;
        const StableSystem sys = lt::random_stable_system(n, 1, seed);
        const double sigma = sig(rng);

        const Eigen::MatrixXd Bd = sys.B.to_dense();
        const Eigen::MatrixXd BBt = Bd * Bd.transpose();
        const Eigen::VectorXd b = -Eigen::Map<const Eigen::VectorXd>(BBt.data(), n * n);

        const Eigen::VectorXd p_plain = KroneckerOperator::plain(sys.A).matrix.partialPivLu().solve(b);
        const Eigen::VectorXd p_shift =
            KroneckerOperator::shifted(sys.A, sigma).matrix.partialPivLu().solve(b);
        CHECK((p_plain - p_shift).norm() <= 1e-10 * std::max(1.0, p_plain.norm()));
    }
}

TEST_CASE("oracles agree on random well-conditioned systems") {
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 3 + trial % 18;
        const StableSystem sys = lt::random_stable_system(n, 1 + trial % 3, 3000u + trial);
        const Eigen::MatrixXd P1 = kron_solve(sys);
        const Eigen::MatrixXd P2 = eig_closed_form(sys);
        CHECK((P1 - P2).norm() <= 1e-8 * std::max(1.0, P1.norm()));

        // declared output contracts: symmetric and PSD to tolerance
        CHECK((P1 - P1.transpose()).norm() == 0.0);  // symmetrized on output
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P1, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, P1.norm()));
    }
}

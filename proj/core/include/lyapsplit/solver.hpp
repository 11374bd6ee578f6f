#ifndef LYAPSPLIT_SOLVER_HPP
#define LYAPSPLIT_SOLVER_HPP

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "lyapsplit/types.hpp"

namespace lyapsplit {

/// Reusable factorization of (A - sigma*I) for repeated multi-column solves.
/// Sparse handles are backed by a sparse LU, dense handles by a partial-pivot
/// LU. Immutable after construction; concurrent solve() calls are safe.
class ShiftedFactorization {
public:
    ShiftedFactorization(const MatrixHandle& A, ShiftParameter sigma);
    ~ShiftedFactorization();
    ShiftedFactorization(ShiftedFactorization&&) noexcept;
    ShiftedFactorization& operator=(ShiftedFactorization&&) noexcept;
    ShiftedFactorization(const ShiftedFactorization&) = delete;
    ShiftedFactorization& operator=(const ShiftedFactorization&) = delete;

    /// (A - sigma*I)^{-1} * rhs for a dense block of right-hand sides.
    Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& rhs) const;

    double sigma() const;
    Index n() const;

    /// Number of solve() calls since construction (or the last reset); each
    /// call counts once regardless of column count.
    long solve_calls() const;
    void reset_solve_calls() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ShiftedFactorization shifted_factorize(const MatrixHandle& A, ShiftParameter sigma);

/// Signed low-rank iterate
///
///   P = sum_i sign_i * U_i * W_i^T  (+ hom.sign * hom.U * hom.W^T)
///
/// From a cold start, after m uncompressed iterations the blocks are exactly
/// sign_i = (-1)^i, U_i = (A-sI)^{-i} B, W_i = (A+sI)^{i-1} B. The optional
/// hom block carries a nonzero starting value, propagated homogeneously.
/// `tail` duplicates the factors of the newest chain term; it seeds the next
/// step and is not part of the represented value (compression rewrites the
/// blocks but keeps the tail, so stepping stays valid).
struct FactoredIterate {
    struct Block {
        Eigen::MatrixXd U;
        Eigen::MatrixXd W;
        double sign = 1.0;  // +1 or -1
    };

    Index n = 0;
    Index p = 0;  // column count of the B-chain blocks
    std::vector<Block> blocks;
    std::optional<Block> hom;
    std::optional<Block> tail;

    Index hom_width() const { return hom ? hom->U.cols() : 0; }
    Index total_block_cols() const;
    bool finite() const;
    Eigen::MatrixXd to_dense() const;
};

/// First iterate from the zero start: one block -(A-sI)^{-1} B B^T.
FactoredIterate cold_start(const StableSystem& sys, const ShiftedFactorization& fact);

/// One splitting iteration: appends the next chain term from the tail (one
/// multi-column solve plus one multi-column shifted multiply) and propagates
/// the hom block by the same two operations when present. The system must be
/// the one the state was built from.
FactoredIterate step(const FactoredIterate& state, const ShiftedFactorization& fact,
                     const StableSystem& sys);

/// Frobenius norm of A*P + P*A^T + B*B^T without forming any n x n matrix:
/// Gram matrices of the stacked factors [A*U | U | B] against [W | A*W | B]
/// and the trace identity. Exact to rounding.
double residual_fnorm(const FactoredIterate& state, const MatrixHandle& A, const MatrixHandle& B);

/// Column compression: orthogonalize the stacked block factors, truncate the
/// singular values of the small core, and rebuild a single block, so that
/// ||P_before - P_after||_F <= rel_tol * ||P_before||_F. The hom block and
/// the chain tail pass through untouched.
FactoredIterate compress(const FactoredIterate& state, double rel_tol);

enum class Termination { Tolerance, MaxIterations, Diverged };

const char* to_string(Termination t);

struct SolveOptions {
    double tol = 1e-8;       // on ||R_k||_F / ||B B^T||_F
    Index max_iters = 500;
    Index compress_every = 10;  // 0 disables periodic compression
    std::optional<FactoredIterate> start;  // treated as a starting value P_0
};

struct SolveReport {
    double sigma = 0.0;
    Index iterations = 0;
    std::vector<double> residual_history;  // entry 0 is the start residual
    double observed_rate = 0.0;            // geometric mean of the last residual ratios
    Termination termination = Termination::MaxIterations;
    double wall_time_seconds = 0.0;
    double symmetry_correction = 0.0;      // ||(P - P^T)/2||_F folded into the output
    long shifted_solves = 0;
    long shifted_multiplies = 0;
    std::vector<double> iter_seconds;      // wall time per iteration
};

/// Run the stationary iteration until the relative residual reaches tol, the
/// iteration budget is exhausted, or divergence/stagnation is detected.
/// Residuals are tracked through the cancellation-free chain recurrence
///   R_k = (A - sI)(P_k - P_{k+1}),
/// and tolerance certification adds a rigorous bound on the residual drift
/// introduced by periodic compression. The returned iterate is the
/// symmetrized value (P + P^T)/2 after a lossless column cleanup.
std::pair<FactoredIterate, SolveReport> run(const StableSystem& sys, ShiftParameter sigma,
                                            const SolveOptions& opts = {});

}  // namespace lyapsplit

#endif  // LYAPSPLIT_SOLVER_HPP

// Command-line front end: read a Lyapunov system A P + P A^T = -B B^T from
// Matrix Market files, pick a shift, run the factored splitting iteration and
// emit low-rank factors plus a JSON report.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "lyapsplit/matrix_io.hpp"
#include "lyapsplit/oracle.hpp"
#include "lyapsplit/solver.hpp"
#include "lyapsplit/spectral.hpp"
#include "lyapsplit/warmstart.hpp"

namespace {

using namespace lyapsplit;

struct RunConfig {
    std::string path_A;
    std::string path_B;
    std::string sigma_mode = "auto";  // auto | exact | FLOAT
    double cone_slope = 20.0;
    double tol = 1e-8;
    Index max_iters = 500;
    Index warm_start_k = 0;
    Index compress_every = 10;
    std::string out_prefix;
};

ShiftParameter resolve_sigma(const RunConfig& cfg, StableSystem& sys) {
    if (cfg.sigma_mode == "auto") {
        const SpectrumInfo summary = summarize(sys.A, SummarizeMode::Estimated);
        const ShiftParameter sigma = heuristic_sigma(summary, cfg.cone_slope);
        std::cerr << "sigma (auto): " << sigma.value() << " from estimated summary r=" << summary.spectral_radius
                  << " |Re|=" << summary.max_abs_real << " |Im|=" << summary.max_abs_imag << "\n";
        return sigma;
    }
    if (cfg.sigma_mode == "exact") {
        const SpectrumInfo full = summarize(sys.A, SummarizeMode::Exact);
        if (!full.all_stable()) throw std::runtime_error("A is not stable: eigenvalue with Re >= 0 found");
        sys.stability_checked = true;
        const double sigma_min = min_convergent_sigma(full);
        // sigma_min = 0 means every positive shift converges; the cone rule
        // then gives a shift with a sensible contraction factor.
        const ShiftParameter sigma =
            sigma_min > 0.0 ? usable_sigma(sigma_min) : heuristic_sigma(full, cfg.cone_slope);
        std::cerr << "sigma (exact): " << sigma.value() << " (bound " << sigma_min << ")\n";
        return sigma;
    }
    char* end = nullptr;
    const double v = std::strtod(cfg.sigma_mode.c_str(), &end);
    if (end == cfg.sigma_mode.c_str() || *end != '\0')
        throw std::runtime_error("invalid --sigma value '" + cfg.sigma_mode + "'");
    if (!(v > 0.0)) throw std::runtime_error("sigma must be positive");
    return ShiftParameter(v);
}

int run_solver(const RunConfig& cfg) {
    StableSystem sys = read_system(cfg.path_A, cfg.path_B);
    const ShiftParameter sigma = resolve_sigma(cfg, sys);

    SolveOptions opts;
    opts.tol = cfg.tol;
    opts.max_iters = cfg.max_iters;
    opts.compress_every = cfg.compress_every;

    if (cfg.warm_start_k > 0) {
        const EigenBasis basis = select_eigenpairs(sys.A, sys.B, cfg.warm_start_k);
        WarmStartResult ws = warm_start(basis, sys.B);
        const double bnorm = sys.B.fnorm();
        std::cerr << "warm start: k=" << basis.k() << ", projection residual "
                  << ws.projection_residual << " (relative "
                  << (bnorm > 0 ? ws.projection_residual / bnorm : 0.0) << ")\n";
        opts.start = std::move(ws.P0);
    }

    auto [iterate, report] = run(sys, sigma, opts);

    if (!cfg.out_prefix.empty()) {
        write_report(report, cfg.out_prefix + ".report.json");
        if (report.termination == Termination::Tolerance)
            write_factors(iterate, cfg.out_prefix + ".factors");
    } else {
        std::cout << report_to_json(report) << "\n";
    }

    const double rel = report.residual_history.empty() || report.residual_history.front() == 0.0
                           ? 0.0
                           : report.residual_history.back() / report.residual_history.front();
    std::cerr << "termination=" << to_string(report.termination) << " iterations=" << report.iterations
              << " relative_residual=" << rel << " rate=" << report.observed_rate
              << " wall=" << report.wall_time_seconds << "s\n";

    switch (report.termination) {
        case Termination::Tolerance: return 0;
        case Termination::MaxIterations: return 2;
        case Termination::Diverged: return 3;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// Built-in desk-scale checks (no filesystem access).

StableSystem seeded_system(Index n, Index p, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd Q(n, n), Bd(n, p);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) Q(i, j) = gauss(rng);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i) Bd(i, j) = gauss(rng);
    Eigen::MatrixXd A = Q - (1.3 * std::sqrt(static_cast<double>(n)) + 1.0) *
                                Eigen::MatrixXd::Identity(n, n);
    const SpectrumInfo full = SpectrumInfo::full([&] {
        Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
        std::vector<std::complex<double>> evs(static_cast<size_t>(n));
        for (Index i = 0; i < n; ++i) evs[static_cast<size_t>(i)] = es.eigenvalues()[i];
        return evs;
    }());
    if (!full.all_stable()) {
        A -= full.max_abs_real * Eigen::MatrixXd::Identity(n, n);
    }
    return StableSystem::make(MatrixHandle::dense(A), MatrixHandle::dense(Bd), true);
}

bool selftest_scalar_series() {
    // a=-2, b=1, sigma=1: P_k -> 1/4 with error (1/4) 3^{-k}.
    const bool corrupt = std::getenv("LYAPSPLIT_SELFTEST_CORRUPT") != nullptr;
    StableSystem sys = StableSystem::make(MatrixHandle::dense(Eigen::MatrixXd::Constant(1, 1, -2.0)),
                                          MatrixHandle::dense(Eigen::MatrixXd::Constant(1, 1, 1.0)), true);
    const ShiftedFactorization fact(sys.A, ShiftParameter(1.0));
    FactoredIterate it = cold_start(sys, fact);
    for (int k = 1; k <= 15; ++k) {
        double value = it.to_dense()(0, 0);
        if (corrupt) value = -value;  // negative-control hook
        const double expected_gap = 0.25 * std::pow(3.0, -k);
        if (std::abs(std::abs(value - 0.25) - expected_gap) > 1e-12) return false;
        it = step(it, fact, sys);
    }
    SolveOptions opts;
    opts.tol = 1e-10;
    const auto [sol, report] = run(sys, ShiftParameter(1.0), opts);
    if (report.termination != Termination::Tolerance) return false;
    if (report.iterations < 20 || report.iterations > 22) return false;
    return std::abs(sol.to_dense()(0, 0) - 0.25) < 1e-10;
}

bool selftest_oracle_agreement() {
    const StableSystem sys = seeded_system(8, 2, 1234u);
    const Eigen::MatrixXd P1 = oracle::kron_solve(sys);
    const Eigen::MatrixXd P2 = oracle::eig_closed_form(sys);
    return (P1 - P2).norm() <= 1e-8 * P1.norm();
}

bool selftest_shift_equivalence() {
    std::mt19937 rng(77u);
    std::uniform_real_distribution<double> uni(0.1, 4.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<std::complex<double>> evs;
        const int n = 2 + trial % 7;
        for (int i = 0; i < n; ++i) {
            const double re = -uni(rng);
            const double im = gauss(rng);
            if (i + 1 < n && std::abs(im) > 1e-3) {
                evs.emplace_back(re, im);
                evs.emplace_back(re, -im);
                ++i;
            } else {
                evs.emplace_back(re, 0.0);
            }
        }
        const SpectrumInfo spec = SpectrumInfo::full(evs);
        const double sigma_min = min_convergent_sigma(spec);
        const double sigma = uni(rng);
        const double rho = convergence_ratio(spec, ShiftParameter(sigma));
        if ((rho < 1.0) != (sigma > sigma_min)) return false;
        if (sigma_min > 0.0) {
            const double rho_at_bound = convergence_ratio(spec, ShiftParameter(sigma_min));
            if (std::abs(rho_at_bound - 1.0) > 1e-12) return false;
        }
    }
    return true;
}

int run_selftest() {
    struct Check {
        const char* name;
        bool (*fn)();
    };
    const Check checks[] = {
        {"scalar-series", selftest_scalar_series},
        {"oracle-cross-agreement", selftest_oracle_agreement},
        {"shift-bound-equivalence", selftest_shift_equivalence},
    };
    int failures = 0;
    for (const auto& check : checks) {
        bool ok = false;
        try {
            ok = check.fn();
        } catch (const std::exception& e) {
            std::cout << "FAIL " << check.name << " (" << e.what() << ")\n";
            ++failures;
            continue;
        }
        std::cout << (ok ? "PASS " : "FAIL ") << check.name << "\n";
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("LYAPSPLIT_THREADS")) {
        const int t = std::atoi(threads);
        if (t > 0) Eigen::setNbThreads(t);
    }

    CLI::App app{"Low-rank splitting solver for Lyapunov equations A P + P A^T = -B B^T"};
    RunConfig cfg;
    bool selftest = false;
    app.add_option("--a", cfg.path_A, "Matrix Market file with the square matrix A");
    app.add_option("--b", cfg.path_B, "Matrix Market file with the right-hand side factor B");
    app.add_option("--sigma", cfg.sigma_mode,
                   "Shift: 'auto' (estimated-summary heuristic), 'exact' (spectrum bound), or a positive number")
        ->capture_default_str();
    app.add_option("--cone-slope", cfg.cone_slope, "Damping-cone slope for the shift heuristic")
        ->capture_default_str();
    app.add_option("--tol", cfg.tol, "Relative residual tolerance")->capture_default_str();
    app.add_option("--max-iters", cfg.max_iters, "Iteration budget")->capture_default_str();
    app.add_option("--warm-start-k", cfg.warm_start_k,
                   "Warm start from this many eigenpairs (0 disables)")
        ->capture_default_str();
    app.add_option("--compress-every", cfg.compress_every,
                   "Compress the factors every N iterations (0 disables)")
        ->capture_default_str();
    app.add_option("--out", cfg.out_prefix,
                   "Output prefix: writes <prefix>.report.json and, on success, <prefix>.factors/");
    app.add_flag("--selftest", selftest, "Run the built-in desk-scale checks and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest) return run_selftest();
        if (cfg.path_A.empty() || cfg.path_B.empty()) {
            std::cerr << "error: --a and --b are required (or use --selftest)\n";
            return 1;
        }
        if (!(cfg.tol > 0.0)) {
            std::cerr << "error: tol must be positive\n";
            return 1;
        }
        return run_solver(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

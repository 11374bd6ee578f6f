#include "lyapsplit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace lyapsplit {

namespace {

void require_full_stable(const SpectrumInfo& spectrum) {
    if (spectrum.kind != SpectrumInfo::Kind::Full)
        throw std::invalid_argument("operation requires a full spectrum, not a summary");
    if (spectrum.eigenvalues.empty())
        throw std::invalid_argument("spectrum is empty");
    if (!spectrum.all_stable())
        throw std::invalid_argument("spectrum contains an eigenvalue with nonnegative real part");
}

}  // namespace

SpectrumInfo SpectrumInfo::full(std::vector<std::complex<double>> eigenvalues) {
    SpectrumInfo info;
    info.kind = Kind::Full;
    info.eigenvalues = std::move(eigenvalues);
    for (const auto& ev : info.eigenvalues) {
        info.spectral_radius = std::max(info.spectral_radius, std::abs(ev));
        info.max_abs_real = std::max(info.max_abs_real, std::abs(ev.real()));
        info.max_abs_imag = std::max(info.max_abs_imag, std::abs(ev.imag()));
    }
    return info;
}

SpectrumInfo SpectrumInfo::summary(double spectral_radius, double max_abs_real, double max_abs_imag) {
    if (spectral_radius < 0 || max_abs_real < 0 || max_abs_imag < 0)
        throw std::invalid_argument("summary fields must be nonnegative");
    SpectrumInfo info;
    info.kind = Kind::Summary;
    info.spectral_radius = spectral_radius;
    info.max_abs_real = max_abs_real;
    info.max_abs_imag = max_abs_imag;
    return info;
}

bool SpectrumInfo::all_stable() const {
    for (const auto& ev : eigenvalues)
        if (!(ev.real() < 0.0)) return false;
    return true;
}

double convergence_ratio(const SpectrumInfo& spectrum, const ShiftParameter& sigma) {
    require_full_stable(spectrum);
    const double s = sigma.value();
    // max over ordered pairs of |l_i + s| / |l_j - s| factors into
    // (max_i |l_i + s|) / (min_j |l_j - s|); denominators stay positive
    // because Re(l_j) < 0 and s > 0.
    double num = 0.0;
    double den = std::numeric_limits<double>::infinity();
    for (const auto& ev : spectrum.eigenvalues) {
        num = std::max(num, std::abs(ev + s));
        den = std::min(den, std::abs(ev - s));
    }
    return num / den;
}

double min_convergent_sigma(const SpectrumInfo& spectrum) {
    require_full_stable(spectrum);
    double bound = 0.0;
    const auto& evs = spectrum.eigenvalues;
    for (const auto& li : evs) {
        for (const auto& lj : evs) {
            const double numerator = std::norm(lj) - std::norm(li);
            const double denominator = 2.0 * (lj.real() + li.real());  // < 0
            bound = std::max(bound, numerator / denominator);
        }
    }
    return bound;
}

ShiftParameter heuristic_sigma(const SpectrumInfo& spectrum, double cone_slope) {
    if (!(cone_slope > 0.0)) throw std::invalid_argument("cone slope must be positive");
    if (!(spectrum.spectral_radius > 0.0))
        throw std::invalid_argument("heuristic shift needs a positive spectral radius");
    const double by_radius = 0.5 * (cone_slope + 1.0) * spectrum.spectral_radius;
    const double by_parts = 0.5 * spectrum.max_abs_real + 0.5 * cone_slope * spectrum.max_abs_imag;
    return ShiftParameter(std::min(by_radius, by_parts));
}

ShiftParameter usable_sigma(double sigma_min, double margin, double floor_eps) {
    if (sigma_min < 0.0) throw std::invalid_argument("sigma_min must be nonnegative");
    if (!(floor_eps > 0.0)) throw std::invalid_argument("floor_eps must be positive");
    return ShiftParameter(std::max(sigma_min * (1.0 + margin), floor_eps));
}

namespace {

// Arnoldi with full reorthogonalization; returns the Ritz values of the
// leading m x m Hessenberg block. Happy breakdown (an exact invariant
// subspace) just truncates the basis.
std::vector<std::complex<double>> arnoldi_ritz_values(const MatrixHandle& A, Index m, unsigned seed) {
    const Index n = A.rows();
    m = std::min(m, n);

    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v0(n);
    for (Index i = 0; i < n; ++i) v0[i] = gauss(rng);
    v0.normalize();

    Eigen::MatrixXd V(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    V.col(0) = v0;

    Index built = 0;
    for (Index j = 0; j < m; ++j) {
        Eigen::VectorXd w = A.apply(V.col(j));
        if (!w.allFinite()) throw std::runtime_error("eigenvalue estimation failed: non-finite Arnoldi vector");
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::VectorXd proj = V.leftCols(j + 1).transpose() * w;
            w -= V.leftCols(j + 1) * proj;
            if (pass == 0) H.block(0, j, j + 1, 1) += proj;
        }
        const double beta = w.norm();
        H(j + 1, j) = beta;
        built = j + 1;
        if (beta < 1e-14) break;  // invariant subspace found
        V.col(j + 1) = w / beta;
    }

    Eigen::MatrixXd Hm = H.topLeftCorner(built, built);
    Eigen::EigenSolver<Eigen::MatrixXd> es(Hm, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigenvalue estimation failed: Hessenberg eigensolve did not converge");

    std::vector<std::complex<double>> ritz(built);
    for (Index i = 0; i < built; ++i) ritz[static_cast<size_t>(i)] = es.eigenvalues()[i];
    return ritz;
}

}  // namespace

SpectrumInfo summarize(const MatrixHandle& A, SummarizeMode mode, const SummarizeOptions& opts) {
    if (!A.is_square()) throw std::invalid_argument("summarize requires a square matrix");

    if (mode == SummarizeMode::Exact) {
        if (A.rows() > opts.dense_cap)
            throw std::invalid_argument("matrix exceeds the dense eigensolver cap");
        Eigen::EigenSolver<Eigen::MatrixXd> es(A.to_dense(), /*computeEigenvectors=*/false);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("dense eigensolver did not converge");
        std::vector<std::complex<double>> evs(static_cast<size_t>(A.rows()));
        for (Index i = 0; i < A.rows(); ++i) evs[static_cast<size_t>(i)] = es.eigenvalues()[i];
        return SpectrumInfo::full(std::move(evs));
    }

    const auto ritz = arnoldi_ritz_values(A, opts.krylov_dim, opts.seed);
    double r = 0.0, re = 0.0, im = 0.0;
    for (const auto& ev : ritz) {
        r = std::max(r, std::abs(ev));
        re = std::max(re, std::abs(ev.real()));
        im = std::max(im, std::abs(ev.imag()));
    }
    const double f = opts.safety_factor;
    return SpectrumInfo::summary(f * r, f * re, f * im);
}

}  // namespace lyapsplit

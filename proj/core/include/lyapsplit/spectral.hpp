#ifndef LYAPSPLIT_SPECTRAL_HPP
#define LYAPSPLIT_SPECTRAL_HPP

#include <complex>
#include <vector>

#include "lyapsplit/types.hpp"

namespace lyapsplit {

/// Spectrum knowledge about A: either the full eigenvalue list or just the
/// three summary magnitudes used by the shift heuristic. For kind==Full the
/// summary fields always equal the maxima over the eigenvalue list.
struct SpectrumInfo {
    enum class Kind { Full, Summary };

    Kind kind = Kind::Summary;
    std::vector<std::complex<double>> eigenvalues;  // populated iff kind==Full
    double spectral_radius = 0.0;                   // max |lambda|
    double max_abs_real = 0.0;                      // max |Re lambda|
    double max_abs_imag = 0.0;                      // max |Im lambda|

    static SpectrumInfo full(std::vector<std::complex<double>> eigenvalues);
    static SpectrumInfo summary(double spectral_radius, double max_abs_real, double max_abs_imag);

    bool all_stable() const;  // every listed eigenvalue has Re < 0 (Full only)
};

/// Asymptotic contraction factor of the stationary splitting with shift
/// sigma: the maximum of |lambda_i + sigma| / |lambda_j - sigma| over all
/// ordered eigenvalue pairs. The iteration converges for every start iff
/// the returned value is < 1. Requires a full stable spectrum.
double convergence_ratio(const SpectrumInfo& spectrum, const ShiftParameter& sigma);

/// Exclusive lower bound on convergent shifts: convergence_ratio(spec, s) < 1
/// iff s > min_convergent_sigma(spec). Returns 0 when every positive shift
/// converges. Requires a full stable spectrum.
double min_convergent_sigma(const SpectrumInfo& spectrum);

/// Shift from the damping-cone rule. Assuming the spectrum lies in the cone
/// |Im| <= k*|Re| of the open left half-plane, returns
///   min( (k+1)/2 * r,  max|Re|/2 + k/2 * max|Im| ),
/// which is always >= min_convergent_sigma for spectra inside the cone.
/// The default slope k=20 corresponds to a 5% damping-ratio margin.
ShiftParameter heuristic_sigma(const SpectrumInfo& spectrum, double cone_slope = 20.0);

/// Turn the exclusive bound from min_convergent_sigma into a usable shift:
/// max(sigma_min * (1 + margin), floor_eps).
ShiftParameter usable_sigma(double sigma_min, double margin = 0.05, double floor_eps = 1e-8);

enum class SummarizeMode { Exact, Estimated };

struct SummarizeOptions {
    Index dense_cap = 500;       // Exact mode refuses larger matrices
    double safety_factor = 1.1;  // inflation applied to Estimated summaries
    Index krylov_dim = 40;       // Arnoldi subspace size in Estimated mode
    unsigned seed = 20240831;    // deterministic start vector
};

/// Exact mode: dense eigensolve, returns kind==Full. Estimated mode: Arnoldi
/// Ritz values give the three extreme magnitudes, each inflated by
/// safety_factor, returned as kind==Summary.
SpectrumInfo summarize(const MatrixHandle& A, SummarizeMode mode, const SummarizeOptions& opts = {});

}  // namespace lyapsplit

#endif  // LYAPSPLIT_SPECTRAL_HPP

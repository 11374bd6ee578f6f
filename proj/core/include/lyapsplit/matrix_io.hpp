#ifndef LYAPSPLIT_MATRIX_IO_HPP
#define LYAPSPLIT_MATRIX_IO_HPP

#include <filesystem>

#include "lyapsplit/solver.hpp"
#include "lyapsplit/types.hpp"

namespace lyapsplit {

/// Matrix Market reader. Accepts `coordinate real general` (loaded sparse,
/// 1-based on disk to 0-based in memory, duplicates summed) and
/// `array real general` (loaded dense, column-major). Anything else is a
/// parse error.
MatrixHandle read_matrix_market(const std::filesystem::path& file);

/// Writers. Scalars are printed with enough digits to round-trip bit-exactly.
void write_matrix_market_dense(const Eigen::MatrixXd& values, const std::filesystem::path& file);
void write_matrix_market_sparse(const Eigen::SparseMatrix<double>& values,
                                const std::filesystem::path& file);

/// Load the pair (A, B). A must be square; B is densified and must have the
/// same row count. The returned system has stability_checked = false.
StableSystem read_system(const std::filesystem::path& path_A, const std::filesystem::path& path_B);

/// Persist an iterate as a directory of dense Matrix Market arrays plus an
/// index.json naming them. The directory is written atomically (staged under
/// a temporary name, renamed on completion). Requires a finite iterate.
void write_factors(const FactoredIterate& iterate, const std::filesystem::path& dir);
FactoredIterate read_factors(const std::filesystem::path& dir);

void write_report(const SolveReport& report, const std::filesystem::path& file);
SolveReport read_report(const std::filesystem::path& file);

/// Report serialization used by both write_report and the CLI.
std::string report_to_json(const SolveReport& report);

}  // namespace lyapsplit

#endif  // LYAPSPLIT_MATRIX_IO_HPP

#include "lyapsplit/matrix_io.hpp"

#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lyapsplit {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::filesystem::path& file, const std::string& what) {
    throw std::runtime_error("failed to parse " + file.string() + ": " + what);
}

// %.17g round-trips IEEE doubles exactly through strtod.
std::string format_scalar(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_scalar(const std::string& tok, const std::filesystem::path& file) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
        parse_fail(file, "bad numeric value '" + tok + "'");
    return v;
}

std::string next_data_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos) continue;
        if (line[pos] == '%') continue;
        return line;
    }
    return {};
}

}  // namespace

MatrixHandle read_matrix_market(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());

    std::string banner;
    if (!std::getline(in, banner)) parse_fail(file, "empty file");
    std::istringstream hs(banner);
    std::string tag, object, format, field, symmetry;
    hs >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || object != "matrix")
        parse_fail(file, "not a Matrix Market matrix header");
    if (field != "real") parse_fail(file, "only the 'real' field is supported");
    if (symmetry != "general") parse_fail(file, "only 'general' symmetry is supported");

    if (format == "coordinate") {
        std::istringstream sz(next_data_line(in));
        long long rows = 0, cols = 0, nnz = 0;
        if (!(sz >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
            parse_fail(file, "bad size line");
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(static_cast<size_t>(nnz));
        for (long long e = 0; e < nnz; ++e) {
            std::istringstream ls(next_data_line(in));
            long long i = 0, j = 0;
            std::string val;
            if (!(ls >> i >> j >> val)) parse_fail(file, "truncated entry list");
            if (i < 1 || i > rows || j < 1 || j > cols) parse_fail(file, "entry index out of bounds");
            entries.emplace_back(static_cast<Index>(i - 1), static_cast<Index>(j - 1),
                                 parse_scalar(val, file));
        }
        return MatrixHandle::sparse_from_triplets(static_cast<Index>(rows),
                                                  static_cast<Index>(cols), entries);
    }
    if (format == "array") {
        std::istringstream sz(next_data_line(in));
        long long rows = 0, cols = 0;
        if (!(sz >> rows >> cols) || rows <= 0 || cols <= 0) parse_fail(file, "bad size line");
        Eigen::MatrixXd values(rows, cols);
        for (long long j = 0; j < cols; ++j) {
            for (long long i = 0; i < rows; ++i) {
                const std::string line = next_data_line(in);
                if (line.empty()) parse_fail(file, "truncated array data");
                std::istringstream ls(line);
                std::string val;
                if (!(ls >> val)) parse_fail(file, "truncated array data");
                values(i, j) = parse_scalar(val, file);
            }
        }
        return MatrixHandle::dense(std::move(values));
    }
    parse_fail(file, "unsupported format '" + format + "'");
}

void write_matrix_market_dense(const Eigen::MatrixXd& values, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out << "%%MatrixMarket matrix array real general\n";
    out << values.rows() << " " << values.cols() << "\n";
    for (Index j = 0; j < values.cols(); ++j)
        for (Index i = 0; i < values.rows(); ++i)
            out << format_scalar(values(i, j)) << "\n";
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

void write_matrix_market_sparse(const Eigen::SparseMatrix<double>& values,
                                const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << values.rows() << " " << values.cols() << " " << values.nonZeros() << "\n";
    for (int k = 0; k < values.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(values, k); it; ++it)
            out << (it.row() + 1) << " " << (it.col() + 1) << " " << format_scalar(it.value())
                << "\n";
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

StableSystem read_system(const std::filesystem::path& path_A, const std::filesystem::path& path_B) {
    MatrixHandle A = read_matrix_market(path_A);
    if (!A.is_square()) throw std::runtime_error("A read from " + path_A.string() + " is not square");
    MatrixHandle B = read_matrix_market(path_B);
    if (B.storage() == MatrixHandle::Storage::SparseCoordinate)
        B = MatrixHandle::dense(B.to_dense());
    if (B.rows() != A.rows())
        throw std::runtime_error("dimension mismatch: B has " + std::to_string(B.rows()) +
                                 " rows, A has " + std::to_string(A.rows()));
    return StableSystem::make(std::move(A), std::move(B), /*stability_checked=*/false);
}

namespace {

json block_entry(const FactoredIterate::Block& b, const std::string& stem,
                 const std::filesystem::path& dir) {
    write_matrix_market_dense(b.U, dir / (stem + "_U.mtx"));
    write_matrix_market_dense(b.W, dir / (stem + "_W.mtx"));
    return json{{"sign", static_cast<int>(b.sign)},
                {"cols", b.U.cols()},
                {"u", stem + "_U.mtx"},
                {"w", stem + "_W.mtx"}};
}

FactoredIterate::Block load_block(const json& entry, const std::filesystem::path& dir) {
    FactoredIterate::Block b;
    b.U = read_matrix_market(dir / entry.at("u").get<std::string>()).to_dense();
    b.W = read_matrix_market(dir / entry.at("w").get<std::string>()).to_dense();
    b.sign = entry.at("sign").get<double>();
    if (b.sign != 1.0 && b.sign != -1.0) throw std::runtime_error("factor block sign must be +-1");
    return b;
}

}  // namespace

void write_factors(const FactoredIterate& iterate, const std::filesystem::path& dir) {
    if (!iterate.finite()) throw std::invalid_argument("refusing to persist a non-finite iterate");

    const std::filesystem::path staging = dir.string() + ".tmp";
    std::filesystem::remove_all(staging);
    std::filesystem::create_directories(staging);

    json index;
    index["format"] = "lyapsplit-factors";
    index["version"] = 1;
    index["n"] = iterate.n;
    index["p"] = iterate.p;
    index["blocks"] = json::array();
    for (size_t i = 0; i < iterate.blocks.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "block_%03zu", i);
        index["blocks"].push_back(block_entry(iterate.blocks[i], stem, staging));
    }
    index["hom"] = iterate.hom ? block_entry(*iterate.hom, "hom", staging) : json(nullptr);
    index["chain_tail"] = iterate.tail ? block_entry(*iterate.tail, "tail", staging) : json(nullptr);

    std::ofstream out(staging / "index.json");
    if (!out) throw std::runtime_error("cannot write factor index in " + staging.string());
    out << index.dump(2) << "\n";
    out.close();
    if (!out) throw std::runtime_error("write failed for factor index in " + staging.string());

    std::filesystem::remove_all(dir);
    std::filesystem::rename(staging, dir);
}

FactoredIterate read_factors(const std::filesystem::path& dir) {
    std::ifstream in(dir / "index.json");
    if (!in) throw std::runtime_error("cannot open factor index in " + dir.string());
    json index = json::parse(in, nullptr, /*allow_exceptions=*/true);
    if (index.value("format", "") != "lyapsplit-factors")
        throw std::runtime_error("not a factor directory: " + dir.string());

    FactoredIterate it;
    it.n = index.at("n").get<Index>();
    it.p = index.at("p").get<Index>();
    for (const auto& entry : index.at("blocks")) it.blocks.push_back(load_block(entry, dir));
    if (!index.at("hom").is_null()) it.hom = load_block(index.at("hom"), dir);
    if (!index.at("chain_tail").is_null()) it.tail = load_block(index.at("chain_tail"), dir);
    return it;
}

std::string report_to_json(const SolveReport& report) {
    json j;
    j["sigma"] = report.sigma;
    j["iterations"] = report.iterations;
    j["residual_history"] = report.residual_history;
    j["termination"] = to_string(report.termination);
    j["observed_rate"] = report.observed_rate;
    j["wall_time_seconds"] = report.wall_time_seconds;
    j["symmetry_correction"] = report.symmetry_correction;
    return j.dump(2);
}

void write_report(const SolveReport& report, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out << report_to_json(report) << "\n";
    if (!out) throw std::runtime_error("write failed for " + file.string());
}

SolveReport read_report(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    json j = json::parse(in);
    SolveReport r;
    r.sigma = j.at("sigma").get<double>();
    r.iterations = j.at("iterations").get<Index>();
    r.residual_history = j.at("residual_history").get<std::vector<double>>();
    const std::string term = j.at("termination").get<std::string>();
    if (term == "tol") r.termination = Termination::Tolerance;
    else if (term == "max_iters") r.termination = Termination::MaxIterations;
    else if (term == "diverged") r.termination = Termination::Diverged;
    else throw std::runtime_error("unknown termination value '" + term + "'");
    r.observed_rate = j.at("observed_rate").get<double>();
    r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    r.symmetry_correction = j.value("symmetry_correction", 0.0);
    return r;
}

}  // namespace lyapsplit

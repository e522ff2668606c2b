#include "qkrr/dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qkrr/rng.hpp"

namespace qkrr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& col) {
    const std::string s = trim(raw);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw std::runtime_error("load_csv: non-numeric cell at row " +
                                 std::to_string(row) + ", column '" + col + "'");
    }
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file '" + path + "'");
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);

    // Resolve the target column: by name first, then as a 0-based index.
    std::ptrdiff_t target = -1;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == trim(target_column)) target = static_cast<std::ptrdiff_t>(j);
    if (target < 0) {
        char* end = nullptr;
        const long idx = std::strtol(target_column.c_str(), &end, 10);
        if (end == target_column.c_str() + target_column.size() && idx >= 0 &&
            idx < static_cast<long>(header.size()))
            target = idx;
    }
    if (target < 0)
        throw std::runtime_error("load_csv: target column '" + target_column +
                                 "' not found in header");

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 0;  // 1-based data row counter
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row_no;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: row " + std::to_string(row_no) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        std::vector<double> vals(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j)
            vals[j] = parse_cell(cells[j], row_no, header[j]);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error("load_csv: no data rows in '" + path + "'");

    const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index n = static_cast<Eigen::Index>(header.size()) - 1;
    Dataset d;
    d.features.resize(m, n);
    d.targets.resize(m);
    for (std::size_t j = 0; j < header.size(); ++j)
        if (static_cast<std::ptrdiff_t>(j) != target) d.feature_names.push_back(header[j]);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index jj = 0;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (static_cast<std::ptrdiff_t>(j) == target)
                d.targets(i) = rows[i][j];
            else
                d.features(i, jj++) = rows[i][j];
        }
    }
    return d;
}

Dataset synthesize(std::uint64_t seed, Eigen::Index samples, Eigen::Index dims,
                   double noise_sd) {
    if (samples < 1 || dims < 1)
        throw std::invalid_argument("synthesize: samples and dims must be >= 1");
    if (noise_sd < 0) throw std::invalid_argument("synthesize: noise_sd must be >= 0");

    Rng rng(seed);
    Dataset d;
    d.features.resize(samples, dims);
    d.targets.resize(samples);
    for (Eigen::Index i = 0; i < samples; ++i)
        for (Eigen::Index j = 0; j < dims; ++j) d.features(i, j) = rng.normal();

    // Target: smooth nonlinear response along a fixed direction w_j = 1/(j+1).
    Eigen::VectorXd w(dims);
    for (Eigen::Index j = 0; j < dims; ++j) w(j) = 1.0 / static_cast<double>(j + 1);
    w.normalize();
    for (Eigen::Index i = 0; i < samples; ++i) {
        const double z = d.features.row(i).dot(w);
        d.targets(i) = std::sin(z) + 0.3 * z * z;
    }
    if (noise_sd > 0)
        for (Eigen::Index i = 0; i < samples; ++i) d.targets(i) += noise_sd * rng.normal();

    for (Eigen::Index j = 0; j < dims; ++j) d.feature_names.push_back("x" + std::to_string(j));
    return d;
}

Dataset standardize(const Dataset& d) {
    const Eigen::Index m = d.samples();
    if (m < 2) throw std::invalid_argument("standardize: need at least 2 samples");

    Dataset out = d;
    for (Eigen::Index j = 0; j < d.dims(); ++j) {
        const double mean = d.features.col(j).mean();
        const double var = (d.features.col(j).array() - mean).square().sum() /
                           static_cast<double>(m);  // population convention
        const double sd = std::sqrt(var);
        if (sd > 0)
            out.features.col(j) = (d.features.col(j).array() - mean) / sd;
        else
            out.features.col(j).setZero();
    }
    out.standardized = true;
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec) {
    if (spec.train_count < 1 || spec.test_count < 0)
        throw std::invalid_argument("split: counts must be positive");
    if (spec.train_count + spec.test_count > d.samples())
        throw std::invalid_argument("split: train_count + test_count exceeds sample count");

    Rng rng(spec.seed);
    const auto idx = rng.sample_without_replacement(
        static_cast<std::size_t>(d.samples()),
        static_cast<std::size_t>(spec.train_count + spec.test_count));

    auto take = [&](std::size_t begin, std::size_t count) {
        Dataset s;
        s.features.resize(static_cast<Eigen::Index>(count), d.dims());
        s.targets.resize(static_cast<Eigen::Index>(count));
        s.feature_names = d.feature_names;
        s.standardized = d.standardized;
        for (std::size_t i = 0; i < count; ++i) {
            s.features.row(static_cast<Eigen::Index>(i)) =
                d.features.row(static_cast<Eigen::Index>(idx[begin + i]));
            s.targets(static_cast<Eigen::Index>(i)) =
                d.targets(static_cast<Eigen::Index>(idx[begin + i]));
        }
        return s;
    };
    return {take(0, static_cast<std::size_t>(spec.train_count)),
            take(static_cast<std::size_t>(spec.train_count),
                 static_cast<std::size_t>(spec.test_count))};
}

}  // namespace qkrr

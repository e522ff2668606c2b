#pragma once

/*
 * Tabular regression datasets: CSV ingestion, synthetic generation,
 * z-scoring and seeded train/test splitting.
 */

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qkrr {

struct Dataset {
    Eigen::MatrixXd features;               // M x N
    Eigen::VectorXd targets;                // M
    std::vector<std::string> feature_names; // N
    bool standardized = false;

    Eigen::Index samples() const { return features.rows(); }
    Eigen::Index dims() const { return features.cols(); }
};

struct SplitSpec {
    Eigen::Index train_count = 0;
    Eigen::Index test_count = 0;
    std::uint64_t seed = 0;
};

// Parse a comma-separated UTF-8 file with a header row.  target_column is a
// header name or a 0-based column index.  Throws std::runtime_error naming
// the offending data row/column on malformed input.
Dataset load_csv(const std::string& path, const std::string& target_column);

// Features i.i.d. standard normal; targets a fixed smooth nonlinear function
// of them plus optional Gaussian noise.  Deterministic in seed.
Dataset synthesize(std::uint64_t seed, Eigen::Index samples, Eigen::Index dims,
                   double noise_sd);

// Per-column z-scoring with the population (1/M) standard deviation
// convention.  Constant columns map to all-zeros.  Requires M >= 2.
Dataset standardize(const Dataset& d);

// Disjoint seeded subsample; identical seed gives identical index sets.
std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec);

}  // namespace qkrr

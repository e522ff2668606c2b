#pragma once

/*
 * Reproducible experiment harness: flat key=value configuration with flag
 * overrides, seeded runs, CSV outputs (header row, 17 significant digits)
 * and a JSON manifest with per-output checksums.  A rerun with the same
 * configuration and seed produces byte-identical CSV bodies; only the
 * manifest timestamp differs.
 */

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "qkrr/encoding.hpp"

namespace qkrr {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class ExperimentKind { entropy_scan, fig3b_scan, verify_inversion, predict, ion_verify };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::predict;

    // Dataset source: CSV path, or the synthetic generator when empty.
    std::string dataset_path;
    std::string target_column = "target";
    std::uint64_t synth_seed = 7;
    int synth_samples = 256;
    int synth_dims = 4;
    double synth_noise = 0.05;
    bool standardize_features = true;

    EncodingKind encoding = EncodingKind::coherent;
    double encoding_scale = 1.0;

    double chi = 0.1;
    double s = 1.0;
    std::vector<double> s_sweep;
    std::vector<double> chi_sweep;
    std::vector<int> sample_counts;

    int train_count = 8;
    int test_count = 4;
    int trials = 1;
    std::uint64_t master_seed = 1;
    std::string out_dir = ".";

    int grid_points = 257;
    double grid_halfwidth_factor = 6.0;

    int nt_max = 20;
    std::vector<int> subset_sizes{1, 2, 3, 4};
    int bins = 65;
    double total_coupling = 1.0;
    int scan_queries = 3;

    std::uint64_t shots = 100000;
    bool shot_mode = false;
    int threads = 0;

    // Serialize every effective setting as key=value pairs (manifest echo).
    std::map<std::string, std::string> as_key_values() const;
};

// Desk-scale defaults per experiment.
ExperimentConfig default_config(ExperimentKind k);

// One key=value assignment; throws std::invalid_argument on unknown keys or
// unparsable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Flat key=value file; '#' starts a comment.  Flags are applied afterwards
// by the caller and therefore win.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

// Exit-code contract: 0 pass, 2 tolerance failure (report experiments only).
// Usage/input errors surface as exceptions and become exit code 1.
int run_entropy_scan(const ExperimentConfig& cfg, std::ostream& log);
int run_fig3b_scan(const ExperimentConfig& cfg, std::ostream& log);
int run_verify_inversion(const ExperimentConfig& cfg, std::ostream& log);
int run_predict(const ExperimentConfig& cfg, std::ostream& log);
int run_ion_verify(const ExperimentConfig& cfg, std::ostream& log);
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// %.17g rendering used for every float written to CSV.
std::string format_g17(double v);

// FNV-1a 64 over a file's bytes, hex string; used by the manifest.
std::string file_checksum(const std::string& path);

// Dataset resolution shared by the runners (CSV or synthetic + optional
// standardization).
Dataset resolve_dataset(const ExperimentConfig& cfg);

}  // namespace qkrr

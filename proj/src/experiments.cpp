#include "qkrr/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qkrr/cv_channel.hpp"
#include "qkrr/dme_channel.hpp"
#include "qkrr/ion_sim.hpp"
#include "qkrr/rng.hpp"
#include "qkrr/spectrum.hpp"

namespace qkrr {

namespace fs = std::filesystem;

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::entropy_scan: return "entropy_scan";
        case ExperimentKind::fig3b_scan: return "fig3b_scan";
        case ExperimentKind::verify_inversion: return "verify_inversion";
        case ExperimentKind::predict: return "predict";
        case ExperimentKind::ion_verify: return "ion_verify";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "entropy_scan") return ExperimentKind::entropy_scan;
    if (s == "fig3b_scan") return ExperimentKind::fig3b_scan;
    if (s == "verify_inversion") return ExperimentKind::verify_inversion;
    if (s == "predict") return ExperimentKind::predict;
    if (s == "ion_verify") return ExperimentKind::ion_verify;
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_g17(v[i]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty list value");
    return out;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    for (double d : parse_doubles(s)) out.push_back(static_cast<int>(d));
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw std::invalid_argument("not a boolean: '" + s + "'");
}

// CSV sink with fixed newline discipline; bodies must be byte-stable.
class CsvFile {
public:
    CsvFile(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
        out_.open(path, std::ios::binary);
        if (!out_) throw std::runtime_error("cannot open output file " + path.string());
        write_row(header);
    }

    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::string close() {
        out_.close();
        return path_.filename().string();
    }

private:
    fs::path path_;
    std::ofstream out_;
};

void write_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& outputs,
                    std::ostream& log) {
    nlohmann::json j;
    j["experiment"] = to_string(cfg.experiment);
    j["artifact_version"] = kArtifactVersion;
    const auto now = std::chrono::system_clock::now();
    j["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                              now.time_since_epoch())
                              .count();
    nlohmann::json conf;
    for (const auto& [k, v] : cfg.as_key_values()) conf[k] = v;
    j["config"] = conf;
    nlohmann::json sums;
    for (const auto& name : outputs)
        sums[name] = file_checksum((fs::path(cfg.out_dir) / name).string());
    j["outputs"] = sums;

    const fs::path mpath = fs::path(cfg.out_dir) / "manifest.json";
    std::ofstream m(mpath, std::ios::binary);
    m << j.dump(2) << '\n';
    log << "manifest: " << mpath.string() << "\n";
}

void ensure_out_dir(const ExperimentConfig& cfg) {
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
}

double population_sd(const std::vector<double>& v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checksum: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return hex;
}

std::map<std::string, std::string> ExperimentConfig::as_key_values() const {
    std::map<std::string, std::string> kv;
    kv["experiment"] = to_string(experiment);
    kv["dataset"] = dataset_path;
    kv["target_column"] = target_column;
    kv["synth_seed"] = std::to_string(synth_seed);
    kv["synth_samples"] = std::to_string(synth_samples);
    kv["synth_dims"] = std::to_string(synth_dims);
    kv["synth_noise"] = format_g17(synth_noise);
    kv["standardize"] = standardize_features ? "true" : "false";
    kv["encoding"] = qkrr::to_string(encoding);
    kv["encoding_scale"] = format_g17(encoding_scale);
    kv["chi"] = format_g17(chi);
    kv["s"] = format_g17(s);
    kv["s_sweep"] = join_doubles(s_sweep);
    kv["chi_sweep"] = join_doubles(chi_sweep);
    kv["sample_counts"] = join_ints(sample_counts);
    kv["train_count"] = std::to_string(train_count);
    kv["test_count"] = std::to_string(test_count);
    kv["trials"] = std::to_string(trials);
    kv["seed"] = std::to_string(master_seed);
    kv["out"] = out_dir;
    kv["grid_points"] = std::to_string(grid_points);
    kv["grid_halfwidth_factor"] = format_g17(grid_halfwidth_factor);
    kv["nt_max"] = std::to_string(nt_max);
    kv["subset_sizes"] = join_ints(subset_sizes);
    kv["bins"] = std::to_string(bins);
    kv["total_coupling"] = format_g17(total_coupling);
    kv["queries"] = std::to_string(scan_queries);
    kv["shots"] = std::to_string(shots);
    kv["shot_mode"] = shot_mode ? "true" : "false";
    kv["threads"] = std::to_string(threads);
    return kv;
}

ExperimentConfig default_config(ExperimentKind k) {
    ExperimentConfig cfg;
    cfg.experiment = k;
    switch (k) {
        case ExperimentKind::entropy_scan:
            cfg.encoding = EncodingKind::squeezed_gaussian;
            cfg.s_sweep = {0.25, 0.5, 1.0};
            cfg.chi_sweep = {};
            cfg.sample_counts = {2, 4, 8, 16, 32, 64, 128};
            cfg.chi = 1e-3;
            cfg.trials = 40;
            cfg.test_count = 64;
            break;
        case ExperimentKind::fig3b_scan:
            cfg.synth_samples = 4;
            cfg.synth_dims = 2;
            cfg.synth_noise = 0.0;
            cfg.encoding = EncodingKind::coherent;
            cfg.chi = 0.1;
            cfg.s = 1.0;
            cfg.trials = 100;
            cfg.s_sweep = {};
            cfg.chi_sweep = {};
            cfg.sample_counts = {};
            break;
        case ExperimentKind::verify_inversion:
            cfg.synth_samples = 4;
            cfg.synth_dims = 2;
            cfg.synth_noise = 0.0;
            cfg.encoding = EncodingKind::coherent;
            cfg.s_sweep = {1.0, 1.5, 2.0, 3.0, 4.0};
            cfg.chi_sweep = {0.0, 0.1, 1.0};
            cfg.sample_counts = {};
            cfg.chi = 1.0;  // used for the success-rate slope fit
            break;
        case ExperimentKind::predict:
            cfg.synth_samples = 16;
            cfg.synth_dims = 3;
            cfg.encoding = EncodingKind::coherent;
            cfg.chi = 0.1;
            cfg.train_count = 8;
            cfg.test_count = 4;
            cfg.s_sweep = {};
            cfg.chi_sweep = {};
            cfg.sample_counts = {};
            break;
        case ExperimentKind::ion_verify:
            cfg.s_sweep = {};
            cfg.chi_sweep = {};
            cfg.sample_counts = {};
            cfg.shots = 100000;
            break;
    }
    return cfg;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "experiment") cfg.experiment = experiment_kind_from_string(value);
        else if (key == "dataset") cfg.dataset_path = value;
        else if (key == "target_column") cfg.target_column = value;
        else if (key == "synth_seed") cfg.synth_seed = std::stoull(value);
        else if (key == "synth_samples") cfg.synth_samples = std::stoi(value);
        else if (key == "synth_dims") cfg.synth_dims = std::stoi(value);
        else if (key == "synth_noise") cfg.synth_noise = std::stod(value);
        else if (key == "standardize") cfg.standardize_features = parse_bool(value);
        else if (key == "encoding") cfg.encoding = encoding_kind_from_string(value);
        else if (key == "encoding_scale") cfg.encoding_scale = std::stod(value);
        else if (key == "chi") cfg.chi = std::stod(value);
        else if (key == "s") cfg.s = std::stod(value);
        else if (key == "s_sweep") cfg.s_sweep = parse_doubles(value);
        else if (key == "chi_sweep") cfg.chi_sweep = parse_doubles(value);
        else if (key == "sample_counts") cfg.sample_counts = parse_ints(value);
        else if (key == "train_count") cfg.train_count = std::stoi(value);
        else if (key == "test_count") cfg.test_count = std::stoi(value);
        else if (key == "trials") cfg.trials = std::stoi(value);
        else if (key == "seed") cfg.master_seed = std::stoull(value);
        else if (key == "out") cfg.out_dir = value;
        else if (key == "grid_points") cfg.grid_points = std::stoi(value);
        else if (key == "grid_halfwidth_factor") cfg.grid_halfwidth_factor = std::stod(value);
        else if (key == "nt_max") cfg.nt_max = std::stoi(value);
        else if (key == "subset_sizes") cfg.subset_sizes = parse_ints(value);
        else if (key == "bins") cfg.bins = std::stoi(value);
        else if (key == "total_coupling") cfg.total_coupling = std::stod(value);
        else if (key == "queries") cfg.scan_queries = std::stoi(value);
        else if (key == "shots") cfg.shots = std::stoull(value);
        else if (key == "shot_mode") cfg.shot_mode = parse_bool(value);
        else if (key == "threads") cfg.threads = std::stoi(value);
        else throw std::invalid_argument("unknown configuration key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad value '" + value + "' for key '" + key + "'");
    }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        };
        apply_setting(cfg, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
}

Dataset resolve_dataset(const ExperimentConfig& cfg) {
    Dataset d = cfg.dataset_path.empty()
                    ? synthesize(cfg.synth_seed, cfg.synth_samples, cfg.synth_dims,
                                 cfg.synth_noise)
                    : load_csv(cfg.dataset_path, cfg.target_column);
    if (cfg.standardize_features && d.samples() >= 2) d = standardize(d);
    return d;
}

// ---- entropy scan -----------------------------------------------------------

int run_entropy_scan(const ExperimentConfig& cfg, std::ostream& log) {
    ensure_out_dir(cfg);
    const Dataset data = resolve_dataset(cfg);

    int max_count = 0;
    for (int c : cfg.sample_counts) max_count = std::max(max_count, c);
    if (cfg.sample_counts.empty() || cfg.s_sweep.empty() || cfg.trials < 1)
        throw std::invalid_argument("entropy_scan: empty sweep");
    if (max_count + cfg.test_count > data.samples())
        throw std::invalid_argument(
            "entropy_scan: dataset too small for sweep (need " +
            std::to_string(max_count + cfg.test_count) + " samples, have " +
            std::to_string(data.samples()) + ")");

    CsvFile csv(fs::path(cfg.out_dir) / "entropy_scan.csv",
                {"sample_count", "s", "mean_entropy", "entropy_sd", "mean_test_mse",
                 "trials", "mean_entropy_log2"});

    for (double s : cfg.s_sweep) {
        const EncodingSpec enc{EncodingKind::squeezed_gaussian, s};
        for (int count : cfg.sample_counts) {
            std::vector<double> entropies, mses;
            entropies.reserve(cfg.trials);
            for (int trial = 0; trial < cfg.trials; ++trial) {
                SplitSpec sp;
                sp.train_count = count;
                sp.test_count = cfg.test_count;
                sp.seed = derive_seed(cfg.master_seed, "entropy-split",
                                      static_cast<std::uint64_t>(trial));
                const auto [train, test] = split(data, sp);

                const KernelMatrix k = gram(train, enc);
                const FeatureBasis basis = feature_basis(k);
                const TrainingState ts = build_training_state(basis);
                entropies.push_back(entanglement_entropy(ts));

                double mse = 0.0;
                for (Eigen::Index i = 0; i < test.samples(); ++i) {
                    Eigen::VectorXd kappa(train.samples());
                    for (Eigen::Index m = 0; m < train.samples(); ++m)
                        kappa(m) = kernel_value(train.features.row(m),
                                                test.features.row(i), enc);
                    const double pred =
                        classical_krr(k, train.targets, cfg.chi * k.trace, kappa);
                    const double e = pred - test.targets(i);
                    mse += e * e;
                }
                mses.push_back(mse / static_cast<double>(test.samples()));
            }
            double mean_s = 0.0, mean_mse = 0.0;
            for (double v : entropies) mean_s += v;
            for (double v : mses) mean_mse += v;
            mean_s /= cfg.trials;
            mean_mse /= cfg.trials;
            csv.write_row({std::to_string(count), format_g17(s), format_g17(mean_s),
                           format_g17(population_sd(entropies, mean_s)),
                           format_g17(mean_mse), std::to_string(cfg.trials),
                           format_g17(mean_s / std::log(2.0))});
        }
    }
    const std::string name = csv.close();
    log << "entropy scan written to " << (fs::path(cfg.out_dir) / name).string() << "\n";
    write_manifest(cfg, {name}, log);
    return 0;
}

// ---- fig3b scan -------------------------------------------------------------

namespace {

struct ScanInstance {
    TrainingState state;
    std::vector<QueryState> queries;
};

ScanInstance make_scan_instance(const ExperimentConfig& cfg) {
    const Dataset data = resolve_dataset(cfg);
    const EncodingSpec enc{cfg.encoding, cfg.encoding_scale};
    const KernelMatrix k = gram(data, enc);
    const FeatureBasis basis = feature_basis(k);

    ScanInstance inst;
    inst.state = build_training_state(basis);

    Rng qrng(derive_seed(cfg.master_seed, "scan-queries", 0));
    for (int i = 0; i < cfg.scan_queries; ++i) {
        Eigen::VectorXd x(data.dims());
        for (Eigen::Index j = 0; j < data.dims(); ++j) x(j) = 0.7 * qrng.normal();
        inst.queries.push_back(make_query_state(data.targets, embed_query(x, data, enc, basis)));
    }
    return inst;
}

}  // namespace

int run_fig3b_scan(const ExperimentConfig& cfg, std::ostream& log) {
    ensure_out_dir(cfg);
    const ScanInstance inst = make_scan_instance(cfg);

    DmeScanConfig sc;
    sc.max_copies = cfg.nt_max;
    sc.subset_sizes = cfg.subset_sizes;
    sc.trials = cfg.trials;
    sc.master_seed = cfg.master_seed;
    sc.s = cfg.s;
    sc.chi = cfg.chi;
    sc.total_coupling = cfg.total_coupling;
    sc.bins = cfg.bins;
    sc.grid_points = cfg.grid_points;
    sc.grid_halfwidth_factor = cfg.grid_halfwidth_factor;
    sc.threads = cfg.threads;

    const auto rows = error_vs_copies_scan(inst.state, inst.queries, sc);

    CsvFile csv(fs::path(cfg.out_dir) / "fig3b_scan.csv",
                {"n_t", "r_m", "mean_abs_err", "std_err", "trials", "seed"});
    for (const auto& r : rows)
        csv.write_row({std::to_string(r.n_t), std::to_string(r.r_m),
                       format_g17(r.mean_abs_err), format_g17(r.std_err),
                       std::to_string(r.trials), std::to_string(r.seed)});
    const std::string name = csv.close();
    log << "copy-budget scan written to " << (fs::path(cfg.out_dir) / name).string() << "\n";
    write_manifest(cfg, {name}, log);
    return 0;
}

// ---- inversion verification ---------------------------------------------------

int run_verify_inversion(const ExperimentConfig& cfg, std::ostream& log) {
    ensure_out_dir(cfg);
    if (cfg.s_sweep.empty() || cfg.chi_sweep.empty())
        throw std::invalid_argument("verify_inversion: empty sweep");
    const ScanInstance inst = make_scan_instance(cfg);
    const TrainingState& t = inst.state;

    constexpr double kDeviationTol = 1e-6;
    constexpr double kSlopeTol = 0.1;

    CsvFile csv(fs::path(cfg.out_dir) / "verify_inversion.csv",
                {"s", "chi", "max_abs_deviation", "imag_residual", "success_probability"});

    bool unreliable = false;
    double worst = 0.0;
    std::string worst_at;
    for (double s : cfg.s_sweep) {
        const QumodeGrid grid = QumodeGrid::make(cfg.grid_halfwidth_factor * s, cfg.grid_points);
        for (double chi : cfg.chi_sweep) {
            PostSelectionResult ana = invert_analytic(t, s, chi);
            double dev = 0.0;
            double imag = 0.0;
            double succ = ana.success_probability;
            try {
                PostSelectionResult num = invert_grid(t, s, chi, grid);
                dev = (num.components - ana.components).cwiseAbs().maxCoeff();
                imag = num.imag_residual;
                succ = num.success_probability;
            } catch (const std::runtime_error& e) {
                log << "grid self-check failed at s=" << s << " chi=" << chi << ": "
                    << e.what() << "\n";
                unreliable = true;
                dev = std::numeric_limits<double>::infinity();
            }
            if (dev > worst) {
                worst = dev;
                worst_at = "s=" + format_g17(s) + " chi=" + format_g17(chi);
            }
            csv.write_row({format_g17(s), format_g17(chi), format_g17(dev),
                           format_g17(imag), format_g17(succ)});
        }
    }

    Eigen::VectorXd s_fit(3);
    s_fit << 8.0, 16.0, 32.0;
    const ScalingFit fit = success_scaling_fit(t, cfg.chi, s_fit);

    const bool dev_ok = worst <= kDeviationTol;
    const bool slope_ok = std::abs(fit.slope + 4.0) <= kSlopeTol;
    if (!dev_ok) unreliable = true;

    log << "max |grid - analytic| = " << format_g17(worst) << " at " << worst_at
        << "  (tolerance " << format_g17(kDeviationTol) << ") -> "
        << (dev_ok ? "PASS" : "FAIL") << "\n";
    log << "success-rate log-log slope over s={8,16,32} at chi=" << format_g17(cfg.chi)
        << ": " << format_g17(fit.slope) << "  (target -4 +- " << format_g17(kSlopeTol)
        << ") -> " << (slope_ok ? "PASS" : "FAIL") << "\n";
    if (unreliable) log << "UNRELIABLE: grid results outside tolerance; refine the grid\n";

    const std::string name = csv.close();
    write_manifest(cfg, {name}, log);
    return (dev_ok && slope_ok) ? 0 : 2;
}

// ---- prediction demo ----------------------------------------------------------

int run_predict(const ExperimentConfig& cfg, std::ostream& log) {
    ensure_out_dir(cfg);
    const Dataset data = resolve_dataset(cfg);
    if (cfg.train_count + cfg.test_count > data.samples())
        throw std::invalid_argument("predict: dataset too small for the requested split");

    SplitSpec sp;
    sp.train_count = cfg.train_count;
    sp.test_count = cfg.test_count;
    sp.seed = derive_seed(cfg.master_seed, "predict-split", 0);
    const auto [train, test] = split(data, sp);

    const EncodingSpec enc{cfg.encoding, cfg.encoding_scale};
    const KernelMatrix k = gram(train, enc);
    // The classical reference below solves against the full kernel, so keep
    // the whole numerically resolvable span; the 1e-10 default would bias the
    // equivalence residual on ill-conditioned kernels.
    const FeatureBasis basis = feature_basis(k, 1e-15);
    const TrainingState ts = build_training_state(basis);
    const TrainedState trained = apply_transform(ts, {TransformKind::ridge_g, cfg.chi, 1.0});
    const double scale = quantum_vs_classical_scale(ts, train.targets, cfg.chi);

    constexpr double kResidualTol = 1e-9;
    bool pass = true;

    CsvFile csv(fs::path(cfg.out_dir) / "predictions.csv",
                {"test_index", "target", "classical_krr", "quantum_overlap",
                 "equivalence_residual", "swap_p_hat", "swap_magnitude", "sign", "shots"});

    for (Eigen::Index i = 0; i < test.samples(); ++i) {
        Eigen::VectorXd kappa(train.samples());
        for (Eigen::Index m = 0; m < train.samples(); ++m)
            kappa(m) = kernel_value(train.features.row(m), test.features.row(i), enc);
        const double classical = classical_krr(k, train.targets, cfg.chi * k.trace, kappa);

        const QueryState q = make_query_state(
            train.targets, embed_query(test.features.row(i), train, enc, basis));
        const double overlap = predict_overlap(trained, q);
        const double raw = predict_overlap_raw(trained, q);
        // relative above unit magnitude, absolute below it
        const double residual = std::abs(raw - scale * classical) /
                                std::max(1.0, std::abs(scale * classical));
        if (residual > kResidualTol) pass = false;

        std::string p_hat = "n/a", magnitude = "n/a", sign, shots_str = "0";
        if (cfg.shot_mode) {
            const SwapTestResult st = swap_test(
                overlap, cfg.shots,
                derive_seed(cfg.master_seed, "predict-shots", static_cast<std::uint64_t>(i)));
            p_hat = format_g17(st.p_hat);
            magnitude = format_g17(st.y_magnitude);
            sign = "n/a";  // the swap test only exposes |overlap|
            shots_str = std::to_string(cfg.shots);
        } else {
            magnitude = format_g17(std::abs(overlap));
            sign = overlap >= 0 ? "+" : "-";
        }
        csv.write_row({std::to_string(i), format_g17(test.targets(i)), format_g17(classical),
                       format_g17(overlap), format_g17(residual), p_hat, magnitude, sign,
                       shots_str});
        log << "test " << i << ": classical=" << format_g17(classical)
            << " overlap=" << format_g17(overlap) << " residual=" << format_g17(residual)
            << "\n";
    }
    log << "chi_classical = chi * Tr K equivalence: "
        << (pass ? "PASS" : "FAIL (residual above 1e-9)") << "\n";

    const std::string name = csv.close();
    write_manifest(cfg, {name}, log);
    return pass ? 0 : 2;
}

// ---- ion gate verification ------------------------------------------------------

namespace {

double w_sequence_state_distance(const WSequence& seq, double eta,
                                 const HybridState& probe) {
    HybridState by_seq = probe;
    for (const GateSpec& g : seq.gates) by_seq = apply_gate(by_seq, g);
    const HybridState exact = apply_gate(probe, GateSpec::hybrid_w(eta));
    return (by_seq.amp - exact.amp).norm();
}

HybridState ion_probe_state(int n_max) {
    // Low-excitation superposition touching both qubit values and both modes.
    HybridState st = HybridState::vacuum(n_max);
    st = apply_gate(st, GateSpec::qubit_rotation(0.4, Eigen::Vector3d(0, 1, 0)));
    st = apply_gate(st, GateSpec::displacement(ModeAxis::x, {0.35, 0.0}));
    st = apply_gate(st, GateSpec::displacement(ModeAxis::y, {0.0, 0.3}));
    return st;
}

}  // namespace

int run_ion_verify(const ExperimentConfig& cfg, std::ostream& log) {
    ensure_out_dir(cfg);
    bool pass = true;

    // W(eta) by the commutator cycle: total error should halve with dt.
    {
        const int n_max = 40;
        const double g = 1.0, eta = 0.08, dt = 0.05;
        const HybridState probe = ion_probe_state(n_max);
        const WSequence s1 = build_w_by_commutator(eta, g, dt);
        const WSequence s2 = build_w_by_commutator(eta, g, dt / 2);
        const double d1 = w_sequence_state_distance(s1, s1.realized_eta, probe);
        const double d2 = w_sequence_state_distance(s2, s2.realized_eta, probe);
        const double ratio = d1 / d2;
        const bool ok = ratio > 1.4 && ratio < 2.6 && probe.leakage() < 1e-6;
        pass = pass && ok;
        log << "W commutator construction: err(dt)=" << format_g17(d1)
            << " err(dt/2)=" << format_g17(d2) << " ratio=" << format_g17(ratio)
            << " convergence order=" << format_g17(std::log2(ratio))
            << " (target 2 +- 30%) -> " << (ok ? "PASS" : "FAIL") << "\n";
    }

    // Conditional swap composite at reduced cutoff.
    {
        const int n_max = 6;
        const double dt = 0.2;
        CswapRegister probe = CswapRegister::zero(n_max);
        // |+> control, small excitations elsewhere
        probe.at(0, 0, 0, 1, 0) = 0.6;
        probe.at(1, 0, 0, 1, 0) = 0.6;
        probe.at(0, 1, 0, 0, 1) = 0.3;
        probe.at(1, 1, 0, 0, 1) = 0.3;
        probe.at(0, 0, 1, 0, 0) = 0.2;
        probe.at(1, 0, 1, 0, 0) = 0.2;
        probe.amp /= probe.amp.norm();

        CswapRegister target = probe;
        apply_target_conditional_swap(target, dt);

        CswapRegister exact = probe;
        apply_conditional_swap_composite(exact, conditional_swap_compose(dt), true);
        const double err_exact = (exact.amp - target.amp).norm();

        const double g = 1.0, w_dt = 0.05;
        CswapRegister approx = probe;
        apply_conditional_swap_composite(approx, conditional_swap_compose(dt), false, g, w_dt);
        const double err_approx = (approx.amp - target.amp).norm();

        // W-construction budget: the sequence-vs-ideal distance on the state
        // actually entering the W stage.  The surrounding elements are
        // unitary, so the composite error must not exceed it.
        CswapRegister mid = probe;
        apply_cswap_control(mid);
        apply_control_hadamard(mid);
        CswapRegister w_ideal_state = mid, w_seq_state = mid;
        apply_w_ideal(w_ideal_state, dt);
        apply_w_sequence(w_seq_state, build_w_by_commutator(dt, g, w_dt));
        const double budget = (w_seq_state.amp - w_ideal_state.amp).norm();

        const bool ok = err_exact < 1e-8 && err_approx <= budget + 1e-8;
        pass = pass && ok;
        log << "conditional swap composite: exact-W error=" << format_g17(err_exact)
            << " commutator-W error=" << format_g17(err_approx)
            << " (W budget " << format_g17(budget) << ") -> "
            << (ok ? "PASS" : "FAIL") << "\n";
    }

    // Gate-level swap test vs the coherent-state overlap.
    {
        const int n_max = 40;
        const double h1 = 0.3, h2 = 1.0;
        Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(n_max + 1);
        e0(0) = 1.0;
        const Eigen::VectorXcd a =
            single_mode_unitary(GateSpec::displacement(ModeAxis::x, {h1, 0.0}), n_max) * e0;
        const Eigen::VectorXcd b =
            single_mode_unitary(GateSpec::displacement(ModeAxis::x, {h2, 0.0}), n_max) * e0;
        const double overlap2 = std::exp(-(h1 - h2) * (h1 - h2));
        const double p = 0.5 * (1.0 + overlap2);
        const SwapTestResult st = gate_level_swap_test(
            a, b, cfg.shots, derive_seed(cfg.master_seed, "ion-swap", 0));
        const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.shots));
        const bool ok = std::abs(st.p_hat - p) <= 3.0 * sigma;
        pass = pass && ok;
        log << "gate-level swap test: p_hat=" << format_g17(st.p_hat) << " analytic p="
            << format_g17(p) << " |diff|=" << format_g17(std::abs(st.p_hat - p))
            << " (3 sigma = " << format_g17(3.0 * sigma) << ") -> "
            << (ok ? "PASS" : "FAIL") << "\n";
    }

    log << "ion gate verification: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 2;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    switch (cfg.experiment) {
        case ExperimentKind::entropy_scan: return run_entropy_scan(cfg, log);
        case ExperimentKind::fig3b_scan: return run_fig3b_scan(cfg, log);
        case ExperimentKind::verify_inversion: return run_verify_inversion(cfg, log);
        case ExperimentKind::predict: return run_predict(cfg, log);
        case ExperimentKind::ion_verify: return run_ion_verify(cfg, log);
    }
    throw std::logic_error("run_experiment: unreachable");
}

}  // namespace qkrr

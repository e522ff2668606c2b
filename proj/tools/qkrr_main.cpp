/*
 * Command-line harness for the quantum kernel-regression simulator.
 *
 * Subcommands map one-to-one onto the experiment runners; every run writes
 * its CSV outputs plus a manifest.json with the effective configuration and
 * per-output checksums.  Settings come from an optional flat key=value
 * config file, overridden by flags (flags win).
 *
 * Exit codes: 0 success / all tolerances met, 1 usage or input error,
 * 2 tolerance failure in a verification experiment.
 */

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qkrr/experiments.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "flat key=value config file");
    auto track = [&flags](const std::string& key) {
        return [&flags, key](const std::string& v) {
            flags.overrides.emplace_back(key, v);
        };
    };
    cmd->add_option_function<std::string>("--seed", track("seed"), "master seed (u64)");
    cmd->add_option_function<std::string>("--out", track("out"), "output directory");
    cmd->add_option_function<std::string>("--trials", track("trials"), "trial count");
    cmd->add_option_function<std::string>("--dataset", track("dataset"),
                                          "CSV dataset path (default: synthetic)");
    cmd->add_option_function<std::string>("--target-column", track("target_column"),
                                          "target column name or index");
    cmd->add_option_function<std::string>("--encoding", track("encoding"),
                                          "coherent | squeezed_gaussian | raw_amplitude");
    cmd->add_option_function<std::string>("--encoding-scale", track("encoding_scale"),
                                          "kernel squeezing factor");
    cmd->add_option_function<std::string>("--chi", track("chi"), "regularization chi");
    cmd->add_option_function<std::string>("--s", track("s"), "ancilla squeezing s");
    cmd->add_option_function<std::string>("--s-sweep", track("s_sweep"),
                                          "comma-separated s values");
    cmd->add_option_function<std::string>("--chi-sweep", track("chi_sweep"),
                                          "comma-separated chi values");
    cmd->add_option_function<std::string>("--sample-counts", track("sample_counts"),
                                          "comma-separated sample counts");
    cmd->add_option_function<std::string>("--test-count", track("test_count"),
                                          "held-out test points");
    cmd->add_option_function<std::string>("--train-count", track("train_count"),
                                          "training points (predict)");
    cmd->add_option_function<std::string>("--grid-points", track("grid_points"),
                                          "qumode grid points (odd)");
    cmd->add_option_function<std::string>("--bins", track("bins"), "theta bins");
    cmd->add_option_function<std::string>("--nt-max", track("nt_max"), "max copy budget");
    cmd->add_option_function<std::string>("--subset-sizes", track("subset_sizes"),
                                          "comma-separated R_M values");
    cmd->add_option_function<std::string>("--shots", track("shots"), "swap-test shots");
    cmd->add_option_function<std::string>("--shot-mode", track("shot_mode"),
                                          "sample the swap test instead of exact readout");
    cmd->add_option_function<std::string>("--threads", track("threads"), "worker threads");
    cmd->add_option_function<std::string>("--synth-seed", track("synth_seed"),
                                          "synthetic dataset seed");
    cmd->add_option_function<std::string>("--synth-samples", track("synth_samples"),
                                          "synthetic dataset size");
    cmd->add_option_function<std::string>("--synth-dims", track("synth_dims"),
                                          "synthetic feature count");
    cmd->add_option_function<std::string>("--synth-noise", track("synth_noise"),
                                          "synthetic target noise sd");
    cmd->add_option_function<std::string>("--standardize", track("standardize"),
                                          "z-score features (true/false)");
    cmd->add_option_function<std::string>("--queries", track("queries"),
                                          "query points for the copy-budget scan");
    cmd->add_option_function<std::string>("--total-coupling", track("total_coupling"),
                                          "total qx*qy coupling T");
}

int run(qkrr::ExperimentKind kind, const CommonFlags& flags) {
    qkrr::ExperimentConfig cfg = qkrr::default_config(kind);
    if (!flags.config_path.empty()) qkrr::load_config_file(cfg, flags.config_path);
    for (const auto& [k, v] : flags.overrides) qkrr::apply_setting(cfg, k, v);
    return qkrr::run_experiment(cfg, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qkrr - desk-scale simulator of quantum kernel ridge regression"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        qkrr::ExperimentKind kind;
    };
    const Sub subs[] = {
        {"entropy-scan", "entanglement entropy and test error vs sample count",
         qkrr::ExperimentKind::entropy_scan},
        {"fig3b-scan", "prediction error vs copy budget and subset size",
         qkrr::ExperimentKind::fig3b_scan},
        {"verify-inversion", "grid vs analytic inversion channel and success-rate slope",
         qkrr::ExperimentKind::verify_inversion},
        {"predict", "classical KRR vs quantum overlap prediction on a test split",
         qkrr::ExperimentKind::predict},
        {"ion-verify", "trapped-ion gate constructions and swap-test statistics",
         qkrr::ExperimentKind::ion_verify},
    };

    std::vector<CommonFlags> flags(std::size(subs));
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(cmd, flags[i]);
        cmds.push_back(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < std::size(subs); ++i)
            if (cmds[i]->parsed()) return run(subs[i].kind, flags[i]);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

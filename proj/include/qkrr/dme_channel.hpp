#pragma once

/*
 * Density-matrix-exponentiation channel with a finite copy budget.
 *
 * One step couples the data register to a sampled copy sigma through the
 * conditional swap e^{i a S} and traces the copy out.  Expanding
 * e^{iaS} = cos a + i sin a S gives the exact block map
 *
 *   E(X; a, b) = cos a cos b X + i sin a cos b sigma X
 *              - i cos a sin b X sigma + sin a sin b tr(X) sigma,
 *
 * which at a = b = delta equals X + i delta [sigma, X] + O(delta^2): one
 * Trotter step of e^{i sigma delta} conjugation plus the per-step O(dt^2)
 * sampling-channel noise.
 *
 * The two ancilla qumodes never need a field representation: every gate in
 * the pipeline acts on them as e^{i(.) qx qy}, so the joint state enters
 * only through the law of theta = qx*qy under |psi(qx)|^2 |psi(qy)|^2
 * (ThetaMeasure) and its (theta, theta') coherence blocks.  A block with
 * ket value theta and bra value theta' evolves by N_t steps with angles
 * (theta dt, theta' dt), picks up the exact regularization phase
 * e^{i chi (theta - theta')}, and the post-selected output is the
 * measure-weighted double sum over blocks.  Blocks satisfy
 * B(theta',theta) = B(theta,theta')^dagger, so only ordered pairs are
 * evolved.  The prediction is extracted from the (generally mixed)
 * unnormalized output as sqrt(<psi_R| rho |psi_R> / tr rho) - the magnitude
 * a swap test exposes; its sign is not observable from this channel.
 */

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qkrr/cv_channel.hpp"
#include "qkrr/rng.hpp"
#include "qkrr/spectrum.hpp"

namespace qkrr {

struct DMEPlan {
    int copies = 1;              // N_t
    int subset_size = 1;         // R_M, at most M
    double total_coupling = 1.0; // T; step dt = T / N_t
    std::uint64_t seed = 0;
    int trials = 1;

    double step() const { return total_coupling / static_cast<double>(copies); }
};

struct ThetaMeasure {
    Eigen::VectorXd nodes;    // bin representatives (per-bin mean of theta)
    Eigen::VectorXd weights;  // sum 1, symmetric about 0
};

// Law of theta = qx*qy under the squeezed-ancilla position density, binned
// uniformly in asinh(theta / (s^2/2)); each node is its bin's conditional
// mean, so first moments are exact per bin.  Empty bins are dropped.
ThetaMeasure theta_measure(double s, const QumodeGrid& grid, int bins);

// sigma = (1/R_M) sum over a uniformly random R_M-subset of the normalized
// encoded-state projectors.  Trace 1, PSD; expectation over draws is rho_K.
Eigen::MatrixXd sample_copy(const FeatureBasis& basis, int subset_size, Rng& rng);

// The exact one-step block map above; reference implementation.
Eigen::MatrixXcd dme_step_exact(const Eigen::MatrixXcd& X, const Eigen::MatrixXd& sigma,
                                double left_angle, double right_angle);

struct BlockChannel {
    double left_angle = 0.0;
    double right_angle = 0.0;

    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& X, const Eigen::MatrixXd& sigma) const {
        return dme_step_exact(X, sigma, left_angle, right_angle);
    }
};

struct DMEPipelineResult {
    double prediction = 0.0;           // magnitude of the normalized overlap
    double success_probability = 0.0;  // trace of the unnormalized output
};

// Full channel with plan.copies sampled copies (fresh copy per step, shared
// across coherence blocks within the step).
DMEPipelineResult run_pipeline_dme(const TrainingState& t, const QueryState& q,
                                   const DMEPlan& plan, double s, double chi,
                                   const ThetaMeasure& measure);

struct DmeScanRow {
    int n_t = 0;
    int r_m = 0;
    double mean_abs_err = 0.0;
    double std_err = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

struct DmeScanConfig {
    int max_copies = 20;
    std::vector<int> subset_sizes = {1, 2, 3, 4};
    int trials = 100;
    std::uint64_t master_seed = 1;
    double s = 1.0;
    double chi = 0.1;
    double total_coupling = 1.0;
    int bins = 65;
    int grid_points = 257;
    double grid_halfwidth_factor = 6.0;  // Q = factor * s
    int threads = 0;                     // 0 = hardware concurrency
};

// Mean absolute deviation of the channel prediction from the analytic
// post-selection prediction, per (N_t, R_M), averaged over the queries and
// over trials of the copy-subset randomness.  For R_M = M the copies are
// exact and a single trial is reported.  Deterministic in master_seed; the
// per-trial copy sequences are drawn up front and results are reduced in
// trial order, so the thread count cannot change the output.
std::vector<DmeScanRow> error_vs_copies_scan(const TrainingState& t,
                                             const std::vector<QueryState>& queries,
                                             const DmeScanConfig& cfg);

}  // namespace qkrr

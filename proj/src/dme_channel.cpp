#include "qkrr/dme_channel.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <thread>

namespace qkrr {

using Cx = std::complex<double>;

ThetaMeasure theta_measure(double s, const QumodeGrid& grid, int bins) {
    if (s <= 0) throw std::invalid_argument("theta_measure: s must be > 0");
    if (bins < 1 || bins % 2 == 0)
        throw std::invalid_argument("theta_measure: bins must be odd and >= 1");

    const SqueezedAncilla anc{s};
    const int g = grid.points;
    Eigen::VectorXd ww(g);
    for (int i = 0; i < g; ++i) ww(i) = grid.weights(i) * anc.position_density(grid.nodes(i));
    const double norm = ww.sum();
    if (std::abs(norm - 1.0) > 1e-4)
        throw std::runtime_error("theta_measure: grid too coarse, ancilla norm off by " +
                                 std::to_string(std::abs(norm - 1.0)));
    ww /= norm;

    const double theta_scale = 0.5 * s * s;  // E[theta^2] = (s^2/2)^2
    const double u_max =
        std::asinh(grid.half_width * grid.half_width / theta_scale) * (1.0 + 1e-12);
    const double du = 2.0 * u_max / static_cast<double>(bins);
    const int center = (bins - 1) / 2;

    Eigen::VectorXd wsum = Eigen::VectorXd::Zero(bins);
    Eigen::VectorXd tsum = Eigen::VectorXd::Zero(bins);
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const double theta = grid.nodes(i) * grid.nodes(j);
            const double w = ww(i) * ww(j);
            // Offset from the central bin, mirrored so that +-theta land in
            // mirrored bins no matter how edge rounding falls.
            const int k = std::min(
                static_cast<int>(std::asinh(std::abs(theta) / theta_scale) / du + 0.5),
                center);
            const int b = theta < 0 ? center - k : center + k;
            wsum(b) += w;
            tsum(b) += w * theta;
        }
    }

    int used = 0;
    for (int b = 0; b < bins; ++b)
        if (wsum(b) > 0) ++used;
    ThetaMeasure m;
    m.nodes.resize(used);
    m.weights.resize(used);
    int k = 0;
    for (int b = 0; b < bins; ++b) {
        if (wsum(b) > 0) {
            m.nodes(k) = tsum(b) / wsum(b);
            m.weights(k) = wsum(b);
            ++k;
        }
    }
    return m;
}

namespace {

// Unit-norm encoded-state rows recovered from the amplitude matrix.
Eigen::MatrixXd encoded_rows(const Eigen::MatrixXd& coordinates) {
    Eigen::MatrixXd rows = coordinates;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double n = rows.row(i).norm();
        if (n == 0.0) throw std::invalid_argument("sample_copy: zero encoded state");
        rows.row(i) /= n;
    }
    return rows;
}

Eigen::MatrixXd copy_from_rows(const Eigen::MatrixXd& rows, int subset_size, Rng& rng) {
    const Eigen::Index m = rows.rows();
    if (subset_size < 1 || subset_size > m)
        throw std::invalid_argument("sample_copy: subset_size out of range");
    const auto idx =
        rng.sample_without_replacement(static_cast<std::size_t>(m),
                                       static_cast<std::size_t>(subset_size));
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(rows.cols(), rows.cols());
    for (const std::size_t i : idx) {
        const Eigen::VectorXd v = rows.row(static_cast<Eigen::Index>(i));
        sigma.noalias() += v * v.transpose();
    }
    return sigma / static_cast<double>(subset_size);
}

// One block step on split real/imaginary parts; two real products per part
// instead of complex arithmetic.  Scratch matrices are caller-owned so the
// hot loop never allocates.
struct StepScratch {
    Eigen::MatrixXd sR, sI, Rs, Is;

    void resize(Eigen::Index d) {
        sR.resize(d, d);
        sI.resize(d, d);
        Rs.resize(d, d);
        Is.resize(d, d);
    }

    void step(Eigen::MatrixXd& Xr, Eigen::MatrixXd& Xi, const Eigen::MatrixXd& sg,
              double ca, double sa, double cb, double sb) {
        const double cacb = ca * cb, sacb = sa * cb, casb = ca * sb, sasb = sa * sb;
        sR.noalias() = sg * Xr;
        sI.noalias() = sg * Xi;
        Rs.noalias() = Xr * sg;
        Is.noalias() = Xi * sg;
        const double trR = Xr.trace(), trI = Xi.trace();
        Xr = cacb * Xr - sacb * sI + casb * Is + (sasb * trR) * sg;
        Xi = cacb * Xi + sacb * sR - casb * Rs + (sasb * trI) * sg;
    }
};

struct PipelineOutput {
    std::vector<double> numerators;  // <c_q| rho_out |c_q> per query
    double trace = 0.0;              // tr rho_out = success probability
};

// Evolve the two needed feature-space inputs (|w><w| for the numerator and
// rho_K for the trace) through all ordered coherence blocks.
PipelineOutput pipeline_core(const Eigen::MatrixXd& X0, const Eigen::MatrixXd& K0,
                             const std::vector<Eigen::MatrixXd>& copies, int n_t,
                             double dt, double chi, const ThetaMeasure& measure,
                             const std::vector<Eigen::VectorXd>& queries) {
    const Eigen::Index d = X0.rows();
    const Eigen::Index nb = measure.nodes.size();
    StepScratch scratch;
    scratch.resize(d);
    Eigen::MatrixXd Xr(d, d), Xi(d, d), Kr(d, d), Ki(d, d);

    PipelineOutput out;
    out.numerators.assign(queries.size(), 0.0);
    double den = 0.0;

    for (Eigen::Index k = 0; k < nb; ++k) {
        const double a = measure.nodes(k) * dt;
        const double ca = std::cos(a), sa = std::sin(a);
        for (Eigen::Index l = k; l < nb; ++l) {
            const double b = measure.nodes(l) * dt;
            const double cb = std::cos(b), sb = std::sin(b);
            Xr = X0;
            Xi.setZero();
            Kr = K0;
            Ki.setZero();
            for (int t = 0; t < n_t; ++t) {
                scratch.step(Xr, Xi, copies[static_cast<std::size_t>(t)], ca, sa, cb, sb);
                scratch.step(Kr, Ki, copies[static_cast<std::size_t>(t)], ca, sa, cb, sb);
            }
            // Regularization gate: exact phase e^{i chi (theta - theta')}.
            const double dtheta = chi * (measure.nodes(k) - measure.nodes(l));
            const Cx phase(std::cos(dtheta), std::sin(dtheta));
            const double w = measure.weights(k) * measure.weights(l);
            const double fold = (l == k) ? 1.0 : 2.0;  // B(l,k) = B(k,l)^dagger

            den += fold * w *
                   (phase * Cx(Kr.trace(), Ki.trace())).real();
            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                const Eigen::VectorXd& c = queries[qi];
                const Cx val(c.dot(Xr * c), c.dot(Xi * c));
                out.numerators[qi] += fold * w * (phase * val).real();
            }
        }
    }
    out.trace = den;
    return out;
}

}  // namespace

Eigen::MatrixXd sample_copy(const FeatureBasis& basis, int subset_size, Rng& rng) {
    return copy_from_rows(encoded_rows(basis.coordinates), subset_size, rng);
}

Eigen::MatrixXcd dme_step_exact(const Eigen::MatrixXcd& X, const Eigen::MatrixXd& sigma,
                                double left_angle, double right_angle) {
    if (X.rows() != X.cols() || sigma.rows() != sigma.cols() || X.rows() != sigma.rows())
        throw std::invalid_argument("dme_step_exact: dimension mismatch");
    const double ca = std::cos(left_angle), sa = std::sin(left_angle);
    const double cb = std::cos(right_angle), sb = std::sin(right_angle);
    const Eigen::MatrixXcd sc = sigma.cast<Cx>();
    return ca * cb * X + Cx(0, 1) * sa * cb * (sc * X) - Cx(0, 1) * ca * sb * (X * sc) +
           sa * sb * X.trace() * sc;
}

DMEPipelineResult run_pipeline_dme(const TrainingState& t, const QueryState& q,
                                   const DMEPlan& plan, double s, double chi,
                                   const ThetaMeasure& measure) {
    if (plan.copies < 1) throw std::invalid_argument("run_pipeline_dme: copies must be >= 1");
    if (s <= 0 || chi < 0) throw std::invalid_argument("run_pipeline_dme: bad channel parameters");
    (void)s;

    const Eigen::MatrixXd rows =
        encoded_rows(t.amplitudes * std::sqrt(static_cast<double>(t.sample_count())));
    Rng rng(plan.seed);
    std::vector<Eigen::MatrixXd> copies;
    copies.reserve(static_cast<std::size_t>(plan.copies));
    for (int i = 0; i < plan.copies; ++i)
        copies.push_back(copy_from_rows(rows, plan.subset_size, rng));

    const Eigen::VectorXd w = t.amplitudes.transpose() * q.target_part;
    const Eigen::MatrixXd X0 = w * w.transpose();
    const Eigen::MatrixXd K0 = t.amplitudes.transpose() * t.amplitudes;

    const auto out = pipeline_core(X0, K0, copies, plan.copies, plan.step(), chi, measure,
                                   {q.feature_part});
    if (!(out.trace > 0))
        throw std::runtime_error("run_pipeline_dme: non-positive success probability");
    DMEPipelineResult r;
    r.success_probability = out.trace;
    r.prediction = std::sqrt(std::max(0.0, out.numerators[0]) / out.trace);
    return r;
}

std::vector<DmeScanRow> error_vs_copies_scan(const TrainingState& t,
                                             const std::vector<QueryState>& queries,
                                             const DmeScanConfig& cfg) {
    if (queries.empty()) throw std::invalid_argument("error_vs_copies_scan: no queries");
    if (cfg.max_copies < 1 || cfg.trials < 1 || cfg.subset_sizes.empty())
        throw std::invalid_argument("error_vs_copies_scan: bad scan configuration");

    const QumodeGrid grid = QumodeGrid::make(cfg.grid_halfwidth_factor * cfg.s, cfg.grid_points);
    const ThetaMeasure measure = theta_measure(cfg.s, grid, cfg.bins);

    // Reference: the analytic finite-squeezing post-selection, magnitude.
    const PostSelectionResult exact = invert_analytic(t, cfg.s, cfg.chi);
    std::vector<double> ref(queries.size());
    std::vector<Eigen::VectorXd> qcoords(queries.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        ref[qi] = std::abs(predict_overlap(exact.normalized_state, queries[qi]));
        qcoords[qi] = queries[qi].feature_part;
    }

    const Eigen::MatrixXd rows =
        encoded_rows(t.amplitudes * std::sqrt(static_cast<double>(t.sample_count())));
    const Eigen::VectorXd w = t.amplitudes.transpose() * queries[0].target_part;
    const Eigen::MatrixXd X0 = w * w.transpose();
    const Eigen::MatrixXd K0 = t.amplitudes.transpose() * t.amplitudes;

    std::vector<DmeScanRow> out;
    for (std::size_t ri = 0; ri < cfg.subset_sizes.size(); ++ri) {
        const int r_m = cfg.subset_sizes[ri];
        const bool exact_copies = (r_m == t.sample_count());
        const int trials = exact_copies ? 1 : cfg.trials;

        // errors[trial][n_t - 1]
        std::vector<std::vector<double>> errors(
            static_cast<std::size_t>(trials),
            std::vector<double>(static_cast<std::size_t>(cfg.max_copies), 0.0));

        auto worker = [&](int trial_begin, int trial_end) {
            for (int trial = trial_begin; trial < trial_end; ++trial) {
                Rng rng(derive_seed(cfg.master_seed, "dme-scan-copies",
                                    static_cast<std::uint64_t>(trial) * 64 + ri));
                std::vector<Eigen::MatrixXd> copies;
                copies.reserve(static_cast<std::size_t>(cfg.max_copies));
                for (int i = 0; i < cfg.max_copies; ++i)
                    copies.push_back(copy_from_rows(rows, r_m, rng));
                for (int n_t = 1; n_t <= cfg.max_copies; ++n_t) {
                    const double dt = cfg.total_coupling / static_cast<double>(n_t);
                    const auto res =
                        pipeline_core(X0, K0, copies, n_t, dt, cfg.chi, measure, qcoords);
                    double err = 0.0;
                    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                        const double pred =
                            std::sqrt(std::max(0.0, res.numerators[qi]) / res.trace);
                        err += std::abs(pred - ref[qi]);
                    }
                    errors[static_cast<std::size_t>(trial)]
                          [static_cast<std::size_t>(n_t - 1)] =
                              err / static_cast<double>(queries.size());
                }
            }
        };

        int nthreads = cfg.threads > 0 ? cfg.threads
                                       : static_cast<int>(std::thread::hardware_concurrency());
        nthreads = std::max(1, std::min(nthreads, trials));
        if (nthreads == 1) {
            worker(0, trials);
        } else {
            std::vector<std::thread> pool;
            const int chunk = (trials + nthreads - 1) / nthreads;
            for (int i = 0; i < nthreads; ++i) {
                const int b = i * chunk, e = std::min(trials, b + chunk);
                if (b < e) pool.emplace_back(worker, b, e);
            }
            for (auto& th : pool) th.join();
        }

        // Reduce in trial order.
        for (int n_t = 1; n_t <= cfg.max_copies; ++n_t) {
            double sum = 0.0, sum2 = 0.0;
            for (int trial = 0; trial < trials; ++trial) {
                const double e = errors[static_cast<std::size_t>(trial)]
                                       [static_cast<std::size_t>(n_t - 1)];
                sum += e;
                sum2 += e * e;
            }
            const double mean = sum / trials;
            const double var = std::max(0.0, sum2 / trials - mean * mean);
            DmeScanRow row;
            row.n_t = n_t;
            row.r_m = r_m;
            row.mean_abs_err = mean;
            row.std_err = trials > 1 ? std::sqrt(var / trials) : 0.0;
            row.trials = trials;
            row.seed = cfg.master_seed;
            out.push_back(row);
        }
    }
    return out;
}

}  // namespace qkrr

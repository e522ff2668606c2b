#include "qkrr/cv_channel.hpp"

#include <cmath>
#include <stdexcept>

namespace qkrr {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

QumodeGrid QumodeGrid::make(double half_width, int points) {
    if (half_width <= 0) throw std::invalid_argument("QumodeGrid: half_width must be > 0");
    if (points < 3 || points % 2 == 0)
        throw std::invalid_argument("QumodeGrid: points must be odd and >= 3");
    QumodeGrid g;
    g.half_width = half_width;
    g.points = points;
    g.nodes.resize(points);
    g.weights.resize(points);
    const double h = 2.0 * half_width / static_cast<double>(points - 1);
    for (int i = 0; i < points; ++i) {
        g.nodes(i) = -half_width + h * static_cast<double>(i);
        g.weights(i) = h;
    }
    g.weights(0) *= 0.5;
    g.weights(points - 1) *= 0.5;
    return g;
}

double SqueezedAncilla::wavefunction(double q) const {
    return std::pow(kPi, -0.25) / std::sqrt(s) * std::exp(-q * q / (2.0 * s * s));
}

double SqueezedAncilla::position_density(double q) const {
    return std::exp(-q * q / (s * s)) / (s * std::sqrt(kPi));
}

double postselection_factor(double b, double s) {
    const double s2 = s * s;
    return 2.0 / (s2 * std::sqrt(4.0 / (s2 * s2) + b * b));
}

PostSelectionResult invert_analytic(const TrainingState& t, double s, double chi) {
    if (s <= 0) throw std::invalid_argument("invert_analytic: s must be > 0");
    if (chi < 0) throw std::invalid_argument("invert_analytic: chi must be >= 0");

    const Eigen::VectorXd b_values =
        regularization_phase(t.singular_values.array().square().matrix(), chi);
    PostSelectionResult r;
    r.components.resize(t.rank());
    for (Eigen::Index i = 0; i < t.rank(); ++i)
        r.components(i) = t.singular_values(i) * postselection_factor(b_values(i), s);
    r.success_probability = r.components.squaredNorm();
    r.normalized_state =
        apply_transform(t, {TransformKind::finite_squeeze_f, chi, s});
    return r;
}

PostSelectionResult invert_grid(const TrainingState& t, double s, double chi,
                                const QumodeGrid& grid) {
    if (s <= 0) throw std::invalid_argument("invert_grid: s must be > 0");
    if (chi < 0) throw std::invalid_argument("invert_grid: chi must be >= 0");

    const SqueezedAncilla anc{s};
    const int g = grid.points;
    Eigen::VectorXd wd(g);  // weight * |psi|^2 per node
    for (int i = 0; i < g; ++i) wd(i) = grid.weights(i) * anc.position_density(grid.nodes(i));

    const double norm = wd.sum();
    if (std::abs(norm - 1.0) > 1e-4)
        throw std::runtime_error("invert_grid: grid too coarse, ancilla norm off by " +
                                 std::to_string(std::abs(norm - 1.0)));

    const Eigen::VectorXd b_values =
        regularization_phase(t.singular_values.array().square().matrix(), chi);

    PostSelectionResult r;
    r.components.resize(t.rank());
    double max_imag = 0.0;
    for (Eigen::Index c = 0; c < t.rank(); ++c) {
        const double b = b_values(c);
        double re = 0.0, im = 0.0;
        for (int i = 0; i < g; ++i) {           // fixed left-to-right order
            const double bx = b * grid.nodes(i);
            double row_re = 0.0, row_im = 0.0;
            for (int j = 0; j < g; ++j) {
                const double ph = bx * grid.nodes(j);
                row_re += wd(j) * std::cos(ph);
                row_im += wd(j) * std::sin(ph);
            }
            re += wd(i) * row_re;
            im += wd(i) * row_im;
        }
        r.components(c) = t.singular_values(c) * re;
        max_imag = std::max(max_imag, std::abs(im));
    }
    r.imag_residual = max_imag;
    r.success_probability = r.components.squaredNorm();

    TrainedState ts;
    ts.components = r.components;
    ts.left_vectors = t.left_vectors;
    ts.right_vectors = t.right_vectors;
    ts.normalization = ts.components.norm();
    r.normalized_state = ts;
    return r;
}

Eigen::VectorXd regularization_phase(const Eigen::VectorXd& b_values, double chi) {
    if (chi < 0) throw std::invalid_argument("regularization_phase: chi must be >= 0");
    return b_values.array() + chi;
}

ScalingFit success_scaling_fit(const TrainingState& t, double chi,
                               const Eigen::VectorXd& s_values) {
    if (s_values.size() < 3)
        throw std::invalid_argument("success_scaling_fit: need at least 3 values of s");

    const Eigen::Index n = s_values.size();
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = std::log(s_values(i));
        y(i) = std::log(invert_analytic(t, s_values(i), chi).success_probability);
    }
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    ScalingFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

}  // namespace qkrr

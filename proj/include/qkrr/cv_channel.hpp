#pragma once

/*
 * Two-qumode matrix-inversion channel at finite squeezing.
 *
 * Both ancilla qumodes start in the momentum-squeezed state whose position
 * wavefunction is psi(q) = s^{-1/2} pi^{-1/4} exp(-q^2 / 2s^2).  Acting with
 * exp(i b qx qy) on a Schmidt component with phase slope b = lambda^2 + chi
 * and projecting both qumodes back onto the same state multiplies the
 * component by the Gaussian average
 *
 *   F(b) = Int |psi(qx)|^2 |psi(qy)|^2 e^{i b qx qy} dqx dqy
 *        = 2 / (s^2 sqrt(4/s^4 + b^2)),
 *
 * so the unnormalized post-selected component is lambda * F(lambda^2+chi)
 * = (2/s^2) f(lambda,s,chi) and the success probability is the squared norm
 * of those components, which scales as s^{-4} once 4/s^4 is negligible
 * against (lambda^2+chi)^2.  The ideal zero-momentum projector is the
 * non-normalizable s -> infinity limit and is covered as a limit test only.
 *
 * invert_grid evaluates the same double integral by trapezoid quadrature on
 * a symmetric position grid, as an independent check of F(b); summation
 * order is fixed left-to-right so results are bitwise reproducible.
 */

#include <Eigen/Dense>

#include "qkrr/spectrum.hpp"

namespace qkrr {

struct QumodeGrid {
    double half_width = 0.0;   // Q
    int points = 0;            // G, odd
    Eigen::VectorXd nodes;     // uniform on [-Q, Q]
    Eigen::VectorXd weights;   // trapezoid, sum = 2Q

    static QumodeGrid make(double half_width, int points);
};

struct SqueezedAncilla {
    double s = 1.0;

    // psi(q) = s^{-1/2} pi^{-1/4} exp(-q^2 / 2s^2)
    double wavefunction(double q) const;
    // |psi(q)|^2
    double position_density(double q) const;
};

struct PostSelectionResult {
    Eigen::VectorXd components;       // r, unnormalized post-selected amplitudes
    double success_probability = 0.0; // sum of squared components
    TrainedState normalized_state;
    double imag_residual = 0.0;       // grid route only; must vanish by symmetry
};

// Post-selection amplitude factor F(b) for phase slope b at squeezing s.
double postselection_factor(double b, double s);

PostSelectionResult invert_analytic(const TrainingState& t, double s, double chi);

// Same channel by brute-force quadrature.  Throws if the discretized ancilla
// norm deviates from 1 by more than 1e-4 (grid too coarse for the Gaussian).
PostSelectionResult invert_grid(const TrainingState& t, double s, double chi,
                                const QumodeGrid& grid);

// Phase-slope bookkeeping of the regularization gate: b -> b + chi.
Eigen::VectorXd regularization_phase(const Eigen::VectorXd& b_values, double chi);

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares fit of log(success probability) against log(s); needs at
// least 3 values of s, all large enough that f is in its g regime.
ScalingFit success_scaling_fit(const TrainingState& t, double chi,
                               const Eigen::VectorXd& s_values);

}  // namespace qkrr

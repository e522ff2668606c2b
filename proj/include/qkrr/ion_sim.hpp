#pragma once

/*
 * Fock-truncated simulation of the trapped-ion gate set.
 *
 * Quadrature convention: q = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)),
 * [q, p] = i, vacuum <q^2> = 1/2.  Under this convention the squeeze gate
 * S(s) = exp(-(ln s / 2)(a^2 - a^dag^2)) maps the vacuum to the state with
 * position variance s^2/2, i.e. exactly the momentum-squeezed ancilla used
 * by the inversion channel; no extra conversion factor appears anywhere.
 *
 * Gates act on a truncated space (qubit) x (mode x) x (mode y) with cutoff
 * n_max per mode.  Each gate is the exact exponential of its truncated
 * generator (single-mode exponentials by Hermitian eigendecomposition,
 * beamsplitter per excitation sector, everything built from q by passing
 * through the position eigenbasis of the truncated q), hence unitary on the
 * truncated space to machine precision.  Physical fidelity to the untruncated
 * gate is monitored through the leakage of the state into the top two Fock
 * levels; a gate application that exceeds the threshold flags the state
 * unreliable instead of aborting.
 *
 * The hybrid gate W(eta) = exp(i eta sigma_z qx qy) is also built from the
 * Dirac couplings H1 = g qx sigma_x, H2 = g qy sigma_y via the group
 * commutator: one cycle
 *
 *   e^{iH2 dt} e^{iH1 dt} e^{-iH2 dt} e^{-iH1 dt} = W(2 g^2 dt^2) + O(dt^3)
 *
 * (the factor 2 comes from [sigma_x, sigma_y] = 2i sigma_z), repeated
 * n = eta / (2 g^2 dt^2) times; the realized eta is n * 2 g^2 dt^2.
 */

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "qkrr/spectrum.hpp"

namespace qkrr {

enum class ModeAxis { x, y };

struct HybridState {
    Eigen::VectorXcd amp;  // index = (q * (n_max+1) + ix) * (n_max+1) + iy
    int n_max = 0;
    double leakage_threshold = 1e-6;
    bool unreliable = false;

    static HybridState vacuum(int n_max);
    static HybridState fock(int n_max, int qubit, int nx, int ny);

    Eigen::Index dim() const { return amp.size(); }
    double norm() const { return amp.norm(); }
    // Max over modes of the population in the top two Fock levels.
    double leakage() const;
    std::complex<double>& at(int qubit, int nx, int ny);
    std::complex<double> at(int qubit, int nx, int ny) const;
};

enum class GateKind {
    qubit_rotation,  // R(theta, n) = exp(i theta n.sigma)
    mode_phase,      // P(theta)    = exp(i theta a^dag a)
    displacement,    // D(h)        = exp(h a - h* a^dag)
    squeeze,         // S(s)        = exp(-(ln s/2)(a^2 - a^dag^2))
    beamsplitter,    // B(theta)    = exp(i theta (ax^dag ay + ay^dag ax))
    cross_phase,     // C_q(chi)    = exp(i chi qx qy)
    dirac_x,         // exp(i g t qx sigma_x)
    dirac_y,         // exp(i g t qy sigma_y)
    hybrid_w         // W(eta)      = exp(i eta sigma_z qx qy)
};

struct GateSpec {
    GateKind kind = GateKind::mode_phase;
    ModeAxis mode = ModeAxis::x;
    double theta = 0.0;               // primary parameter (angle, chi, eta, s, g)
    double aux = 0.0;                 // secondary parameter (t of the Dirac gates)
    Eigen::Vector3d axis{0, 0, 1};    // qubit rotation direction
    std::complex<double> h{0.0, 0.0}; // displacement argument

    static GateSpec qubit_rotation(double theta, const Eigen::Vector3d& axis);
    static GateSpec mode_phase(ModeAxis m, double theta);
    static GateSpec displacement(ModeAxis m, std::complex<double> h);
    static GateSpec squeeze(ModeAxis m, double s);
    static GateSpec beamsplitter(double theta);
    static GateSpec cross_phase(double chi);
    static GateSpec dirac_x(double g, double t);
    static GateSpec dirac_y(double g, double t);
    static GateSpec hybrid_w(double eta);

    GateSpec inverse() const;
};

HybridState apply_gate(const HybridState& state, const GateSpec& gate);

// Truncated mode operators, (n_max+1) square.
Eigen::MatrixXd annihilation_op(int n_max);
Eigen::MatrixXd position_op(int n_max);

// Dense single-mode unitary for mode_phase / displacement / squeeze (used by
// the unitarity tests).
Eigen::MatrixXcd single_mode_unitary(const GateSpec& gate, int n_max);

struct WSequence {
    std::vector<GateSpec> gates;  // 4 * cycles Dirac gates, application order
    double realized_eta = 0.0;    // cycles * 2 g^2 dt^2, signed like eta
    int cycles = 0;
};

WSequence build_w_by_commutator(double eta, double g, double dt,
                                int max_cycles = 2000000);

/*
 * Conditional-swap construction on the five-register space
 * (control qubit) x (ax) x (ay) x (b) x (c), single-mode b and c registers:
 *
 *   C_S . H . W(dt) . H . C_S  =  exp(i dt qx qy sigma_x S_bc),
 *
 * which on the sigma_x = +1 sector of the control (qubit prepared in |+>)
 * acts as the target exp(i dt qx qy S_bc).  The identity is exact with the
 * ideal W; with the commutator-built W it inherits that error budget.
 */
struct CswapRegister {
    Eigen::VectorXcd amp;  // index = (((q*(n+1)+ax)*(n+1)+ay)*(n+1)+b)*(n+1)+c
    int n_max = 0;

    static CswapRegister zero(int n_max);
    std::complex<double>& at(int q, int ax, int ay, int b, int c);
    double norm() const { return amp.norm(); }
};

struct ConditionalSwapComposite {
    double dt = 0.0;
    // The 5 elements in application order: C_S, H, W(dt), H, C_S.
    std::vector<std::string> elements{"cswap", "hadamard", "w", "hadamard", "cswap"};
};

ConditionalSwapComposite conditional_swap_compose(double dt);

// The composite's individual elements, applied in place.
void apply_cswap_control(CswapRegister& reg);                 // C_S
void apply_control_hadamard(CswapRegister& reg);              // H on the control
void apply_w_ideal(CswapRegister& reg, double eta);           // exact W(eta)
void apply_w_sequence(CswapRegister& reg, const WSequence& seq);

// Apply the composite; with exact_w the ideal W(dt) gate is used, otherwise
// the commutator sequence with parameters (g, w_dt).
void apply_conditional_swap_composite(CswapRegister& reg,
                                      const ConditionalSwapComposite& comp,
                                      bool exact_w, double g = 1.0, double w_dt = 0.0);

// The target unitary exp(i dt qx qy S_bc), applied exactly.
void apply_target_conditional_swap(CswapRegister& reg, double dt);

// Hadamard / controlled-swap / Hadamard circuit on ancilla + two equal-shape
// registers; returns the exact ancilla-|0> probability (1 + |<a|b>|^2)/2.
double swap_test_circuit_probability(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

SwapTestResult gate_level_swap_test(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                                    std::uint64_t shots, std::uint64_t seed);
SwapTestResult gate_level_swap_test(const HybridState& a, const HybridState& b,
                                    std::uint64_t shots, std::uint64_t seed);

}  // namespace qkrr

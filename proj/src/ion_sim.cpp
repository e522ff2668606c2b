#include "qkrr/ion_sim.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "qkrr/rng.hpp"

namespace qkrr {

using Cx = std::complex<double>;

namespace {

// Apply a matrix along one axis of a flat row-major tensor.
template <typename Mat>
void apply_matrix_axis(Eigen::VectorXcd& amp, const std::vector<Eigen::Index>& dims,
                       std::size_t axis, const Mat& m) {
    const Eigen::Index e = dims[axis];
    Eigen::Index stride = 1;
    for (std::size_t k = axis + 1; k < dims.size(); ++k) stride *= dims[k];
    Eigen::Index outer = 1;
    for (std::size_t k = 0; k < axis; ++k) outer *= dims[k];
    const Eigen::Index block = e * stride;

    Eigen::VectorXcd tmp(e);
    for (Eigen::Index o = 0; o < outer; ++o) {
        for (Eigen::Index i = 0; i < stride; ++i) {
            const Eigen::Index base = o * block + i;
            for (Eigen::Index j = 0; j < e; ++j) tmp(j) = amp(base + j * stride);
            for (Eigen::Index j = 0; j < e; ++j) {
                Cx acc(0, 0);
                for (Eigen::Index k = 0; k < e; ++k) acc += m(j, k) * tmp(k);
                amp(base + j * stride) = acc;
            }
        }
    }
}

struct PositionBasis {
    Eigen::VectorXd xs;  // eigenvalues of the truncated q
    Eigen::MatrixXd v;   // q = v diag(xs) v^T, v orthogonal
};

const PositionBasis& position_basis(int n_max) {
    static std::map<int, PositionBasis> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n_max);
    if (it == cache.end()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(position_op(n_max));
        it = cache.emplace(n_max, PositionBasis{es.eigenvalues(), es.eigenvectors()}).first;
    }
    return it->second;
}

Eigen::Matrix2cd qubit_hadamard() {
    Eigen::Matrix2cd h;
    h << 1, 1, 1, -1;
    return h / std::sqrt(2.0);
}

// Columns are the sigma_y eigenvectors (+1 first).
Eigen::Matrix2cd sigma_y_eigvecs() {
    Eigen::Matrix2cd w;
    w << Cx(1, 0), Cx(1, 0), Cx(0, 1), Cx(0, -1);
    return w / std::sqrt(2.0);
}

}  // namespace

Eigen::MatrixXd annihilation_op(int n_max) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Eigen::MatrixXd position_op(int n_max) {
    const Eigen::MatrixXd a = annihilation_op(n_max);
    return (a + a.transpose()) / std::sqrt(2.0);
}

HybridState HybridState::vacuum(int n_max) { return fock(n_max, 0, 0, 0); }

HybridState HybridState::fock(int n_max, int qubit, int nx, int ny) {
    if (n_max < 1) throw std::invalid_argument("HybridState: n_max must be >= 1");
    if (qubit < 0 || qubit > 1 || nx < 0 || nx > n_max || ny < 0 || ny > n_max)
        throw std::invalid_argument("HybridState: basis labels out of range");
    HybridState st;
    st.n_max = n_max;
    st.amp = Eigen::VectorXcd::Zero(2LL * (n_max + 1) * (n_max + 1));
    st.at(qubit, nx, ny) = Cx(1, 0);
    return st;
}

Cx& HybridState::at(int qubit, int nx, int ny) {
    const Eigen::Index d = n_max + 1;
    return amp((static_cast<Eigen::Index>(qubit) * d + nx) * d + ny);
}

Cx HybridState::at(int qubit, int nx, int ny) const {
    const Eigen::Index d = n_max + 1;
    return amp((static_cast<Eigen::Index>(qubit) * d + nx) * d + ny);
}

double HybridState::leakage() const {
    const Eigen::Index d = n_max + 1;
    const int lo = std::max(0, n_max - 1);
    double px = 0.0, py = 0.0;
    for (int q = 0; q < 2; ++q) {
        for (int i = 0; i <= n_max; ++i) {
            for (int j = lo; j <= n_max; ++j) {
                px += std::norm(amp((static_cast<Eigen::Index>(q) * d + j) * d + i));
                py += std::norm(amp((static_cast<Eigen::Index>(q) * d + i) * d + j));
            }
        }
    }
    return std::max(px, py);
}

GateSpec GateSpec::qubit_rotation(double theta, const Eigen::Vector3d& axis) {
    if (axis.norm() == 0.0) throw std::invalid_argument("qubit_rotation: zero axis");
    GateSpec g;
    g.kind = GateKind::qubit_rotation;
    g.theta = theta;
    g.axis = axis.normalized();
    return g;
}

GateSpec GateSpec::mode_phase(ModeAxis m, double theta) {
    GateSpec g;
    g.kind = GateKind::mode_phase;
    g.mode = m;
    g.theta = theta;
    return g;
}

GateSpec GateSpec::displacement(ModeAxis m, Cx h) {
    GateSpec g;
    g.kind = GateKind::displacement;
    g.mode = m;
    g.h = h;
    return g;
}

GateSpec GateSpec::squeeze(ModeAxis m, double s) {
    if (s <= 0) throw std::invalid_argument("squeeze: s must be > 0");
    GateSpec g;
    g.kind = GateKind::squeeze;
    g.mode = m;
    g.theta = s;
    return g;
}

GateSpec GateSpec::beamsplitter(double theta) {
    GateSpec g;
    g.kind = GateKind::beamsplitter;
    g.theta = theta;
    return g;
}

GateSpec GateSpec::cross_phase(double chi) {
    GateSpec g;
    g.kind = GateKind::cross_phase;
    g.theta = chi;
    return g;
}

GateSpec GateSpec::dirac_x(double gc, double t) {
    GateSpec g;
    g.kind = GateKind::dirac_x;
    g.theta = gc;
    g.aux = t;
    return g;
}

GateSpec GateSpec::dirac_y(double gc, double t) {
    GateSpec g;
    g.kind = GateKind::dirac_y;
    g.theta = gc;
    g.aux = t;
    return g;
}

GateSpec GateSpec::hybrid_w(double eta) {
    GateSpec g;
    g.kind = GateKind::hybrid_w;
    g.theta = eta;
    return g;
}

GateSpec GateSpec::inverse() const {
    GateSpec g = *this;
    switch (kind) {
        case GateKind::qubit_rotation:
        case GateKind::mode_phase:
        case GateKind::beamsplitter:
        case GateKind::cross_phase:
        case GateKind::hybrid_w:
            g.theta = -theta;
            break;
        case GateKind::displacement:
            g.h = -h;
            break;
        case GateKind::squeeze:
            g.theta = 1.0 / theta;
            break;
        case GateKind::dirac_x:
        case GateKind::dirac_y:
            g.aux = -aux;
            break;
    }
    return g;
}

Eigen::MatrixXcd single_mode_unitary(const GateSpec& gate, int n_max) {
    const Eigen::Index d = n_max + 1;
    switch (gate.kind) {
        case GateKind::mode_phase: {
            Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(d, d);
            for (Eigen::Index n = 0; n < d; ++n)
                u(n, n) = std::polar(1.0, gate.theta * static_cast<double>(n));
            return u;
        }
        case GateKind::displacement: {
            const Eigen::MatrixXd a = annihilation_op(n_max);
            const Eigen::MatrixXcd gen =
                gate.h * a.cast<Cx>() - std::conj(gate.h) * a.transpose().cast<Cx>();
            // gen is anti-Hermitian; exponentiate via the Hermitian -i*gen.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Cx(0, -1) * gen);
            Eigen::VectorXcd ph(d);
            for (Eigen::Index i = 0; i < d; ++i) ph(i) = std::polar(1.0, es.eigenvalues()(i));
            return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
        }
        case GateKind::squeeze: {
            const Eigen::MatrixXd a = annihilation_op(n_max);
            const Eigen::MatrixXd gen =
                -0.5 * std::log(gate.theta) * (a * a - (a * a).transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Cx(0, -1) * gen.cast<Cx>());
            Eigen::VectorXcd ph(d);
            for (Eigen::Index i = 0; i < d; ++i) ph(i) = std::polar(1.0, es.eigenvalues()(i));
            return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
        }
        default:
            throw std::invalid_argument("single_mode_unitary: not a single-mode gate");
    }
}

namespace {

void apply_beamsplitter(HybridState& st, double theta) {
    const int n = st.n_max;
    const Eigen::Index d = n + 1;
    for (int total = 1; total <= 2 * n; ++total) {
        const int lo = std::max(0, total - n);
        const int hi = std::min(total, n);
        const int sz = hi - lo + 1;
        if (sz < 2) continue;
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(sz, sz);
        for (int i = 0; i + 1 < sz; ++i) {
            const int nx = lo + i;
            const double v =
                std::sqrt(static_cast<double>(nx + 1) * static_cast<double>(total - nx));
            k(i, i + 1) = v;
            k(i + 1, i) = v;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
        Eigen::VectorXcd ph(sz);
        for (int i = 0; i < sz; ++i) ph(i) = std::polar(1.0, theta * es.eigenvalues()(i));
        const Eigen::MatrixXcd u = es.eigenvectors().cast<Cx>() * ph.asDiagonal() *
                                   es.eigenvectors().transpose().cast<Cx>();
        for (int q = 0; q < 2; ++q) {
            Eigen::VectorXcd sec(sz);
            for (int i = 0; i < sz; ++i)
                sec(i) = st.amp((static_cast<Eigen::Index>(q) * d + (lo + i)) * d +
                                (total - lo - i));
            sec = (u * sec).eval();
            for (int i = 0; i < sz; ++i)
                st.amp((static_cast<Eigen::Index>(q) * d + (lo + i)) * d + (total - lo - i)) =
                    sec(i);
        }
    }
}

// Gates generated by qx qy times a qubit operator diagonal in some basis:
// rotate both modes into the position eigenbasis, phase, rotate back.
void apply_xy_phase(HybridState& st, double c_plus, double c_minus) {
    const PositionBasis& pb = position_basis(st.n_max);
    const std::vector<Eigen::Index> dims{2, st.n_max + 1, st.n_max + 1};
    apply_matrix_axis(st.amp, dims, 1, pb.v.transpose());
    apply_matrix_axis(st.amp, dims, 2, pb.v.transpose());
    const Eigen::Index d = st.n_max + 1;
    for (int q = 0; q < 2; ++q) {
        const double c = (q == 0) ? c_plus : c_minus;
        for (Eigen::Index j = 0; j < d; ++j) {
            const double cx = c * pb.xs(j);
            for (Eigen::Index k = 0; k < d; ++k)
                st.amp((static_cast<Eigen::Index>(q) * d + j) * d + k) *=
                    std::polar(1.0, cx * pb.xs(k));
        }
    }
    apply_matrix_axis(st.amp, dims, 1, pb.v);
    apply_matrix_axis(st.amp, dims, 2, pb.v);
}

// exp(i g t q_mode sigma): diagonalize the qubit operator, phase in the
// position basis of the coupled mode.
void apply_dirac(HybridState& st, ModeAxis mode, const Eigen::Matrix2cd& eigvecs,
                 double gt) {
    const PositionBasis& pb = position_basis(st.n_max);
    const std::vector<Eigen::Index> dims{2, st.n_max + 1, st.n_max + 1};
    const std::size_t maxis = (mode == ModeAxis::x) ? 1 : 2;
    apply_matrix_axis(st.amp, dims, 0, eigvecs.adjoint());
    apply_matrix_axis(st.amp, dims, maxis, pb.v.transpose());
    const Eigen::Index d = st.n_max + 1;
    for (int q = 0; q < 2; ++q) {
        const double sign = (q == 0) ? 1.0 : -1.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const Cx ph = std::polar(1.0, gt * sign * pb.xs(j));
            for (Eigen::Index k = 0; k < d; ++k) {
                const Eigen::Index idx =
                    (mode == ModeAxis::x)
                        ? (static_cast<Eigen::Index>(q) * d + j) * d + k
                        : (static_cast<Eigen::Index>(q) * d + k) * d + j;
                st.amp(idx) *= ph;
            }
        }
    }
    apply_matrix_axis(st.amp, dims, maxis, pb.v);
    apply_matrix_axis(st.amp, dims, 0, eigvecs);
}

}  // namespace

HybridState apply_gate(const HybridState& state, const GateSpec& gate) {
    HybridState st = state;
    const std::vector<Eigen::Index> dims{2, st.n_max + 1, st.n_max + 1};
    switch (gate.kind) {
        case GateKind::qubit_rotation: {
            Eigen::Matrix2cd sigma;
            sigma << Cx(gate.axis(2), 0), Cx(gate.axis(0), -gate.axis(1)),
                Cx(gate.axis(0), gate.axis(1)), Cx(-gate.axis(2), 0);
            const Eigen::Matrix2cd u =
                std::cos(gate.theta) * Eigen::Matrix2cd::Identity() +
                Cx(0, 1) * std::sin(gate.theta) * sigma;
            apply_matrix_axis(st.amp, dims, 0, u);
            break;
        }
        case GateKind::mode_phase: {
            const Eigen::Index d = st.n_max + 1;
            for (int q = 0; q < 2; ++q)
                for (Eigen::Index j = 0; j < d; ++j)
                    for (Eigen::Index k = 0; k < d; ++k) {
                        const Eigen::Index n = (gate.mode == ModeAxis::x) ? j : k;
                        st.amp((static_cast<Eigen::Index>(q) * d + j) * d + k) *=
                            std::polar(1.0, gate.theta * static_cast<double>(n));
                    }
            break;
        }
        case GateKind::displacement:
        case GateKind::squeeze: {
            const Eigen::MatrixXcd u = single_mode_unitary(gate, st.n_max);
            apply_matrix_axis(st.amp, dims, gate.mode == ModeAxis::x ? 1 : 2, u);
            break;
        }
        case GateKind::beamsplitter:
            apply_beamsplitter(st, gate.theta);
            break;
        case GateKind::cross_phase:
            apply_xy_phase(st, gate.theta, gate.theta);
            break;
        case GateKind::dirac_x:
            apply_dirac(st, ModeAxis::x, qubit_hadamard(), gate.theta * gate.aux);
            break;
        case GateKind::dirac_y:
            apply_dirac(st, ModeAxis::y, sigma_y_eigvecs(), gate.theta * gate.aux);
            break;
        case GateKind::hybrid_w:
            apply_xy_phase(st, gate.theta, -gate.theta);
            break;
    }
    if (st.leakage() > st.leakage_threshold) st.unreliable = true;
    return st;
}

WSequence build_w_by_commutator(double eta, double g, double dt, int max_cycles) {
    if (dt <= 0) throw std::invalid_argument("build_w_by_commutator: dt must be > 0");
    if (g == 0) throw std::invalid_argument("build_w_by_commutator: g must be nonzero");

    WSequence seq;
    if (eta == 0.0) return seq;

    const double per_cycle = 2.0 * g * g * dt * dt;
    const long cycles = std::lround(std::abs(eta) / per_cycle);
    if (cycles < 1)
        throw std::invalid_argument("build_w_by_commutator: dt too large for requested eta");
    if (cycles > max_cycles)
        throw std::invalid_argument("build_w_by_commutator: repetition count " +
                                    std::to_string(cycles) + " exceeds the cap");

    seq.cycles = static_cast<int>(cycles);
    seq.realized_eta = (eta > 0 ? 1.0 : -1.0) * static_cast<double>(cycles) * per_cycle;
    seq.gates.reserve(static_cast<std::size_t>(4 * cycles));
    for (long c = 0; c < cycles; ++c) {
        if (eta > 0) {
            // e^{iH2 dt} e^{iH1 dt} e^{-iH2 dt} e^{-iH1 dt} = W(+2 g^2 dt^2) + O(dt^3)
            seq.gates.push_back(GateSpec::dirac_x(g, -dt));
            seq.gates.push_back(GateSpec::dirac_y(g, -dt));
            seq.gates.push_back(GateSpec::dirac_x(g, dt));
            seq.gates.push_back(GateSpec::dirac_y(g, dt));
        } else {
            seq.gates.push_back(GateSpec::dirac_y(g, -dt));
            seq.gates.push_back(GateSpec::dirac_x(g, -dt));
            seq.gates.push_back(GateSpec::dirac_y(g, dt));
            seq.gates.push_back(GateSpec::dirac_x(g, dt));
        }
    }
    return seq;
}

// ---- conditional-swap register -------------------------------------------

CswapRegister CswapRegister::zero(int n_max) {
    if (n_max < 1) throw std::invalid_argument("CswapRegister: n_max must be >= 1");
    CswapRegister r;
    r.n_max = n_max;
    const Eigen::Index d = n_max + 1;
    r.amp = Eigen::VectorXcd::Zero(2 * d * d * d * d);
    return r;
}

Cx& CswapRegister::at(int q, int ax, int ay, int b, int c) {
    const Eigen::Index d = n_max + 1;
    return amp((((static_cast<Eigen::Index>(q) * d + ax) * d + ay) * d + b) * d + c);
}

namespace {

std::vector<Eigen::Index> cswap_dims(int n_max) {
    const Eigen::Index d = n_max + 1;
    return {2, d, d, d, d};
}

void cswap_controlled_swap(CswapRegister& reg) {
    const Eigen::Index d = reg.n_max + 1;
    for (Eigen::Index ax = 0; ax < d; ++ax)
        for (Eigen::Index ay = 0; ay < d; ++ay)
            for (Eigen::Index b = 0; b < d; ++b)
                for (Eigen::Index c = b + 1; c < d; ++c) {
                    const Eigen::Index i =
                        (((1 * d + ax) * d + ay) * d + b) * d + c;
                    const Eigen::Index j =
                        (((1 * d + ax) * d + ay) * d + c) * d + b;
                    std::swap(reg.amp(i), reg.amp(j));
                }
}

// Phase e^{i (sign_q) f(xj,xk)} with both a-modes already in position basis.
template <typename Fn>
void cswap_position_phase(CswapRegister& reg, Fn phase_for) {
    const PositionBasis& pb = position_basis(reg.n_max);
    const Eigen::Index d = reg.n_max + 1;
    const Eigen::Index bc = d * d;
    for (int q = 0; q < 2; ++q)
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index k = 0; k < d; ++k) {
                const Cx ph = phase_for(q, pb.xs(j), pb.xs(k));
                const Eigen::Index base = (((static_cast<Eigen::Index>(q) * d + j) * d + k)) * bc;
                for (Eigen::Index r = 0; r < bc; ++r) reg.amp(base + r) *= ph;
            }
}

void cswap_w_ideal(CswapRegister& reg, double eta) {
    const PositionBasis& pb = position_basis(reg.n_max);
    const auto dims = cswap_dims(reg.n_max);
    apply_matrix_axis(reg.amp, dims, 1, pb.v.transpose());
    apply_matrix_axis(reg.amp, dims, 2, pb.v.transpose());
    cswap_position_phase(reg, [eta](int q, double xj, double xk) {
        return std::polar(1.0, (q == 0 ? eta : -eta) * xj * xk);
    });
    apply_matrix_axis(reg.amp, dims, 1, pb.v);
    apply_matrix_axis(reg.amp, dims, 2, pb.v);
}

void cswap_dirac(CswapRegister& reg, ModeAxis mode, const Eigen::Matrix2cd& eigvecs,
                 double gt) {
    const PositionBasis& pb = position_basis(reg.n_max);
    const auto dims = cswap_dims(reg.n_max);
    const std::size_t maxis = (mode == ModeAxis::x) ? 1 : 2;
    apply_matrix_axis(reg.amp, dims, 0, eigvecs.adjoint());
    apply_matrix_axis(reg.amp, dims, maxis, pb.v.transpose());
    const Eigen::Index d = reg.n_max + 1;
    const Eigen::Index bc = d * d;
    for (int q = 0; q < 2; ++q) {
        const double sign = (q == 0) ? 1.0 : -1.0;
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index k = 0; k < d; ++k) {
                const double x = (mode == ModeAxis::x) ? pb.xs(j) : pb.xs(k);
                const Cx ph = std::polar(1.0, gt * sign * x);
                const Eigen::Index base =
                    (((static_cast<Eigen::Index>(q) * d + j) * d + k)) * bc;
                for (Eigen::Index r = 0; r < bc; ++r) reg.amp(base + r) *= ph;
            }
    }
    apply_matrix_axis(reg.amp, dims, maxis, pb.v);
    apply_matrix_axis(reg.amp, dims, 0, eigvecs);
}

}  // namespace

ConditionalSwapComposite conditional_swap_compose(double dt) {
    ConditionalSwapComposite comp;
    comp.dt = dt;
    return comp;
}

void apply_cswap_control(CswapRegister& reg) { cswap_controlled_swap(reg); }

void apply_control_hadamard(CswapRegister& reg) {
    apply_matrix_axis(reg.amp, cswap_dims(reg.n_max), 0, qubit_hadamard());
}

void apply_w_ideal(CswapRegister& reg, double eta) { cswap_w_ideal(reg, eta); }

void apply_w_sequence(CswapRegister& reg, const WSequence& seq) {
    for (const GateSpec& gate : seq.gates) {
        if (gate.kind == GateKind::dirac_x)
            cswap_dirac(reg, ModeAxis::x, qubit_hadamard(), gate.theta * gate.aux);
        else
            cswap_dirac(reg, ModeAxis::y, sigma_y_eigvecs(), gate.theta * gate.aux);
    }
}

void apply_conditional_swap_composite(CswapRegister& reg,
                                      const ConditionalSwapComposite& comp,
                                      bool exact_w, double g, double w_dt) {
    apply_cswap_control(reg);
    apply_control_hadamard(reg);
    if (exact_w)
        apply_w_ideal(reg, comp.dt);
    else
        apply_w_sequence(reg, build_w_by_commutator(comp.dt, g, w_dt));
    apply_control_hadamard(reg);
    apply_cswap_control(reg);
}

void apply_target_conditional_swap(CswapRegister& reg, double dt) {
    const PositionBasis& pb = position_basis(reg.n_max);
    const auto dims = cswap_dims(reg.n_max);
    apply_matrix_axis(reg.amp, dims, 1, pb.v.transpose());
    apply_matrix_axis(reg.amp, dims, 2, pb.v.transpose());
    const Eigen::Index d = reg.n_max + 1;
    for (int q = 0; q < 2; ++q) {
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index k = 0; k < d; ++k) {
                const double phi = dt * pb.xs(j) * pb.xs(k);
                const Cx co(std::cos(phi), 0), si(0, std::sin(phi));
                const Eigen::Index base =
                    (((static_cast<Eigen::Index>(q) * d + j) * d + k)) * d * d;
                for (Eigen::Index b = 0; b < d; ++b) {
                    reg.amp(base + b * d + b) *= (co + si);
                    for (Eigen::Index c = b + 1; c < d; ++c) {
                        const Cx vbc = reg.amp(base + b * d + c);
                        const Cx vcb = reg.amp(base + c * d + b);
                        reg.amp(base + b * d + c) = co * vbc + si * vcb;
                        reg.amp(base + c * d + b) = co * vcb + si * vbc;
                    }
                }
            }
    }
    apply_matrix_axis(reg.amp, dims, 1, pb.v);
    apply_matrix_axis(reg.amp, dims, 2, pb.v);
}

// ---- gate-level swap test -------------------------------------------------

double swap_test_circuit_probability(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("gate_level_swap_test: register shape mismatch");
    const Eigen::Index d = a.size();
    if (2 * d * d > 8000000)
        throw std::invalid_argument("gate_level_swap_test: registers too large to simulate");

    // ancilla |0> (x) |a> (x) |b>, then H, controlled swap, H.
    Eigen::VectorXcd joint(2 * d * d);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const Cx v = a(i) * b(j);
            joint(i * d + j) = v * inv_sqrt2;           // ancilla 0 after first H
            joint(d * d + i * d + j) = v * inv_sqrt2;   // ancilla 1
        }
    // controlled swap on the ancilla-1 block
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j)
            std::swap(joint(d * d + i * d + j), joint(d * d + j * d + i));
    // final H, then P(ancilla = 0)
    double p0 = 0.0;
    for (Eigen::Index k = 0; k < d * d; ++k)
        p0 += std::norm(inv_sqrt2 * (joint(k) + joint(d * d + k)));
    return p0;
}

SwapTestResult gate_level_swap_test(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                                    std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("gate_level_swap_test: shots must be >= 1");
    const double p = swap_test_circuit_probability(a, b);
    Rng rng(seed);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < shots; ++i)
        if (rng.bernoulli(p)) ++hits;
    SwapTestResult r;
    r.p_hat = static_cast<double>(hits) / static_cast<double>(shots);
    r.y_magnitude = std::sqrt(std::max(0.0, 2.0 * r.p_hat - 1.0));
    return r;
}

SwapTestResult gate_level_swap_test(const HybridState& a, const HybridState& b,
                                    std::uint64_t shots, std::uint64_t seed) {
    if (a.n_max != b.n_max)
        throw std::invalid_argument("gate_level_swap_test: register shape mismatch");
    return gate_level_swap_test(a.amp, b.amp, shots, seed);
}

}  // namespace qkrr

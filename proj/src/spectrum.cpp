#include "qkrr/spectrum.hpp"

#include <cmath>
#include <stdexcept>

#include "qkrr/rng.hpp"

namespace qkrr {

TrainingState build_training_state(const FeatureBasis& basis) {
    if (basis.samples() == 0) throw std::invalid_argument("build_training_state: empty basis");

    TrainingState t;
    t.amplitudes = basis.coordinates / std::sqrt(static_cast<double>(basis.samples()));

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.amplitudes,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cut = 1e-12 * sv(0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++r;

    t.singular_values = sv.head(r);
    t.left_vectors = svd.matrixU().leftCols(r);
    t.right_vectors = svd.matrixV().leftCols(r);
    return t;
}

double entanglement_entropy(const TrainingState& t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < t.rank(); ++i) {
        const double p = t.singular_values(i) * t.singular_values(i);
        if (p > 0) s -= p * std::log(p);
    }
    return s;
}

double transform_value(double lambda, const SpectrumTransform& tr) {
    switch (tr.kind) {
        case TransformKind::identity:
            return lambda;
        case TransformKind::ridge_g:
            return lambda / (lambda * lambda + tr.chi);
        case TransformKind::finite_squeeze_f: {
            const double b = lambda * lambda + tr.chi;
            const double s2 = tr.s * tr.s;
            return lambda / std::sqrt(4.0 / (s2 * s2) + b * b);
        }
    }
    throw std::logic_error("transform_value: unreachable");
}

TrainedState apply_transform(const TrainingState& t, const SpectrumTransform& tr,
                             bool pseudo_inverse) {
    if (tr.chi < 0) throw std::invalid_argument("apply_transform: chi must be >= 0");
    if (tr.kind == TransformKind::finite_squeeze_f && tr.s <= 0)
        throw std::invalid_argument("apply_transform: s must be > 0");

    TrainedState ts;
    ts.components.resize(t.rank());
    for (Eigen::Index i = 0; i < t.rank(); ++i) {
        const double l = t.singular_values(i);
        if (tr.kind == TransformKind::ridge_g && tr.chi == 0.0 && l == 0.0) {
            if (!pseudo_inverse)
                throw std::domain_error(
                    "apply_transform: ridge_g with chi=0 on a singular spectrum");
            ts.components(i) = 0.0;
            continue;
        }
        ts.components(i) = transform_value(l, tr);
    }
    ts.left_vectors = t.left_vectors;
    ts.right_vectors = t.right_vectors;
    ts.normalization = ts.components.norm();
    return ts;
}

QueryState make_query_state(const Eigen::VectorXd& targets, const QueryEmbedding& q) {
    const double ny = targets.norm();
    if (ny == 0.0) throw std::invalid_argument("make_query_state: zero target vector");
    QueryState qs;
    qs.target_part = targets / ny;
    qs.feature_part = q.in_span;
    qs.residual_norm = q.residual_norm;
    return qs;
}

double predict_overlap_raw(const TrainedState& ts, const QueryState& q) {
    if (q.target_part.size() != ts.left_vectors.rows() ||
        q.feature_part.size() != ts.right_vectors.rows())
        throw std::invalid_argument("predict_overlap: dimension mismatch");
    // The out-of-span query residual is orthogonal to every |v_i> and drops out.
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ts.components.size(); ++i)
        acc += ts.components(i) * ts.left_vectors.col(i).dot(q.target_part) *
               ts.right_vectors.col(i).dot(q.feature_part);
    return acc;
}

double predict_overlap(const TrainedState& ts, const QueryState& q) {
    if (ts.normalization == 0.0)
        throw std::domain_error("predict_overlap: zero trained state");
    return predict_overlap_raw(ts, q) / ts.normalization;
}

double classical_krr(const KernelMatrix& k, const Eigen::VectorXd& y,
                     double chi_classical, const Eigen::VectorXd& kappa) {
    if (y.size() != k.size() || kappa.size() != k.size())
        throw std::invalid_argument("classical_krr: dimension mismatch");
    if (chi_classical < 0) throw std::invalid_argument("classical_krr: chi must be >= 0");

    Eigen::MatrixXd sys = k.entries;
    sys.diagonal().array() += chi_classical;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("classical_krr: factorization failed");
    const Eigen::VectorXd alpha = ldlt.solve(y);
    const double resid = (sys * alpha - y).norm();
    if (!(resid <= 1e-8 * std::max(1.0, y.norm())))
        throw std::runtime_error("classical_krr: singular system (chi too small?)");
    return kappa.dot(alpha);
}

double quantum_vs_classical_scale(const TrainingState& t, const Eigen::VectorXd& y,
                                  double /*chi*/) {
    const double ny = y.norm();
    if (ny == 0.0) throw std::invalid_argument("quantum_vs_classical_scale: zero targets");
    return std::sqrt(static_cast<double>(t.sample_count())) / ny;
}

SwapTestResult swap_test(double p_overlap, std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("swap_test: shots must be >= 1");
    if (p_overlap < -1.0 || p_overlap > 1.0)
        throw std::invalid_argument("swap_test: overlap outside [-1, 1]");
    const double p = 0.5 * (1.0 + p_overlap * p_overlap);
    Rng rng(seed);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < shots; ++i)
        if (rng.bernoulli(p)) ++hits;
    SwapTestResult r;
    r.p_hat = static_cast<double>(hits) / static_cast<double>(shots);
    r.y_magnitude = std::sqrt(std::max(0.0, 2.0 * r.p_hat - 1.0));
    return r;
}

}  // namespace qkrr

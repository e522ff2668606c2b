#include "qkrr/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace qkrr {

std::string to_string(EncodingKind k) {
    switch (k) {
        case EncodingKind::coherent: return "coherent";
        case EncodingKind::squeezed_gaussian: return "squeezed_gaussian";
        case EncodingKind::raw_amplitude: return "raw_amplitude";
    }
    return "?";
}

EncodingKind encoding_kind_from_string(const std::string& s) {
    if (s == "coherent") return EncodingKind::coherent;
    if (s == "squeezed_gaussian") return EncodingKind::squeezed_gaussian;
    if (s == "raw_amplitude") return EncodingKind::raw_amplitude;
    throw std::invalid_argument("unknown encoding kind '" + s + "'");
}

double kernel_value(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    const EncodingSpec& spec) {
    if (u.size() != v.size())
        throw std::invalid_argument("kernel_value: dimension mismatch");
    if (spec.scale <= 0) throw std::invalid_argument("kernel_value: scale must be > 0");
    switch (spec.kind) {
        case EncodingKind::coherent:
            return std::exp(-0.5 * (u - v).squaredNorm());
        case EncodingKind::squeezed_gaussian:
            return std::exp(-spec.scale * spec.scale * (u - v).squaredNorm());
        case EncodingKind::raw_amplitude: {
            const double nu = u.norm(), nv = v.norm();
            if (nu == 0.0 || nv == 0.0)
                throw std::invalid_argument("kernel_value: zero vector under raw_amplitude");
            return u.dot(v) / (nu * nv);
        }
    }
    throw std::logic_error("kernel_value: unreachable");
}

KernelMatrix gram(const Dataset& d, const EncodingSpec& spec) {
    const Eigen::Index m = d.samples();
    if (m < 1) throw std::invalid_argument("gram: empty dataset");
    KernelMatrix k;
    k.entries.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_value(d.features.row(i), d.features.row(j), spec);
            k.entries(i, j) = v;
            k.entries(j, i) = v;
        }
    }
    k.trace = k.entries.trace();
    return k;
}

FeatureBasis feature_basis(const KernelMatrix& k, double rank_tolerance) {
    if (rank_tolerance <= 0)
        throw std::invalid_argument("feature_basis: rank_tolerance must be > 0");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.entries);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("feature_basis: eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    const double ev_max = ev(ev.size() - 1);
    if (ev(0) < -1e-10 * std::max(1.0, ev_max))
        throw std::invalid_argument("feature_basis: kernel matrix is not PSD");

    const double cut = rank_tolerance * std::max(ev_max, 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) ++rank;
    if (rank == 0) throw std::invalid_argument("feature_basis: kernel matrix is numerically zero");

    FeatureBasis b;
    b.rank_tolerance = rank_tolerance;
    b.coordinates.resize(k.size(), rank);
    // Keep the largest eigenvalues, in descending order.
    for (Eigen::Index r = 0; r < rank; ++r) {
        const Eigen::Index i = ev.size() - 1 - r;
        b.coordinates.col(r) = es.eigenvectors().col(i) * std::sqrt(ev(i));
    }
    return b;
}

QueryEmbedding embed_query(const Eigen::VectorXd& query, const Dataset& d,
                           const EncodingSpec& spec, const FeatureBasis& basis) {
    if (query.size() != d.dims())
        throw std::invalid_argument("embed_query: query dimension mismatch");
    if (basis.samples() != d.samples())
        throw std::invalid_argument("embed_query: basis/dataset sample mismatch");

    Eigen::VectorXd kappa(d.samples());
    for (Eigen::Index m = 0; m < d.samples(); ++m)
        kappa(m) = kernel_value(d.features.row(m), query, spec);

    QueryEmbedding q;
    // Least-squares solve of coordinates * c = kappa; exact when kappa lies in
    // the span, which it does up to the rank truncation.
    q.in_span = basis.coordinates.colPivHouseholderQr().solve(kappa);
    const double self = kernel_value(query, query, spec);
    q.residual_norm = std::sqrt(std::max(0.0, self - q.in_span.squaredNorm()));
    return q;
}

}  // namespace qkrr

#pragma once

/*
 * Quantum feature encodings and their Gram structure.
 *
 * A sample x is mapped to a feature state |phi_x> whose pairwise inner
 * products define the kernel:
 *
 *   coherent           k(u,v) = exp(-|u-v|^2 / 2)
 *   squeezed_gaussian  k(u,v) = exp(-s^2 |u-v|^2)
 *   raw_amplitude      k(u,v) = <u,v> / (|u||v|)
 *
 * The feature Hilbert space is infinite-dimensional, but every quantity in
 * the protocol depends on the encoded states only through inner products,
 * so the span of the M training states (dimension D = rank of the Gram
 * matrix) carries the whole simulation.  FeatureBasis holds each state's
 * coordinates in an orthonormal basis of that span; a query state is split
 * into its in-span coordinates plus a scalar out-of-span residual, which is
 * orthogonal to everything trained and therefore inert.
 */

#include <Eigen/Dense>
#include <string>

#include "qkrr/dataset.hpp"

namespace qkrr {

enum class EncodingKind { coherent, squeezed_gaussian, raw_amplitude };

struct EncodingSpec {
    EncodingKind kind = EncodingKind::coherent;
    double scale = 1.0;  // squeezing factor s of the kernel; ignored unless squeezed_gaussian
};

std::string to_string(EncodingKind k);
EncodingKind encoding_kind_from_string(const std::string& s);

struct KernelMatrix {
    Eigen::MatrixXd entries;  // M x M, symmetric PSD
    double trace = 0.0;

    Eigen::Index size() const { return entries.rows(); }
};

struct FeatureBasis {
    // Row m = coordinates of |phi_{x^(m)}> in an orthonormal basis of the span.
    Eigen::MatrixXd coordinates;  // M x D
    double rank_tolerance = 1e-10;

    Eigen::Index samples() const { return coordinates.rows(); }
    Eigen::Index rank() const { return coordinates.cols(); }
};

struct QueryEmbedding {
    Eigen::VectorXd in_span;  // D coordinates of the projected query state
    double residual_norm = 0.0;
};

double kernel_value(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    const EncodingSpec& spec);

KernelMatrix gram(const Dataset& d, const EncodingSpec& spec);

// Symmetric factorization K = C C^T with C of full column rank D, where D
// counts eigenvalues above rank_tolerance relative to the largest one.
FeatureBasis feature_basis(const KernelMatrix& k, double rank_tolerance = 1e-10);

// Coordinates c with coordinates * c = kappa (kappa_m = k(x^(m), query)) and
// residual_norm^2 = k(query,query) - |c|^2 clipped at zero.
QueryEmbedding embed_query(const Eigen::VectorXd& query, const Dataset& d,
                           const EncodingSpec& spec, const FeatureBasis& basis);

}  // namespace qkrr

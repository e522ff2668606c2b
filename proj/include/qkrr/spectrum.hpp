#pragma once

/*
 * Entanglement spectrum of the superposed training state and the
 * spectrum-transformed predictor, with a classical kernel ridge regression
 * oracle.
 *
 * The training superposition M^{-1/2} sum_m |m>|phi_{x^(m)}> is represented
 * by its amplitude matrix A (row m = coordinates of |phi_{x^(m)}>/sqrt(M)).
 * Its singular values lambda_i form the entanglement spectrum, and
 * A^T A = K / Tr K restricted to the feature span.  A transform h maps the
 * Schmidt coefficients componentwise:
 *
 *   identity           h(l) = l
 *   ridge_g            h(l) = l / (l^2 + chi)
 *   finite_squeeze_f   h(l) = l / sqrt(4/s^4 + (l^2 + chi)^2)
 *
 * The central identity tying the quantum route to the classical one: for
 * unit-diagonal kernels (Tr K = M), the overlap of the query state with the
 * *unnormalized* ridge_g-transformed state equals
 *
 *   (sqrt(M)/|y|) * y^T (K + chi*TrK*I)^{-1} kappa,
 *
 * i.e. classical ridge regression with chi_classical = chi * Tr K.
 * predict_overlap itself divides by the transformed-state norm (only unit
 * vectors are physical states); predict_overlap_raw keeps the unnormalized
 * value the identity refers to.
 */

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "qkrr/encoding.hpp"

namespace qkrr {

struct TrainingState {
    Eigen::MatrixXd amplitudes;       // M x D
    Eigen::VectorXd singular_values;  // r, descending
    Eigen::MatrixXd left_vectors;     // M x r
    Eigen::MatrixXd right_vectors;    // D x r

    Eigen::Index sample_count() const { return amplitudes.rows(); }
    Eigen::Index span_dim() const { return amplitudes.cols(); }
    Eigen::Index rank() const { return singular_values.size(); }
};

enum class TransformKind { identity, ridge_g, finite_squeeze_f };

struct SpectrumTransform {
    TransformKind kind = TransformKind::identity;
    double chi = 0.0;
    double s = 1.0;  // finite_squeeze_f only
};

struct TrainedState {
    Eigen::VectorXd components;    // r, h(lambda_i), unnormalized
    Eigen::MatrixXd left_vectors;  // M x r
    Eigen::MatrixXd right_vectors; // D x r
    double normalization = 0.0;    // |components|_2
};

struct QueryState {
    Eigen::VectorXd target_part;   // unit M-vector y/|y|
    Eigen::VectorXd feature_part;  // D in-span coordinates
    double residual_norm = 0.0;
};

TrainingState build_training_state(const FeatureBasis& basis);

// S = -sum lambda_i^2 ln lambda_i^2, with 0 ln 0 = 0.
double entanglement_entropy(const TrainingState& t);

// Scalar transform h(lambda).
double transform_value(double lambda, const SpectrumTransform& tr);

// Componentwise transform; ridge_g at chi=0 on a spectrum containing zeros
// throws unless pseudo_inverse (which maps 0 -> 0) is requested.
TrainedState apply_transform(const TrainingState& t, const SpectrumTransform& tr,
                             bool pseudo_inverse = false);

QueryState make_query_state(const Eigen::VectorXd& targets, const QueryEmbedding& q);

// <psi_R | psi'_{A+}> with the trained state normalized to a unit vector.
double predict_overlap(const TrainedState& ts, const QueryState& q);

// Same contraction without dividing by the normalization; this is the side
// of the quantum/classical equivalence that carries no extra constant.
double predict_overlap_raw(const TrainedState& ts, const QueryState& q);

// y^T (K + chi_classical I)^{-1} kappa by a symmetric solve.
double classical_krr(const KernelMatrix& k, const Eigen::VectorXd& y,
                     double chi_classical, const Eigen::VectorXd& kappa);

// The constant sqrt(M)/|y| relating predict_overlap_raw(ridge_g(chi)) to
// classical_krr(chi * Tr K).
double quantum_vs_classical_scale(const TrainingState& t, const Eigen::VectorXd& y,
                                  double chi);

struct SwapTestResult {
    double p_hat = 0.0;        // estimated success rate (1 + overlap^2)/2
    double y_magnitude = 0.0;  // sqrt(max(2 p_hat - 1, 0)); sign is not observable
};

SwapTestResult swap_test(double p_overlap, std::uint64_t shots, std::uint64_t seed);

}  // namespace qkrr

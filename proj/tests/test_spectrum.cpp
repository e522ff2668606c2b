#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qkrr/rng.hpp"
#include "qkrr/spectrum.hpp"

using namespace qkrr;

namespace {

struct Instance {
    Dataset data;
    KernelMatrix kernel;
    FeatureBasis basis;
    TrainingState state;
    EncodingSpec spec;
};

Instance make_instance(std::uint64_t seed, Eigen::Index m, Eigen::Index n,
                       EncodingKind kind = EncodingKind::coherent, double scale = 1.0) {
    Instance in;
    in.data = synthesize(seed, m, n, 0.05);
    in.spec = {kind, scale};
    in.kernel = gram(in.data, in.spec);
    in.basis = feature_basis(in.kernel);
    in.state = build_training_state(in.basis);
    return in;
}

QueryState random_query(const Instance& in, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd x(in.data.dims());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    return make_query_state(in.data.targets, embed_query(x, in.data, in.spec, in.basis));
}

}  // namespace

TEST_CASE("single sample: lambda = 1, entropy 0") {
    const Instance in = make_instance(1, 1, 2);
    CHECK(in.state.rank() == 1);
    CHECK(in.state.singular_values(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(entanglement_entropy(in.state) == doctest::Approx(0.0));
}

TEST_CASE("orthogonal encoded states: lambda_i^2 = 1/M, entropy ln M") {
    // far-apart samples under a sharp kernel are numerically orthogonal
    Dataset d;
    const Eigen::Index m = 5;
    d.features.resize(m, 1);
    for (Eigen::Index i = 0; i < m; ++i) d.features(i, 0) = 100.0 * static_cast<double>(i);
    d.targets = Eigen::VectorXd::Ones(m);
    const EncodingSpec spec{EncodingKind::squeezed_gaussian, 1.0};
    const TrainingState t = build_training_state(feature_basis(gram(d, spec)));
    for (Eigen::Index i = 0; i < t.rank(); ++i)
        CHECK(t.singular_values(i) * t.singular_values(i) ==
              doctest::Approx(1.0 / static_cast<double>(m)).epsilon(1e-12));
    CHECK(entanglement_entropy(t) ==
          doctest::Approx(std::log(static_cast<double>(m))).epsilon(1e-12));
}

TEST_CASE("training-state invariants: normalization, SVD reconstruction, gram duality") {
    for (std::uint64_t seed : {2ULL, 3ULL, 4ULL}) {
        const Instance in = make_instance(seed, 6, 2);
        const TrainingState& t = in.state;

        CHECK(t.singular_values.squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));

        const Eigen::MatrixXd rebuilt = t.left_vectors *
                                        t.singular_values.asDiagonal() *
                                        t.right_vectors.transpose();
        CHECK((rebuilt - t.amplitudes).cwiseAbs().maxCoeff() < 1e-10);

        // lambda_i^2 equal the eigenvalues of K / Tr K (independent eigensolver)
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(in.kernel.entries /
                                                          in.kernel.trace);
        Eigen::VectorXd ev = es.eigenvalues().reverse();
        for (Eigen::Index i = 0; i < t.rank(); ++i)
            CHECK(t.singular_values(i) * t.singular_values(i) ==
                  doctest::Approx(ev(i)).epsilon(1e-10));
    }
}

TEST_CASE("two-sample entropy matches the closed form -sum p ln p, p = (1 +- k)/2") {
    const Instance in = make_instance(5, 2, 2);
    const double k = in.kernel.entries(0, 1);
    const double p1 = (1.0 + k) / 2.0, p2 = (1.0 - k) / 2.0;
    const double expected = -(p1 * std::log(p1) + p2 * std::log(p2));
    CHECK(entanglement_entropy(in.state) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("transform arithmetic: g and f at the worked points") {
    CHECK(transform_value(1.0, {TransformKind::ridge_g, 1.0, 1.0}) == doctest::Approx(0.5));
    // f with lambda=1, chi=0, s^4=4: 1/sqrt(4/4+1) = 1/sqrt(2)
    CHECK(transform_value(1.0, {TransformKind::finite_squeeze_f, 0.0, std::sqrt(2.0)}) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(transform_value(0.7, {TransformKind::identity, 0.0, 1.0}) == doctest::Approx(0.7));
}

TEST_CASE("f approaches g as s grows, within the 2 lambda / (s^4 (l^2+chi)^3) bound") {
    const double s = 1e3;
    for (double chi : {0.05, 0.3, 1.0}) {
        for (double l : {0.1, 0.5, 1.0}) {
            const double g = transform_value(l, {TransformKind::ridge_g, chi, 1.0});
            const double f = transform_value(l, {TransformKind::finite_squeeze_f, chi, s});
            const double b = l * l + chi;
            const double bound = 2.0 * l / (std::pow(s, 4.0) * b * b * b);
            // the bound is tight; allow the roundoff of evaluating f and g
            CHECK(std::abs(f - g) <= bound + 1e-14);
            CHECK(f <= g);  // f never exceeds g at finite s
        }
    }
}

TEST_CASE("apply_transform: ridge_g with chi=0 on a singular spectrum") {
    TrainingState t;
    t.amplitudes = Eigen::MatrixXd::Identity(2, 2);
    t.singular_values = Eigen::VectorXd(2);
    t.singular_values << 1.0, 0.0;
    t.left_vectors = Eigen::MatrixXd::Identity(2, 2);
    t.right_vectors = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(apply_transform(t, {TransformKind::ridge_g, 0.0, 1.0}),
                    std::domain_error);
    const TrainedState ts = apply_transform(t, {TransformKind::ridge_g, 0.0, 1.0}, true);
    CHECK(ts.components(1) == 0.0);  // pseudo-inverse branch
}

TEST_CASE("predict_overlap: rank-1 self query gives 1, zero feature part gives 0") {
    const Instance in = make_instance(1, 1, 2);
    const TrainedState ts = apply_transform(in.state, {TransformKind::identity, 0.0, 1.0});

    QueryState q;
    q.target_part = in.state.left_vectors.col(0);
    q.feature_part = in.state.right_vectors.col(0);
    CHECK(predict_overlap(ts, q) == doctest::Approx(1.0).epsilon(1e-12));

    q.feature_part.setZero();
    q.residual_norm = 1.0;
    CHECK(predict_overlap(ts, q) == doctest::Approx(0.0));
}

TEST_CASE("predict_overlap matches a dense assembled-vector oracle") {
    const Instance in = make_instance(6, 4, 2);
    const SpectrumTransform tr{TransformKind::ridge_g, 0.2, 1.0};
    const TrainedState ts = apply_transform(in.state, tr);
    const QueryState q = random_query(in, 77);

    // Brute force: assemble the (M*D) vectors of both states and take the
    // plain dot product.
    const Eigen::Index m = in.state.sample_count(), d = in.state.span_dim();
    Eigen::VectorXd trained_vec = Eigen::VectorXd::Zero(m * d);
    for (Eigen::Index i = 0; i < ts.components.size(); ++i)
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < d; ++b)
                trained_vec(a * d + b) += ts.components(i) * ts.left_vectors(a, i) *
                                          ts.right_vectors(b, i);
    trained_vec /= ts.normalization;
    Eigen::VectorXd query_vec = Eigen::VectorXd::Zero(m * d);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
            query_vec(a * d + b) = q.target_part(a) * q.feature_part(b);

    CHECK(predict_overlap(ts, q) ==
          doctest::Approx(trained_vec.dot(query_vec)).epsilon(1e-11));
}

TEST_CASE("classical_krr identity-kernel closed forms") {
    KernelMatrix k;
    k.entries = Eigen::MatrixXd::Identity(3, 3);
    k.trace = 3.0;
    Eigen::VectorXd y(3), kap(3);
    y << 1, -2, 0.5;
    kap << 0.2, 0.4, -0.1;
    CHECK(classical_krr(k, y, 0.0, kap) == doctest::Approx(y.dot(kap)).epsilon(1e-12));
    CHECK(classical_krr(k, y, 1.0, kap) == doctest::Approx(y.dot(kap) / 2.0).epsilon(1e-12));
}

TEST_CASE("classical_krr agrees with an independent dense inverse") {
    const Instance in = make_instance(8, 4, 2);
    Rng rng(3);
    Eigen::VectorXd kap(4);
    for (int i = 0; i < 4; ++i) kap(i) = rng.uniform01();
    const double chi_c = 0.15;
    const double via_solve = classical_krr(in.kernel, in.data.targets, chi_c, kap);
    Eigen::MatrixXd sys = in.kernel.entries + chi_c * Eigen::MatrixXd::Identity(4, 4);
    const double via_inverse = in.data.targets.dot(sys.fullPivLu().inverse() * kap);
    CHECK(via_solve == doctest::Approx(via_inverse).epsilon(1e-11));
}

TEST_CASE("classical_krr rejects a singular system at chi=0") {
    KernelMatrix k;
    k.entries = Eigen::MatrixXd::Ones(2, 2);  // rank one
    k.trace = 2.0;
    Eigen::VectorXd y(2), kap(2);
    y << 1.0, -1.0;  // not in the range of K
    kap << 1.0, 1.0;
    CHECK_THROWS_AS(classical_krr(k, y, 0.0, kap), std::runtime_error);
}

TEST_CASE("quantum/classical equivalence: 1x1 closed form") {
    const Instance in = make_instance(10, 1, 1);
    const double chi = 0.4;
    const QueryState q = random_query(in, 5);
    const TrainedState ts = apply_transform(in.state, {TransformKind::ridge_g, chi, 1.0});
    const double kappa1 = in.basis.coordinates.row(0).dot(q.feature_part);
    const double y1 = in.data.targets(0);
    const double expected = y1 * kappa1 / ((1.0 + chi) * std::abs(y1));
    CHECK(predict_overlap_raw(ts, q) == doctest::Approx(expected).epsilon(1e-10));
    const double scale = quantum_vs_classical_scale(in.state, in.data.targets, chi);
    const double classical = classical_krr(in.kernel, in.data.targets,
                                           chi * in.kernel.trace, Eigen::VectorXd::Constant(1, kappa1));
    CHECK(scale * classical == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("quantum/classical equivalence: orthogonal states, exact for any chi") {
    Dataset d;
    d.features.resize(4, 1);
    for (int i = 0; i < 4; ++i) d.features(i, 0) = 50.0 * i;
    d.targets.resize(4);
    d.targets << 1.0, -0.5, 2.0, 0.25;
    const EncodingSpec spec{EncodingKind::squeezed_gaussian, 1.0};
    const KernelMatrix k = gram(d, spec);
    const FeatureBasis basis = feature_basis(k);
    const TrainingState t = build_training_state(basis);
    Rng rng(9);
    Eigen::VectorXd x(1);
    x << 60.0 + rng.uniform01();
    const QueryState q = make_query_state(d.targets, embed_query(x, d, spec, basis));
    for (double chi : {0.0, 0.1, 1.0, 10.0}) {
        const TrainedState ts = apply_transform(t, {TransformKind::ridge_g, chi, 1.0});
        Eigen::VectorXd kap(4);
        for (Eigen::Index m = 0; m < 4; ++m)
            kap(m) = kernel_value(d.features.row(m), x, spec);
        const double classical = classical_krr(k, d.targets, chi * k.trace, kap);
        const double scale = quantum_vs_classical_scale(t, d.targets, chi);
        CHECK(predict_overlap_raw(ts, q) ==
              doctest::Approx(scale * classical).epsilon(1e-9));
    }
}

TEST_CASE("quantum/classical equivalence on random instances M=8") {
    for (std::uint64_t seed = 20; seed < 26; ++seed) {
        const Instance in = make_instance(seed, 8, 3);
        const QueryState q = random_query(in, seed + 100);
        Eigen::VectorXd kap(8);
        Rng rng(seed + 200);
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x(i) = rng.normal();
        const QueryEmbedding emb = embed_query(x, in.data, in.spec, in.basis);
        const QueryState q2 = make_query_state(in.data.targets, emb);
        for (Eigen::Index m = 0; m < 8; ++m)
            kap(m) = kernel_value(in.data.features.row(m), x, in.spec);
        for (double chi : {1e-3, 0.1, 1.0}) {
            const TrainedState ts =
                apply_transform(in.state, {TransformKind::ridge_g, chi, 1.0});
            const double classical =
                classical_krr(in.kernel, in.data.targets, chi * in.kernel.trace, kap);
            const double scale =
                quantum_vs_classical_scale(in.state, in.data.targets, chi);
            const double raw = predict_overlap_raw(ts, q2);
            CHECK(raw == doctest::Approx(scale * classical).epsilon(1e-9));
        }
    }
}

TEST_CASE("basis rotation leaves predictions unchanged") {
    const Instance in = make_instance(30, 5, 2);
    const double chi = 0.2;
    Rng rng(31);
    Eigen::VectorXd x(2);
    x << rng.normal(), rng.normal();
    const QueryEmbedding emb = embed_query(x, in.data, in.spec, in.basis);
    const QueryState q = make_query_state(in.data.targets, emb);
    const TrainedState ts = apply_transform(in.state, {TransformKind::ridge_g, chi, 1.0});
    const double reference = predict_overlap(ts, q);

    // Random orthogonal rotation of the span coordinates.
    const Eigen::Index dd = in.basis.rank();
    Eigen::MatrixXd gauss(dd, dd);
    for (Eigen::Index i = 0; i < dd; ++i)
        for (Eigen::Index j = 0; j < dd; ++j) gauss(i, j) = rng.normal();
    const Eigen::MatrixXd rot = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();

    FeatureBasis rotated = in.basis;
    rotated.coordinates = in.basis.coordinates * rot;
    const TrainingState t2 = build_training_state(rotated);
    const QueryEmbedding emb2 = embed_query(x, in.data, in.spec, rotated);
    const QueryState q2 = make_query_state(in.data.targets, emb2);
    const TrainedState ts2 = apply_transform(t2, {TransformKind::ridge_g, chi, 1.0});
    CHECK(predict_overlap(ts2, q2) == doctest::Approx(reference).epsilon(1e-9));
}

TEST_CASE("finite_squeeze_f prediction converges monotonically to ridge_g") {
    const Instance in = make_instance(33, 5, 2);
    const double chi = 0.1;
    const QueryState q = random_query(in, 34);
    const TrainedState gstate = apply_transform(in.state, {TransformKind::ridge_g, chi, 1.0});
    const double target = predict_overlap(gstate, q);
    double prev = 1e100;
    for (double s : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        const TrainedState fs =
            apply_transform(in.state, {TransformKind::finite_squeeze_f, chi, s});
        const double err = std::abs(predict_overlap(fs, q) - target);
        CHECK(err <= prev * (1.0 + 1e-12));
        prev = err;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("swap_test at the exact corners") {
    const SwapTestResult one = swap_test(1.0, 100, 42);
    CHECK(one.p_hat == doctest::Approx(1.0));
    CHECK(one.y_magnitude == doctest::Approx(1.0));

    const SwapTestResult zero = swap_test(0.0, 2000000, 43);
    CHECK(zero.p_hat == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(zero.y_magnitude < 0.1);
}

TEST_CASE("swap_test binomial accuracy at overlap 0.6") {
    const SwapTestResult r = swap_test(0.6, 1000000, 7);
    CHECK(std::abs(r.p_hat - 0.68) <= 5e-3);
    CHECK(r.y_magnitude == doctest::Approx(0.6).epsilon(0.02));
}

TEST_CASE("swap_test magnitude converges to |overlap| with shots") {
    const double overlap = -0.37;  // sign is lost by construction
    const SwapTestResult r = swap_test(overlap, 4000000, 11);
    CHECK(r.y_magnitude == doctest::Approx(std::abs(overlap)).epsilon(5e-3));
}

TEST_CASE("swap_test input validation") {
    CHECK_THROWS_AS(swap_test(0.5, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(swap_test(1.5, 10, 1), std::invalid_argument);
}

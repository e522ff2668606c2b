#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qkrr/dataset.hpp"

using namespace qkrr;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path.string();
}

}  // namespace

TEST_CASE("load_csv parses a small table") {
    const auto path = write_temp_csv("qkrr_small.csv",
                                     "a,b,target\n1,2,3\n4,5,6\n7,8,9\n");
    const Dataset d = load_csv(path, "target");
    CHECK(d.samples() == 3);
    CHECK(d.dims() == 2);
    CHECK(d.features(0, 0) == doctest::Approx(1.0));
    CHECK(d.targets(2) == doctest::Approx(9.0));
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    CHECK_FALSE(d.standardized);
    std::remove(path.c_str());
}

TEST_CASE("load_csv accepts a Boston-shaped table (506 x 13 + target)") {
    std::string body;
    for (int j = 0; j < 13; ++j) body += "f" + std::to_string(j) + ",";
    body += "MEDV\n";
    for (int i = 0; i < 506; ++i) {
        for (int j = 0; j < 13; ++j) body += std::to_string(0.25 * j + i * 0.001) + ",";
        body += std::to_string(20.0 + 0.01 * i) + "\n";
    }
    const auto path = write_temp_csv("qkrr_boston_shape.csv", body);
    const Dataset d = load_csv(path, "MEDV");
    CHECK(d.samples() == 506);
    CHECK(d.dims() == 13);
    std::remove(path.c_str());
}

TEST_CASE("load_csv reports the offending row for a non-numeric cell") {
    const auto path = write_temp_csv(
        "qkrr_bad.csv", "a,target\n1,1\n2,2\n3,3\n4,4\noops,5\n6,6\n");
    CHECK_THROWS_WITH_AS(load_csv(path, "target"),
                         doctest::Contains("row 5"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("load_csv error paths: missing file, missing target") {
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", "y"), std::runtime_error);
    const auto path = write_temp_csv("qkrr_nt.csv", "a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(path, "target"), doctest::Contains("target"),
                         std::runtime_error);
    // numeric index fallback works
    const Dataset d = load_csv(path, "1");
    CHECK(d.dims() == 1);
    std::remove(path.c_str());
}

TEST_CASE("synthesize is deterministic in the seed") {
    const Dataset a = synthesize(1, 4, 2, 0.0);
    const Dataset b = synthesize(1, 4, 2, 0.0);
    CHECK((a.features - b.features).norm() == 0.0);
    CHECK((a.targets - b.targets).norm() == 0.0);

    const Dataset c = synthesize(2, 4, 2, 0.0);
    CHECK((a.features - c.features).norm() > 0.0);
}

TEST_CASE("synthesize with zero noise is a pure function of the features") {
    // Independent re-derivation of the documented target map
    // y = sin(x.w) + 0.3 (x.w)^2 with w_j = 1/(j+1) normalized.
    const Dataset d = synthesize(3, 6, 3, 0.0);
    Eigen::VectorXd w(3);
    w << 1.0, 0.5, 1.0 / 3.0;
    w /= w.norm();
    for (Eigen::Index i = 0; i < d.samples(); ++i) {
        const double z = d.features.row(i).dot(w);
        CHECK(d.targets(i) == doctest::Approx(std::sin(z) + 0.3 * z * z).epsilon(1e-12));
    }
    // with noise the targets deviate from the map
    const Dataset n = synthesize(3, 6, 3, 0.5);
    double dev = 0.0;
    for (Eigen::Index i = 0; i < n.samples(); ++i) {
        const double z = n.features.row(i).dot(w);
        dev += std::abs(n.targets(i) - std::sin(z) - 0.3 * z * z);
    }
    CHECK(dev > 0.0);
}

TEST_CASE("standardize: hand-computed z-scores with population sd") {
    Dataset d;
    d.features.resize(2, 1);
    d.features << 1.0, 3.0;
    d.targets.resize(2);
    d.targets << 0.0, 0.0;
    d.feature_names = {"a"};
    const Dataset z = standardize(d);
    // mean 2, population sd 1 -> (-1, 1)
    CHECK(z.features(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(z.features(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z.standardized);
}

TEST_CASE("standardize maps constant columns to zero and is idempotent") {
    Dataset d = synthesize(5, 8, 3, 0.1);
    d.features.col(1).setConstant(5.0);
    const Dataset z = standardize(d);
    CHECK(z.features.col(1).cwiseAbs().maxCoeff() == 0.0);

    for (Eigen::Index j = 0; j < z.dims(); ++j) {
        const double mean = z.features.col(j).mean();
        const double sd = std::sqrt((z.features.col(j).array() - mean).square().sum() /
                                    static_cast<double>(z.samples()));
        CHECK(std::abs(mean) < 1e-9);
        if (j != 1) CHECK(std::abs(sd - 1.0) < 1e-9);
    }

    const Dataset zz = standardize(z);
    CHECK((zz.features - z.features).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("standardize requires at least two samples") {
    const Dataset d = synthesize(1, 1, 2, 0.0);
    CHECK_THROWS_AS(standardize(d), std::invalid_argument);
}

TEST_CASE("split produces disjoint seeded subsets") {
    const Dataset d = synthesize(11, 10, 2, 0.0);
    const SplitSpec spec{7, 3, 99};
    const auto [train, test] = split(d, spec);
    CHECK(train.samples() == 7);
    CHECK(test.samples() == 3);

    // disjoint union of size 10: every original row appears exactly once
    std::vector<int> used(10, 0);
    auto mark = [&](const Dataset& part) {
        for (Eigen::Index i = 0; i < part.samples(); ++i)
            for (Eigen::Index m = 0; m < d.samples(); ++m)
                if ((part.features.row(i) - d.features.row(m)).norm() == 0.0 &&
                    part.targets(i) == d.targets(m))
                    ++used[static_cast<std::size_t>(m)];
    };
    mark(train);
    mark(test);
    for (int u : used) CHECK(u == 1);

    const auto [train2, test2] = split(d, spec);
    CHECK((train.features - train2.features).norm() == 0.0);
    CHECK((test.features - test2.features).norm() == 0.0);
}

TEST_CASE("split rejects counts exceeding the sample count") {
    const Dataset d = synthesize(11, 10, 2, 0.0);
    CHECK_THROWS_AS(split(d, SplitSpec{9, 3, 1}), std::invalid_argument);
}

// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "momo/feature_map.hpp"
#include "momo/rng.hpp"

using momo::FeatureMapKind;

TEST_CASE("elu1 branch values", "[feature_map]") {
    CHECK(momo::feature_map_scalar(FeatureMapKind::EluPlusOne, 0.0) == 1.0);
    CHECK(momo::feature_map_scalar(FeatureMapKind::EluPlusOne, 2.0) == 3.0);
    CHECK(momo::feature_map_scalar(FeatureMapKind::EluPlusOne, -1.0) ==
          Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("elu1 is strictly positive for finite inputs", "[feature_map]") {
    momo::Rng rng(2);
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-50.0, 50.0);
        CHECK(momo::feature_map_scalar(FeatureMapKind::EluPlusOne, x) > 0.0);
    }
    CHECK(momo::feature_map_scalar(FeatureMapKind::EluPlusOne, -700.0) > 0.0);
    CHECK(momo::feature_map_scalar(FeatureMapKind::EluPlusOne, 1e12) > 0.0);
}

TEST_CASE("elu1 derivative matches central differences", "[feature_map]") {
    const double h = 1e-5;
    // points on either side of the branch; both evaluations stay on one branch
    for (double x : {-0.5, -0.01, -2e-5, 2e-5, 0.01, 0.5}) {
        const double fd = (momo::feature_map_scalar(FeatureMapKind::EluPlusOne, x + h) -
                           momo::feature_map_scalar(FeatureMapKind::EluPlusOne, x - h)) /
                          (2.0 * h);
        const double an = momo::feature_map_derivative(FeatureMapKind::EluPlusOne, x);
        CHECK(std::abs(fd - an) <= 1e-6);
    }
    // at the branch point itself the one-sided curvature mismatch costs O(h)
    const double fd0 = (momo::feature_map_scalar(FeatureMapKind::EluPlusOne, h) -
                        momo::feature_map_scalar(FeatureMapKind::EluPlusOne, -h)) /
                       (2.0 * h);
    CHECK(std::abs(fd0 - 1.0) <= 3e-6);
}

TEST_CASE("identity and exp maps", "[feature_map]") {
    CHECK(momo::feature_map_scalar(FeatureMapKind::Identity, -3.5) == -3.5);
    CHECK(momo::feature_map_scalar(FeatureMapKind::Exp, 1.0) ==
          Catch::Approx(std::exp(1.0)).epsilon(1e-14));
    momo::Matrix m{{-1.0, 0.0, 2.0}};
    momo::Matrix mapped = momo::apply_feature_map(FeatureMapKind::EluPlusOne, m);
    CHECK(mapped(0, 0) == Catch::Approx(std::exp(-1.0)));
    CHECK(mapped(0, 1) == 1.0);
    CHECK(mapped(0, 2) == 3.0);
}

TEST_CASE("feature map names round-trip", "[feature_map]") {
    for (auto k : {FeatureMapKind::EluPlusOne, FeatureMapKind::Identity, FeatureMapKind::Exp})
        CHECK(momo::feature_map_from_name(momo::feature_map_name(k)) == k);
    CHECK_THROWS_AS(momo::feature_map_from_name("relu"), momo::ConfigError);
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>

#include "momo/error.hpp"
#include "momo/matrix.hpp"

namespace momo {

// Kernel feature map applied elementwise to query/key projections.
// EluPlusOne (elu(x)+1 with alpha=1) is strictly positive for finite input,
// which keeps the linear-attention denominator positive. Identity is for
// hand-checkable tests only and assumes the caller supplies positive inputs.
enum class FeatureMapKind { EluPlusOne, Identity, Exp };

inline FeatureMapKind feature_map_from_name(const std::string& name) {
    if (name == "elu1") return FeatureMapKind::EluPlusOne;
    if (name == "identity") return FeatureMapKind::Identity;
    if (name == "exp") return FeatureMapKind::Exp;
    throw ConfigError("unknown feature map: " + name);
}

inline std::string feature_map_name(FeatureMapKind k) {
    switch (k) {
        case FeatureMapKind::EluPlusOne: return "elu1";
        case FeatureMapKind::Identity: return "identity";
        case FeatureMapKind::Exp: return "exp";
    }
    return "?";
}

template <typename T>
T feature_map_scalar(FeatureMapKind kind, T x) {
    switch (kind) {
        case FeatureMapKind::EluPlusOne:
            return x >= T(0) ? x + T(1) : std::exp(x);
        case FeatureMapKind::Identity:
            return x;
        case FeatureMapKind::Exp:
            return std::exp(x);
    }
    return x;
}

template <typename T>
T feature_map_derivative(FeatureMapKind kind, T x) {
    switch (kind) {
        case FeatureMapKind::EluPlusOne:
            return x >= T(0) ? T(1) : std::exp(x);
        case FeatureMapKind::Identity:
            return T(1);
        case FeatureMapKind::Exp:
            return std::exp(x);
    }
    return T(1);
}

template <typename T>
DenseMatrix<T> apply_feature_map(FeatureMapKind kind, const DenseMatrix<T>& x) {
    DenseMatrix<T> out = x;
    for (auto& v : out.raw()) v = feature_map_scalar(kind, v);
    return out;
}

}  // namespace momo

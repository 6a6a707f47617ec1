// Copyright 2026 The weakorder Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Small-parameter limits from a finite schedule of couplings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "weakorder/error.hpp"

namespace weakorder {

inline constexpr double kMaxFitCondition = 1e10;

/// Polynomial: c0 + c1 e + c2 e^2. Even: c0 + c2 e^2 + c4 e^4, for ratios
/// that are even functions of the coupling.
enum class FitBasis { Polynomial, Even };

inline const char *fit_basis_name(FitBasis b) { return b == FitBasis::Even ? "even" : "polynomial"; }

struct LimitSample {
    double eps1;
    double value;
};

struct CorrelationResult {
    std::vector<double> eps1_schedule;  // strictly decreasing
    std::vector<double> values;
    FitBasis basis = FitBasis::Polynomial;
    double limit = 0.0;
    double slope = 0.0;      // coefficient of e (always 0 for the even basis)
    double curvature = 0.0;  // coefficient of e^2
    double fit_residual = 0.0;
    double condition = 0.0;
    double residual_tolerance = 0.0;

    bool valid() const { return fit_residual <= residual_tolerance; }
};

/// Least-squares fit of the samples in `basis`; the limit is the intercept.
inline CorrelationResult extrapolate_limit(std::vector<LimitSample> samples, FitBasis basis = FitBasis::Polynomial,
                                           double residual_tolerance = 1e-3) {
    if (samples.size() < 3) {
        throw Error(ErrorCode::InvalidArgument, "extrapolation needs at least 3 samples");
    }
    for (const auto &s : samples) {
        if (!(s.eps1 > 0.0) || !std::isfinite(s.eps1) || !std::isfinite(s.value)) {
            throw Error(ErrorCode::InvalidArgument, "schedule points must be finite with positive coupling");
        }
    }
    std::sort(samples.begin(), samples.end(), [](const auto &a, const auto &b) { return a.eps1 > b.eps1; });
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].eps1 == samples[i - 1].eps1) {
            throw Error(ErrorCode::DegenerateSchedule, "repeated coupling " + std::to_string(samples[i].eps1));
        }
    }

    const auto rows = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd design(rows, 3);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double e = samples[static_cast<std::size_t>(i)].eps1;
        const double u = (basis == FitBasis::Even) ? e * e : e;
        design(i, 0) = 1.0;
        design(i, 1) = u;
        design(i, 2) = u * u;
        rhs[i] = samples[static_cast<std::size_t>(i)].value;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    const double condition = sv[0] / sv[sv.size() - 1];
    if (!(condition <= kMaxFitCondition)) {
        throw Error(ErrorCode::IllConditionedFit, "fit condition number " + std::to_string(condition));
    }
    const Eigen::VectorXd coeff = svd.solve(rhs);

    CorrelationResult r;
    r.basis = basis;
    r.condition = condition;
    r.residual_tolerance = residual_tolerance;
    r.limit = coeff[0];
    if (basis == FitBasis::Even) {
        r.curvature = coeff[1];
    } else {
        r.slope = coeff[1];
        r.curvature = coeff[2];
    }
    r.fit_residual = (design * coeff - rhs).cwiseAbs().maxCoeff();
    for (const auto &s : samples) {
        r.eps1_schedule.push_back(s.eps1);
        r.values.push_back(s.value);
    }
    return r;
}

/// Least-squares slope of log|y| against log x.
inline double log_log_slope(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "log-log slope needs two or more paired points");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        design(i, 0) = 1.0;
        design(i, 1) = std::log(x[k]);
        rhs[i] = std::log(std::abs(y[k]));
    }
    return design.colPivHouseholderQr().solve(rhs)[1];
}

}  // namespace weakorder

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

// Weak values, the weak-coupling limit of the two-pointer correlation, and
// the projector-last / projector-first estimators built on it.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "weakorder/error.hpp"
#include "weakorder/extrapolation.hpp"
#include "weakorder/operator_core.hpp"
#include "weakorder/parallel.hpp"
#include "weakorder/pointer.hpp"
#include "weakorder/sequential.hpp"

namespace weakorder {

inline constexpr double kPostSelectionFloor = 1e-6;

struct WeakValue {
    double re = 0.0;
    double im = 0.0;

    static WeakValue from(complex z) { return {z.real(), z.imag()}; }
    complex value() const { return {re, im}; }
    WeakValue conj() const { return {re, -im}; }
};

/// Tr(rho P A) / Tr(rho P); equals <phi|A|psi>/<phi|psi> for pure rho = |psi><psi|, P = |phi><phi|.
inline WeakValue weak_value(const DensityMatrix &rho, const Projector &projector, const Observable &a,
                            double post_selection_floor = kPostSelectionFloor) {
    const CMatrix &p = projector.matrix();
    const complex norm = trace_product(rho, {p});
    if (norm.real() < post_selection_floor) {
        throw Error(ErrorCode::PostSelectionTooRare,
                    "Tr(rho P) = " + std::to_string(norm.real()) + " is below the post-selection floor");
    }
    return WeakValue::from(trace_product(rho, {p, a.matrix()}) / norm.real());
}

struct WeakLimitRhs {
    complex sym_term;      // (i/2) Tr(rho {A,B}) Tr(rho_M1 [P1,F1])
    complex antisym_term;  // (i/2) Tr(rho [A,B]) Tr(rho_M1 {P1,F1})
    double total = 0.0;
};

/// lim_{eps1 -> 0} correlation / (eps1 eps2), split into the parts that are
/// symmetric and antisymmetric under A <-> B.
inline WeakLimitRhs weak_limit_rhs(const DensityMatrix &rho, const Observable &a, const Observable &b,
                                   const PointerState &pointer1, const PointerObservable &f1) {
    const auto pointer_terms = symmetry_condition_values(pointer1, f1);
    const complex half_i(0.0, 0.5);
    WeakLimitRhs out;
    out.sym_term = half_i * trace_anticommutator(rho, a.matrix(), b.matrix()) * pointer_terms.antisym;
    out.antisym_term = half_i * trace_commutator(rho, a.matrix(), b.matrix()) * pointer_terms.sym;
    const complex sum = out.sym_term + out.antisym_term;
    out.total = detail::real_or_throw(sum, std::abs(out.sym_term) + std::abs(out.antisym_term), "weak_limit_rhs");
    return out;
}

struct PointerPair {
    PointerState pointer1;
    PointerState pointer2;
};

struct EstimatorOptions {
    double post_selection_floor = kPostSelectionFloor;
    FitBasis basis = FitBasis::Even;
    double residual_tolerance = 1e-3;
};

/// Raw pointer moments at one schedule point.
struct SchedulePoint {
    double eps1 = 0.0;
    double q1q2 = 0.0;  // <[Q1 - <Q1>_0] Q2>
    double p1q2 = 0.0;  // <[P1 - <P1>_0] Q2>
    double q1 = 0.0;
    double q2 = 0.0;
};

enum class MeasurementOrder { Forward, Reverse };

inline const char *order_name(MeasurementOrder o) { return o == MeasurementOrder::Forward ? "forward" : "reverse"; }

struct EstimatorResult {
    MeasurementOrder order = MeasurementOrder::Forward;
    /// The pair (re, im) read off the two ratio channels.
    WeakValue measured;
    /// Weak value inferred from `measured`: identical for the forward order,
    /// the complex conjugate for the reverse order.
    WeakValue weak_value;
    CorrelationResult re_fit;
    CorrelationResult im_fit;
    std::vector<SchedulePoint> points;
    double eps2 = 0.0;
    double sigma_p1_sq = 0.0;
};

namespace detail {

inline void require_standard_pointers(const PointerPair &pointers) {
    const auto r1 = check_pointer_conditions(pointers.pointer1);
    if (!r1.all_pass()) {
        throw Error(ErrorCode::PointerConditionsViolated,
                    "first pointer fails <Q>=0, <P>=0 or vanishing current (<Q>=" + std::to_string(r1.mean_q) +
                        ", <P>=" + std::to_string(r1.mean_p) +
                        ", current=" + std::to_string(r1.current_density_max) + ")");
    }
    const auto r2 = check_pointer_conditions(pointers.pointer2);
    if (!r2.mean_q_vanishes()) {
        throw Error(ErrorCode::PointerConditionsViolated, "second pointer has <Q2> != 0");
    }
}

inline void require_schedule(const std::vector<double> &schedule) {
    if (schedule.size() < 3) {
        throw Error(ErrorCode::InvalidArgument, "eps1 schedule needs at least 3 points");
    }
}

inline std::vector<SchedulePoint> run_schedule(const DensityMatrix &rho, const Observable &first,
                                               const Observable &second, const PointerPair &pointers,
                                               const std::vector<double> &schedule, double eps2) {
    std::vector<SchedulePoint> points(schedule.size());
    parallel_for(schedule.size(), [&](std::size_t i) {
        MeasurementSetup setup{rho, first, second, pointers.pointer1, pointers.pointer2, schedule[i], eps2};
        SchedulePoint p;
        p.eps1 = schedule[i];
        p.q1q2 = correlation(setup, PointerObservable::position(), PointerObservable::position());
        p.p1q2 = correlation(setup, PointerObservable::momentum(), PointerObservable::position());
        p.q1 = pointer1_mean(setup);
        p.q2 = pointer2_mean(setup);
        points[i] = p;
    });
    return points;
}

inline EstimatorResult finish(MeasurementOrder order, std::vector<SchedulePoint> points, double eps2,
                              double sigma_p1_sq, const EstimatorOptions &options) {
    std::vector<LimitSample> re_samples;
    std::vector<LimitSample> im_samples;
    for (const auto &p : points) {
        // Projector last: normalize by eps1 <Q2>. Projector first: by eps2 <Q1>.
        const double norm = (order == MeasurementOrder::Forward) ? p.eps1 * p.q2 : eps2 * p.q1;
        if (norm == 0.0) {
            throw Error(ErrorCode::PostSelectionTooRare, "projector pointer mean vanishes");
        }
        re_samples.push_back({p.eps1, p.q1q2 / norm});
        im_samples.push_back({p.eps1, p.p1q2 / (norm * 2.0 * sigma_p1_sq)});
    }
    EstimatorResult r;
    r.order = order;
    r.re_fit = extrapolate_limit(re_samples, options.basis, options.residual_tolerance);
    r.im_fit = extrapolate_limit(im_samples, options.basis, options.residual_tolerance);
    r.measured = {r.re_fit.limit, r.im_fit.limit};
    r.weak_value = (order == MeasurementOrder::Forward) ? r.measured : r.measured.conj();
    r.points = std::move(points);
    r.eps2 = eps2;
    r.sigma_p1_sq = sigma_p1_sq;
    return r;
}

inline void require_post_selection(const DensityMatrix &rho, const Projector &projector, double floor) {
    const double norm = trace_product(rho, {projector.matrix()}).real();
    if (norm < floor) {
        throw Error(ErrorCode::PostSelectionTooRare,
                    "Tr(rho P) = " + std::to_string(norm) + " is below the post-selection floor");
    }
}

}  // namespace detail

/// Projector measured second: lim <Q1 Q2>/(eps1 <Q2>) = Re A_w and
/// lim <P1 Q2>/(eps1 <Q2>) = 2 sigma_P1^2 Im A_w, extrapolated over the schedule.
inline EstimatorResult forward_estimator(const DensityMatrix &rho, const Observable &a, const Projector &projector,
                                         const PointerPair &pointers, const std::vector<double> &eps1_schedule,
                                         double eps2, const EstimatorOptions &options = {}) {
    detail::require_schedule(eps1_schedule);
    detail::require_standard_pointers(pointers);
    detail::require_post_selection(rho, projector, options.post_selection_floor);
    const double sigma_p1_sq = moment(pointers.pointer1, PointerObservable::momentum_power(2));
    auto points = detail::run_schedule(rho, a, projector.observable(), pointers, eps1_schedule, eps2);
    return detail::finish(MeasurementOrder::Forward, std::move(points), eps2, sigma_p1_sq, options);
}

/// Projector measured first: the ratio channels normalized by eps2 <Q1> read
/// (Re B_w, -Im B_w). `weak_value` holds the conjugate, i.e. B_w itself.
inline EstimatorResult reverse_estimator(const DensityMatrix &rho, const Projector &projector, const Observable &b,
                                         const PointerPair &pointers, const std::vector<double> &eps1_schedule,
                                         double eps2, const EstimatorOptions &options = {}) {
    detail::require_schedule(eps1_schedule);
    detail::require_standard_pointers(pointers);
    detail::require_post_selection(rho, projector, options.post_selection_floor);
    const double sigma_p1_sq = moment(pointers.pointer1, PointerObservable::momentum_power(2));
    auto points = detail::run_schedule(rho, projector.observable(), b, pointers, eps1_schedule, eps2);
    return detail::finish(MeasurementOrder::Reverse, std::move(points), eps2, sigma_p1_sq, options);
}

/// |<Q1 Q2>(A first) - <Q1 Q2>(B first)| at the given couplings.
inline double order_asymmetry(const DensityMatrix &rho, const Observable &a, const Observable &b,
                              const PointerPair &pointers, double eps1, double eps2) {
    const MeasurementSetup ab{rho, a, b, pointers.pointer1, pointers.pointer2, eps1, eps2};
    const MeasurementSetup ba{rho, b, a, pointers.pointer1, pointers.pointer2, eps1, eps2};
    const auto q = PointerObservable::position();
    return std::abs(correlation(ab, q, q) - correlation(ba, q, q));
}

/// order_asymmetry restricted to deliberately non-weak first couplings.
inline double strong_coupling_asymmetry(const DensityMatrix &rho, const Observable &a, const Observable &b,
                                        const PointerPair &pointers, double eps1, double eps2) {
    if (!(eps1 >= 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "strong-coupling asymmetry needs eps1 >= 0.5");
    }
    return order_asymmetry(rho, a, b, pointers, eps1, eps2);
}

}  // namespace weakorder

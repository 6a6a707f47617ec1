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

// Two impulsive couplings: eps1 * A * P1 at t1, then eps2 * B * P2 at t2.
// Expectations on the post-interaction state are evaluated as sums over the
// eigenprojectors of A and B; the full tensor state is built only as an oracle.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "weakorder/error.hpp"
#include "weakorder/operator_core.hpp"
#include "weakorder/pointer.hpp"

namespace weakorder {

inline constexpr double kImaginaryResidualTol = 1e-10;
inline constexpr std::size_t kMaxOracleDim = std::size_t{1} << 14;

/// Pointer M1 always couples first. A reverse-order experiment swaps the
/// observables, not the kicks.
struct MeasurementSetup {
    DensityMatrix rho_s;
    Observable first_observable;
    Observable second_observable;
    PointerState pointer1;
    PointerState pointer2;
    double eps1 = 0.0;
    double eps2 = 0.0;

    void validate() const {
        if (first_observable.dim() != rho_s.dim() || second_observable.dim() != rho_s.dim()) {
            throw Error(ErrorCode::DimensionMismatch, "observables and system state differ in dimension");
        }
        if (!std::isfinite(eps1) || !std::isfinite(eps2)) {
            throw Error(ErrorCode::InvalidArgument, "coupling strengths must be finite");
        }
    }
};

namespace detail {

struct ChannelTerms {
    // weights(n, n')[m] = Tr(rho P_{a_n'} P_{b_m} P_{a_n})
    std::vector<std::vector<std::vector<complex>>> weights;
    std::vector<double> shifts1;
    std::vector<double> shifts2;
};

inline ChannelTerms channel_terms(const MeasurementSetup &setup) {
    setup.validate();
    const auto &as = setup.first_observable.eigensystem();
    const auto &bs = setup.second_observable.eigensystem();
    ChannelTerms t;
    for (const auto &a : as) {
        t.shifts1.push_back(setup.eps1 * a.value);
    }
    for (const auto &b : bs) {
        t.shifts2.push_back(setup.eps2 * b.value);
    }
    t.weights.assign(as.size(), std::vector<std::vector<complex>>(as.size(), std::vector<complex>(bs.size())));
    for (std::size_t n = 0; n < as.size(); ++n) {
        for (std::size_t np = 0; np < as.size(); ++np) {
            const CMatrix left = setup.rho_s.matrix() * as[np].projector;
            for (std::size_t m = 0; m < bs.size(); ++m) {
                t.weights[n][np][m] = (left * bs[m].projector * as[n].projector).trace();
            }
        }
    }
    return t;
}

inline double real_or_throw(complex value, double scale, const std::string &what) {
    if (std::abs(value.imag()) > kImaginaryResidualTol * std::max(1.0, scale)) {
        throw Error(ErrorCode::ImaginaryResidualTooLarge,
                    what + " has imaginary residual " + std::to_string(value.imag()));
    }
    return value.real();
}

inline double sequential_sum(const MeasurementSetup &setup, const CMatrix &k1, const PointerObservable &g2,
                             const ChannelTerms &t, const std::string &what) {
    std::vector<complex> k2;
    k2.reserve(t.shifts2.size());
    for (double s : t.shifts2) {
        k2.push_back(overlap_kernel(setup.pointer2, s, s, g2));
    }
    complex total = 0.0;
    double scale = 0.0;
    for (std::size_t n = 0; n < t.shifts1.size(); ++n) {
        for (std::size_t np = 0; np < t.shifts1.size(); ++np) {
            const complex kk = k1(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(np));
            for (std::size_t m = 0; m < t.shifts2.size(); ++m) {
                const complex term = t.weights[n][np][m] * kk * k2[m];
                total += term;
                scale += std::abs(term);
            }
        }
    }
    return real_or_throw(total, scale, what);
}

inline void require_position_diagonal(const PointerObservable &g2) {
    if (!g2.diagonal_in_position()) {
        throw Error(ErrorCode::InvalidArgument, "second-pointer observable must be a function of Q2");
    }
}

}  // namespace detail

/// <F1 (x) G2> after both kicks, with no centering.
inline double expectation(const MeasurementSetup &setup, const PointerObservable &f1, const PointerObservable &g2) {
    detail::require_position_diagonal(g2);
    const auto t = detail::channel_terms(setup);
    const CMatrix k1 = overlap_kernel_matrix(setup.pointer1, t.shifts1, t.shifts1, f1);
    return detail::sequential_sum(setup, k1, g2, t, "expectation <" + f1.label() + " " + g2.label() + ">");
}

/// <[F1 - Tr(rho_M1 F1)] (x) G2> after both kicks; F1 is centered on the
/// initial pointer state.
inline double correlation(const MeasurementSetup &setup, const PointerObservable &f1, const PointerObservable &g2) {
    detail::require_position_diagonal(g2);
    const auto t = detail::channel_terms(setup);
    const double mean_f1 = moment(setup.pointer1, f1);
    CMatrix k1 = overlap_kernel_matrix(setup.pointer1, t.shifts1, t.shifts1, f1);
    if (mean_f1 != 0.0) {
        k1 -= mean_f1 * overlap_kernel_matrix(setup.pointer1, t.shifts1, t.shifts1, PointerObservable::identity());
    }
    return detail::sequential_sum(setup, k1, g2, t, "correlation <" + f1.label() + " " + g2.label() + ">");
}

inline double pointer1_mean(const MeasurementSetup &setup) {
    return expectation(setup, PointerObservable::position(), PointerObservable::identity());
}

inline double pointer2_mean(const MeasurementSetup &setup) {
    return expectation(setup, PointerObservable::identity(), PointerObservable::position());
}

/// Second coupling that separates B's eigenvalues by 25 pointer widths,
/// i.e. an effectively projective second measurement.
inline double projective_eps2(const Observable &b, const PointerState &pointer2) {
    const double gap = b.min_gap();
    if (!(gap > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "projective coupling needs at least two distinct eigenvalues");
    }
    return 25.0 * pointer2.sigma_q() / gap;
}

/// Post-interaction state on system (x) M1 (x) M2 in the orthonormal grid basis.
struct FullState {
    CMatrix rho;
    std::size_t dim_s = 0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;

    complex trace() const { return rho.trace(); }

    /// Tr(rho (S (x) F (x) G)) for operators given as dense matrices.
    complex expectation(const CMatrix &system_op, const CMatrix &f1, const CMatrix &g2) const {
        const CMatrix op = Eigen::kroneckerProduct(Eigen::kroneckerProduct(system_op, f1).eval(), g2).eval();
        return rho.cwiseProduct(op.transpose()).sum();
    }
};

/// Explicit sum over (n, n', m, m') of
/// (P_bm P_an rho_s P_an' P_bm') (x) (T1(eps1 a_n) rho_M1 T1(eps1 a_n')^dag) (x) (T2 ... T2^dag).
inline FullState full_state_oracle(const MeasurementSetup &setup) {
    setup.validate();
    if (!setup.pointer1.is_grid() || !setup.pointer2.is_grid()) {
        throw Error(ErrorCode::BackendUnsupported, "full state oracle needs grid pointers");
    }
    FullState out;
    out.dim_s = setup.rho_s.dim();
    out.n1 = setup.pointer1.grid().n_points;
    out.n2 = setup.pointer2.grid().n_points;
    const std::size_t total = out.dim_s * out.n1 * out.n2;
    if (total > kMaxOracleDim) {
        throw Error(ErrorCode::OracleTooLarge,
                    "oracle dimension " + std::to_string(total) + " exceeds " + std::to_string(kMaxOracleDim));
    }
    const auto &as = setup.first_observable.eigensystem();
    const auto &bs = setup.second_observable.eigensystem();
    const CMatrix rho1 = grid_density_matrix(setup.pointer1);
    const CMatrix rho2 = grid_density_matrix(setup.pointer2);
    std::vector<CMatrix> t1;
    for (const auto &a : as) {
        t1.push_back(grid_translation_matrix(setup.pointer1, setup.eps1 * a.value));
    }
    std::vector<CMatrix> t2;
    for (const auto &b : bs) {
        t2.push_back(grid_translation_matrix(setup.pointer2, setup.eps2 * b.value));
    }

    const auto big = static_cast<Eigen::Index>(total);
    out.rho = CMatrix::Zero(big, big);
    for (std::size_t n = 0; n < as.size(); ++n) {
        for (std::size_t np = 0; np < as.size(); ++np) {
            const CMatrix m1 = t1[n] * rho1 * t1[np].adjoint();
            for (std::size_t m = 0; m < bs.size(); ++m) {
                for (std::size_t mp = 0; mp < bs.size(); ++mp) {
                    const CMatrix sys = bs[m].projector * as[n].projector * setup.rho_s.matrix() *
                                        as[np].projector * bs[mp].projector;
                    if (sys.cwiseAbs().maxCoeff() == 0.0) {
                        continue;
                    }
                    const CMatrix m2 = t2[m] * rho2 * t2[mp].adjoint();
                    out.rho += Eigen::kroneckerProduct(Eigen::kroneckerProduct(sys, m1).eval(), m2).eval();
                }
            }
        }
    }
    return out;
}

}  // namespace weakorder

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

// Pointer preparations and their functionals. Two backends: a closed-form
// real Gaussian, and a periodic position grid where momentum and translations
// act spectrally (so e^{-ixP} is an exact phase in the Fourier basis).

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "weakorder/error.hpp"
#include "weakorder/operator_core.hpp"

namespace weakorder {

inline constexpr double kPointerConditionTol = 1e-8;

enum class PointerBackend { AnalyticGaussian, Grid };

struct GridSpec {
    std::size_t n_points = 256;
    double spacing = 0.125;

    double box_length() const { return static_cast<double>(n_points) * spacing; }
    /// Largest admissible |translation|; a quarter box keeps shifted states clear of the wrap.
    double max_translation() const { return box_length() / 4.0; }
};

inline GridSpec default_grid(double sigma_q) { return {256, sigma_q / 8.0}; }

/// Observable on a pointer. Powers of Q or P (power 0 is the identity),
/// real functions of Q or of P, or an explicit matrix in the grid basis.
class PointerObservable {
public:
    enum class Kind { PositionPower, MomentumPower, FunctionOfQ, FunctionOfP, ExplicitMatrix };

    static PointerObservable identity() { return power_of(Kind::PositionPower, 0, "1"); }
    static PointerObservable position() { return power_of(Kind::PositionPower, 1, "Q"); }
    static PointerObservable momentum() { return power_of(Kind::MomentumPower, 1, "P"); }
    static PointerObservable position_power(int k) {
        return power_of(Kind::PositionPower, k, k == 0 ? "1" : "Q^" + std::to_string(k));
    }
    static PointerObservable momentum_power(int k) {
        return power_of(Kind::MomentumPower, k, k == 0 ? "1" : "P^" + std::to_string(k));
    }
    static PointerObservable function_of_q(std::function<double(double)> f, std::string label = "f(Q)") {
        PointerObservable o;
        o.kind_ = Kind::FunctionOfQ;
        o.function_ = std::move(f);
        o.label_ = std::move(label);
        return o;
    }
    static PointerObservable function_of_p(std::function<double(double)> f, std::string label = "f(P)") {
        PointerObservable o;
        o.kind_ = Kind::FunctionOfP;
        o.function_ = std::move(f);
        o.label_ = std::move(label);
        return o;
    }
    static PointerObservable explicit_matrix(CMatrix m, std::string label = "M") {
        if (m.rows() != m.cols()) {
            throw Error(ErrorCode::DimensionMismatch, "pointer observable matrix must be square");
        }
        if (hermiticity_defect(m) > 1e-10) {
            throw Error(ErrorCode::NonHermitianInput, "pointer observable matrix is not Hermitian");
        }
        PointerObservable o;
        o.kind_ = Kind::ExplicitMatrix;
        o.matrix_ = std::move(m);
        o.label_ = std::move(label);
        return o;
    }

    Kind kind() const { return kind_; }
    int power() const { return power_; }
    const std::string &label() const { return label_; }
    const CMatrix &matrix() const { return matrix_; }

    bool is_identity() const {
        return (kind_ == Kind::PositionPower || kind_ == Kind::MomentumPower) && power_ == 0;
    }
    bool diagonal_in_position() const {
        return kind_ == Kind::FunctionOfQ || kind_ == Kind::PositionPower || is_identity();
    }
    bool function_of_momentum() const {
        return kind_ == Kind::FunctionOfP || kind_ == Kind::MomentumPower || is_identity();
    }

    /// Multiplier in the representation where the observable is diagonal.
    double symbol(double x) const {
        switch (kind_) {
            case Kind::PositionPower:
            case Kind::MomentumPower: return std::pow(x, power_);
            case Kind::FunctionOfQ:
            case Kind::FunctionOfP: return function_(x);
            case Kind::ExplicitMatrix: break;
        }
        throw Error(ErrorCode::InvalidArgument, "explicit matrices have no diagonal symbol");
    }

private:
    static PointerObservable power_of(Kind kind, int k, std::string label) {
        if (k < 0) {
            throw Error(ErrorCode::InvalidArgument, "negative operator power");
        }
        PointerObservable o;
        o.kind_ = kind;
        o.power_ = k;
        o.label_ = std::move(label);
        return o;
    }

    Kind kind_ = Kind::PositionPower;
    int power_ = 0;
    std::function<double(double)> function_;
    CMatrix matrix_;
    std::string label_;
};

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

inline Eigen::FFT<double> &fft() {
    thread_local Eigen::FFT<double> instance;
    return instance;
}

inline CVector forward_fft(const CVector &x) {
    CVector out(x.size());
    fft().fwd(out, x);
    return out;
}

inline CVector inverse_fft(const CVector &x) {
    CVector out(x.size());
    fft().inv(out, x);
    return out;
}

}  // namespace detail

/// Pointer preparation. For the grid backend the state is a convex mixture of
/// pure wavefunctions sampled at x_j = (j - n/2) * spacing and normalized so
/// that sum |psi_j|^2 * spacing = 1.
class PointerState {
public:
    struct Component {
        double weight;
        CVector amplitudes;
        CVector spectrum;
    };

    static PointerState analytic_gaussian(double sigma_q) {
        if (!(sigma_q > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "sigma_q must be positive");
        }
        PointerState s;
        s.backend_ = PointerBackend::AnalyticGaussian;
        s.sigma_q_ = sigma_q;
        return s;
    }

    /// Grid state from (weight, amplitudes) pairs. Each wavefunction is
    /// renormalized on the grid and weights are scaled to sum to one.
    static PointerState grid_mixture(const GridSpec &grid, const std::vector<std::pair<double, CVector>> &mixture,
                                     double nominal_sigma_q = 0.0) {
        if (!detail::is_power_of_two(grid.n_points)) {
            throw Error(ErrorCode::InvalidArgument, "grid size must be a power of two");
        }
        if (!(grid.spacing > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
        }
        if (mixture.empty()) {
            throw Error(ErrorCode::InvalidArgument, "pointer mixture is empty");
        }
        double total_weight = 0.0;
        for (const auto &[w, amp] : mixture) {
            if (!(w >= 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "mixture weights must be non-negative");
            }
            if (static_cast<std::size_t>(amp.size()) != grid.n_points) {
                throw Error(ErrorCode::DimensionMismatch, "amplitude vector does not match the grid");
            }
            total_weight += w;
        }
        if (!(total_weight > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "mixture weights sum to zero");
        }

        PointerState s;
        s.backend_ = PointerBackend::Grid;
        s.sigma_q_ = nominal_sigma_q;
        s.grid_ = grid;
        s.init_axes();
        for (const auto &[w, amp] : mixture) {
            const double norm = std::sqrt(amp.squaredNorm() * grid.spacing);
            if (!(norm > 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "zero wavefunction in pointer mixture");
            }
            CVector psi = amp / norm;
            CVector spec = detail::forward_fft(psi);
            s.components_.push_back({w / total_weight, std::move(psi), std::move(spec)});
        }
        return s;
    }

    PointerBackend backend() const { return backend_; }
    bool is_grid() const { return backend_ == PointerBackend::Grid; }
    /// Nominal position spread (exact for the analytic backend, the
    /// preparation parameter for grid Gaussians, 0 when unknown).
    double sigma_q() const { return sigma_q_; }
    const GridSpec &grid() const { return grid_; }
    bool is_pure() const { return backend_ == PointerBackend::AnalyticGaussian || components_.size() == 1; }
    const std::vector<Component> &components() const { return components_; }
    const Eigen::VectorXd &positions() const { return positions_; }
    const Eigen::VectorXd &wavenumbers() const { return wavenumbers_; }

    /// e^{-i shift P} psi for component `c`; shifts the position profile by +shift.
    CVector translated(std::size_t c, double shift) const {
        require_grid();
        check_translation(shift);
        const auto &spec = components_[c].spectrum;
        CVector phased(spec.size());
        for (Eigen::Index j = 0; j < spec.size(); ++j) {
            phased[j] = spec[j] * std::polar(1.0, -wavenumbers_[j] * shift);
        }
        return detail::inverse_fft(phased);
    }

    CVector apply(const PointerObservable &f, const CVector &psi) const {
        require_grid();
        using Kind = PointerObservable::Kind;
        switch (f.kind()) {
            case Kind::PositionPower:
            case Kind::FunctionOfQ: {
                if (f.is_identity()) {
                    return psi;
                }
                CVector out(psi.size());
                for (Eigen::Index j = 0; j < psi.size(); ++j) {
                    out[j] = f.symbol(positions_[j]) * psi[j];
                }
                return out;
            }
            case Kind::MomentumPower:
            case Kind::FunctionOfP: {
                if (f.is_identity()) {
                    return psi;
                }
                CVector spec = detail::forward_fft(psi);
                for (Eigen::Index j = 0; j < spec.size(); ++j) {
                    spec[j] *= f.symbol(wavenumbers_[j]);
                }
                return detail::inverse_fft(spec);
            }
            case Kind::ExplicitMatrix:
                if (f.matrix().rows() != psi.size()) {
                    throw Error(ErrorCode::DimensionMismatch, "explicit pointer observable does not match the grid");
                }
                return f.matrix() * psi;
        }
        return psi;
    }

    /// Grid inner product <a|b> = sum conj(a_j) b_j * spacing.
    complex inner(const CVector &a, const CVector &b) const { return a.dot(b) * grid_.spacing; }

    void check_translation(double shift) const {
        if (is_grid() && !(std::abs(shift) < grid_.max_translation())) {
            throw Error(ErrorCode::TranslationOutOfRange,
                        "translation " + std::to_string(shift) + " exceeds a quarter of the grid box (" +
                            std::to_string(grid_.max_translation()) + ")");
        }
    }

private:
    void require_grid() const {
        if (!is_grid()) {
            throw Error(ErrorCode::BackendUnsupported, "operation requires the grid backend");
        }
    }

    void init_axes() {
        const auto n = static_cast<Eigen::Index>(grid_.n_points);
        positions_.resize(n);
        wavenumbers_.resize(n);
        const double dk = 2.0 * std::numbers::pi / grid_.box_length();
        for (Eigen::Index j = 0; j < n; ++j) {
            positions_[j] = static_cast<double>(j - n / 2) * grid_.spacing;
            // The Nyquist mode gets k = 0 so that P stays Hermitian and odd under parity.
            if (j < n / 2) {
                wavenumbers_[j] = dk * static_cast<double>(j);
            } else if (j == n / 2) {
                wavenumbers_[j] = 0.0;
            } else {
                wavenumbers_[j] = dk * static_cast<double>(j - n);
            }
        }
    }

    PointerBackend backend_ = PointerBackend::AnalyticGaussian;
    double sigma_q_ = 1.0;
    GridSpec grid_{};
    std::vector<Component> components_;
    Eigen::VectorXd positions_;
    Eigen::VectorXd wavenumbers_;
};

/// Gaussian sampled on a grid, optionally displaced to mean `displacement` and
/// boosted by e^{i boost Q}. Requires spacing <= sigma/4 and box >= 16 sigma.
inline PointerState make_grid_gaussian(double sigma_q, const GridSpec &grid, double displacement = 0.0,
                                       double boost = 0.0) {
    if (!(sigma_q > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sigma_q must be positive");
    }
    if (!detail::is_power_of_two(grid.n_points)) {
        throw Error(ErrorCode::InvalidArgument, "grid size must be a power of two");
    }
    if (!(grid.spacing <= sigma_q / 4.0) || !(grid.box_length() >= 16.0 * sigma_q)) {
        throw Error(ErrorCode::GridUnderResolved, "grid needs spacing <= sigma_q/4 and n*spacing >= 16*sigma_q");
    }
    const auto n = static_cast<Eigen::Index>(grid.n_points);
    CVector psi(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x = static_cast<double>(j - n / 2) * grid.spacing;
        const double u = x - displacement;
        psi[j] = std::polar(std::exp(-u * u / (4.0 * sigma_q * sigma_q)), boost * x);
    }
    return PointerState::grid_mixture(grid, {{1.0, psi}}, sigma_q);
}

/// Real, zero-mean ground-state Gaussian with position spread sigma_q.
inline PointerState make_gaussian_pointer(double sigma_q, PointerBackend backend = PointerBackend::Grid,
                                          std::optional<GridSpec> grid = std::nullopt) {
    if (backend == PointerBackend::AnalyticGaussian) {
        return PointerState::analytic_gaussian(sigma_q);
    }
    if (!(sigma_q > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sigma_q must be positive");
    }
    return make_grid_gaussian(sigma_q, grid.value_or(default_grid(sigma_q)));
}

namespace detail {

// Tr(e^{-ixP} rho e^{iyP} F) for the real Gaussian psi(q) ~ exp(-q^2/(4 s^2)).
// With m = (x+y)/2 and d = y - x the shifted-state product is a Gaussian of
// mean m and variance s^2 scaled by the overlap exp(-d^2/(8 s^2)).
inline complex analytic_gaussian_kernel(double s, double x, double y, const PointerObservable &f) {
    using Kind = PointerObservable::Kind;
    const double s2 = s * s;
    const double d = y - x;
    const double m = 0.5 * (x + y);
    const double overlap = std::exp(-d * d / (8.0 * s2));
    if (f.is_identity()) {
        return overlap;
    }
    if (f.kind() == Kind::PositionPower) {
        if (f.power() == 1) {
            return m * overlap;
        }
        if (f.power() == 2) {
            return (m * m + s2) * overlap;
        }
    }
    if (f.kind() == Kind::MomentumPower) {
        if (f.power() == 1) {
            return complex(0.0, d / (4.0 * s2)) * overlap;
        }
        if (f.power() == 2) {
            return (1.0 / (4.0 * s2) - d * d / (16.0 * s2 * s2)) * overlap;
        }
    }
    throw Error(ErrorCode::BackendUnsupported,
                "analytic Gaussian backend has no closed form for " + f.label() + "; use the grid backend");
}

}  // namespace detail

/// Matrix K(i, j) = Tr(e^{-i x_i P} rho e^{+i y_j P} F). Translations are
/// computed once per shift, so this is the efficient path for eigenvalue sums.
inline CMatrix overlap_kernel_matrix(const PointerState &rho, std::span<const double> xs, std::span<const double> ys,
                                     const PointerObservable &f) {
    CMatrix k = CMatrix::Zero(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
    if (!rho.is_grid()) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < ys.size(); ++j) {
                k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    detail::analytic_gaussian_kernel(rho.sigma_q(), xs[i], ys[j], f);
            }
        }
        return k;
    }
    for (double x : xs) {
        rho.check_translation(x);
    }
    for (double y : ys) {
        rho.check_translation(y);
    }
    for (std::size_t c = 0; c < rho.components().size(); ++c) {
        const double w = rho.components()[c].weight;
        std::vector<CVector> kets;
        kets.reserve(xs.size());
        for (double x : xs) {
            kets.push_back(rho.apply(f, rho.translated(c, x)));
        }
        std::vector<CVector> bras;
        bras.reserve(ys.size());
        for (double y : ys) {
            bras.push_back(rho.translated(c, y));
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < ys.size(); ++j) {
                k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += w * rho.inner(bras[j], kets[i]);
            }
        }
    }
    return k;
}

/// Tr(e^{-ixP} rho_M e^{+iyP} F): the pointer factor of the eigenprojector sum.
inline complex overlap_kernel(const PointerState &rho, double x, double y, const PointerObservable &f) {
    const double xs[] = {x};
    const double ys[] = {y};
    return overlap_kernel_matrix(rho, xs, ys, f)(0, 0);
}

/// Tr(rho_M F) for Hermitian F.
inline double moment(const PointerState &rho, const PointerObservable &f) {
    return overlap_kernel(rho, 0.0, 0.0, f).real();
}

struct PointerConditionReport {
    double mean_q = 0.0;
    double mean_p = 0.0;
    double current_density_max = 0.0;
    double threshold = kPointerConditionTol;

    bool mean_q_vanishes() const { return std::abs(mean_q) <= threshold; }
    bool mean_p_vanishes() const { return std::abs(mean_p) <= threshold; }
    bool current_vanishes() const { return current_density_max <= threshold; }
    bool all_pass() const { return mean_q_vanishes() && mean_p_vanishes() && current_vanishes(); }
};

/// <Q>, <P> and max_Q |<Q| rho P + P rho |Q>| (the pointer current density).
inline PointerConditionReport check_pointer_conditions(const PointerState &rho) {
    PointerConditionReport r;
    if (!rho.is_grid()) {
        return r;
    }
    r.mean_q = moment(rho, PointerObservable::position());
    r.mean_p = moment(rho, PointerObservable::momentum());
    Eigen::VectorXd current = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rho.grid().n_points));
    for (const auto &c : rho.components()) {
        const CVector p_psi = rho.apply(PointerObservable::momentum(), c.amplitudes);
        for (Eigen::Index j = 0; j < current.size(); ++j) {
            current[j] += c.weight * 2.0 * (std::conj(c.amplitudes[j]) * p_psi[j]).real();
        }
    }
    r.current_density_max = current.cwiseAbs().maxCoeff();
    return r;
}

struct SymmetryConditionValues {
    complex sym;      // Tr(rho_M {P, F})
    complex antisym;  // Tr(rho_M [P, F])
};

inline SymmetryConditionValues symmetry_condition_values(const PointerState &rho, const PointerObservable &f) {
    using Kind = PointerObservable::Kind;
    SymmetryConditionValues out{};
    if (!rho.is_grid()) {
        // Real zero-mean Gaussian: odd moments vanish and real wavefunctions
        // carry no current, so only a few closed forms survive.
        const double s2 = rho.sigma_q() * rho.sigma_q();
        if (f.is_identity()) {
            return out;
        }
        if (f.kind() == Kind::PositionPower && f.power() <= 2) {
            out.antisym = (f.power() == 1) ? complex(0.0, -1.0) : complex(0.0);
            return out;
        }
        if (f.kind() == Kind::MomentumPower && f.power() <= 2) {
            out.sym = (f.power() == 1) ? 2.0 / (4.0 * s2) : 0.0;
            return out;
        }
        throw Error(ErrorCode::BackendUnsupported, "analytic Gaussian backend has no closed form for " + f.label());
    }
    const auto momentum = PointerObservable::momentum();
    for (const auto &c : rho.components()) {
        const CVector p_psi = rho.apply(momentum, c.amplitudes);
        const CVector f_psi = rho.apply(f, c.amplitudes);
        const complex pf = rho.inner(c.amplitudes, rho.apply(momentum, f_psi));
        const complex fp = rho.inner(c.amplitudes, rho.apply(f, p_psi));
        out.sym += c.weight * (pf + fp);
        out.antisym += c.weight * (pf - fp);
    }
    if (f.function_of_momentum()) {
        out.antisym = 0.0;
    }
    return out;
}

/// Pointer observable as a dense matrix in the orthonormal grid basis.
inline CMatrix grid_operator_matrix(const PointerState &rho, const PointerObservable &f) {
    const auto n = static_cast<Eigen::Index>(rho.grid().n_points);
    CMatrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        m.col(j) = rho.apply(f, ops::basis(static_cast<std::size_t>(n), static_cast<std::size_t>(j)));
    }
    return m;
}

/// Pointer state as a dense density matrix in the orthonormal grid basis.
inline CMatrix grid_density_matrix(const PointerState &rho) {
    if (!rho.is_grid()) {
        throw Error(ErrorCode::BackendUnsupported, "density matrix requires the grid backend");
    }
    const auto n = static_cast<Eigen::Index>(rho.grid().n_points);
    CMatrix m = CMatrix::Zero(n, n);
    for (const auto &c : rho.components()) {
        const CVector v = c.amplitudes * std::sqrt(rho.grid().spacing);
        m += c.weight * v * v.adjoint();
    }
    return m;
}

/// e^{-i shift P} as a dense unitary on the grid.
inline CMatrix grid_translation_matrix(const PointerState &rho, double shift) {
    rho.check_translation(shift);
    const auto n = static_cast<Eigen::Index>(rho.grid().n_points);
    CMatrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        CVector spec = detail::forward_fft(ops::basis(static_cast<std::size_t>(n), static_cast<std::size_t>(j)));
        for (Eigen::Index k = 0; k < n; ++k) {
            spec[k] *= std::polar(1.0, -rho.wavenumbers()[k] * shift);
        }
        m.col(j) = detail::inverse_fft(spec);
    }
    return m;
}

}  // namespace weakorder

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

// Classical counterpart of the two-pointer scheme: phase-space ensembles,
// impulsive kicks generated by eps * A(q,p) * P_i, Monte Carlo pointer
// correlations, and the Poisson-bracket weak-coupling limit.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "weakorder/error.hpp"
#include "weakorder/parallel.hpp"

namespace weakorder::classical {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kDivergenceBound = 1e6;
inline constexpr int kLeapfrogSubsteps = 64;

struct PolyTerm {
    double coefficient;
    int q_power;
    int p_power;
};

/// Real function on a 2d phase space (q, p). Linear and Quadratic kinds are
/// stored as 1/2 z^T M z + b^T z + c with exact gradients; Generic carries a
/// callable and, when no gradient is given, uses central differences.
class ClassicalObservable {
public:
    enum class Kind { Linear, Quadratic, Generic };
    using Fn = std::function<double(double, double)>;
    using GradFn = std::function<Vec2(double, double)>;

    static ClassicalObservable linear(double alpha, double beta, double gamma = 0.0, std::string label = {}) {
        ClassicalObservable o;
        o.kind_ = Kind::Linear;
        o.b_ = Vec2(alpha, beta);
        o.c_ = gamma;
        o.label_ = label.empty() ? "linear" : std::move(label);
        return o;
    }
    static ClassicalObservable q() { return linear(1.0, 0.0, 0.0, "q"); }
    static ClassicalObservable p() { return linear(0.0, 1.0, 0.0, "p"); }
    static ClassicalObservable constant(double c) { return linear(0.0, 0.0, c, "const"); }

    static ClassicalObservable quadratic(const Mat2 &m, const Vec2 &b = Vec2::Zero(), double c = 0.0,
                                         std::string label = {}) {
        ClassicalObservable o;
        o.kind_ = Kind::Quadratic;
        o.m_ = 0.5 * (m + m.transpose());
        o.b_ = b;
        o.c_ = c;
        o.label_ = label.empty() ? "quadratic" : std::move(label);
        if (o.m_.cwiseAbs().maxCoeff() == 0.0) {
            o.kind_ = Kind::Linear;
        }
        return o;
    }
    /// (q^2 + p^2) / 2
    static ClassicalObservable harmonic() { return quadratic(Mat2::Identity(), Vec2::Zero(), 0.0, "q2p2"); }

    static ClassicalObservable generic(Fn f, std::optional<GradFn> gradient = std::nullopt,
                                       std::string label = "generic") {
        ClassicalObservable o;
        o.kind_ = Kind::Generic;
        o.f_ = std::move(f);
        if (gradient) {
            o.grad_ = std::move(*gradient);
        }
        o.label_ = std::move(label);
        return o;
    }

    /// Sum of coefficient * q^i * p^j. Degree <= 2 maps onto the exact
    /// Linear/Quadratic kinds.
    static ClassicalObservable polynomial(std::vector<PolyTerm> terms, std::string label = "polynomial") {
        int degree = 0;
        for (const auto &t : terms) {
            if (t.q_power < 0 || t.p_power < 0) {
                throw Error(ErrorCode::InvalidArgument, "polynomial powers must be non-negative");
            }
            degree = std::max(degree, t.q_power + t.p_power);
        }
        if (degree <= 2) {
            Mat2 m = Mat2::Zero();
            Vec2 b = Vec2::Zero();
            double c = 0.0;
            for (const auto &t : terms) {
                if (t.q_power == 2) {
                    m(0, 0) += 2.0 * t.coefficient;
                } else if (t.p_power == 2) {
                    m(1, 1) += 2.0 * t.coefficient;
                } else if (t.q_power == 1 && t.p_power == 1) {
                    m(0, 1) += t.coefficient;
                    m(1, 0) += t.coefficient;
                } else if (t.q_power == 1) {
                    b[0] += t.coefficient;
                } else if (t.p_power == 1) {
                    b[1] += t.coefficient;
                } else {
                    c += t.coefficient;
                }
            }
            return quadratic(m, b, c, std::move(label));
        }
        auto f = [terms](double q, double p) {
            double s = 0.0;
            for (const auto &t : terms) {
                s += t.coefficient * std::pow(q, t.q_power) * std::pow(p, t.p_power);
            }
            return s;
        };
        auto g = [terms](double q, double p) {
            Vec2 d = Vec2::Zero();
            for (const auto &t : terms) {
                if (t.q_power > 0) {
                    d[0] += t.coefficient * t.q_power * std::pow(q, t.q_power - 1) * std::pow(p, t.p_power);
                }
                if (t.p_power > 0) {
                    d[1] += t.coefficient * t.p_power * std::pow(q, t.q_power) * std::pow(p, t.p_power - 1);
                }
            }
            return d;
        };
        return generic(f, GradFn(g), std::move(label));
    }

    Kind kind() const { return kind_; }
    bool is_affine_or_quadratic() const { return kind_ != Kind::Generic; }
    const std::string &label() const { return label_; }
    const Mat2 &hessian() const { return m_; }
    const Vec2 &linear_part() const { return b_; }
    double offset() const { return c_; }

    double operator()(double q, double p) const {
        if (kind_ == Kind::Generic) {
            return f_(q, p);
        }
        const Vec2 z(q, p);
        return 0.5 * z.dot(m_ * z) + b_.dot(z) + c_;
    }

    Vec2 gradient(double q, double p) const {
        if (kind_ != Kind::Generic) {
            return m_ * Vec2(q, p) + b_;
        }
        if (grad_) {
            return grad_(q, p);
        }
        const double h = kFiniteDifferenceStep;
        return Vec2((f_(q + h, p) - f_(q - h, p)) / (2.0 * h), (f_(q, p + h) - f_(q, p - h)) / (2.0 * h));
    }

private:
    Kind kind_ = Kind::Linear;
    Mat2 m_ = Mat2::Zero();
    Vec2 b_ = Vec2::Zero();
    double c_ = 0.0;
    Fn f_;
    GradFn grad_;
    std::string label_;
};

/// [A,B]_PB = dA/dq dB/dp - dA/dp dB/dq. Exact for Linear/Quadratic pairs.
inline ClassicalObservable poisson_bracket(const ClassicalObservable &a, const ClassicalObservable &b) {
    Mat2 j;
    j << 0.0, 1.0, -1.0, 0.0;
    const std::string label = "[" + a.label() + "," + b.label() + "]";
    if (a.is_affine_or_quadratic() && b.is_affine_or_quadratic()) {
        // grad A^T J grad B with grad A = M_A z + b_A.
        const Mat2 s = a.hessian().transpose() * j * b.hessian();
        const Vec2 lin = b.hessian().transpose() * j.transpose() * a.linear_part() +
                         a.hessian().transpose() * j * b.linear_part();
        const double c = a.linear_part().dot(j * b.linear_part());
        return ClassicalObservable::quadratic(s + s.transpose(), lin, c, label);
    }
    return ClassicalObservable::generic(
        [a, b](double q, double p) {
            const Vec2 ga = a.gradient(q, p);
            const Vec2 gb = b.gradient(q, p);
            return ga[0] * gb[1] - ga[1] * gb[0];
        },
        std::nullopt, label);
}

struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
    double Q1 = 0.0;
    double P1 = 0.0;
    double Q2 = 0.0;
    double P2 = 0.0;
};

namespace detail {

inline void check_bounded(double q, double p) {
    if (!(std::abs(q) <= kDivergenceBound) || !(std::abs(p) <= kDivergenceBound)) {
        throw Error(ErrorCode::FlowDivergence, "system coordinates left the 1e6 box during a kick");
    }
}

// Stormer-Verlet for a non-separable H = theta * A(q, p); the implicit
// stages are solved by fixed-point iteration.
inline Vec2 leapfrog_flow(const ClassicalObservable &a, double theta, Vec2 z) {
    const double h = 1.0 / kLeapfrogSubsteps;
    auto solve = [](auto &&update, double start) {
        double x = start;
        for (int it = 0; it < 100; ++it) {
            const double next = update(x);
            if (!std::isfinite(next)) {
                throw Error(ErrorCode::FlowDivergence, "leapfrog stage produced a non-finite value");
            }
            if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(next))) {
                return next;
            }
            x = next;
        }
        return x;
    };
    for (int step = 0; step < kLeapfrogSubsteps; ++step) {
        const double q = z[0];
        const double p = z[1];
        const double p_half = solve([&](double ph) { return p - 0.5 * h * theta * a.gradient(q, ph)[0]; }, p);
        const double dp_start = a.gradient(q, p_half)[1];
        const double q_new =
            solve([&](double qn) { return q + 0.5 * h * theta * (dp_start + a.gradient(qn, p_half)[1]); }, q);
        const double p_new = p_half - 0.5 * h * theta * a.gradient(q_new, p_half)[0];
        z = Vec2(q_new, p_new);
        check_bounded(z[0], z[1]);
    }
    return z;
}

}  // namespace detail

/// Unit-time flow of the kick Hamiltonian eps * A(q,p) * P_i. P_i is
/// conserved, Q_i gains eps * A(q0, p0) exactly, and (q, p) follow
/// dz/dt = eps P_i J grad A.
inline PhasePoint kick(PhasePoint s, double eps, const ClassicalObservable &a, int pointer_index) {
    if (pointer_index != 1 && pointer_index != 2) {
        throw Error(ErrorCode::InvalidArgument, "pointer index must be 1 or 2");
    }
    double &big_q = (pointer_index == 1) ? s.Q1 : s.Q2;
    const double big_p = (pointer_index == 1) ? s.P1 : s.P2;
    const double theta = eps * big_p;
    big_q += eps * a(s.q, s.p);

    Mat2 j;
    j << 0.0, 1.0, -1.0, 0.0;
    Vec2 z(s.q, s.p);
    switch (a.kind()) {
        case ClassicalObservable::Kind::Linear:
            z += theta * (j * a.linear_part());
            break;
        case ClassicalObservable::Kind::Quadratic: {
            Eigen::Matrix3d gen = Eigen::Matrix3d::Zero();
            gen.topLeftCorner<2, 2>() = theta * j * a.hessian();
            gen.topRightCorner<2, 1>() = theta * j * a.linear_part();
            const Eigen::Matrix3d flow = gen.exp();
            z = flow.topLeftCorner<2, 2>() * z + flow.topRightCorner<2, 1>();
            break;
        }
        case ClassicalObservable::Kind::Generic:
            z = detail::leapfrog_flow(a, theta, z);
            break;
    }
    detail::check_bounded(z[0], z[1]);
    s.q = z[0];
    s.p = z[1];
    return s;
}

struct GaussianComponent {
    double weight = 1.0;
    double mean_x = 0.0;
    double mean_y = 0.0;
    double sigma_x = 1.0;
    double sigma_y = 1.0;
};

/// Gauss-Hermite rule for weight exp(-t^2), via the Golub-Welsch eigenproblem.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(int order) {
    if (order < 1) {
        throw Error(ErrorCode::InvalidArgument, "quadrature order must be positive");
    }
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermiteRule rule;
    for (int i = 0; i < order; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.nodes.push_back(solver.eigenvalues()[i]);
        rule.weights.push_back(std::sqrt(std::numbers::pi) * v0 * v0);
    }
    return rule;
}

/// Phase-space density for one degree of freedom: a Gaussian mixture with
/// diagonal covariances, or an opaque sampler (no quadrature available).
class PhaseDensity {
public:
    using Sampler = std::function<std::pair<double, double>(std::mt19937_64 &)>;

    static PhaseDensity gaussian(double mean_x, double mean_y, double sigma_x, double sigma_y) {
        return mixture({{1.0, mean_x, mean_y, sigma_x, sigma_y}});
    }
    /// Classical pointer matched to a minimum-uncertainty quantum pointer.
    static PhaseDensity pointer(double sigma_q) { return gaussian(0.0, 0.0, sigma_q, 0.5 / sigma_q); }

    static PhaseDensity mixture(std::vector<GaussianComponent> components) {
        if (components.empty()) {
            throw Error(ErrorCode::InvalidArgument, "density mixture is empty");
        }
        double total = 0.0;
        for (const auto &c : components) {
            if (!(c.weight >= 0.0) || !(c.sigma_x >= 0.0) || !(c.sigma_y >= 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "mixture weights and spreads must be non-negative");
            }
            total += c.weight;
        }
        if (!(total > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "mixture weights sum to zero");
        }
        PhaseDensity d;
        for (auto &c : components) {
            c.weight /= total;
        }
        d.components_ = std::move(components);
        return d;
    }

    static PhaseDensity custom(Sampler sampler) {
        PhaseDensity d;
        d.sampler_ = std::move(sampler);
        return d;
    }

    bool is_gaussian_mixture() const { return !sampler_; }
    const std::vector<GaussianComponent> &components() const { return components_; }

    std::pair<double, double> sample(std::mt19937_64 &rng) const {
        if (sampler_) {
            return sampler_(rng);
        }
        std::size_t k = 0;
        if (components_.size() > 1) {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            while (k + 1 < components_.size() && u >= components_[k].weight) {
                u -= components_[k].weight;
                ++k;
            }
        }
        const auto &c = components_[k];
        std::normal_distribution<double> normal(0.0, 1.0);
        const double x = c.mean_x + c.sigma_x * normal(rng);
        const double y = c.mean_y + c.sigma_y * normal(rng);
        return {x, y};
    }

    /// E[f(x, y)] by tensor Gauss-Hermite quadrature (exact for polynomials of degree < 2*order per axis).
    template <typename F>
    double expectation(F &&f, int order = 64) const {
        if (sampler_) {
            throw Error(ErrorCode::QuadratureUnsupported, "quadrature needs a Gaussian-mixture density");
        }
        const auto rule = gauss_hermite(order);
        const double root2 = std::numbers::sqrt2;
        double total = 0.0;
        for (const auto &c : components_) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double x = c.mean_x + root2 * c.sigma_x * rule.nodes[i];
                for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                    const double y = c.mean_y + root2 * c.sigma_y * rule.nodes[k];
                    acc += rule.weights[i] * rule.weights[k] * f(x, y);
                }
            }
            total += c.weight * acc / std::numbers::pi;
        }
        return total;
    }

private:
    std::vector<GaussianComponent> components_;
    Sampler sampler_;
};

struct ClassicalModel {
    ClassicalObservable a = ClassicalObservable::q();
    ClassicalObservable b = ClassicalObservable::q();
    PhaseDensity system = PhaseDensity::gaussian(0.0, 0.0, 1.0, 1.0);
    PhaseDensity pointer1 = PhaseDensity::pointer(1.0);
    PhaseDensity pointer2 = PhaseDensity::pointer(1.0);
};

inline constexpr std::size_t kShardSize = 8192;

/// SplitMix64 finalizer; maps (seed, shard) to independent stream seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace detail {

inline std::size_t shard_count(std::size_t n) { return (n + kShardSize - 1) / kShardSize; }

// Samples [shard * kShardSize, ...) are a pure function of (seed, shard), so
// results do not depend on how shards are spread over threads.
template <typename Visit>
void for_each_sample_in_shard(const ClassicalModel &model, std::uint64_t seed, std::size_t shard, std::size_t n,
                              Visit &&visit) {
    std::mt19937_64 rng(derive_seed(seed, shard));
    const std::size_t begin = shard * kShardSize;
    const std::size_t end = std::min(n, begin + kShardSize);
    for (std::size_t i = begin; i < end; ++i) {
        PhasePoint s;
        std::tie(s.q, s.p) = model.system.sample(rng);
        std::tie(s.Q1, s.P1) = model.pointer1.sample(rng);
        std::tie(s.Q2, s.P2) = model.pointer2.sample(rng);
        visit(s);
    }
}

}  // namespace detail

struct ClassicalEnsemble {
    std::vector<PhasePoint> samples;
    std::uint64_t seed = 0;
};

/// Initial product-density ensemble, deterministic in (model, n, seed).
inline ClassicalEnsemble sample_ensemble(const ClassicalModel &model, std::size_t n, std::uint64_t seed) {
    ClassicalEnsemble e;
    e.seed = seed;
    e.samples.resize(n);
    parallel_for(detail::shard_count(n), [&](std::size_t shard) {
        std::size_t i = shard * kShardSize;
        detail::for_each_sample_in_shard(model, seed, shard, n, [&](const PhasePoint &s) { e.samples[i++] = s; });
    });
    return e;
}

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    double mean_f1 = 0.0;
};

/// Delete-one-block jackknife standard error of the mean from per-block
/// (sum, count) pairs.
inline double jackknife_stderr(const std::vector<double> &block_sums, const std::vector<std::size_t> &block_counts) {
    const std::size_t blocks = block_sums.size();
    if (blocks < 2) {
        throw Error(ErrorCode::InvalidArgument, "jackknife needs at least two blocks");
    }
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        total += block_sums[b];
        count += block_counts[b];
    }
    std::vector<double> loo(blocks);
    double mean_loo = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        loo[b] = (total - block_sums[b]) / static_cast<double>(count - block_counts[b]);
        mean_loo += loo[b];
    }
    mean_loo /= static_cast<double>(blocks);
    double var = 0.0;
    for (double v : loo) {
        var += (v - mean_loo) * (v - mean_loo);
    }
    return std::sqrt(var * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
}

/// Monte Carlo estimate of <[F1(Q1,P1) - <F1>] Q2> after the kicks eps1 A P1
/// and eps2 B P2. <F1> is the initial pointer mean (by quadrature when the
/// pointer density allows it, otherwise from the initial samples).
inline McEstimate classical_correlation_mc(const ClassicalModel &model, const ClassicalObservable &f1, double eps1,
                                           double eps2, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 10000) {
        throw Error(ErrorCode::InvalidArgument, "Monte Carlo needs at least 1e4 samples");
    }
    const std::size_t shards = detail::shard_count(n_samples);
    double mean_f1 = 0.0;
    if (model.pointer1.is_gaussian_mixture()) {
        mean_f1 = model.pointer1.expectation([&](double x, double y) { return f1(x, y); });
    } else {
        std::vector<double> sums(shards, 0.0);
        parallel_for(shards, [&](std::size_t shard) {
            detail::for_each_sample_in_shard(model, seed, shard, n_samples,
                                             [&](const PhasePoint &s) { sums[shard] += f1(s.Q1, s.P1); });
        });
        for (double v : sums) {
            mean_f1 += v;
        }
        mean_f1 /= static_cast<double>(n_samples);
    }

    std::vector<double> sums(shards, 0.0);
    std::vector<std::size_t> counts(shards, 0);
    parallel_for(shards, [&](std::size_t shard) {
        detail::for_each_sample_in_shard(model, seed, shard, n_samples, [&](PhasePoint s) {
            s = kick(s, eps1, model.a, 1);
            s = kick(s, eps2, model.b, 2);
            sums[shard] += (f1(s.Q1, s.P1) - mean_f1) * s.Q2;
            ++counts[shard];
        });
    });
    McEstimate out;
    out.n_samples = n_samples;
    out.seed = seed;
    out.mean_f1 = mean_f1;
    double total = 0.0;
    for (double v : sums) {
        total += v;
    }
    out.estimate = total / static_cast<double>(n_samples);
    out.std_error = jackknife_stderr(sums, counts);
    return out;
}

struct ClassicalRhs {
    double product_term = 0.0;  // -<AB>_s <[P1,F1]_PB>_M1
    double bracket_term = 0.0;  // -<[A,B]_PB>_s <P1 F1>_M1
    double total = 0.0;
};

/// Weak-coupling limit of the classical correlation per eps1 * eps2.
inline ClassicalRhs classical_rhs(const ClassicalModel &model, const ClassicalObservable &f1) {
    const auto ab_bracket = poisson_bracket(model.a, model.b);
    const auto p1_bracket = poisson_bracket(ClassicalObservable::p(), f1);
    const double ab = model.system.expectation([&](double q, double p) { return model.a(q, p) * model.b(q, p); });
    const double pb = model.system.expectation([&](double q, double p) { return ab_bracket(q, p); });
    const double m_bracket = model.pointer1.expectation([&](double x, double y) { return p1_bracket(x, y); });
    const double m_product = model.pointer1.expectation([&](double x, double y) { return y * f1(x, y); });
    ClassicalRhs r;
    r.product_term = -ab * m_bracket;
    r.bracket_term = -pb * m_product;
    r.total = r.product_term + r.bracket_term;
    return r;
}

}  // namespace weakorder::classical

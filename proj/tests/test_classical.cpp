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

#include "weakorder/classical.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "gtest/gtest.h"

#include "weakorder/estimators.hpp"
#include "weakorder/extrapolation.hpp"

using namespace weakorder;
using namespace weakorder::classical;

namespace {

const auto kQ1 = ClassicalObservable::q();  // Q1 as a function of (Q1, P1)
const auto kP1 = ClassicalObservable::p();

PhasePoint point(double q, double p, double big_q1, double big_p1) {
    PhasePoint s;
    s.q = q;
    s.p = p;
    s.Q1 = big_q1;
    s.P1 = big_p1;
    return s;
}

// Map (q, p) -> (q', p') of one kick with fixed P1.
Vec2 flow(const ClassicalObservable &a, double eps, double big_p1, double q, double p) {
    const auto s = kick(point(q, p, 0.0, big_p1), eps, a, 1);
    return {s.q, s.p};
}

}  // namespace

TEST(kick, linear_generators) {
    const double eps = 0.3;
    auto s = kick(point(0.7, -0.2, 1.1, 0.9), eps, ClassicalObservable::q(), 1);
    EXPECT_DOUBLE_EQ(s.q, 0.7);
    EXPECT_NEAR(s.p, -0.2 - eps * 0.9, 1e-15);
    EXPECT_NEAR(s.Q1, 1.1 + eps * 0.7, 1e-15);
    EXPECT_DOUBLE_EQ(s.P1, 0.9);

    s = kick(point(0.7, -0.2, 1.1, 0.9), eps, ClassicalObservable::p(), 1);
    EXPECT_NEAR(s.q, 0.7 + eps * 0.9, 1e-15);
    EXPECT_DOUBLE_EQ(s.p, -0.2);
    EXPECT_NEAR(s.Q1, 1.1 + eps * -0.2, 1e-15);

    PhasePoint t = point(0.7, -0.2, 1.1, 0.9);
    t.P2 = -0.4;
    t = kick(t, eps, ClassicalObservable::q(), 2);
    EXPECT_NEAR(t.Q2, eps * 0.7, 1e-15);
    EXPECT_DOUBLE_EQ(t.Q1, 1.1);
    EXPECT_NEAR(t.p, -0.2 + eps * 0.4, 1e-15);
}

TEST(kick, harmonic_rotation_closed_form) {
    const double eps = 0.8;
    const double big_p1 = 1.3;
    const double q0 = 0.6;
    const double p0 = -1.1;
    const auto s = kick(point(q0, p0, 0.0, big_p1), eps, ClassicalObservable::harmonic(), 1);
    const double th = eps * big_p1;
    EXPECT_NEAR(s.q, q0 * std::cos(th) + p0 * std::sin(th), 1e-12);
    EXPECT_NEAR(s.p, -q0 * std::sin(th) + p0 * std::cos(th), 1e-12);
    EXPECT_NEAR(s.Q1, eps * (q0 * q0 + p0 * p0) / 2.0, 1e-15);
    EXPECT_DOUBLE_EQ(s.P1, big_p1);
}

TEST(kick, harmonic_closed_form_matches_leapfrog) {
    const auto generic = ClassicalObservable::generic([](double q, double p) { return 0.5 * (q * q + p * p); },
                                                      [](double q, double p) { return Vec2(q, p); });
    for (double q0 : {-1.0, 0.3, 2.0}) {
        for (double p0 : {-0.5, 0.8}) {
            const auto exact = kick(point(q0, p0, 0.0, 0.5), 0.1, ClassicalObservable::harmonic(), 1);
            const auto lf = kick(point(q0, p0, 0.0, 0.5), 0.1, generic, 1);
            EXPECT_NEAR(exact.q, lf.q, 1e-8);
            EXPECT_NEAR(exact.p, lf.p, 1e-8);
            EXPECT_NEAR(exact.Q1, lf.Q1, 1e-14);
        }
    }
}

TEST(kick, generic_flow_conserves_generator) {
    const auto quartic = ClassicalObservable::polynomial({{0.25, 4, 0}, {0.5, 0, 2}});
    ASSERT_EQ(quartic.kind(), ClassicalObservable::Kind::Generic);
    const auto s = kick(point(0.9, 0.2, 0.0, 0.4), 0.5, quartic, 1);
    EXPECT_NEAR(quartic(s.q, s.p), quartic(0.9, 0.2), 1e-6);
    EXPECT_NEAR(s.Q1, 0.5 * quartic(0.9, 0.2), 1e-15);
}

TEST(kick, diverging_flow_is_reported) {
    const auto wild = ClassicalObservable::generic([](double, double p) { return std::exp(p * p); });
    try {
        kick(point(0.0, 4.0, 0.0, 1.0), 5.0, wild, 1);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::FlowDivergence);
    }
}

TEST(kick, affine_and_quadratic_maps_are_symplectic) {
    Mat2 m;
    m << 1.3, -0.4, -0.4, 0.7;
    const std::vector<ClassicalObservable> gens{ClassicalObservable::q(), ClassicalObservable::linear(0.5, -2.0, 1.0),
                                                ClassicalObservable::harmonic(),
                                                ClassicalObservable::quadratic(m, Vec2(0.2, -0.1)),
                                                ClassicalObservable::polynomial({{1.0, 1, 1}}),
                                                ClassicalObservable::polynomial({{-0.7, 2, 0}, {0.3, 0, 2}})};
    const double h = 1e-4;
    for (const auto &a : gens) {
        const double q0 = 0.4;
        const double p0 = -0.9;
        const Vec2 dq = (flow(a, 0.7, 1.2, q0 + h, p0) - flow(a, 0.7, 1.2, q0 - h, p0)) / (2.0 * h);
        const Vec2 dp = (flow(a, 0.7, 1.2, q0, p0 + h) - flow(a, 0.7, 1.2, q0, p0 - h)) / (2.0 * h);
        EXPECT_NEAR(dq[0] * dp[1] - dq[1] * dp[0], 1.0, 1e-10) << a.label();
    }
}

TEST(poisson_bracket, canonical_examples) {
    EXPECT_NEAR(poisson_bracket(ClassicalObservable::q(), ClassicalObservable::p())(0.3, -2.0), 1.0, 1e-15);
    EXPECT_NEAR(poisson_bracket(kP1, kQ1)(0.3, -2.0), -1.0, 1e-15);
    const auto q2 = ClassicalObservable::polynomial({{1.0, 2, 0}});
    const auto fd_q2 = ClassicalObservable::generic([](double q, double) { return q * q; });
    for (double q : {-1.5, 0.0, 0.7}) {
        EXPECT_NEAR(poisson_bracket(q2, ClassicalObservable::p())(q, 0.4), 2.0 * q, 1e-14);
        EXPECT_NEAR(poisson_bracket(fd_q2, ClassicalObservable::p())(q, 0.4), 2.0 * q, 1e-8);
    }
}

TEST(poisson_bracket, quadratic_formula_matches_finite_differences) {
    Mat2 ma;
    ma << 0.4, 1.1, 1.1, -0.3;
    Mat2 mb;
    mb << -0.8, 0.25, 0.25, 1.7;
    const auto a = ClassicalObservable::quadratic(ma, Vec2(0.3, -0.6), 0.1);
    const auto b = ClassicalObservable::quadratic(mb, Vec2(-1.0, 0.2));
    const auto ga = ClassicalObservable::generic([a](double q, double p) { return a(q, p); });
    const auto gb = ClassicalObservable::generic([b](double q, double p) { return b(q, p); });
    for (double q : {-1.0, 0.5}) {
        for (double p : {-0.3, 1.2}) {
            EXPECT_NEAR(poisson_bracket(a, b)(q, p), poisson_bracket(ga, gb)(q, p), 1e-8);
            EXPECT_NEAR(poisson_bracket(a, b)(q, p), -poisson_bracket(b, a)(q, p), 1e-14);
        }
    }
}

TEST(gradient, generic_finite_differences_match_exact) {
    const auto exact = ClassicalObservable::polynomial({{0.5, 3, 1}, {-1.0, 0, 3}});
    const auto fd = ClassicalObservable::generic([exact](double q, double p) { return exact(q, p); });
    for (double q : {-0.7, 1.3}) {
        for (double p : {0.2, -1.1}) {
            const Vec2 g = exact.gradient(q, p);
            const Vec2 n = fd.gradient(q, p);
            EXPECT_NEAR(n[0], g[0], 1e-6 * std::max(1.0, std::abs(g[0])));
            EXPECT_NEAR(n[1], g[1], 1e-6 * std::max(1.0, std::abs(g[1])));
        }
    }
}

TEST(quadrature, gaussian_moments) {
    const auto d = PhaseDensity::gaussian(0.5, -0.2, 1.5, 0.3);
    EXPECT_NEAR(d.expectation([](double x, double) { return x; }), 0.5, 1e-13);
    EXPECT_NEAR(d.expectation([](double x, double) { return x * x; }), 0.25 + 2.25, 1e-12);
    EXPECT_NEAR(d.expectation([](double, double y) { return y * y * y * y; }),
                std::pow(0.2, 4) + 6 * 0.04 * 0.09 + 3 * std::pow(0.3, 4), 1e-13);
    const auto custom = PhaseDensity::custom([](std::mt19937_64 &) { return std::pair<double, double>{0.0, 0.0}; });
    try {
        custom.expectation([](double, double) { return 1.0; });
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::QuadratureUnsupported);
    }
}

TEST(classical_rhs, examples) {
    ClassicalModel m;
    auto r = classical_rhs(m, kQ1);
    EXPECT_NEAR(r.total, 1.0, 1e-12);
    EXPECT_NEAR(r.bracket_term, 0.0, 1e-12);

    m.b = ClassicalObservable::p();
    r = classical_rhs(m, kP1);
    EXPECT_NEAR(r.product_term, 0.0, 1e-15);
    EXPECT_NEAR(r.bracket_term, -0.25, 1e-12);  // -<[q,p]> <P1^2> with sigma_P = 1/2

    m.a = ClassicalObservable::polynomial({{0.5, 2, 0}});
    m.b = ClassicalObservable::q();
    m.system = PhaseDensity::gaussian(0.5, 0.0, 1.0, 1.0);
    r = classical_rhs(m, kQ1);
    EXPECT_NEAR(r.bracket_term, 0.0, 1e-15);
    EXPECT_NEAR(r.total, 0.5 * (0.125 + 3 * 0.5), 1e-12);  // <AB> = <q^3>/2
}

TEST(monte_carlo, uncoupled_pointer_gives_zero) {
    ClassicalModel m;
    const auto r = classical_correlation_mc(m, kQ1, 0.0, 1.0, 100000, 7);
    EXPECT_LT(std::abs(r.estimate), 3.0 * r.std_error);
    EXPECT_EQ(r.n_samples, 100000u);
    EXPECT_EQ(r.seed, 7u);
}

TEST(monte_carlo, examples_match_rhs) {
    const double eps1 = 0.05;
    const double eps2 = 1.0;
    struct Case {
        ClassicalModel model;
        ClassicalObservable f1;
    };
    std::vector<Case> cases(3);
    cases[0].f1 = kQ1;
    cases[1].model.b = ClassicalObservable::p();
    cases[1].f1 = kP1;
    cases[2].model.a = ClassicalObservable::polynomial({{0.5, 2, 0}});
    cases[2].model.system = PhaseDensity::gaussian(0.5, 0.0, 1.0, 1.0);
    cases[2].f1 = kQ1;
    for (const auto &c : cases) {
        const auto mc = classical_correlation_mc(c.model, c.f1, eps1, eps2, 200000, 11);
        const double expected = eps1 * eps2 * classical_rhs(c.model, c.f1).total;
        EXPECT_LT(std::abs(mc.estimate - expected), 3.0 * mc.std_error);
        EXPECT_GT(mc.std_error, 0.0);
    }
    EXPECT_NEAR(eps1 * eps2 * classical_rhs(cases[0].model, kQ1).total, 0.05, 1e-12);
}

TEST(monte_carlo, deterministic_in_seed_and_thread_count) {
    ClassicalModel m;
    m.a = ClassicalObservable::harmonic();
    const auto a = classical_correlation_mc(m, kQ1, 0.3, 1.0, 50000, 42);
    const auto b = classical_correlation_mc(m, kQ1, 0.3, 1.0, 50000, 42);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.std_error, b.std_error);
    const char *old = std::getenv("WEAKORDER_THREADS");
    const std::string saved = old ? old : "";
    setenv("WEAKORDER_THREADS", "3", 1);
    const auto c = classical_correlation_mc(m, kQ1, 0.3, 1.0, 50000, 42);
    if (old) {
        setenv("WEAKORDER_THREADS", saved.c_str(), 1);
    } else {
        unsetenv("WEAKORDER_THREADS");
    }
    EXPECT_EQ(a.estimate, c.estimate);
    const auto d = classical_correlation_mc(m, kQ1, 0.3, 1.0, 50000, 43);
    EXPECT_NE(a.estimate, d.estimate);
    EXPECT_THROW(classical_correlation_mc(m, kQ1, 0.3, 1.0, 9999, 1), Error);
}

TEST(ensemble, sample_moments_match_densities) {
    ClassicalModel m;
    m.system = PhaseDensity::gaussian(0.4, -1.0, 2.0, 0.5);
    m.pointer1 = PhaseDensity::pointer(0.5);
    const std::size_t n = 100000;
    const auto e = sample_ensemble(m, n, 5);
    ASSERT_EQ(e.samples.size(), n);
    auto check = [&](auto get, double mean, double sigma) {
        double s = 0.0;
        double s2 = 0.0;
        for (const auto &x : e.samples) {
            s += get(x);
            s2 += get(x) * get(x);
        }
        const double mu = s / n;
        const double var = s2 / n - mu * mu;
        const double se_mean = sigma / std::sqrt(static_cast<double>(n));
        const double se_var = sigma * sigma * std::sqrt(2.0 / static_cast<double>(n));
        EXPECT_NEAR(mu, mean, 5.0 * se_mean);
        EXPECT_NEAR(var, sigma * sigma, 5.0 * se_var);
    };
    check([](const PhasePoint &x) { return x.q; }, 0.4, 2.0);
    check([](const PhasePoint &x) { return x.p; }, -1.0, 0.5);
    check([](const PhasePoint &x) { return x.Q1; }, 0.0, 0.5);
    check([](const PhasePoint &x) { return x.P1; }, 0.0, 1.0);
    check([](const PhasePoint &x) { return x.Q2; }, 0.0, 1.0);
    check([](const PhasePoint &x) { return x.P2; }, 0.0, 0.5);
}

TEST(monte_carlo, residual_shrinks_linearly_in_eps1) {
    // F1 = Q1^2 has vanishing weak limit here; the ratio is eps1 <q^3> exactly.
    // A narrow first pointer keeps the (Q1^2 - <Q1^2>)/eps1 noise small.
    ClassicalModel m;
    m.system = PhaseDensity::gaussian(1.0, 0.0, 1.0, 1.0);
    m.pointer1 = PhaseDensity::pointer(0.1);
    const auto f1 = ClassicalObservable::polynomial({{1.0, 2, 0}});
    const double rhs = classical_rhs(m, f1).total;
    EXPECT_NEAR(rhs, 0.0, 1e-12);
    std::vector<double> eps;
    std::vector<double> residual;
    for (double e : {0.2, 0.1, 0.05, 0.025}) {
        const auto mc = classical_correlation_mc(m, f1, e, 1.0, 200000, 3);
        eps.push_back(e);
        residual.push_back(mc.estimate / e - rhs);
    }
    const double slope = log_log_slope(eps, residual);
    EXPECT_GT(slope, 0.8);
    EXPECT_LT(slope, 1.2);
}

TEST(order_symmetry, commuting_classical_pair_is_order_blind) {
    ClassicalModel ab;
    ab.a = ClassicalObservable::q();
    ab.b = ClassicalObservable::polynomial({{0.5, 2, 0}});
    ab.system = PhaseDensity::gaussian(0.5, 0.0, 1.0, 1.0);
    ClassicalModel ba = ab;
    std::swap(ba.a, ba.b);
    std::vector<LimitSample> sab;
    std::vector<LimitSample> sba;
    double se = 0.0;
    for (double e : {0.2, 0.1, 0.05}) {
        const auto x = classical_correlation_mc(ab, kQ1, e, 1.0, 200000, 9);
        const auto y = classical_correlation_mc(ba, kQ1, e, 1.0, 200000, 10);
        sab.push_back({e, x.estimate / e});
        sba.push_back({e, y.estimate / e});
        se = std::max(se, std::hypot(x.std_error, y.std_error) / e);
    }
    EXPECT_NEAR(classical_rhs(ab, kQ1).total, classical_rhs(ba, kQ1).total, 1e-12);
    // Both sides are exact in eps1 here, so the limits are plain means.
    EXPECT_LT(std::abs(extrapolate_limit(sab).limit - extrapolate_limit(sba).limit), 3.0 * 6.0 * se);
}

TEST(dequantization, quantum_and_classical_weak_limits_agree) {
    // System q, p on a 64-point grid in a displaced, boosted coherent state;
    // the classical density is its (Gaussian) Wigner function.
    const double sigma = 1.0;
    const double q0 = 0.5;
    const double p0 = 0.3;
    const GridSpec sys_grid{64, 0.25};
    const auto coherent = make_grid_gaussian(sigma, sys_grid, q0, p0);
    const DensityMatrix rho(grid_density_matrix(coherent));
    const Observable qhat(grid_operator_matrix(coherent, PointerObservable::position()));
    const Observable phat(grid_operator_matrix(coherent, PointerObservable::momentum()));
    const auto pointer = make_gaussian_pointer(sigma);

    ClassicalModel cm;
    cm.system = PhaseDensity::gaussian(q0, p0, sigma, 0.5 / sigma);
    cm.pointer1 = PhaseDensity::pointer(sigma);
    cm.a = ClassicalObservable::q();
    cm.b = ClassicalObservable::p();

    const double quantum_q = weak_limit_rhs(rho, qhat, phat, pointer, PointerObservable::position()).total;
    const double quantum_p = weak_limit_rhs(rho, qhat, phat, pointer, PointerObservable::momentum()).total;
    EXPECT_NEAR(quantum_q, classical_rhs(cm, kQ1).total, 1e-2);
    EXPECT_NEAR(quantum_p, classical_rhs(cm, kP1).total, 1e-2);
    EXPECT_NEAR(classical_rhs(cm, kQ1).total, q0 * p0, 1e-12);
    EXPECT_NEAR(classical_rhs(cm, kP1).total, -0.25, 1e-12);
}

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "weakorder/classical.hpp"
#include "weakorder/estimators.hpp"
#include "weakorder/extrapolation.hpp"
#include "weakorder/operator_core.hpp"
#include "weakorder/pointer.hpp"
#include "weakorder/presets.hpp"
#include "weakorder/sequential.hpp"

#ifndef WEAKORDER_VERSION
#define WEAKORDER_VERSION "0.0.0"
#endif

namespace weakorder::runner {

using json = nlohmann::json;

inline constexpr const char *kVersion = WEAKORDER_VERSION;

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfigInvalid = 2, kExitNumericalFailure = 3 };

inline constexpr const char *kExperiments[] = {"forward_weak_value", "reverse_weak_value", "order_symmetry",
                                               "strong_asymmetry",   "classical_check",    "pointer_conditions"};

[[noreturn]] inline void invalid(const std::string &msg) { throw Error(ErrorCode::ConfigInvalid, msg); }

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string &bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------
// Config reading

/// Object view that remembers which keys were read; finish() rejects the rest.
class Reader {
public:
    Reader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            invalid(where() + " must be an object");
        }
    }

    bool has(const std::string &key) const { return j_.contains(key); }

    const json *find(const std::string &key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json &require(const std::string &key) {
        const json *v = find(key);
        if (!v) {
            invalid("missing key " + sub(key));
        }
        return *v;
    }

    double number(const std::string &key, std::optional<double> fallback = std::nullopt) {
        const json *v = find(key);
        if (!v) {
            if (!fallback) {
                invalid("missing key " + sub(key));
            }
            return *fallback;
        }
        if (!v->is_number()) {
            invalid(sub(key) + " must be a number");
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) {
            invalid(sub(key) + " must be finite");
        }
        return x;
    }

    std::uint64_t count(const std::string &key, std::uint64_t fallback) {
        const json *v = find(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_number_integer() || v->get<long long>() < 0) {
            invalid(sub(key) + " must be a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    std::string string(const std::string &key, std::optional<std::string> fallback = std::nullopt) {
        const json *v = find(key);
        if (!v) {
            if (!fallback) {
                invalid("missing key " + sub(key));
            }
            return *fallback;
        }
        if (!v->is_string()) {
            invalid(sub(key) + " must be a string");
        }
        return v->get<std::string>();
    }

    bool boolean(const std::string &key, bool fallback) {
        const json *v = find(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_boolean()) {
            invalid(sub(key) + " must be true or false");
        }
        return v->get<bool>();
    }

    /// Scalar or list of numbers.
    std::vector<double> numbers(const std::string &key) {
        const json &v = require(key);
        std::vector<double> out;
        if (v.is_number()) {
            out.push_back(v.get<double>());
        } else if (v.is_array()) {
            for (const auto &x : v) {
                if (!x.is_number()) {
                    invalid(sub(key) + " must hold numbers");
                }
                out.push_back(x.get<double>());
            }
        } else {
            invalid(sub(key) + " must be a number or a list of numbers");
        }
        for (double x : out) {
            if (!std::isfinite(x)) {
                invalid(sub(key) + " must be finite");
            }
        }
        return out;
    }

    Reader object(const std::string &key) { return Reader(require(key), sub(key)); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) {
                invalid("unknown key " + sub(it.key()));
            }
        }
    }

    std::string sub(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "config" : path_; }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

inline complex parse_complex(const json &v, const std::string &path) {
    if (v.is_number()) {
        return {v.get<double>(), 0.0};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    invalid(path + ": entries must be numbers or [re, im] pairs");
}

inline CVector parse_vector(const json &v, const std::string &path) {
    if (!v.is_array() || v.empty()) {
        invalid(path + " must be a non-empty list");
    }
    CVector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = parse_complex(v[i], path);
    }
    return out;
}

inline CMatrix parse_matrix(const json &v, std::size_t dim, const std::string &path) {
    if (v.is_string()) {
        const auto m = presets::operator_matrix(v.get<std::string>(), dim);
        if (!m) {
            invalid(path + ": unknown operator '" + v.get<std::string>() + "' for dim " + std::to_string(dim));
        }
        return *m;
    }
    if (!v.is_array() || v.size() != dim) {
        invalid(path + " must be a preset name or a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    }
    CMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        if (!v[i].is_array() || v[i].size() != dim) {
            invalid(path + " row " + std::to_string(i) + " must have " + std::to_string(dim) + " entries");
        }
        for (std::size_t k = 0; k < dim; ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = parse_complex(v[i][k], path);
        }
    }
    return m;
}

/// Preset name, {"ket": [...]} (normalized here) or {"density": matrix}.
inline CVector parse_ket(const json &v, std::size_t dim, const std::string &path) {
    if (v.is_string()) {
        const auto k = presets::state_ket(v.get<std::string>());
        if (!k || static_cast<std::size_t>(k->size()) != dim) {
            invalid(path + ": unknown state '" + v.get<std::string>() + "' for dim " + std::to_string(dim));
        }
        return *k;
    }
    Reader r(v, path);
    CVector k = parse_vector(r.require("ket"), r.sub("ket"));
    r.finish();
    if (static_cast<std::size_t>(k.size()) != dim) {
        invalid(path + ".ket must have " + std::to_string(dim) + " entries");
    }
    if (!(k.norm() > 0.0)) {
        invalid(path + ".ket is the zero vector");
    }
    return k / k.norm();
}

inline DensityMatrix parse_state(const json &v, std::size_t dim, const std::string &path) {
    if (v.is_string() && v.get<std::string>() == "maximally_mixed") {
        return DensityMatrix::maximally_mixed(dim);
    }
    if (v.is_object() && v.contains("density")) {
        Reader r(v, path);
        CMatrix m = parse_matrix(r.require("density"), dim, r.sub("density"));
        r.finish();
        return DensityMatrix(m);
    }
    return DensityMatrix::pure(parse_ket(v, dim, path));
}

struct PointerSpec {
    std::string backend = "grid";
    double sigma_q = 1.0;
    std::size_t n_points = 256;
    std::optional<double> spacing;
    double boost_k = 0.0;
    double displacement = 0.0;

    PointerState build() const {
        if (backend == "gaussian") {
            return PointerState::analytic_gaussian(sigma_q);
        }
        const GridSpec grid{n_points, spacing.value_or(sigma_q / 8.0)};
        return make_grid_gaussian(sigma_q, grid, displacement, boost_k);
    }

    json to_json() const {
        json j{{"backend", backend}, {"sigma_q", sigma_q}};
        if (backend == "grid") {
            j["n_points"] = n_points;
            j["spacing"] = spacing.value_or(sigma_q / 8.0);
            j["boost_k"] = boost_k;
            j["displacement"] = displacement;
        }
        return j;
    }
};

inline void read_pointer(Reader r, PointerSpec &spec) {
    if (r.has("backend")) {
        spec.backend = r.string("backend");
    }
    if (spec.backend != "grid" && spec.backend != "gaussian") {
        invalid(r.sub("backend") + " must be \"grid\" or \"gaussian\"");
    }
    spec.sigma_q = r.number("sigma_q", spec.sigma_q);
    if (!(spec.sigma_q > 0.0)) {
        invalid(r.sub("sigma_q") + " must be positive");
    }
    spec.n_points = r.count("n_points", spec.n_points);
    if (r.has("spacing")) {
        spec.spacing = r.number("spacing");
    }
    spec.boost_k = r.number("boost_k", spec.boost_k);
    spec.displacement = r.number("displacement", spec.displacement);
    if (spec.backend == "gaussian" && (spec.boost_k != 0.0 || spec.displacement != 0.0)) {
        invalid(r.where() + ": boost_k/displacement need the grid backend");
    }
    r.finish();
}

struct Tolerances {
    double weak_value = 1e-3;
    double conjugation = 2e-3;
    double eps2_spread = 2e-3;
    double asymmetry_threshold = 0.01;
    double mc_sigmas = 3.0;
    double fit_residual = 1e-3;
    double pointer_mean = 1e-6;

    json to_json() const {
        return {{"weak_value", weak_value},   {"conjugation", conjugation},
                {"eps2_spread", eps2_spread}, {"asymmetry_threshold", asymmetry_threshold},
                {"mc_sigmas", mc_sigmas},     {"fit_residual", fit_residual},
                {"pointer_mean", pointer_mean}};
    }
};

struct RandomFamily {
    std::size_t count = 50;
    std::vector<std::size_t> dims{2, 3};
    double min_post_selection = 0.05;
};

struct ClassicalSpec {
    std::size_t n_samples = 1000000;
    std::optional<std::uint64_t> seed;
    json a_spec = "q";
    json b_spec = "q";
    classical::ClassicalObservable a = classical::ClassicalObservable::q();
    classical::ClassicalObservable b = classical::ClassicalObservable::q();
    std::string f1 = "Q1";
    double system_mean_q = 0.0;
    double system_mean_p = 0.0;
    double system_sigma_q = 1.0;
    double system_sigma_p = 1.0;
    double pointer1_sigma = 1.0;
    double pointer2_sigma = 1.0;

    classical::ClassicalModel model() const {
        classical::ClassicalModel m;
        m.a = a;
        m.b = b;
        m.system = classical::PhaseDensity::gaussian(system_mean_q, system_mean_p, system_sigma_q, system_sigma_p);
        m.pointer1 = classical::PhaseDensity::pointer(pointer1_sigma);
        m.pointer2 = classical::PhaseDensity::pointer(pointer2_sigma);
        return m;
    }

    classical::ClassicalObservable f1_observable() const {
        return f1 == "Q1" ? classical::ClassicalObservable::q() : classical::ClassicalObservable::p();
    }
};

struct PointerExpect {
    std::optional<bool> all_pass;
    std::optional<double> mean_q;
    std::optional<double> mean_p;
};

struct ExperimentConfig {
    std::string experiment;
    json raw;
    std::uint64_t seed = 0;
    std::size_t dim = 2;
    std::optional<DensityMatrix> state;
    std::optional<CMatrix> observable;
    std::optional<CVector> projector_ket;
    std::optional<CMatrix> first;
    std::optional<CMatrix> second;
    PointerSpec pointer1;
    PointerSpec pointer2;
    std::vector<double> eps1_schedule;
    std::vector<double> eps1_points;
    std::vector<double> eps2;
    FitBasis basis = FitBasis::Even;
    Tolerances tol;
    std::optional<RandomFamily> family;
    ClassicalSpec classical;
    PointerExpect expect;
};

inline classical::ClassicalObservable parse_classical_observable(const json &v, const std::string &path) {
    using classical::ClassicalObservable;
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "q") {
            return ClassicalObservable::q();
        }
        if (s == "p") {
            return ClassicalObservable::p();
        }
        if (s == "q2p2") {
            return ClassicalObservable::harmonic();
        }
        invalid(path + ": unknown classical observable '" + s + "'");
    }
    if (!v.is_array() || v.empty()) {
        invalid(path + " must be \"q\", \"p\", \"q2p2\" or a list of [coefficient, q_power, p_power] terms");
    }
    std::vector<classical::PolyTerm> terms;
    for (const auto &t : v) {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number_integer() ||
            !t[2].is_number_integer() || t[1].get<int>() < 0 || t[2].get<int>() < 0) {
            invalid(path + ": terms are [coefficient, q_power, p_power] with non-negative integer powers");
        }
        terms.push_back({t[0].get<double>(), t[1].get<int>(), t[2].get<int>()});
    }
    return ClassicalObservable::polynomial(std::move(terms));
}

inline void read_schedule(Reader &r, ExperimentConfig &c) {
    c.eps1_schedule = r.numbers("eps1_schedule");
    if (c.eps1_schedule.size() < 3) {
        invalid("eps1_schedule needs at least 3 points");
    }
    for (std::size_t i = 0; i < c.eps1_schedule.size(); ++i) {
        if (!(c.eps1_schedule[i] > 0.0)) {
            invalid("eps1_schedule entries must be positive");
        }
        if (i > 0 && !(c.eps1_schedule[i] < c.eps1_schedule[i - 1])) {
            invalid("eps1_schedule must be strictly decreasing");
        }
    }
}

inline void read_eps2(Reader &r, ExperimentConfig &c, bool allow_list) {
    c.eps2 = r.numbers("eps2");
    if (c.eps2.empty() || (!allow_list && c.eps2.size() != 1)) {
        invalid(allow_list ? "eps2 must be a number or a non-empty list" : "eps2 must be a single number");
    }
}

inline void read_tolerances(Reader &r, Tolerances &t) {
    const json *v = r.find("tolerances");
    if (!v) {
        return;
    }
    Reader tr(*v, "tolerances");
    t.weak_value = tr.number("weak_value", t.weak_value);
    t.conjugation = tr.number("conjugation", t.conjugation);
    t.eps2_spread = tr.number("eps2_spread", t.eps2_spread);
    t.asymmetry_threshold = tr.number("asymmetry_threshold", t.asymmetry_threshold);
    t.mc_sigmas = tr.number("mc_sigmas", t.mc_sigmas);
    t.fit_residual = tr.number("fit_residual", t.fit_residual);
    t.pointer_mean = tr.number("pointer_mean", t.pointer_mean);
    tr.finish();
}

inline void read_pointers(Reader &r, ExperimentConfig &c) {
    if (const json *p = r.find("pointer")) {
        read_pointer(Reader(*p, "pointer"), c.pointer1);
    }
    c.pointer2 = c.pointer1;
    if (const json *p = r.find("pointer1")) {
        read_pointer(Reader(*p, "pointer1"), c.pointer1);
    }
    if (const json *p = r.find("pointer2")) {
        read_pointer(Reader(*p, "pointer2"), c.pointer2);
    }
}

inline void read_fit_basis(Reader &r, ExperimentConfig &c) {
    const std::string b = r.string("fit_basis", "even");
    if (b == "even") {
        c.basis = FitBasis::Even;
    } else if (b == "polynomial") {
        c.basis = FitBasis::Polynomial;
    } else {
        invalid("fit_basis must be \"even\" or \"polynomial\"");
    }
}

inline std::size_t read_dim(Reader &s) {
    const auto dim = s.count("dim", 2);
    if (dim < 1 || dim > kMaxSystemDim) {
        invalid(s.sub("dim") + " must be between 1 and " + std::to_string(kMaxSystemDim));
    }
    return dim;
}

inline void read_estimator_system(Reader &r, ExperimentConfig &c) {
    Reader s = r.object("system");
    c.dim = read_dim(s);
    c.state = parse_state(s.require("state"), c.dim, s.sub("state"));
    c.observable = parse_matrix(s.require("observable"), c.dim, s.sub("observable"));
    c.projector_ket = parse_ket(s.require("projector"), c.dim, s.sub("projector"));
    s.finish();
}

inline void read_classical(Reader &r, ExperimentConfig &c) {
    Reader k = r.object("classical");
    auto &cl = c.classical;
    cl.n_samples = k.count("n_samples", cl.n_samples);
    if (cl.n_samples < 10000) {
        invalid("classical.n_samples must be at least 10000");
    }
    if (k.has("seed")) {
        cl.seed = k.count("seed", 0);
    }
    if (const json *o = k.find("observables")) {
        Reader obs(*o, "classical.observables");
        cl.a_spec = obs.require("A");
        cl.b_spec = obs.require("B");
        obs.finish();
        cl.a = parse_classical_observable(cl.a_spec, "classical.observables.A");
        cl.b = parse_classical_observable(cl.b_spec, "classical.observables.B");
    }
    cl.f1 = k.string("f1", "Q1");
    if (cl.f1 != "Q1" && cl.f1 != "P1") {
        invalid("classical.f1 must be \"Q1\" or \"P1\"");
    }
    if (const json *m = k.find("system_mean")) {
        if (!m->is_array() || m->size() != 2 || !(*m)[0].is_number() || !(*m)[1].is_number()) {
            invalid("classical.system_mean must be [q, p]");
        }
        cl.system_mean_q = (*m)[0].get<double>();
        cl.system_mean_p = (*m)[1].get<double>();
    }
    if (const json *sg = k.find("sigma")) {
        Reader sr(*sg, "classical.sigma");
        if (const json *sys = sr.find("system")) {
            if (sys->is_number()) {
                cl.system_sigma_q = cl.system_sigma_p = sys->get<double>();
            } else if (sys->is_array() && sys->size() == 2 && (*sys)[0].is_number() && (*sys)[1].is_number()) {
                cl.system_sigma_q = (*sys)[0].get<double>();
                cl.system_sigma_p = (*sys)[1].get<double>();
            } else {
                invalid("classical.sigma.system must be a number or [sigma_q, sigma_p]");
            }
        }
        cl.pointer1_sigma = sr.number("pointer1", cl.pointer1_sigma);
        cl.pointer2_sigma = sr.number("pointer2", cl.pointer2_sigma);
        sr.finish();
    }
    if (!(cl.system_sigma_q > 0.0) || !(cl.system_sigma_p > 0.0) || !(cl.pointer1_sigma > 0.0) ||
        !(cl.pointer2_sigma > 0.0)) {
        invalid("classical.sigma entries must be positive");
    }
    k.finish();
}

/// Parses and validates; every failure is ErrorCode::ConfigInvalid.
inline ExperimentConfig parse_config(const json &j) {
    ExperimentConfig c;
    c.raw = j;
    try {
        Reader r(j, "");
        c.experiment = r.string("experiment");
        if (std::find(std::begin(kExperiments), std::end(kExperiments), c.experiment) == std::end(kExperiments)) {
            invalid("unknown experiment '" + c.experiment + "'");
        }
        r.find("description");
        c.seed = r.count("seed", 0);
        read_tolerances(r, c.tol);

        const auto &e = c.experiment;
        if (e == "forward_weak_value" || e == "reverse_weak_value") {
            read_estimator_system(r, c);
            read_pointers(r, c);
            read_schedule(r, c);
            read_eps2(r, c, true);
            read_fit_basis(r, c);
        } else if (e == "order_symmetry") {
            if (r.has("random_family")) {
                Reader f = r.object("random_family");
                RandomFamily fam;
                fam.count = f.count("count", fam.count);
                if (const json *d = f.find("dims")) {
                    fam.dims.clear();
                    if (!d->is_array() || d->empty()) {
                        invalid("random_family.dims must be a non-empty list");
                    }
                    for (const auto &x : *d) {
                        if (!x.is_number_integer() || x.get<int>() < 2 || x.get<int>() > 8) {
                            invalid("random_family.dims entries must be integers in [2, 8]");
                        }
                        fam.dims.push_back(x.get<std::size_t>());
                    }
                }
                fam.min_post_selection = f.number("min_post_selection", fam.min_post_selection);
                if (fam.count < 1 || !(fam.min_post_selection > 0.0) || !(fam.min_post_selection < 1.0)) {
                    invalid("random_family needs count >= 1 and 0 < min_post_selection < 1");
                }
                f.finish();
                c.family = fam;
                if (r.has("system")) {
                    invalid("order_symmetry takes either system or random_family, not both");
                }
            } else {
                read_estimator_system(r, c);
            }
            read_pointers(r, c);
            read_schedule(r, c);
            read_eps2(r, c, false);
            read_fit_basis(r, c);
        } else if (e == "strong_asymmetry") {
            Reader s = r.object("system");
            c.dim = read_dim(s);
            c.state = parse_state(s.require("state"), c.dim, s.sub("state"));
            c.first = parse_matrix(s.require("first"), c.dim, s.sub("first"));
            c.second = parse_matrix(s.require("second"), c.dim, s.sub("second"));
            s.finish();
            read_pointers(r, c);
            c.eps1_points = r.numbers("eps1");
            for (double x : c.eps1_points) {
                if (!(x >= 0.5)) {
                    invalid("strong_asymmetry needs every eps1 >= 0.5");
                }
            }
            if (c.eps1_points.empty()) {
                invalid("eps1 must not be empty");
            }
            read_eps2(r, c, false);
        } else if (e == "classical_check") {
            read_classical(r, c);
            c.eps1_points = r.has("eps1") ? r.numbers("eps1") : std::vector<double>{0.05};
            if (c.eps1_points.size() != 1) {
                invalid("classical_check takes a single eps1");
            }
            c.eps2 = r.has("eps2") ? r.numbers("eps2") : std::vector<double>{1.0};
            if (c.eps2.size() != 1) {
                invalid("classical_check takes a single eps2");
            }
            if (r.has("eps1_schedule")) {
                c.eps1_schedule = r.numbers("eps1_schedule");
                for (double x : c.eps1_schedule) {
                    if (!(x > 0.0)) {
                        invalid("eps1_schedule entries must be positive");
                    }
                }
            }
        } else {  // pointer_conditions
            read_pointers(r, c);
            if (const json *x = r.find("expect")) {
                Reader er(*x, "expect");
                if (er.has("all_pass")) {
                    c.expect.all_pass = er.boolean("all_pass", true);
                }
                if (er.has("mean_q")) {
                    c.expect.mean_q = er.number("mean_q");
                }
                if (er.has("mean_p")) {
                    c.expect.mean_p = er.number("mean_p");
                }
                er.finish();
            } else {
                c.expect.all_pass = true;
            }
        }
        r.finish();

        // Physical preconditions that can be checked without running anything.
        if (e != "classical_check") {
            c.pointer1.build();
            if (e != "pointer_conditions") {
                c.pointer2.build();
            }
        }
        if (c.observable) {
            Observable(*c.observable);
        }
        if (c.first) {
            Observable(*c.first);
            Observable(*c.second);
        }
    } catch (const Error &err) {
        if (err.code() == ErrorCode::ConfigInvalid) {
            throw;
        }
        invalid(std::string(err.name()) + ": " + err.what());
    } catch (const json::exception &err) {
        invalid(err.what());
    }
    return c;
}

inline json load_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        invalid("cannot read config file " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        invalid(std::string("config is not valid JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Results

struct CsvRow {
    std::string experiment;
    std::string order;
    double eps1;
    double eps2;
    std::string channel;
    double value;
};

struct RunResult {
    json summary;
    std::vector<CsvRow> rows;
    int exit_code = kExitOk;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_text(const std::vector<CsvRow> &rows) {
    std::string out = "experiment,order,eps1,eps2,channel,value\n";
    for (const auto &r : rows) {
        out += r.experiment + "," + r.order + "," + format_double(r.eps1) + "," + format_double(r.eps2) + "," +
               r.channel + "," + format_double(r.value) + "\n";
    }
    return out;
}

class Checks {
public:
    void add(const std::string &name, double value, double tolerance, bool pass, const std::string &relation) {
        list_.push_back({{"name", name}, {"value", value}, {"tolerance", tolerance}, {"relation", relation},
                         {"pass", pass}});
        all_ &= pass;
    }
    void within(const std::string &name, double deviation, double tolerance) {
        add(name, deviation, tolerance, std::abs(deviation) <= tolerance, "abs_le");
    }
    bool all() const { return all_; }
    const json &list() const { return list_; }

private:
    json list_ = json::array();
    bool all_ = true;
};

inline json to_json(const WeakValue &w) { return {{"re", w.re}, {"im", w.im}}; }

inline json to_json(const CorrelationResult &r) {
    return {{"basis", fit_basis_name(r.basis)},
            {"eps1_schedule", r.eps1_schedule},
            {"values", r.values},
            {"limit", r.limit},
            {"slope", r.slope},
            {"curvature", r.curvature},
            {"fit_residual", r.fit_residual},
            {"condition", r.condition},
            {"residual_tolerance", r.residual_tolerance},
            {"valid", r.valid()}};
}

inline json to_json(const EstimatorResult &r) {
    json pts = json::array();
    for (const auto &p : r.points) {
        pts.push_back({{"eps1", p.eps1}, {"Q1Q2", p.q1q2}, {"P1Q2", p.p1q2}, {"Q1", p.q1}, {"Q2", p.q2}});
    }
    return {{"order", order_name(r.order)}, {"eps2", r.eps2},           {"measured", to_json(r.measured)},
            {"estimate", to_json(r.weak_value)}, {"re_fit", to_json(r.re_fit)}, {"im_fit", to_json(r.im_fit)},
            {"sigma_p1_sq", r.sigma_p1_sq},     {"points", pts}};
}

inline void append_rows(std::vector<CsvRow> &rows, const std::string &experiment, const EstimatorResult &r) {
    for (const auto &p : r.points) {
        const std::string order = order_name(r.order);
        rows.push_back({experiment, order, p.eps1, r.eps2, "Q1Q2", p.q1q2});
        rows.push_back({experiment, order, p.eps1, r.eps2, "P1Q2", p.p1q2});
        rows.push_back({experiment, order, p.eps1, r.eps2, "Q1", p.q1});
        rows.push_back({experiment, order, p.eps1, r.eps2, "Q2", p.q2});
    }
}

inline EstimatorOptions estimator_options(const ExperimentConfig &c) {
    EstimatorOptions o;
    o.basis = c.basis;
    o.residual_tolerance = c.tol.fit_residual;
    return o;
}

inline void run_estimators(const ExperimentConfig &c, RunResult &out, Checks &checks) {
    const PointerPair pointers{c.pointer1.build(), c.pointer2.build()};
    const Projector projector = Projector::onto(*c.projector_ket);
    const Observable obs(*c.observable);
    const auto options = estimator_options(c);
    const WeakValue oracle = weak_value(*c.state, projector, obs, options.post_selection_floor);
    const bool forward = c.experiment == "forward_weak_value";

    json runs = json::array();
    std::vector<WeakValue> estimates;
    for (double eps2 : c.eps2) {
        const std::string tag = "eps2=" + format_double(eps2);
        const auto f = forward_estimator(*c.state, obs, projector, pointers, c.eps1_schedule, eps2, options);
        append_rows(out.rows, c.experiment, f);
        runs.push_back(to_json(f));
        if (forward) {
            checks.within("re vs oracle (" + tag + ")", f.weak_value.re - oracle.re, c.tol.weak_value);
            checks.within("im vs oracle (" + tag + ")", f.weak_value.im - oracle.im, c.tol.weak_value);
            estimates.push_back(f.weak_value);
        } else {
            const auto r = reverse_estimator(*c.state, projector, obs, pointers, c.eps1_schedule, eps2, options);
            append_rows(out.rows, c.experiment, r);
            runs.push_back(to_json(r));
            checks.within("reverse re vs conj oracle (" + tag + ")", r.measured.re - oracle.re, c.tol.weak_value);
            checks.within("reverse im vs conj oracle (" + tag + ")", r.measured.im + oracle.im, c.tol.weak_value);
            checks.within("forward re vs conj reverse (" + tag + ")", f.measured.re - r.measured.re,
                          c.tol.conjugation);
            checks.within("forward im vs conj reverse (" + tag + ")", f.measured.im + r.measured.im,
                          c.tol.conjugation);
            estimates.push_back(r.weak_value);
        }
    }
    if (estimates.size() > 1) {
        double spread = 0.0;
        for (const auto &a : estimates) {
            for (const auto &b : estimates) {
                spread = std::max({spread, std::abs(a.re - b.re), std::abs(a.im - b.im)});
            }
        }
        checks.within("eps2 spread", spread, c.tol.eps2_spread);
    }
    out.summary["oracle"] = to_json(oracle);
    out.summary["runs"] = runs;
}

inline void run_order_symmetry(const ExperimentConfig &c, RunResult &out, Checks &checks) {
    const PointerPair pointers{c.pointer1.build(), c.pointer2.build()};
    const auto options = estimator_options(c);
    const double eps2 = c.eps2.front();

    struct Setup {
        DensityMatrix rho;
        Projector projector;
        Observable a;
    };
    std::vector<Setup> setups;
    if (c.family) {
        std::mt19937_64 rng(c.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        auto gaussian_matrix = [&](std::size_t d) {
            CMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                for (Eigen::Index k = 0; k < m.cols(); ++k) {
                    const double re = normal(rng);
                    m(i, k) = complex(re, normal(rng));
                }
            }
            return m;
        };
        std::size_t attempts = 0;
        while (setups.size() < c.family->count) {
            if (++attempts > 1000 * c.family->count) {
                throw Error(ErrorCode::PostSelectionTooRare, "random family could not meet min_post_selection");
            }
            const std::size_t d = c.family->dims[setups.size() % c.family->dims.size()];
            const CMatrix g = gaussian_matrix(d);
            CMatrix rho = g * g.adjoint();
            rho /= rho.trace().real();
            const CVector phi = gaussian_matrix(d).col(0);
            const CMatrix h = gaussian_matrix(d);
            Setup s{DensityMatrix(rho), Projector::onto(phi), Observable(CMatrix(0.5 * (h + h.adjoint())))};
            if (trace_product(s.rho, {s.projector.matrix()}).real() <= c.family->min_post_selection) {
                continue;
            }
            setups.push_back(std::move(s));
        }
    } else {
        setups.push_back({*c.state, Projector::onto(*c.projector_ket), Observable(*c.observable)});
    }

    json list = json::array();
    double worst_oracle = 0.0;
    double worst_conj = 0.0;
    for (std::size_t k = 0; k < setups.size(); ++k) {
        const auto &s = setups[k];
        const std::string name = c.family ? "order_symmetry/" + std::to_string(k) : "order_symmetry";
        const WeakValue oracle = weak_value(s.rho, s.projector, s.a, options.post_selection_floor);
        const auto f = forward_estimator(s.rho, s.a, s.projector, pointers, c.eps1_schedule, eps2, options);
        const auto r = reverse_estimator(s.rho, s.projector, s.a, pointers, c.eps1_schedule, eps2, options);
        append_rows(out.rows, name, f);
        append_rows(out.rows, name, r);
        const double d_oracle = std::max(std::abs(f.weak_value.re - oracle.re), std::abs(f.weak_value.im - oracle.im));
        const double d_conj = std::max(std::abs(f.measured.re - r.measured.re), std::abs(f.measured.im + r.measured.im));
        worst_oracle = std::max(worst_oracle, d_oracle);
        worst_conj = std::max(worst_conj, d_conj);
        list.push_back({{"index", k},
                        {"dim", s.rho.dim()},
                        {"post_selection", trace_product(s.rho, {s.projector.matrix()}).real()},
                        {"oracle", to_json(oracle)},
                        {"forward", to_json(f)},
                        {"reverse", to_json(r)},
                        {"forward_vs_oracle", d_oracle},
                        {"forward_vs_conj_reverse", d_conj}});
    }
    checks.within("max |forward - oracle|", worst_oracle, c.tol.weak_value);
    checks.within("max |forward - conj(reverse)|", worst_conj, c.tol.conjugation);
    out.summary["setups"] = list;
}

inline void run_strong_asymmetry(const ExperimentConfig &c, RunResult &out, Checks &checks) {
    const PointerPair pointers{c.pointer1.build(), c.pointer2.build()};
    const Observable a(*c.first);
    const Observable b(*c.second);
    const double eps2 = c.eps2.front();
    const auto q = PointerObservable::position();
    json pts = json::array();
    double best = 0.0;
    for (double e : c.eps1_points) {
        const MeasurementSetup ab{*c.state, a, b, pointers.pointer1, pointers.pointer2, e, eps2};
        const MeasurementSetup ba{*c.state, b, a, pointers.pointer1, pointers.pointer2, e, eps2};
        const double cab = correlation(ab, q, q);
        const double cba = correlation(ba, q, q);
        const double asym = strong_coupling_asymmetry(*c.state, a, b, pointers, e, eps2);
        out.rows.push_back({c.experiment, "first_second", e, eps2, "Q1Q2", cab});
        out.rows.push_back({c.experiment, "second_first", e, eps2, "Q1Q2", cba});
        pts.push_back({{"eps1", e}, {"first_second", cab}, {"second_first", cba}, {"asymmetry", asym}});
        best = std::max(best, asym);
    }
    const auto rhs_ab = weak_limit_rhs(*c.state, a, b, pointers.pointer1, q).total;
    const auto rhs_ba = weak_limit_rhs(*c.state, b, a, pointers.pointer1, q).total;
    checks.add("max asymmetry above threshold", best, c.tol.asymmetry_threshold, best > c.tol.asymmetry_threshold,
               "gt");
    out.summary["points"] = pts;
    out.summary["weak_limit"] = {{"first_second", rhs_ab}, {"second_first", rhs_ba}};
}

inline void run_classical(const ExperimentConfig &c, RunResult &out, Checks &checks) {
    const auto &cl = c.classical;
    const auto model = cl.model();
    const auto f1 = cl.f1_observable();
    const std::uint64_t seed = cl.seed.value_or(c.seed);
    const double eps1 = c.eps1_points.front();
    const double eps2 = c.eps2.front();
    const auto rhs = classical::classical_rhs(model, f1);
    const std::string channel = cl.f1 == "Q1" ? "Q1Q2" : "P1Q2";

    auto mc_json = [](const classical::McEstimate &m, double e1) {
        return json{{"eps1", e1},
                    {"estimate", m.estimate},
                    {"std_error", m.std_error},
                    {"n_samples", m.n_samples},
                    {"seed", m.seed},
                    {"mean_f1", m.mean_f1}};
    };
    const auto mc = classical::classical_correlation_mc(model, f1, eps1, eps2, cl.n_samples, seed);
    out.rows.push_back({c.experiment, "classical", eps1, eps2, channel, mc.estimate});
    const double expected = eps1 * eps2 * rhs.total;
    const double deviation = mc.estimate - expected;
    checks.add("|MC - eps1 eps2 rhs| within mc_sigmas stderr", std::abs(deviation) / mc.std_error, c.tol.mc_sigmas,
               std::abs(deviation) <= c.tol.mc_sigmas * mc.std_error, "stderr_le");

    json conv = json::array();
    for (double e : c.eps1_schedule) {
        const auto m = classical::classical_correlation_mc(model, f1, e, eps2, cl.n_samples, seed);
        out.rows.push_back({c.experiment, "classical", e, eps2, channel, m.estimate});
        conv.push_back(mc_json(m, e));
    }
    out.summary["observables"] = {{"A", cl.a_spec}, {"B", cl.b_spec}, {"f1", cl.f1}};
    out.summary["rhs"] = {{"product_term", rhs.product_term}, {"bracket_term", rhs.bracket_term}, {"total", rhs.total}};
    out.summary["monte_carlo"] = mc_json(mc, eps1);
    out.summary["ratio"] = {{"estimate", mc.estimate / (eps1 * eps2)}, {"std_error", mc.std_error / (eps1 * eps2)}};
    out.summary["convergence"] = conv;
    out.summary["eps2"] = eps2;
}

inline void run_pointer_conditions(const ExperimentConfig &c, RunResult &out, Checks &checks) {
    const auto rep = check_pointer_conditions(c.pointer1.build());
    out.summary["report"] = {{"mean_q", rep.mean_q},
                             {"mean_p", rep.mean_p},
                             {"current_density_max", rep.current_density_max},
                             {"threshold", rep.threshold},
                             {"mean_q_vanishes", rep.mean_q_vanishes()},
                             {"mean_p_vanishes", rep.mean_p_vanishes()},
                             {"current_vanishes", rep.current_vanishes()},
                             {"all_pass", rep.all_pass()}};
    if (c.expect.all_pass) {
        checks.add("all_pass as expected", rep.all_pass() ? 1.0 : 0.0, 0.0, rep.all_pass() == *c.expect.all_pass,
                   *c.expect.all_pass ? "true" : "false");
    }
    if (c.expect.mean_q) {
        checks.within("mean_q", rep.mean_q - *c.expect.mean_q, c.tol.pointer_mean);
    }
    if (c.expect.mean_p) {
        checks.within("mean_p", rep.mean_p - *c.expect.mean_p, c.tol.pointer_mean);
    }
}

/// Runs a parsed config. Library errors become exit 3 with the error name in
/// the summary.
inline RunResult run(ExperimentConfig c, std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (seed_override) {
        c.seed = *seed_override;
        c.classical.seed = *seed_override;
    }
    RunResult out;
    out.summary = {{"weakorder_version", kVersion},
                   {"experiment", c.experiment},
                   {"config_hash", "fnv1a64:" + hex64(fnv1a64(c.raw.dump()))},
                   {"seed", c.experiment == "classical_check" ? c.classical.seed.value_or(c.seed) : c.seed},
                   {"tolerances", c.tol.to_json()}};
    if (c.experiment != "classical_check") {
        out.summary["pointer1"] = c.pointer1.to_json();
        if (c.experiment != "pointer_conditions") {
            out.summary["pointer2"] = c.pointer2.to_json();
        }
    }
    if (!c.eps1_schedule.empty()) {
        out.summary["eps1_schedule"] = c.eps1_schedule;
    }
    if (c.experiment != "pointer_conditions" && c.experiment != "classical_check") {
        out.summary["fit_basis"] = fit_basis_name(c.basis);
    }
    Checks checks;
    try {
        const auto &e = c.experiment;
        if (e == "forward_weak_value" || e == "reverse_weak_value") {
            run_estimators(c, out, checks);
        } else if (e == "order_symmetry") {
            run_order_symmetry(c, out, checks);
        } else if (e == "strong_asymmetry") {
            run_strong_asymmetry(c, out, checks);
        } else if (e == "classical_check") {
            run_classical(c, out, checks);
        } else {
            run_pointer_conditions(c, out, checks);
        }
    } catch (const Error &err) {
        out.rows.clear();
        out.summary["status"] = "numerical_failure";
        out.summary["error"] = {{"name", err.name()}, {"message", err.what()}};
        out.exit_code = kExitNumericalFailure;
        return out;
    }
    out.summary["checks"] = checks.list();
    out.summary["status"] = checks.all() ? "pass" : "fail";
    out.exit_code = checks.all() ? kExitOk : kExitCheckFailed;
    return out;
}

inline void write_outputs(const RunResult &r, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream js(dir / "summary.json", std::ios::binary);
        js << r.summary.dump(2) << "\n";
    }
    std::ofstream csv(dir / "correlations.csv", std::ios::binary);
    csv << csv_text(r.rows);
    if (!csv) {
        throw std::runtime_error("failed writing " + (dir / "correlations.csv").string());
    }
}

}  // namespace weakorder::runner

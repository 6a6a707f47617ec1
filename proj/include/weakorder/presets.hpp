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

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "weakorder/operator_core.hpp"

namespace weakorder::presets {

struct NamedOperator {
    const char *name;
    const char *description;
};

struct NamedConfig {
    const char *name;
    const char *description;
    const char *json;
};

inline const std::vector<NamedOperator> &operators() {
    static const std::vector<NamedOperator> list{
        {"identity", "identity on the system (any dim)"},
        {"pauli_x", "sigma_x (dim 2)"},
        {"pauli_y", "sigma_y (dim 2)"},
        {"pauli_z", "sigma_z (dim 2)"},
        {"projector_plus", "|+><+| (dim 2)"},
    };
    return list;
}

inline const std::vector<NamedOperator> &states() {
    static const std::vector<NamedOperator> list{
        {"zero", "|0>"},
        {"one", "|1>"},
        {"plus", "(|0> + |1>)/sqrt2"},
        {"minus", "(|0> - |1>)/sqrt2"},
        {"plus_i", "(|0> + i|1>)/sqrt2"},
        {"minus_i", "(|0> - i|1>)/sqrt2"},
        {"maximally_mixed", "I/dim (any dim)"},
    };
    return list;
}

inline std::optional<CVector> state_ket(const std::string &name) {
    const double r = 1.0 / std::numbers::sqrt2;
    CVector v(2);
    if (name == "zero") {
        v << 1.0, 0.0;
    } else if (name == "one") {
        v << 0.0, 1.0;
    } else if (name == "plus") {
        v << r, r;
    } else if (name == "minus") {
        v << r, -r;
    } else if (name == "plus_i") {
        v << r, complex(0.0, r);
    } else if (name == "minus_i") {
        v << r, complex(0.0, -r);
    } else {
        return std::nullopt;
    }
    return v;
}

/// Named operator as a dim x dim matrix; nullopt when the name is unknown
/// or does not exist in that dimension.
inline std::optional<CMatrix> operator_matrix(const std::string &name, std::size_t dim) {
    if (name == "identity") {
        return ops::identity(dim);
    }
    if (dim != 2) {
        return std::nullopt;
    }
    if (name == "pauli_x") {
        return ops::pauli_x();
    }
    if (name == "pauli_y") {
        return ops::pauli_y();
    }
    if (name == "pauli_z") {
        return ops::pauli_z();
    }
    if (name == "projector_plus") {
        const CVector v = *state_ket("plus");
        return CMatrix(v * v.adjoint());
    }
    return std::nullopt;
}

inline const std::vector<NamedConfig> &configs() {
    static const std::vector<NamedConfig> list{
        {"forward_real_weak_value", "A = sigma_z, post-selected on |+>, from |0>: A_w = 1",
         R"({
  "experiment": "forward_weak_value",
  "system": {"dim": 2, "state": "zero", "observable": "pauli_z", "projector": "plus"},
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256},
  "eps1_schedule": [0.2, 0.1, 0.05, 0.025],
  "eps2": 1.0
})"},
        {"strange_weak_value_tan_theta", "A = sigma_x, post-selected on cos t|0> + sin t|1>, tan t = 5: A_w = 5",
         R"({
  "experiment": "forward_weak_value",
  "system": {"dim": 2, "state": "zero", "observable": "pauli_x", "projector": {"ket": [1, 5]}},
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256},
  "eps1_schedule": [0.2, 0.1, 0.05, 0.025],
  "eps2": 1.0
})"},
        {"imaginary_weak_value", "A = sigma_x, post-selected on (|0> + i|1>)/sqrt2: A_w = -i",
         R"({
  "experiment": "forward_weak_value",
  "system": {"dim": 2, "state": "zero", "observable": "pauli_x", "projector": "plus_i"},
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256},
  "eps1_schedule": [0.2, 0.1, 0.05, 0.025],
  "eps2": 1.0
})"},
        {"reverse_imaginary_weak_value", "projector first, B = sigma_x: reads the conjugate +i",
         R"({
  "experiment": "reverse_weak_value",
  "system": {"dim": 2, "state": "zero", "observable": "pauli_x", "projector": "plus_i"},
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256},
  "eps1_schedule": [0.2, 0.1, 0.05, 0.025],
  "eps2": 1.0
})"},
        {"eps2_independence", "forward estimate at eps2 = 0.1, 1, 10",
         R"({
  "experiment": "forward_weak_value",
  "system": {"dim": 2, "state": "zero", "observable": "pauli_x", "projector": {"ket": [1, 5]}},
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256},
  "pointer2": {"n_points": 1024},
  "eps1_schedule": [0.2, 0.1, 0.05, 0.025],
  "eps2": [0.1, 1.0, 10.0]
})"},
        {"order_symmetry_random_family", "forward vs conjugated reverse on 50 random qubit/qutrit setups",
         R"({
  "experiment": "order_symmetry",
  "seed": 2024,
  "random_family": {"count": 50, "dims": [2, 3], "min_post_selection": 0.05},
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256},
  "eps1_schedule": [0.2, 0.1, 0.05, 0.025],
  "eps2": 1.0
})"},
        {"strong_asymmetry_pauli", "sigma_x / sigma_z from |0> at eps1 = 1, sigma_q = 0.5",
         R"({
  "experiment": "strong_asymmetry",
  "system": {"dim": 2, "state": "zero", "first": "pauli_x", "second": "pauli_z"},
  "pointer": {"backend": "grid", "sigma_q": 0.5, "n_points": 256},
  "eps1": [1.0],
  "eps2": 1.0
})"},
        {"strong_asymmetry_projector", "|+><+| / sigma_z from |0> at eps1 = 0.5, 1, 1.5, sigma_q = 0.5",
         R"({
  "experiment": "strong_asymmetry",
  "system": {"dim": 2, "state": "zero", "first": "projector_plus", "second": "pauli_z"},
  "pointer": {"backend": "grid", "sigma_q": 0.5, "n_points": 256},
  "eps1": [0.5, 1.0, 1.5],
  "eps2": 1.0
})"},
        {"classical_position", "classical A = B = q, F1 = Q1: limit 1",
         R"({
  "experiment": "classical_check",
  "seed": 1,
  "classical": {"n_samples": 1000000, "observables": {"A": "q", "B": "q"}, "f1": "Q1"},
  "eps1": 0.05,
  "eps2": 1.0
})"},
        {"classical_bracket", "classical A = q, B = p, F1 = P1: limit -<P1^2>",
         R"({
  "experiment": "classical_check",
  "seed": 2,
  "classical": {"n_samples": 1000000, "observables": {"A": "q", "B": "p"}, "f1": "P1"},
  "eps1": 0.05,
  "eps2": 1.0
})"},
        {"classical_harmonic", "classical A = (q^2 + p^2)/2, B = q from a displaced density",
         R"({
  "experiment": "classical_check",
  "seed": 3,
  "classical": {
    "n_samples": 1000000,
    "observables": {"A": "q2p2", "B": "q"},
    "f1": "Q1",
    "system_mean": [1.0, 0.0]
  },
  "eps1": 0.05,
  "eps2": 1.0,
  "eps1_schedule": [0.2, 0.1, 0.05]
})"},
        {"pointer_conditions_gaussian", "real zero-mean Gaussian passes all conditions",
         R"({
  "experiment": "pointer_conditions",
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256},
  "expect": {"all_pass": true}
})"},
        {"pointer_conditions_boosted", "boosted Gaussian fails <P> = 0 with <P> = k",
         R"({
  "experiment": "pointer_conditions",
  "pointer": {"backend": "grid", "sigma_q": 1.0, "n_points": 256, "boost_k": 0.5},
  "expect": {"all_pass": false, "mean_p": 0.5}
})"},
    };
    return list;
}

inline const NamedConfig *find_config(const std::string &name) {
    for (const auto &c : configs()) {
        if (name == c.name) {
            return &c;
        }
    }
    return nullptr;
}

inline std::string listing() {
    std::string out = "operators:\n";
    for (const auto &o : operators()) {
        out += "  " + std::string(o.name) + "  " + o.description + "\n";
    }
    out += "states:\n";
    for (const auto &s : states()) {
        out += "  " + std::string(s.name) + "  " + s.description + "\n";
    }
    out += "configs:\n";
    for (const auto &c : configs()) {
        out += "  " + std::string(c.name) + "  " + c.description + "\n";
    }
    return out;
}

}  // namespace weakorder::presets

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

// Dense complex linear algebra on small system Hilbert spaces (hbar = 1).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakorder/error.hpp"

namespace weakorder {

using complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kProjectorTol = 1e-10;
inline constexpr double kDegeneracyTol = 1e-9;
inline constexpr std::size_t kMaxSystemDim = 64;

inline double hermiticity_defect(const CMatrix &m) {
    if (m.size() == 0) {
        return 0.0;
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

struct EigenComponent {
    double value;
    CMatrix projector;
};

/// Spectral decomposition into distinct eigenvalues (ascending) and their
/// eigenprojectors. Eigenvalues closer than kDegeneracyTol to the previous
/// member of a cluster are merged into one projector whose rank equals the
/// multiplicity.
inline std::vector<EigenComponent> spectral_decompose(const CMatrix &h) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "spectral_decompose needs a non-empty square matrix");
    }
    if (hermiticity_defect(h) > kHermitianTol) {
        throw Error(ErrorCode::NonHermitianInput,
                    "matrix differs from its adjoint by " + std::to_string(hermiticity_defect(h)));
    }
    // Exactly Hermitian copy so the eigensolver only sees the lower triangle we intend.
    const CMatrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::DecompositionFailure, "self-adjoint eigensolver did not converge");
    }
    const auto &values = solver.eigenvalues();
    const auto &vectors = solver.eigenvectors();

    std::vector<EigenComponent> out;
    std::vector<std::size_t> members;
    double previous = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const CVector v = vectors.col(i);
        const CMatrix p = v * v.adjoint();
        if (!out.empty() && std::abs(values[i] - previous) < kDegeneracyTol) {
            auto &last = out.back();
            last.projector += p;
            last.value += (values[i] - last.value) / static_cast<double>(++members.back());
        } else {
            out.push_back({values[i], p});
            members.push_back(1);
        }
        previous = values[i];
    }
    return out;
}

/// Hermitian operator with its cached eigensystem. Immutable after construction.
class Observable {
public:
    Observable() = default;
    explicit Observable(CMatrix matrix, std::string label = {})
        : matrix_(std::move(matrix)), label_(std::move(label)) {
        if (static_cast<std::size_t>(matrix_.rows()) > kMaxSystemDim) {
            throw Error(ErrorCode::InvalidArgument, "system dimension above 64 is not supported");
        }
        eigensystem_ = spectral_decompose(matrix_);
        matrix_ = 0.5 * (matrix_ + matrix_.adjoint());
    }

    std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
    const CMatrix &matrix() const { return matrix_; }
    const std::vector<EigenComponent> &eigensystem() const { return eigensystem_; }
    const std::string &label() const { return label_; }

    std::vector<double> eigenvalues() const {
        std::vector<double> out;
        out.reserve(eigensystem_.size());
        for (const auto &c : eigensystem_) {
            out.push_back(c.value);
        }
        return out;
    }

    /// Smallest spacing between distinct eigenvalues; zero for a multiple of identity.
    double min_gap() const {
        double gap = 0.0;
        for (std::size_t i = 1; i < eigensystem_.size(); ++i) {
            const double g = eigensystem_[i].value - eigensystem_[i - 1].value;
            gap = (i == 1) ? g : std::min(gap, g);
        }
        return gap;
    }

    bool is_projector() const {
        return (matrix_ * matrix_ - matrix_).cwiseAbs().maxCoeff() <= kProjectorTol;
    }

private:
    CMatrix matrix_;
    std::vector<EigenComponent> eigensystem_;
    std::string label_;
};

/// An Observable with P^2 = P.
class Projector {
public:
    explicit Projector(CMatrix matrix, std::string label = {})
        : observable_(std::move(matrix), std::move(label)) {
        if (!observable_.is_projector()) {
            throw Error(ErrorCode::NotAProjector, "matrix is not idempotent within 1e-10");
        }
    }

    /// Rank-one projector |phi><phi| onto the normalized ket.
    static Projector onto(const CVector &ket, std::string label = {}) {
        const double norm = ket.norm();
        if (norm == 0.0) {
            throw Error(ErrorCode::InvalidArgument, "cannot project onto the zero vector");
        }
        const CVector phi = ket / norm;
        return Projector(phi * phi.adjoint(), std::move(label));
    }

    const Observable &observable() const { return observable_; }
    const CMatrix &matrix() const { return observable_.matrix(); }
    std::size_t dim() const { return observable_.dim(); }

    operator const Observable &() const { return observable_; }

private:
    Observable observable_;
};

class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(CMatrix matrix) : matrix_(std::move(matrix)) {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
            throw Error(ErrorCode::DimensionMismatch, "density matrix must be square and non-empty");
        }
        if (hermiticity_defect(matrix_) > kHermitianTol) {
            throw Error(ErrorCode::InvalidDensityMatrix, "density matrix is not Hermitian");
        }
        if (std::abs(matrix_.trace() - complex(1.0)) > kHermitianTol) {
            throw Error(ErrorCode::InvalidDensityMatrix, "density matrix trace differs from 1");
        }
        matrix_ = 0.5 * (matrix_ + matrix_.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(matrix_, Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -1e-10) {
            throw Error(ErrorCode::InvalidDensityMatrix, "density matrix has a negative eigenvalue");
        }
    }

    static DensityMatrix pure(const CVector &ket) {
        const double norm = ket.norm();
        if (norm == 0.0) {
            throw Error(ErrorCode::InvalidArgument, "cannot build a state from the zero vector");
        }
        const CVector psi = ket / norm;
        return DensityMatrix(psi * psi.adjoint());
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
    const CMatrix &matrix() const { return matrix_; }

private:
    CMatrix matrix_;
};

namespace detail {

inline void require_same_dim(std::size_t expected, Eigen::Index rows, Eigen::Index cols) {
    if (static_cast<std::size_t>(rows) != expected || static_cast<std::size_t>(cols) != expected) {
        throw Error(ErrorCode::DimensionMismatch,
                    "operator is " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", expected " + std::to_string(expected));
    }
}

}  // namespace detail

/// Tr(rho * ops[0] * ops[1] * ...), multiplied in the given order.
inline complex trace_product(const DensityMatrix &rho, std::span<const CMatrix> ops) {
    CMatrix acc = rho.matrix();
    for (const auto &op : ops) {
        detail::require_same_dim(rho.dim(), op.rows(), op.cols());
        acc = acc * op;
    }
    return acc.trace();
}

inline complex trace_product(const DensityMatrix &rho, std::initializer_list<CMatrix> ops) {
    return trace_product(rho, std::span<const CMatrix>(ops.begin(), ops.size()));
}

inline complex trace_commutator(const DensityMatrix &rho, const CMatrix &a, const CMatrix &b) {
    detail::require_same_dim(rho.dim(), a.rows(), a.cols());
    detail::require_same_dim(rho.dim(), b.rows(), b.cols());
    return (rho.matrix() * (a * b - b * a)).trace();
}

inline complex trace_anticommutator(const DensityMatrix &rho, const CMatrix &a, const CMatrix &b) {
    detail::require_same_dim(rho.dim(), a.rows(), a.cols());
    detail::require_same_dim(rho.dim(), b.rows(), b.cols());
    return (rho.matrix() * (a * b + b * a)).trace();
}

namespace ops {

inline CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << 0.0, complex(0.0, -1.0), complex(0.0, 1.0), 0.0;
    return m;
}

inline CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

inline CMatrix identity(std::size_t dim) { return CMatrix::Identity(dim, dim); }

inline CVector basis(std::size_t dim, std::size_t index) {
    CVector v = CVector::Zero(dim);
    v[index] = 1.0;
    return v;
}

}  // namespace ops

}  // namespace weakorder

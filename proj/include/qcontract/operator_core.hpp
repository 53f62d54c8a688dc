// operator_core.hpp: dense Hermitian linear algebra for finite-dimensional quantum states
//
// Validated density matrices, eigendecompositions, functional calculus, Jordan positive
// parts, Schatten norms and the column-stacking bridge between operators and
// superoperators. Everything here is a value type or a pure function.

#pragma once

#include "qcontract/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

namespace qcontract {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace tolerance {
inline constexpr double construction = 1e-9;
inline constexpr double spectral = 1e-10;
inline constexpr double inequality = 1e-7;
inline constexpr double hermiticity = 1e-6;
}  // namespace tolerance

// ------------------------------- Hermitian matrices --------------------------

/// A square complex matrix forced onto the Hermitian manifold by (H + H†)/2.
/// The asymmetry ‖H − H†‖_max of the raw input is kept for diagnostics.
class HermitianMatrix {
public:
    HermitianMatrix() = default;

    explicit HermitianMatrix(const Matrix& entries) {
        if (entries.rows() != entries.cols() || entries.rows() == 0) {
            throw Error(ErrorCode::NotSquare, "Hermitian matrix must be square and non-empty");
        }
        asymmetry_ = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
        m_ = (entries + entries.adjoint()) * 0.5;
    }

    /// Like the constructor but rejects inputs whose asymmetry exceeds `max_asymmetry`.
    static HermitianMatrix checked(const Matrix& entries,
                                   double max_asymmetry = tolerance::hermiticity) {
        HermitianMatrix h(entries);
        if (h.asymmetry_ > max_asymmetry) {
            throw Error(ErrorCode::NotHermitian,
                        "asymmetry " + std::to_string(h.asymmetry_) + " exceeds tolerance");
        }
        return h;
    }

    Index dim() const noexcept { return m_.rows(); }
    const Matrix& matrix() const noexcept { return m_; }
    double asymmetry() const noexcept { return asymmetry_; }
    double trace() const { return m_.trace().real(); }

    friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
        return HermitianMatrix(a.m_ + b.m_);
    }
    friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
        return HermitianMatrix(a.m_ - b.m_);
    }
    friend HermitianMatrix operator-(const HermitianMatrix& a) { return HermitianMatrix(-a.m_); }
    friend HermitianMatrix operator*(double s, const HermitianMatrix& a) {
        return HermitianMatrix(s * a.m_);
    }

private:
    Matrix m_;
    double asymmetry_ = 0.0;
};

struct EigenSystem {
    RealVector values;  // ascending
    Matrix vectors;     // orthonormal columns
};

inline EigenSystem hermitian_eig(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigensolver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline EigenSystem hermitian_eig(const HermitianMatrix& h) { return hermitian_eig(h.matrix()); }

inline RealVector hermitian_eigenvalues(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigensolver did not converge");
    }
    return solver.eigenvalues();
}

inline Matrix reconstruct(const EigenSystem& es, const RealVector& values) {
    return es.vectors * values.cast<Complex>().asDiagonal() * es.vectors.adjoint();
}

/// V·φ(Λ)·V† for a raw Hermitian Eigen matrix (any size, including superoperators).
template <class Fn>
Matrix hermitian_function(const EigenSystem& es, Fn&& phi) {
    RealVector mapped(es.values.size());
    for (Index i = 0; i < es.values.size(); ++i) {
        mapped(i) = phi(es.values(i));
        if (!std::isfinite(mapped(i))) {
            throw Error(ErrorCode::DomainError,
                        "function is not finite at eigenvalue " + std::to_string(es.values(i)));
        }
    }
    return reconstruct(es, mapped);
}

template <class Fn>
HermitianMatrix matrix_function(const HermitianMatrix& h, Fn&& phi) {
    return HermitianMatrix(hermitian_function(hermitian_eig(h), std::forward<Fn>(phi)));
}

inline HermitianMatrix positive_part(const HermitianMatrix& h) {
    return matrix_function(h, [](double x) { return std::max(x, 0.0); });
}

/// Tr[H_+] without forming the positive part. 2×2 inputs use the closed form.
inline double trace_positive_part(const Matrix& h) {
    if (h.rows() == 2) {
        const double a = h(0, 0).real();
        const double c = h(1, 1).real();
        const double mean = 0.5 * (a + c);
        const double radius = std::hypot(0.5 * (a - c), std::abs(h(0, 1)));
        return std::max(mean + radius, 0.0) + std::max(mean - radius, 0.0);
    }
    const RealVector ev = hermitian_eigenvalues(h);
    double sum = 0.0;
    for (Index i = 0; i < ev.size(); ++i) sum += std::max(ev(i), 0.0);
    return sum;
}

// ------------------------------- Schatten norms ------------------------------

inline constexpr double schatten_infinity = std::numeric_limits<double>::infinity();

inline double schatten_norm(const Matrix& a, double p) {
    if (p != 1.0 && p != 2.0 && p != schatten_infinity) {
        throw Error(ErrorCode::UnsupportedOrder, "Schatten order must be 1, 2 or infinity");
    }
    if (p == 2.0) return a.norm();
    const RealVector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
    return p == 1.0 ? sv.sum() : (sv.size() ? sv(0) : 0.0);
}

inline double schatten_norm(const HermitianMatrix& a, double p) {
    if (p != 1.0 && p != 2.0 && p != schatten_infinity) {
        throw Error(ErrorCode::UnsupportedOrder, "Schatten order must be 1, 2 or infinity");
    }
    if (p == 2.0) return a.matrix().norm();
    const RealVector ev = hermitian_eigenvalues(a.matrix());
    return p == 1.0 ? ev.cwiseAbs().sum() : ev.cwiseAbs().maxCoeff();
}

// ------------------------------- density matrices ----------------------------

/// A validated state: Hermitian, PSD up to `tol`, unit trace. The eigensystem is
/// computed once on construction and cached.
class DensityMatrix {
public:
    DensityMatrix() = default;

    const HermitianMatrix& base() const noexcept { return base_; }
    const Matrix& matrix() const noexcept { return base_.matrix(); }
    Index dim() const noexcept { return base_.dim(); }
    const EigenSystem& eigen() const noexcept { return eig_; }
    double validation_tol() const noexcept { return tol_; }
    double lambda_min() const noexcept { return eig_.values(0); }
    double lambda_max() const noexcept { return eig_.values(eig_.values.size() - 1); }
    bool full_rank() const noexcept { return lambda_min() > tol_; }
    /// Magnitude of the most negative eigenvalue removed during validation (0 if none).
    double clipped() const noexcept { return clipped_; }

    /// σ^{p} via the cached eigensystem (requires full rank for negative p).
    Matrix power(double p) const {
        if (p < 0.0 && !full_rank()) {
            throw Error(ErrorCode::SingularReference, "negative power of a rank-deficient state");
        }
        RealVector v(eig_.values.size());
        for (Index i = 0; i < v.size(); ++i) v(i) = std::pow(std::max(eig_.values(i), 0.0), p);
        return reconstruct(eig_, v);
    }

    Matrix inverse() const { return power(-1.0); }

    friend DensityMatrix validate_density(const Matrix& entries, double tol);

private:
    HermitianMatrix base_;
    EigenSystem eig_;
    double tol_ = tolerance::construction;
    double clipped_ = 0.0;
};

/// Symmetrize, clip eigenvalues at zero and renormalize the trace.
inline DensityMatrix validate_density(const Matrix& entries,
                                      double tol = tolerance::construction) {
    if (entries.rows() != entries.cols()) {
        throw Error(ErrorCode::NotSquare, "density matrix must be square");
    }
    if (entries.rows() < 2) {
        throw Error(ErrorCode::NotSquare, "density matrix dimension must be at least 2");
    }
    if (!entries.allFinite()) {
        throw Error(ErrorCode::DomainError, "density matrix has non-finite entries");
    }
    HermitianMatrix h = HermitianMatrix::checked(entries);
    EigenSystem es = hermitian_eig(h);
    const double trace = es.values.sum();
    if (!(trace > std::numeric_limits<double>::min())) {
        throw Error(ErrorCode::TraceZero, "density matrix has non-positive trace");
    }
    if (es.values(0) < -tol) {
        throw Error(ErrorCode::NotPositive,
                    "smallest eigenvalue " + std::to_string(es.values(0)) + " below -tol");
    }

    DensityMatrix out;
    out.tol_ = tol;
    if (es.values(0) < 0.0) {
        out.clipped_ = -es.values(0);
        RealVector v = es.values.cwiseMax(0.0);
        v /= v.sum();
        out.base_ = HermitianMatrix(reconstruct(es, v));
        es.values = v;
    } else {
        out.base_ = HermitianMatrix(h.matrix() / trace);
        es.values /= trace;
    }
    out.eig_ = std::move(es);
    return out;
}

inline DensityMatrix maximally_mixed(Index d) {
    return validate_density(Matrix::Identity(d, d) / static_cast<double>(d));
}

/// ρ_ε = (1−ε)ρ + ε·I/d. Explicit regularization for rank-deficient inputs.
inline DensityMatrix regularize(const DensityMatrix& rho, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
        throw Error(ErrorCode::ParameterOutOfRange, "regularization weight must lie in (0,1)");
    }
    const Index d = rho.dim();
    return validate_density((1.0 - eps) * rho.matrix() +
                            eps * Matrix::Identity(d, d) / static_cast<double>(d));
}

// ------------------------------- vectorization -------------------------------
// Column stacking: vec(X)[i + d·j] = X(i, j), so vec(A X B) = (Bᵀ ⊗ A) vec(X).

inline Vector vectorize(const Matrix& x) {
    return Eigen::Map<const Vector>(x.data(), x.size());
}

inline Matrix devectorize(const Vector& v) {
    const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (d * d != v.size()) {
        throw Error(ErrorCode::DimensionMismatch, "vector length is not a perfect square");
    }
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// Hilbert–Schmidt inner product ⟨A, B⟩ = Tr[A† B].
inline Complex hs_inner(const Matrix& a, const Matrix& b) {
    return (a.adjoint() * b).trace();
}

// ------------------------------- superoperators ------------------------------

/// A linear map on d×d matrices stored as its d²×d² matrix on column-stacked vectors.
class Superoperator {
public:
    Superoperator() = default;

    explicit Superoperator(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) {
            throw Error(ErrorCode::NotSquare, "superoperator matrix must be square");
        }
        dim_ = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(m_.rows()))));
        if (dim_ * dim_ != m_.rows()) {
            throw Error(ErrorCode::DimensionMismatch, "superoperator size is not d²");
        }
    }

    static Superoperator identity(Index d) { return Superoperator(Matrix::Identity(d * d, d * d)); }

    /// X ↦ A·X·B.
    static Superoperator sandwich(const Matrix& a, const Matrix& b) {
        if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
            throw Error(ErrorCode::DimensionMismatch, "sandwich factors must be equal square sizes");
        }
        return Superoperator(kron(b.transpose(), a));
    }

    Index dim() const noexcept { return dim_; }
    const Matrix& matrix() const noexcept { return m_; }

    Matrix apply(const Matrix& x) const {
        if (x.rows() != dim_ || x.cols() != dim_) {
            throw Error(ErrorCode::DimensionMismatch, "operator does not match superoperator dimension");
        }
        return devectorize(m_ * vectorize(x));
    }

    /// Hilbert–Schmidt adjoint.
    Superoperator adjoint() const { return Superoperator(m_.adjoint()); }

    friend Superoperator operator*(const Superoperator& a, const Superoperator& b) {
        if (a.dim_ != b.dim_) {
            throw Error(ErrorCode::DimensionMismatch, "cannot compose superoperators of different size");
        }
        return Superoperator(a.m_ * b.m_);
    }

private:
    Matrix m_;
    Index dim_ = 0;
};

/// Δ_{P,Q}: X ↦ P·X·Q⁻¹.
inline Superoperator relative_modular(const DensityMatrix& p, const DensityMatrix& q) {
    if (p.dim() != q.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "relative modular operator needs equal dimensions");
    }
    if (!q.full_rank()) {
        throw Error(ErrorCode::SingularReference, "reference state of Δ_{P,Q} is not full rank");
    }
    return Superoperator::sandwich(p.matrix(), q.inverse());
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    return 0.5 * schatten_norm(HermitianMatrix(a.matrix() - b.matrix()), 1.0);
}

}  // namespace qcontract

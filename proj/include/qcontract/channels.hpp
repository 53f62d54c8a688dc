// channels.hpp: CPTP maps: representations, constructors, adjoints, powers, fixed points
// and the spectral primitivity test.

#pragma once

#include "qcontract/operator_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qcontract {

namespace detail {

inline Matrix choi_from_superop(const Superoperator& s) {
    const Index d = s.dim();
    Matrix choi = Matrix::Zero(d * d, d * d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            const Vector col = s.matrix().col(i + d * j);  // vec(E(|i⟩⟨j|))
            choi.block(i * d, j * d, d, d) = devectorize(col);
        }
    }
    return choi;
}

inline void check_cptp(const Superoperator& s, double tol) {
    const Index d = s.dim();
    const Vector vec_id = vectorize(Matrix::Identity(d, d));
    const double tp_err = (s.matrix().adjoint() * vec_id - vec_id).cwiseAbs().maxCoeff();
    if (tp_err > tol) {
        throw Error(ErrorCode::NotTracePreserving,
                    "trace-preservation error " + std::to_string(tp_err));
    }
    const Matrix choi = choi_from_superop(s);
    const double herm_err = (choi - choi.adjoint()).cwiseAbs().maxCoeff();
    if (herm_err > tol) {
        throw Error(ErrorCode::NotCompletelyPositive, "Choi matrix is not Hermitian");
    }
    const double lmin = hermitian_eigenvalues(0.5 * (choi + choi.adjoint()))(0);
    if (lmin < -tol) {
        throw Error(ErrorCode::NotCompletelyPositive,
                    "Choi matrix eigenvalue " + std::to_string(lmin));
    }
}

inline Matrix pauli(int k) {
    Matrix m(2, 2);
    switch (k) {
    case 0: m << 1.0, 0.0, 0.0, 1.0; break;
    case 1: m << 0.0, 1.0, 1.0, 0.0; break;
    case 2: m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0; break;
    default: m << 1.0, 0.0, 0.0, -1.0; break;
    }
    return m;
}

}  // namespace detail

// ------------------------------- channel type --------------------------------

class QuantumChannel {
public:
    QuantumChannel() = default;

    /// Validates complete positivity and trace preservation of an arbitrary superoperator.
    static QuantumChannel from_superoperator(Superoperator s, std::string label,
                                             double tol = 1e-8) {
        detail::check_cptp(s, tol);
        QuantumChannel e;
        e.dim_ = s.dim();
        e.superop_ = std::move(s);
        e.label_ = std::move(label);
        return e;
    }

    friend QuantumChannel channel_from_kraus(std::vector<Matrix> kraus, std::string label);

    Index dim() const noexcept { return dim_; }
    const Superoperator& superop() const noexcept { return superop_; }
    const std::optional<std::vector<Matrix>>& kraus() const noexcept { return kraus_; }
    const std::string& label() const noexcept { return label_; }

    Matrix choi() const { return detail::choi_from_superop(superop_); }

    /// Action on an arbitrary operator (no state validation).
    Matrix apply_operator(const Matrix& x) const { return superop_.apply(x); }

private:
    Index dim_ = 0;
    std::optional<std::vector<Matrix>> kraus_;
    Superoperator superop_;
    std::string label_;
};

inline QuantumChannel channel_from_kraus(std::vector<Matrix> kraus, std::string label = "kraus") {
    if (kraus.empty()) {
        throw Error(ErrorCode::InvalidArgument, "Kraus list is empty");
    }
    const Index d = kraus.front().rows();
    Matrix completeness = Matrix::Zero(d, d);
    Matrix superop = Matrix::Zero(d * d, d * d);
    for (const Matrix& k : kraus) {
        if (k.rows() != d || k.cols() != d) {
            throw Error(ErrorCode::DimensionMismatch, "Kraus operators must all be d×d");
        }
        completeness += k.adjoint() * k;
        superop += kron(k.conjugate(), k);
    }
    const double err = (completeness - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (err > tolerance::construction) {
        throw Error(ErrorCode::NotTracePreserving,
                    "Σ K†K deviates from identity by " + std::to_string(err));
    }
    QuantumChannel e;
    e.dim_ = d;
    e.kraus_ = std::move(kraus);
    e.superop_ = Superoperator(std::move(superop));
    e.label_ = std::move(label);
    return e;
}

inline DensityMatrix apply(const QuantumChannel& e, const DensityMatrix& rho) {
    if (rho.dim() != e.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "state dimension does not match channel");
    }
    return validate_density(e.apply_operator(rho.matrix()));
}

inline Superoperator channel_adjoint(const QuantumChannel& e) { return e.superop().adjoint(); }

/// a∘b (apply b first).
inline QuantumChannel compose(const QuantumChannel& a, const QuantumChannel& b) {
    return QuantumChannel::from_superoperator(a.superop() * b.superop(),
                                              a.label() + "∘" + b.label());
}

/// E^{∘n} by repeated squaring of the superoperator matrix.
inline QuantumChannel channel_power(const QuantumChannel& e, int n) {
    if (n < 1) {
        throw Error(ErrorCode::ParameterOutOfRange, "channel power must be at least 1");
    }
    if (n == 1) return e;
    Matrix result = Matrix::Identity(e.superop().matrix().rows(), e.superop().matrix().cols());
    Matrix base = e.superop().matrix();
    for (int k = n; k > 0; k >>= 1) {
        if (k & 1) result = result * base;
        if (k > 1) base = base * base;
    }
    return QuantumChannel::from_superoperator(Superoperator(std::move(result)),
                                              e.label() + "^" + std::to_string(n));
}

// ------------------------------- fixed points --------------------------------

/// The unique state with E(π) = π, extracted from the null space of S − I.
inline DensityMatrix fixed_point(const QuantumChannel& e, double degeneracy_tol = 1e-8) {
    const Matrix& s = e.superop().matrix();
    const Matrix shifted = s - Matrix::Identity(s.rows(), s.cols());
    Eigen::JacobiSVD<Matrix> svd(shifted, Eigen::ComputeFullV);
    const RealVector& sv = svd.singularValues();
    const Index n = sv.size();
    if (n >= 2 && sv(n - 2) < degeneracy_tol) {
        throw Error(ErrorCode::DegenerateFixedSpace, "eigenvalue 1 is not simple");
    }
    const Matrix x = devectorize(svd.matrixV().col(n - 1));
    const Complex tr = x.trace();
    if (std::abs(tr) < 1e-12) {
        throw Error(ErrorCode::TraceZeroEigenvector, "fixed-point eigenvector has zero trace");
    }
    // dividing by the trace removes the arbitrary eigenvector phase before symmetrizing
    const Matrix normalized = x / tr;
    DensityMatrix pi = validate_density(0.5 * (normalized + normalized.adjoint()));
    const double residual =
        schatten_norm(HermitianMatrix(e.apply_operator(pi.matrix()) - pi.matrix()), 1.0);
    if (residual > 1e-8) {
        throw Error(ErrorCode::ConvergenceFailure,
                    "fixed-point residual " + std::to_string(residual));
    }
    return pi;
}

struct PrimitivityReport {
    bool is_primitive = false;
    double spectral_gap = 0.0;  // 1 − second-largest eigenvalue modulus
    double fixed_point_min_eigenvalue = 0.0;
    int peripheral_count = 0;   // eigenvalues with modulus ≥ 1 − tol
    bool eigenvalue_one_simple = false;
};

/// Eigenvalues of the superoperator sorted by decreasing modulus.
inline Eigen::VectorXcd channel_spectrum(const QuantumChannel& e) {
    Eigen::ComplexEigenSolver<Matrix> solver(e.superop().matrix(), false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::ConvergenceFailure, "superoperator eigensolver did not converge");
    }
    Eigen::VectorXcd ev = solver.eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size(),
              [](const Complex& a, const Complex& b) { return std::abs(a) > std::abs(b); });
    return ev;
}

inline PrimitivityReport is_primitive(const QuantumChannel& e, double tol = 1e-8) {
    const Eigen::VectorXcd ev = channel_spectrum(e);
    PrimitivityReport r;
    int ones = 0;
    for (Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) >= 1.0 - tol) ++r.peripheral_count;
        if (std::abs(ev(i) - 1.0) < tol) ++ones;
    }
    r.eigenvalue_one_simple = (ones == 1);
    r.spectral_gap = ev.size() > 1 ? 1.0 - std::abs(ev(1)) : 1.0;
    try {
        r.fixed_point_min_eigenvalue = fixed_point(e).lambda_min();
    } catch (const Error&) {
        r.fixed_point_min_eigenvalue = 0.0;
    }
    r.is_primitive = r.eigenvalue_one_simple && r.peripheral_count == 1 &&
                     r.fixed_point_min_eigenvalue > tol;
    return r;
}

// ------------------------------- constructors --------------------------------

inline QuantumChannel identity_channel(Index d) {
    return channel_from_kraus({Matrix::Identity(d, d)}, "identity");
}

inline QuantumChannel unitary_channel(const Matrix& u, std::string label = "unitary") {
    if (u.rows() != u.cols()) {
        throw Error(ErrorCode::NotSquare, "unitary must be square");
    }
    return channel_from_kraus({u}, std::move(label));
}

/// ρ ↦ Σ_{ij} W(i|j)⟨j|ρ|j⟩|i⟩⟨i| for a column-stochastic W.
inline QuantumChannel embedded_classical(const RealMatrix& w) {
    if (w.rows() != w.cols() || w.rows() < 2) {
        throw Error(ErrorCode::NotStochastic, "transition matrix must be square with d ≥ 2");
    }
    const Index d = w.rows();
    if (w.minCoeff() < 0.0) {
        throw Error(ErrorCode::NotStochastic, "transition matrix has negative entries");
    }
    for (Index j = 0; j < d; ++j) {
        if (std::abs(w.col(j).sum() - 1.0) > tolerance::construction) {
            throw Error(ErrorCode::NotStochastic, "column " + std::to_string(j) + " does not sum to 1");
        }
    }
    std::vector<Matrix> kraus;
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            if (w(i, j) == 0.0) continue;
            Matrix k = Matrix::Zero(d, d);
            k(i, j) = std::sqrt(w(i, j));
            kraus.push_back(std::move(k));
        }
    }
    return channel_from_kraus(std::move(kraus), "embedded_classical");
}

/// ρ ↦ Σ pᵢ σᵢ ρ σᵢ with σ₀ = I.
inline QuantumChannel pauli_channel(const std::array<double, 4>& p) {
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw Error(ErrorCode::NotProbability, "Pauli weights must be non-negative");
        total += x;
    }
    if (std::abs(total - 1.0) > tolerance::construction) {
        throw Error(ErrorCode::NotProbability, "Pauli weights must sum to 1");
    }
    std::vector<Matrix> kraus;
    for (int k = 0; k < 4; ++k) {
        if (p[k] > 0.0) kraus.push_back(std::sqrt(p[k]) * detail::pauli(k));
    }
    return channel_from_kraus(std::move(kraus), "pauli");
}

/// ρ ↦ (1−p)ρ + p·Tr[ρ]·I/d, built from the d² Weyl operators.
inline QuantumChannel depolarizing(double p, Index d = 2) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::ParameterOutOfRange, "depolarizing probability must lie in [0,1]");
    }
    if (d < 2) throw Error(ErrorCode::ParameterOutOfRange, "dimension must be at least 2");
    const double pi = std::acos(-1.0);
    Matrix shift = Matrix::Zero(d, d);
    Matrix clock = Matrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) {
        shift((k + 1) % d, k) = 1.0;
        clock(k, k) = std::polar(1.0, 2.0 * pi * static_cast<double>(k) / static_cast<double>(d));
    }
    const double d2 = static_cast<double>(d * d);
    std::vector<Matrix> kraus;
    Matrix xa = Matrix::Identity(d, d);
    for (Index a = 0; a < d; ++a) {
        Matrix weyl = xa;
        for (Index b = 0; b < d; ++b) {
            const double w = (a == 0 && b == 0) ? 1.0 - p + p / d2 : p / d2;
            if (w > 0.0) kraus.push_back(std::sqrt(w) * weyl);
            weyl = weyl * clock;
        }
        xa = xa * shift;
    }
    return channel_from_kraus(std::move(kraus), "depolarizing");
}

/// Generalized amplitude damping with damping γ and excited-state population λ of the
/// fixed point diag(1−λ, λ).
inline QuantumChannel amplitude_damping(double gamma, double lambda) {
    if (!(gamma > 0.0 && gamma < 1.0) || !(lambda > 0.0 && lambda < 1.0)) {
        throw Error(ErrorCode::ParameterOutOfRange, "γ and λ must lie in (0,1)");
    }
    const double p = 1.0 - lambda;
    Matrix k0 = Matrix::Zero(2, 2), k1 = Matrix::Zero(2, 2);
    Matrix k2 = Matrix::Zero(2, 2), k3 = Matrix::Zero(2, 2);
    k0(0, 0) = std::sqrt(p);
    k0(1, 1) = std::sqrt(p * (1.0 - gamma));
    k1(0, 1) = std::sqrt(p * gamma);
    k2(0, 0) = std::sqrt((1.0 - p) * (1.0 - gamma));
    k2(1, 1) = std::sqrt(1.0 - p);
    k3(1, 0) = std::sqrt((1.0 - p) * gamma);
    return channel_from_kraus({k0, k1, k2, k3}, "amplitude_damping");
}

/// Completely depolarizing onto σ: ρ ↦ Tr[ρ]·σ.
inline QuantumChannel replacer_channel(const DensityMatrix& sigma) {
    const Index d = sigma.dim();
    const EigenSystem& es = sigma.eigen();
    std::vector<Matrix> kraus;
    for (Index i = 0; i < d; ++i) {
        const double mu = std::max(es.values(i), 0.0);
        if (mu == 0.0) continue;
        for (Index j = 0; j < d; ++j) {
            Matrix k = Matrix::Zero(d, d);
            k.col(j) = std::sqrt(mu) * es.vectors.col(i);
            kraus.push_back(std::move(k));
        }
    }
    return channel_from_kraus(std::move(kraus), "replacer");
}

/// Haar-random isometry V: ℂᵈ → ℂᵈ⊗ℂᵉⁿᵛ (QR of a complex Ginibre matrix with phase fix).
inline Matrix haar_isometry(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) g(i, j) = Complex(normal(rng), normal(rng));
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    const Matrix r = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
    for (Index j = 0; j < cols; ++j) {
        const double mag = std::abs(r(j, j));
        if (mag > 0.0) q.col(j) *= r(j, j) / mag;
    }
    return q;
}

/// Stinespring channel from a seeded Haar isometry; deterministic per seed.
inline QuantumChannel random_channel(Index d, Index env, std::uint64_t seed) {
    if (d < 2 || env < 1) {
        throw Error(ErrorCode::ParameterOutOfRange, "random channel needs d ≥ 2 and env ≥ 1");
    }
    std::mt19937_64 rng(seed);
    const Matrix v = haar_isometry(d * env, d, rng);
    std::vector<Matrix> kraus;
    kraus.reserve(static_cast<std::size_t>(env));
    for (Index k = 0; k < env; ++k) kraus.push_back(v.block(k * d, 0, d, d));
    return channel_from_kraus(std::move(kraus), "random(seed=" + std::to_string(seed) + ")");
}

}  // namespace qcontract

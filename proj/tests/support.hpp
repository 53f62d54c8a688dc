// support.hpp: random fixtures and independent oracles shared by the test binaries
//
// The oracles deliberately avoid the library's own spectral code paths: they use
// Eigen's general (non-Hermitian) eigensolver, Schur–Parlett matrix functions and
// plain scalar arithmetic.

#pragma once

#include "qcontract/qcontract.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace qtest {

using namespace qcontract;

// ---- random fixtures ----

inline Matrix ginibre(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) {
            const double re = n(rng);
            const double im = n(rng);
            a(i, j) = Complex(re, im);
        }
    return a;
}

inline Matrix random_hermitian(Index d, std::mt19937_64& rng) {
    const Matrix g = ginibre(d, d, rng);
    return 0.5 * (g + g.adjoint());
}

/// Full-rank state: (1−floor)·GG†/Tr + floor·I/d.
inline DensityMatrix random_state(Index d, std::mt19937_64& rng, double floor = 0.05) {
    const Matrix g = ginibre(d, d, rng);
    Matrix r = g * g.adjoint();
    r /= r.trace().real();
    return validate_density((1.0 - floor) * r + floor * Matrix::Identity(d, d) / double(d));
}

inline std::vector<double> random_distribution(Index d, std::mt19937_64& rng, double floor = 0.05) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(d));
    double s = 0.0;
    for (auto& x : p) s += (x = u(rng) + floor);
    for (auto& x : p) x /= s;
    return p;
}

inline Matrix random_unitary(Index d, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(ginibre(d, d, rng));
    return qr.householderQ() * Matrix::Identity(d, d);
}

/// U·diag(p)·U†, diagonal in a shared random basis.
inline DensityMatrix rotated_diagonal(const std::vector<double>& p, const Matrix& u) {
    Matrix d = Matrix::Zero(u.rows(), u.cols());
    for (std::size_t i = 0; i < p.size(); ++i) d(Index(i), Index(i)) = p[i];
    return validate_density(u * d * u.adjoint());
}

// ---- scalar oracles ----

inline double csiszar(const std::vector<double>& p, const std::vector<double>& q,
                      const std::function<double(double)>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += q[i] * f(p[i] / q[i]);
    return s;
}

// plain textbook generators, kept separate from the library catalog
inline double kl_plain(double x) { return x == 0.0 ? 1.0 : x * std::log(x) - x + 1.0; }
inline double chi2_plain(double x) { return (x - 1.0) * (x - 1.0); }
inline double hellinger_plain(double x) { return (std::sqrt(x) - 1.0) * (std::sqrt(x) - 1.0); }

inline std::function<double(double)> plain_f(const std::string& name) {
    if (name == "kl") return kl_plain;
    if (name == "chi2") return chi2_plain;
    return hellinger_plain;
}

// ---- matrix oracles ----

/// φ(H) by Lagrange interpolation of φ on the distinct eigenvalues of H (basis-free).
inline Matrix lagrange_function(const Matrix& h, const std::function<double(double)>& phi) {
    Eigen::ComplexEigenSolver<Matrix> solver(h, false);
    std::vector<double> ev;
    for (Index i = 0; i < solver.eigenvalues().size(); ++i) ev.push_back(solver.eigenvalues()(i).real());
    std::sort(ev.begin(), ev.end());
    std::vector<double> distinct;
    for (double v : ev)
        if (distinct.empty() || v - distinct.back() > 1e-7) distinct.push_back(v);
    const Index d = h.rows();
    Matrix out = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < distinct.size(); ++k) {
        Matrix term = Matrix::Identity(d, d) * phi(distinct[k]);
        for (std::size_t l = 0; l < distinct.size(); ++l) {
            if (l == k) continue;
            term = term * (h - distinct[l] * Matrix::Identity(d, d)) / (distinct[k] - distinct[l]);
        }
        out += term;
    }
    return out;
}

/// Tr[ρ(ln ρ − ln σ)] through Eigen's Schur–Parlett logarithm.
inline double umegaki(const Matrix& rho, const Matrix& sigma) {
    const Matrix lr = rho.log();
    const Matrix ls = sigma.log();
    return (rho * (lr - ls)).trace().real();
}

/// Tr[(A)_+] from a general complex eigensolve.
inline double trace_plus_general(const Matrix& a) {
    Eigen::ComplexEigenSolver<Matrix> solver(a, false);
    double s = 0.0;
    for (Index i = 0; i < solver.eigenvalues().size(); ++i) s += std::max(solver.eigenvalues()(i).real(), 0.0);
    return s;
}

/// Composite Simpson rule for the HT integral over [1, t_max] and [1, 1/t_min], with E_γ
/// taken from a general eigensolve.
inline double ht_simpson(const std::function<double(double)>& f2, const Matrix& rho,
                         const Matrix& sigma, int panels = 4000) {
    const Matrix s_half = sigma.sqrt();
    const Matrix s_inv_half = s_half.inverse();
    Eigen::ComplexEigenSolver<Matrix> solver(s_inv_half * rho * s_inv_half, false);
    double tmin = 1e300, tmax = -1e300;
    for (Index i = 0; i < solver.eigenvalues().size(); ++i) {
        tmin = std::min(tmin, solver.eigenvalues()(i).real());
        tmax = std::max(tmax, solver.eigenvalues()(i).real());
    }
    auto simpson = [&](auto&& g, double a, double b) {
        if (!(b > a)) return 0.0;
        const double h = (b - a) / panels;
        double s = g(a) + g(b);
        for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * g(a + k * h);
        return s * h / 3.0;
    };
    const double t1 = simpson([&](double g) { return f2(g) * trace_plus_general(rho - g * sigma); },
                              1.0, tmax);
    const double t2 = simpson(
        [&](double g) { return std::pow(g, -3.0) * f2(1.0 / g) * trace_plus_general(sigma - g * rho); },
        1.0, 1.0 / tmin);
    return t1 + t2;
}

// ---- superoperator oracles ----

/// Column-stacked matrix of a linear map, assembled from its action on matrix units.
inline Matrix superop_of(Index d, const std::function<Matrix(const Matrix&)>& map) {
    Matrix s(d * d, d * d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) {
            Matrix unit = Matrix::Zero(d, d);
            unit(i, j) = 1.0;
            const Matrix image = map(unit);
            for (Index c = 0; c < d; ++c)
                for (Index r = 0; r < d; ++r) s(c * d + r, j * d + i) = image(r, c);
        }
    }
    return s;
}

/// Ω_σ^g from closed forms that never touch the σ eigenbasis:
///   max:  X ↦ (σ⁻¹X + Xσ⁻¹)/2
///   wy:   Ω⁻¹ = Y ↦ (σY + 2σ^{1/2}Yσ^{1/2} + Yσ)/4
///   kmb:  Ω⁻¹ = Y ↦ ∫₀¹ σ^s Y σ^{1−s} ds   (composite Simpson)
///   gns:  X ↦ Xσ⁻¹
inline Matrix omega_oracle(const Matrix& sigma, const std::string& g, int panels = 400) {
    const Index d = sigma.rows();
    const Matrix inv = sigma.inverse();
    if (g == "max") return superop_of(d, [&](const Matrix& x) -> Matrix { return 0.5 * (inv * x + x * inv); });
    if (g == "gns") return superop_of(d, [&](const Matrix& x) -> Matrix { return x * inv; });
    if (g == "wy") {
        const Matrix h = sigma.sqrt();
        return superop_of(d, [&](const Matrix& y) -> Matrix {
                   return 0.25 * (sigma * y + 2.0 * h * y * h + y * sigma);
               }).inverse();
    }
    std::vector<Matrix> powers;
    for (int k = 0; k <= panels; ++k) powers.push_back(sigma.pow(double(k) / panels));
    return superop_of(d, [&](const Matrix& y) -> Matrix {
               Matrix acc = Matrix::Zero(d, d);
               for (int k = 0; k <= panels; ++k) {
                   const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
                   acc += w * powers[std::size_t(k)] * y * powers[std::size_t(panels - k)];
               }
               return acc / (3.0 * panels);
           }).inverse();
}

/// Eigenvalues of Ω⁻¹E*ΩE from a general eigensolve, real parts sorted descending.
inline std::vector<double> contraction_spectrum(const Matrix& e, const Matrix& omega) {
    const Matrix op = omega.inverse() * e.adjoint() * omega * e;
    Eigen::ComplexEigenSolver<Matrix> solver(op, false);
    std::vector<double> ev;
    for (Index i = 0; i < solver.eigenvalues().size(); ++i) ev.push_back(solver.eigenvalues()(i).real());
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

/// d⁴-iterate criterion: E is primitive iff E^{∘d⁴} has a positive definite Choi matrix.
inline bool choi_power_full_rank(const QuantumChannel& e) {
    const Index d = e.dim();
    const QuantumChannel p = channel_power(e, int(d * d * d * d));
    const RealVector ev = hermitian_eigenvalues(p.choi());
    return ev(0) > 1e-10;
}

}  // namespace qtest

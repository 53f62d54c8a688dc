// divergences.hpp: f and g catalogs plus every divergence evaluator
//
// Quantum χ²_g divergences, χ²_max, the hockey-stick divergence, the HT / Petz /
// Matsumoto f-divergences, the reverse-Pinsker bound and the local-χ² limit estimator.
// All evaluators require a full-rank reference state; natural logarithms throughout.

#pragma once

#include "qcontract/operator_core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qcontract {

using ScalarFn = std::function<double(double)>;

enum class Family { HT, Petz, Matsumoto };

constexpr std::string_view to_string(Family f) noexcept {
    switch (f) {
    case Family::HT: return "HT";
    case Family::Petz: return "Petz";
    case Family::Matsumoto: return "Matsumoto";
    }
    return "?";
}

inline Family parse_family(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "ht") return Family::HT;
    if (lower == "petz") return Family::Petz;
    if (lower == "matsumoto") return Family::Matsumoto;
    throw Error(ErrorCode::InvalidArgument, "unknown divergence family '" + std::string(name) + "'");
}

inline std::vector<Family> all_families() { return {Family::HT, Family::Petz, Family::Matsumoto}; }

namespace detail {

// log-spaced sample points on [lo, hi], always including 1
inline std::vector<double> check_grid(double lo = 0.05, double hi = 20.0, int n = 61) {
    std::vector<double> xs;
    for (int k = 0; k < n; ++k) {
        xs.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1)));
    }
    xs.push_back(1.0);
    std::sort(xs.begin(), xs.end());
    return xs;
}

}  // namespace detail

// ------------------------------- f generators --------------------------------

/// A convex generator f with f(1) = f'(1) = 0 and its first three derivatives,
/// plus the family that interprets it.
struct FDivergenceSpec {
    std::string name;
    ScalarFn f, f1, f2, f3;
    bool operator_convex = false;
    std::optional<double> pinsker_constant;
    Family family = Family::HT;

    FDivergenceSpec with_family(Family fam) const {
        FDivergenceSpec copy = *this;
        copy.family = fam;
        return copy;
    }
};

/// Validates normalization, convexity and derivative consistency on a sample grid.
inline FDivergenceSpec make_f_spec(std::string name, ScalarFn f, ScalarFn f1, ScalarFn f2,
                                   ScalarFn f3, bool operator_convex,
                                   std::optional<double> pinsker_constant) {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::InvalidArgument, "generator '" + name + "': " + why);
    };
    if (std::abs(f(1.0)) > 1e-12) fail("f(1) != 0");
    if (std::abs(f1(1.0)) > 1e-12) fail("f'(1) != 0");
    if (!(f2(1.0) > 0.0)) fail("f''(1) must be positive");
    const double h = 1e-5;
    for (double x : detail::check_grid(0.1, 10.0, 41)) {
        if (f2(x) < -1e-12) fail("not convex at x = " + std::to_string(x));
        const double d1 = (f(x + h) - f(x - h)) / (2 * h);
        const double d2 = (f1(x + h) - f1(x - h)) / (2 * h);
        const double d3 = (f2(x + h) - f2(x - h)) / (2 * h);
        auto off = [](double fd, double exact) {
            return std::abs(fd - exact) > 1e-6 * std::max(1.0, std::abs(exact));
        };
        if (off(d1, f1(x)) || off(d2, f2(x)) || off(d3, f3(x))) {
            fail("derivatives inconsistent at x = " + std::to_string(x));
        }
    }
    return {std::move(name), std::move(f), std::move(f1), std::move(f2), std::move(f3),
            operator_convex, pinsker_constant, Family::HT};
}

/// f(x) = x ln x − x + 1 (relative entropy).
inline FDivergenceSpec f_kl() {
    auto f = [](double x) {
        if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
        if (x == 0.0) return 1.0;
        const double u = x - 1.0;
        if (std::abs(u) < 1e-3) {
            // Σ_{k≥2} (−u)^k / (k(k−1))
            double term = u * u, sum = 0.0;
            for (int k = 2; k <= 9; ++k) {
                sum += ((k % 2 == 0) ? 1.0 : -1.0) * term / (k * (k - 1.0));
                term *= u;
            }
            return sum;
        }
        return x * std::log(x) - x + 1.0;
    };
    return make_f_spec(
        "kl", f, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; },
        [](double x) { return -1.0 / (x * x); }, true, 0.5);
}

/// f(x) = (x − 1)².
inline FDivergenceSpec f_chi2() {
    return make_f_spec(
        "chi2", [](double x) { return (x - 1.0) * (x - 1.0); },
        [](double x) { return 2.0 * (x - 1.0); }, [](double) { return 2.0; },
        [](double) { return 0.0; }, true, 1.0);
}

/// f(x) = (√x − 1)² (squared Hellinger, unnormalized).
inline FDivergenceSpec f_hellinger() {
    auto f = [](double x) {
        if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
        const double r = std::sqrt(x) + 1.0;
        return (x - 1.0) * (x - 1.0) / (r * r);
    };
    return make_f_spec(
        "hellinger", f, [](double x) { return 1.0 - 1.0 / std::sqrt(x); },
        [](double x) { return 0.5 * std::pow(x, -1.5); },
        [](double x) { return -0.75 * std::pow(x, -2.5); }, true, 0.25);
}

inline std::vector<FDivergenceSpec> f_catalog() { return {f_kl(), f_chi2(), f_hellinger()}; }

inline FDivergenceSpec find_f(std::string_view name) {
    for (auto& spec : f_catalog()) {
        if (spec.name == name) return spec;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown f '" + std::string(name) + "'");
}

// ------------------------------- g functions ---------------------------------

/// A weight function g for Ω_σ^g. `standard` is false for the GNS weight g ≡ 1,
/// which is admissible for detailed-balance checks only.
struct StandardMonotoneFn {
    std::string name;
    ScalarFn g;
    bool standard = true;
    std::string note;

    double operator()(double x) const { return g(x); }
};

/// Checks normalization, positivity, monotone decrease and g(1/x) = x·g(x) on a grid.
inline StandardMonotoneFn make_standard_monotone(std::string name, ScalarFn g,
                                                 std::string note = {}) {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::InvalidArgument, "weight '" + name + "': " + why);
    };
    if (std::abs(g(1.0) - 1.0) > 1e-12) fail("g(1) != 1");
    double prev = std::numeric_limits<double>::infinity();
    for (double x : detail::check_grid()) {
        const double v = g(x);
        if (!(v > 0.0)) fail("not positive at x = " + std::to_string(x));
        if (v > prev + 1e-12) fail("increasing at x = " + std::to_string(x));
        prev = v;
        const double lhs = g(1.0 / x), rhs = x * v;
        if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(rhs))) {
            fail("violates g(1/x) = x·g(x) at x = " + std::to_string(x));
        }
    }
    return {std::move(name), std::move(g), true, std::move(note)};
}

/// g(x) = (x+1)/(2x); gives χ²_max.
inline StandardMonotoneFn g_max() {
    return make_standard_monotone(
        "max", [](double x) { return (x + 1.0) / (2.0 * x); }, "maximal chi^2, Tr[s^-1 X^2]");
}

/// g(x) = ln x/(x−1), the Kubo–Mori–Bogoliubov weight.
inline StandardMonotoneFn g_kmb() {
    return make_standard_monotone(
        "kmb",
        [](double x) {
            const double u = x - 1.0;
            if (std::abs(u) < 1e-4) return 1.0 - u / 2.0 + u * u / 3.0;
            return std::log(x) / u;
        },
        "Kubo-Mori-Bogoliubov, ln x/(x-1)");
}

/// g(x) = 4/(1+√x)², the Wigner–Yanase weight.
inline StandardMonotoneFn g_wy() {
    return make_standard_monotone(
        "wy",
        [](double x) {
            const double r = 1.0 + std::sqrt(x);
            return 4.0 / (r * r);
        },
        "Wigner-Yanase, 4/(1+sqrt x)^2");
}

/// g ≡ 1 (GNS). Not standard monotone: it fails the symmetry condition.
inline StandardMonotoneFn gns_weight() {
    return {"gns", [](double) { return 1.0; }, false, "GNS weight, detailed balance only"};
}

inline std::vector<StandardMonotoneFn> g_catalog() { return {g_max(), g_kmb(), g_wy()}; }

inline StandardMonotoneFn find_g(std::string_view name) {
    if (name == "gns") return gns_weight();
    for (auto& g : g_catalog()) {
        if (g.name == name) return g;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown g '" + std::string(name) + "'");
}

// ------------------------------- results -------------------------------------

struct DivergenceDiagnostics {
    double quadrature_error = 0.0;
    int quadrature_segments = 0;
    bool rho_full_rank = true;
    bool sigma_full_rank = true;
};

struct DivergenceValue {
    double value = 0.0;
    DivergenceDiagnostics diagnostics;
};

namespace detail {

inline void require_full_rank(const DensityMatrix& s, const char* what) {
    if (!s.full_rank()) {
        throw Error(ErrorCode::SingularReference, std::string(what) + " is not full rank");
    }
}

inline void require_same_dim(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "states have different dimensions");
    }
}

/// Eigensystem of σ^{-1/2}(ρ−σ)σ^{-1/2}; eigenvalues are t − 1 for the generalized
/// eigenvalues t of the pencil (ρ, σ).
inline EigenSystem shifted_ratio_eig(const DensityMatrix& rho, const DensityMatrix& sigma) {
    const Matrix s_inv_half = sigma.power(-0.5);
    const Matrix d = s_inv_half * (rho.matrix() - sigma.matrix()) * s_inv_half;
    return hermitian_eig(Matrix(0.5 * (d + d.adjoint())));
}

}  // namespace detail

// ------------------------------- χ² divergences ------------------------------

/// Σᵢⱼ (1/μⱼ)·g(μᵢ/μⱼ)·|Xᵢⱼ|² with X = ρ − σ in the eigenbasis of σ.
inline DivergenceValue chi2_g(const DensityMatrix& rho, const DensityMatrix& sigma,
                              const StandardMonotoneFn& g) {
    detail::require_same_dim(rho, sigma);
    detail::require_full_rank(sigma, "reference state");
    const EigenSystem& es = sigma.eigen();
    const Matrix x = es.vectors.adjoint() * (rho.matrix() - sigma.matrix()) * es.vectors;
    const Index d = sigma.dim();
    double sum = 0.0;
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            const double mi = es.values(i), mj = es.values(j);
            sum += g(mi / mj) / mj * std::norm(x(i, j));
        }
    }
    return {sum, {0.0, 0, rho.full_rank(), true}};
}

/// Tr[σ⁻¹(ρ−σ)²].
inline DivergenceValue chi2_max(const DensityMatrix& rho, const DensityMatrix& sigma) {
    detail::require_same_dim(rho, sigma);
    detail::require_full_rank(sigma, "reference state");
    const Matrix x = rho.matrix() - sigma.matrix();
    return {(sigma.inverse() * x * x).trace().real(), {0.0, 0, rho.full_rank(), true}};
}

/// Smallest and largest Ω weight (1/μⱼ)g(μᵢ/μⱼ) over the spectrum of σ; they sandwich
/// χ²_g(ρ‖σ) between multiples of ‖ρ−σ‖₂².
struct WeightBounds {
    double min_weight = 0.0;
    double max_weight = 0.0;
};

inline WeightBounds chi2_weight_bounds(const DensityMatrix& sigma, const StandardMonotoneFn& g) {
    detail::require_full_rank(sigma, "reference state");
    const RealVector& mu = sigma.eigen().values;
    WeightBounds b{std::numeric_limits<double>::infinity(), 0.0};
    for (Index i = 0; i < mu.size(); ++i) {
        for (Index j = 0; j < mu.size(); ++j) {
            const double w = g(mu(i) / mu(j)) / mu(j);
            b.min_weight = std::min(b.min_weight, w);
            b.max_weight = std::max(b.max_weight, w);
        }
    }
    return b;
}

// ------------------------------- hockey-stick --------------------------------

/// E_γ(ρ‖σ) = Tr[(ρ − γσ)₊].
inline double hockey_stick(const DensityMatrix& rho, const DensityMatrix& sigma, double gamma) {
    detail::require_same_dim(rho, sigma);
    detail::require_full_rank(sigma, "reference state");
    if (!(gamma >= 1.0)) {
        throw Error(ErrorCode::ParameterOutOfRange, "hockey-stick parameter must be ≥ 1");
    }
    // ρ − γσ = (ρ − σ) − (γ − 1)σ keeps the small difference exact
    return trace_positive_part((rho.matrix() - sigma.matrix()) - (gamma - 1.0) * sigma.matrix());
}

// ------------------------------- f-divergences -------------------------------

/// ∫₁^∞ f″(γ)E_γ(ρ‖σ) + γ⁻³f″(γ⁻¹)E_γ(σ‖ρ) dγ by Gauss–Kronrod on the pieces between
/// the kinks of E_γ (generalized eigenvalues of the pencil (ρ, σ) and their reciprocals).
inline DivergenceValue ht_divergence(const FDivergenceSpec& spec, const DensityMatrix& rho,
                                     const DensityMatrix& sigma, double rel_tol = 1e-8) {
    detail::require_same_dim(rho, sigma);
    detail::require_full_rank(sigma, "reference state");
    detail::require_full_rank(rho, "first argument");

    const RealVector shifted = detail::shifted_ratio_eig(rho, sigma).values;
    const Matrix x = rho.matrix() - sigma.matrix();
    const Matrix& rho_m = rho.matrix();
    const Matrix& sigma_m = sigma.matrix();

    auto term1 = [&](double g) {
        return spec.f2(g) * trace_positive_part(x - (g - 1.0) * sigma_m);
    };
    auto term2 = [&](double g) {
        return std::pow(g, -3.0) * spec.f2(1.0 / g) * trace_positive_part(-x - (g - 1.0) * rho_m);
    };

    DivergenceValue out;
    out.diagnostics.rho_full_rank = true;
    auto integrate = [&](auto&& integrand, std::vector<double> knots) {
        std::sort(knots.begin(), knots.end());
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            const double a = knots[k], b = knots[k + 1];
            if (!(b > a)) continue;
            double err = 0.0;
            const double piece = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
                integrand, a, b, 15, rel_tol, &err);
            total += piece;
            out.diagnostics.quadrature_error += err;
            ++out.diagnostics.quadrature_segments;
        }
        return total;
    };

    // E_γ(ρ‖σ) vanishes beyond γ = t_max; E_γ(σ‖ρ) beyond 1/t_min
    std::vector<double> knots1{1.0}, knots2{1.0};
    const double t_max = 1.0 + shifted(shifted.size() - 1);
    const double inv_t_min = 1.0 / (1.0 + shifted(0));
    for (Index k = 0; k < shifted.size(); ++k) {
        const double t = 1.0 + shifted(k);
        if (t > 1.0 && t <= t_max) knots1.push_back(t);
        if (t < 1.0 && 1.0 / t <= inv_t_min) knots2.push_back(1.0 / t);
    }
    out.value = integrate(term1, knots1) + integrate(term2, knots2);
    if (!std::isfinite(out.value) ||
        out.diagnostics.quadrature_error > std::sqrt(rel_tol) * std::abs(out.value) + 1e-14) {
        throw Error(ErrorCode::QuadratureFailure,
                    "HT integral error estimate " + std::to_string(out.diagnostics.quadrature_error));
    }
    return out;
}

/// Tr[σ·f(σ^{-1/2}ρσ^{-1/2})].
inline DivergenceValue matsumoto_divergence(const FDivergenceSpec& spec, const DensityMatrix& rho,
                                            const DensityMatrix& sigma) {
    detail::require_same_dim(rho, sigma);
    detail::require_full_rank(sigma, "reference state");
    const EigenSystem es = detail::shifted_ratio_eig(rho, sigma);
    const Matrix w = es.vectors.adjoint() * sigma.matrix() * es.vectors;
    double sum = 0.0;
    for (Index k = 0; k < es.values.size(); ++k) {
        const double fv = spec.f(std::max(1.0 + es.values(k), 0.0));
        if (!std::isfinite(fv)) {
            throw Error(ErrorCode::DomainError, "f is not finite on the spectrum of σ^{-1/2}ρσ^{-1/2}");
        }
        sum += fv * w(k, k).real();
    }
    return {sum, {0.0, 0, rho.full_rank(), true}};
}

namespace detail {
inline void require_operator_convex(const FDivergenceSpec& spec) {
    if (!spec.operator_convex) {
        throw Error(ErrorCode::NotOperatorConvex,
                    "Petz divergence needs an operator convex generator, '" + spec.name + "' is not");
    }
}
}  // namespace detail

/// Σᵢⱼ f(λᵢ/μⱼ)·|⟨φᵢ|ψⱼ⟩|²·μⱼ over the eigensystems (λ, φ) of ρ and (μ, ψ) of σ.
inline DivergenceValue petz_divergence(const FDivergenceSpec& spec, const DensityMatrix& rho,
                                       const DensityMatrix& sigma) {
    detail::require_operator_convex(spec);
    detail::require_same_dim(rho, sigma);
    detail::require_full_rank(sigma, "reference state");
    const EigenSystem& r = rho.eigen();
    const EigenSystem& s = sigma.eigen();
    const Matrix overlap = r.vectors.adjoint() * s.vectors;
    double sum = 0.0;
    for (Index i = 0; i < overlap.rows(); ++i) {
        for (Index j = 0; j < overlap.cols(); ++j) {
            const double fv = spec.f(std::max(r.values(i), 0.0) / s.values(j));
            if (!std::isfinite(fv)) {
                throw Error(ErrorCode::DomainError, "f is not finite on the spectrum of Δ_{ρ,σ}");
            }
            sum += fv * std::norm(overlap(i, j)) * s.values(j);
        }
    }
    return {sum, {0.0, 0, rho.full_rank(), true}};
}

/// ⟨σ^{1/2}, f(Δ_{ρ,σ})(σ^{1/2})⟩ with the modular operator as a d²×d² Hermitian matrix.
inline DivergenceValue petz_divergence_superop(const FDivergenceSpec& spec,
                                               const DensityMatrix& rho,
                                               const DensityMatrix& sigma) {
    detail::require_operator_convex(spec);
    const Superoperator delta = relative_modular(rho, sigma);
    const Matrix fd = hermitian_function(
        hermitian_eig(Matrix(0.5 * (delta.matrix() + delta.matrix().adjoint()))),
        [&](double t) { return spec.f(std::max(t, 0.0)); });
    const Vector s_half = vectorize(sigma.power(0.5));
    return {(s_half.adjoint() * fd * s_half)(0, 0).real(), {0.0, 0, rho.full_rank(), true}};
}

inline DivergenceValue divergence(const FDivergenceSpec& spec, const DensityMatrix& rho,
                                  const DensityMatrix& sigma) {
    switch (spec.family) {
    case Family::HT: return ht_divergence(spec, rho, sigma);
    case Family::Petz: return petz_divergence(spec, rho, sigma);
    case Family::Matsumoto: return matsumoto_divergence(spec, rho, sigma);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown family");
}

// ------------------------------- evaluators ----------------------------------

/// Type-erased D(ρ‖σ) used by the local-limit estimator and the variational SDPI search.
struct DivergenceEvaluator {
    std::string family;  // HT | Petz | Matsumoto | chi2
    std::string name;    // f or g name
    std::function<double(const DensityMatrix&, const DensityMatrix&)> evaluate;

    double operator()(const DensityMatrix& rho, const DensityMatrix& sigma) const {
        return evaluate(rho, sigma);
    }
};

inline DivergenceEvaluator make_evaluator(const FDivergenceSpec& spec) {
    if (spec.family == Family::Petz) detail::require_operator_convex(spec);
    return {std::string(to_string(spec.family)), spec.name,
            [spec](const DensityMatrix& r, const DensityMatrix& s) {
                return divergence(spec, r, s).value;
            }};
}

inline DivergenceEvaluator make_chi2_evaluator(const StandardMonotoneFn& g) {
    return {"chi2", g.name,
            [g](const DensityMatrix& r, const DensityMatrix& s) { return chi2_g(r, s, g).value; }};
}

// ------------------------------- reverse Pinsker -----------------------------

struct ReversePinskerBound {
    double bound = 0.0;
    bool applicable = false;
    double m = 1.0;  // λ_min(σ^{-1/2}ρσ^{-1/2})
    double M = 1.0;  // λ_max(σ^{-1/2}ρσ^{-1/2})
    double trace_norm = 0.0;
};

/// (‖ρ−σ‖₁/2)·(f(m)/(1−m) + f(M)/(M−1)), applicable iff |ρ−σ| ≤ ρ+σ.
inline ReversePinskerBound reverse_pinsker_bound(const FDivergenceSpec& spec,
                                                 const DensityMatrix& rho,
                                                 const DensityMatrix& sigma) {
    detail::require_same_dim(rho, sigma);
    detail::require_full_rank(sigma, "reference state");
    const RealVector shifted = detail::shifted_ratio_eig(rho, sigma).values;
    ReversePinskerBound out;
    const double lo = shifted(0), hi = shifted(shifted.size() - 1);  // m − 1, M − 1
    out.m = 1.0 + lo;
    out.M = 1.0 + hi;

    const double f2 = spec.f2(1.0), f3 = spec.f3(1.0);
    const double below = (std::abs(lo) < 1e-8) ? f2 / 2.0 * (-lo) - f3 / 6.0 * lo * lo
                                               : spec.f(out.m) / (-lo);
    const double above = (std::abs(hi) < 1e-8) ? f2 / 2.0 * hi + f3 / 6.0 * hi * hi
                                               : spec.f(out.M) / hi;

    const HermitianMatrix x(rho.matrix() - sigma.matrix());
    const EigenSystem xe = hermitian_eig(x);
    out.trace_norm = xe.values.cwiseAbs().sum();
    out.bound = out.trace_norm / 2.0 * (below + above);

    const Matrix abs_x = reconstruct(xe, xe.values.cwiseAbs());
    const Matrix slack = rho.matrix() + sigma.matrix() - abs_x;
    out.applicable = hermitian_eigenvalues(Matrix(0.5 * (slack + slack.adjoint())))(0) >= -1e-10;
    return out;
}

/// Explicit constant C with D_f(ρ‖σ) ≤ C·‖ρ−σ‖₁² whenever ‖ρ−σ‖_∞ < ε·λ_min(σ)/2,
/// from the third-order Taylor bound on f around 1.
struct LocalPinskerConstant {
    double constant = 0.0;
    double radius = 0.0;  // ε·λ_min(σ)/2 in operator norm
    double third_derivative_bound = 0.0;
};

inline LocalPinskerConstant local_reverse_pinsker_constant(const FDivergenceSpec& spec,
                                                           const DensityMatrix& sigma,
                                                           double eps) {
    detail::require_full_rank(sigma, "reference state");
    if (!(eps > 0.0 && eps < 1.0)) {
        throw Error(ErrorCode::ParameterOutOfRange, "ε must lie in (0,1)");
    }
    double c3 = 0.0;
    const int samples = 400;
    for (int k = 0; k <= samples; ++k) {
        const double x = 1.0 - eps / 2.0 + eps * static_cast<double>(k) / samples;
        c3 = std::max(c3, std::abs(spec.f3(x)));
    }
    const double lmin = sigma.lambda_min();
    return {spec.f2(1.0) / (2.0 * lmin) + c3 * eps / (12.0 * lmin), eps * lmin / 2.0, c3};
}

// ------------------------------- local behaviour -----------------------------

struct LocalChi2Estimate {
    double limit = 0.0;
    double residual = 0.0;  // |last − previous| Richardson level
    std::vector<double> samples;  // (1/λ²)·D on the grid
};

/// Evaluates (1/λ²)·D(λρ + (1−λ)σ‖σ) on a descending grid and extrapolates to λ → 0
/// with Neville's polynomial scheme.
inline LocalChi2Estimate local_chi2_estimate(const DivergenceEvaluator& eval,
                                             const DensityMatrix& rho,
                                             const DensityMatrix& sigma,
                                             const std::vector<double>& grid) {
    detail::require_full_rank(sigma, "reference state");
    if (grid.size() < 4) {
        throw Error(ErrorCode::InvalidArgument, "local-χ² grid needs at least 4 points");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0 && grid[k] < 1.0) || (k > 0 && !(grid[k] < grid[k - 1]))) {
            throw Error(ErrorCode::InvalidArgument, "local-χ² grid must be descending in (0,1)");
        }
    }
    LocalChi2Estimate out;
    for (double lam : grid) {
        const DensityMatrix mix =
            validate_density(lam * rho.matrix() + (1.0 - lam) * sigma.matrix());
        out.samples.push_back(eval(mix, sigma) / (lam * lam));
    }
    // Neville tableau evaluated at 0
    std::vector<double> p = out.samples;
    const std::size_t n = grid.size();
    double previous = p[n - 1];
    for (std::size_t level = 1; level < n; ++level) {
        for (std::size_t i = 0; i + level < n; ++i) {
            const double xi = grid[i], xj = grid[i + level];
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
        if (level == n - 2) previous = p[0];
    }
    out.limit = p[0];
    out.residual = std::abs(p[0] - previous);
    return out;
}

/// κ_f(x) = (f(x) + x·f(1/x)) / (f″(1)(x−1)²). When κ_f matches a catalog weight on the
/// check grid the catalog entry is returned.
inline StandardMonotoneFn kappa_for_petz(const FDivergenceSpec& spec) {
    detail::require_operator_convex(spec);
    const double f2 = spec.f2(1.0), f3 = spec.f3(1.0);
    const double h = 1e-4;
    const double f4 = (spec.f3(1.0 + h) - spec.f3(1.0 - h)) / (2.0 * h);
    const double c2 = (f4 + 4.0 * f3 + 6.0 * f2) / (12.0 * f2);
    ScalarFn f = spec.f;
    ScalarFn kappa = [f, f2, c2](double x) {
        const double u = x - 1.0;
        if (std::abs(u) < 1e-3) return 1.0 - u / 2.0 + c2 * u * u;
        return (f(x) + x * f(1.0 / x)) / (f2 * u * u);
    };
    for (const auto& g : g_catalog()) {
        bool same = true;
        for (double x : detail::check_grid()) {
            if (std::abs(g(x) - kappa(x)) > 1e-9 * std::max(1.0, std::abs(g(x)))) {
                same = false;
                break;
            }
        }
        if (same) return g;
    }
    return make_standard_monotone("kappa_" + spec.name, kappa, "Petz local weight of " + spec.name);
}

/// The weight g for which the family is locally χ²_g.
inline StandardMonotoneFn local_kappa(const FDivergenceSpec& spec) {
    switch (spec.family) {
    case Family::HT: return g_kmb();
    case Family::Matsumoto: return g_max();
    case Family::Petz: return kappa_for_petz(spec);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown family");
}

}  // namespace qcontract

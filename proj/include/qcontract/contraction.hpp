// contraction.hpp: SDPI constants of channels
//
// Ω_σ^g quantum inversions, the exact χ²_g contraction coefficient as a second
// singular value, a multistart variational lower bound for general f-divergences,
// detailed-balance residuals and the contraction-rate experiment over channel powers.

#pragma once

#include "qcontract/channels.hpp"
#include "qcontract/divergences.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace qcontract {

// ---- Ω_σ^g ----

/// Ω_σ^g and its inverse / square roots as d²×d² superoperators. In the eigenbasis of σ
/// each is diagonal on matrix units with weight w_ij = g(μ_i/μ_j)/μ_j (or a power of it).
struct OmegaOperator {
    DensityMatrix sigma;
    StandardMonotoneFn g;
    RealMatrix weights;
    Superoperator forward, inverse, sqrt, inv_sqrt;
};

inline OmegaOperator omega(const DensityMatrix& sigma, const StandardMonotoneFn& g) {
    detail::require_full_rank(sigma, "reference state");
    const EigenSystem& es = sigma.eigen();
    const Index d = sigma.dim();
    RealMatrix w(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            w(i, j) = g(es.values(i) / es.values(j)) / es.values(j);
            if (!(w(i, j) > 0.0) || !std::isfinite(w(i, j))) {
                throw Error(ErrorCode::DomainError, "Ω weight is not positive and finite");
            }
        }
    }
    // vec(V Y V†) = (V̄ ⊗ V) vec(Y)
    const Matrix u = kron(es.vectors.conjugate(), es.vectors);
    auto build = [&](double power) {
        Eigen::VectorXd diag(d * d);
        for (Index j = 0; j < d; ++j) {
            for (Index i = 0; i < d; ++i) diag(j * d + i) = std::pow(w(i, j), power);
        }
        return Superoperator(Matrix(u * diag.cast<Complex>().asDiagonal() * u.adjoint()));
    };
    return {sigma, g, w, build(1.0), build(-1.0), build(0.5), build(-0.5)};
}

// ---- SDPI estimates ----

enum class SdpiMethod { ExactLambda2, Variational };

constexpr std::string_view to_string(SdpiMethod m) noexcept {
    return m == SdpiMethod::ExactLambda2 ? "exact_lambda2" : "variational";
}

struct SdpiEstimate {
    double value = 0.0;
    SdpiMethod method = SdpiMethod::ExactLambda2;
    std::optional<DensityMatrix> argmax_state;
    double top_eigenvalue_check = 0.0;  // top singular value (exact) / unused (variational)
    double top_vector_overlap = 0.0;    // |⟨top right singular vector, vec √σ⟩|
    bool reference_fixed = false;       // E(σ) = σ within 1e-7
    int restarts_used = 0;
    int valid_restarts = 0;
};

/// η_{χ²_g}(E, σ) = second largest squared singular value of
/// N = √Ω_{E(σ)} · E · Ω_σ^{-1/2}. vec(√σ) is always a right singular vector of N with
/// singular value 1, so η is taken as ‖N restricted to its orthogonal complement‖².
inline SdpiEstimate sdpi_chi2(const QuantumChannel& e, const DensityMatrix& sigma,
                              const StandardMonotoneFn& g) {
    detail::require_full_rank(sigma, "reference state");
    const DensityMatrix out = apply(e, sigma);
    if (!out.full_rank()) {
        throw Error(ErrorCode::SingularReference, "E(σ) is not full rank");
    }
    const OmegaOperator om_in = omega(sigma, g);
    const OmegaOperator om_out = omega(out, g);
    const Matrix n = om_out.sqrt.matrix() * e.superop().matrix() * om_in.inv_sqrt.matrix();

    SdpiEstimate est;
    est.method = SdpiMethod::ExactLambda2;
    est.reference_fixed = schatten_norm(HermitianMatrix(out.matrix() - sigma.matrix()), 1.0) <= 1e-7;

    Eigen::JacobiSVD<Matrix> svd(n, Eigen::ComputeFullV);
    est.top_eigenvalue_check = svd.singularValues()(0);
    const Vector v = vectorize(sigma.power(0.5)).normalized();
    est.top_vector_overlap = std::abs(svd.matrixV().col(0).dot(v));

    const Index dd = n.cols();
    const Matrix proj = Matrix::Identity(dd, dd) - v * v.adjoint();
    Eigen::JacobiSVD<Matrix> deflated(n * proj);
    const double s = deflated.singularValues()(0);
    est.value = std::clamp(s * s, 0.0, 1.0);
    return est;
}

// ---- variational search ----

struct VariationalOptions {
    int restarts = 32;
    int max_iters = 200;
    double step_tol = 1e-12;
    std::uint64_t seed = 20240611;
    double exclusion = 1e-6;  // trace distance to σ below which a point is rejected
    int threads = 0;          // 0: QCONTRACT_THREADS or hardware concurrency
};

namespace detail {

inline int worker_count(int requested, int jobs) {
    int cap = requested;
    if (cap <= 0) {
        if (const char* env = std::getenv("QCONTRACT_THREADS")) cap = std::atoi(env);
    }
    if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
    return std::clamp(cap, 1, std::max(jobs, 1));
}

/// Runs job(i) for i in [0, jobs) on up to `workers` threads. Results go into
/// caller-owned slots indexed by i, so the outcome does not depend on scheduling.
template <class Job>
void parallel_for(int jobs, int workers, Job&& job) {
    if (workers <= 1) {
        for (int i = 0; i < jobs; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < jobs; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

struct RestartResult {
    bool valid = false;
    double value = -1.0;
    Matrix state;
};

inline Matrix unpack(const Eigen::VectorXd& theta, Index d) {
    Matrix a(d, d);
    for (Index k = 0; k < d * d; ++k) a(k % d, k / d) = Complex(theta(k), theta(d * d + k));
    return a;
}

inline Eigen::VectorXd pack(const Matrix& a) {
    const Index d = a.rows();
    Eigen::VectorXd theta(2 * d * d);
    for (Index k = 0; k < d * d; ++k) {
        theta(k) = a(k % d, k / d).real();
        theta(d * d + k) = a(k % d, k / d).imag();
    }
    return theta;
}

inline Matrix random_ginibre(Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            a(i, j) = Complex(re, im);
        }
    }
    return a;
}

/// One BFGS ascent of ρ ↦ D(E(ρ)‖E(σ))/D(ρ‖σ) over ρ = AA†/Tr[AA†].
inline RestartResult variational_restart(const DivergenceEvaluator& eval, const QuantumChannel& e,
                                         const DensityMatrix& sigma, const DensityMatrix& e_sigma,
                                         const VariationalOptions& opts, int restart) {
    const Index d = sigma.dim();
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed),
                      static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    std::mt19937_64 rng(seq);

    auto objective = [&](const Eigen::VectorXd& theta, Matrix* state) -> double {
        const Matrix a = unpack(theta, d);
        const Matrix m = a * a.adjoint();
        const double tr = m.trace().real();
        if (!(tr > 1e-300)) return std::numeric_limits<double>::quiet_NaN();
        try {
            const DensityMatrix rho = validate_density(m / tr);
            if (trace_distance(rho, sigma) < opts.exclusion) {
                return std::numeric_limits<double>::quiet_NaN();
            }
            const double den = eval(rho, sigma);
            if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
            const double num = eval(apply(e, rho), e_sigma);
            if (state) *state = rho.matrix();
            return num / den;
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    // starting points alternate between generic states and states near σ, where the
    // ratio approaches its local χ² value
    static constexpr double mix[] = {1.0, 0.3, 0.1, 0.03};
    RestartResult res;
    Eigen::VectorXd theta;
    double value = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt < 8 && !std::isfinite(value); ++attempt) {
        const Matrix g = random_ginibre(d, rng);
        Matrix r = g * g.adjoint();
        r /= r.trace().real();
        const double lam = mix[restart % 4];
        const DensityMatrix start = validate_density(lam * r + (1.0 - lam) * sigma.matrix());
        theta = pack(start.power(0.5));
        value = objective(theta, &res.state);
    }
    if (!std::isfinite(value)) return res;

    const Index n = theta.size();
    auto gradient = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) {
        grad.resize(n);
        for (Index k = 0; k < n; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(t(k)));
            Eigen::VectorXd tp = t, tm = t;
            tp(k) += h;
            tm(k) -= h;
            const double fp = objective(tp, nullptr), fm = objective(tm, nullptr);
            if (!std::isfinite(fp) || !std::isfinite(fm)) return false;
            grad(k) = (fp - fm) / (2.0 * h);
        }
        return true;
    };

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd grad;
    bool fresh = true;
    if (gradient(theta, grad)) {
        for (int iter = 0; iter < opts.max_iters; ++iter) {
            Eigen::VectorXd p = h_inv * grad;
            if (grad.dot(p) <= 0.0) {
                h_inv.setIdentity();
                p = grad;
                fresh = true;
            }
            double alpha = 1.0;
            if (fresh) alpha = std::min(1.0, 0.1 * theta.norm() / std::max(p.norm(), 1e-300));
            const double slope = grad.dot(p);
            Eigen::VectorXd next;
            double next_value = std::numeric_limits<double>::quiet_NaN();
            Matrix next_state;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                next = theta + alpha * p;
                next_value = objective(next, &next_state);
                if (std::isfinite(next_value) && next_value >= value + 1e-4 * alpha * slope) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                if (fresh) break;
                h_inv.setIdentity();
                fresh = true;
                continue;
            }
            Eigen::VectorXd next_grad;
            const double gain = next_value - value;
            const Eigen::VectorXd s = next - theta;
            theta = next;
            value = next_value;
            res.state = next_state;
            if (gain < opts.step_tol || !gradient(theta, next_grad)) break;
            // BFGS update of the inverse Hessian of −ratio
            const Eigen::VectorXd y = grad - next_grad;
            const double sy = s.dot(y);
            if (sy > 1e-14) {
                const double rho = 1.0 / sy;
                const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
                h_inv = (id - rho * s * y.transpose()) * h_inv * (id - rho * y * s.transpose()) +
                        rho * s * s.transpose();
                fresh = false;
            }
            grad = next_grad;
        }
    }
    res.valid = true;
    res.value = value;
    return res;
}

}  // namespace detail

/// Multistart lower-bound estimate of sup_ρ D(E(ρ)‖E(σ))/D(ρ‖σ). Restart i draws from
/// its own RNG stream seeded by (seed, i); the best restart wins, ties go to the lowest i.
inline SdpiEstimate sdpi_variational(const DivergenceEvaluator& eval, const QuantumChannel& e,
                                     const DensityMatrix& sigma,
                                     const VariationalOptions& opts = {}) {
    detail::require_full_rank(sigma, "reference state");
    if (sigma.dim() != e.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "state dimension does not match channel");
    }
    if (opts.restarts < 1) {
        throw Error(ErrorCode::ParameterOutOfRange, "at least one restart is required");
    }
    const DensityMatrix e_sigma = apply(e, sigma);
    detail::require_full_rank(e_sigma, "E(σ)");

    std::vector<detail::RestartResult> results(static_cast<std::size_t>(opts.restarts));
    detail::parallel_for(opts.restarts, detail::worker_count(opts.threads, opts.restarts),
                         [&](int i) {
                             results[static_cast<std::size_t>(i)] =
                                 detail::variational_restart(eval, e, sigma, e_sigma, opts, i);
                         });

    SdpiEstimate est;
    est.method = SdpiMethod::Variational;
    est.restarts_used = opts.restarts;
    int best = -1;
    for (int i = 0; i < opts.restarts; ++i) {
        const auto& r = results[static_cast<std::size_t>(i)];
        if (!r.valid) continue;
        ++est.valid_restarts;
        if (best < 0 || r.value > results[static_cast<std::size_t>(best)].value) best = i;
    }
    if (best < 0) {
        throw Error(ErrorCode::AllRestartsDegenerate, "every restart collapsed onto σ");
    }
    const auto& winner = results[static_cast<std::size_t>(best)];
    est.value = std::max(winner.value, 0.0);
    est.argmax_state = validate_density(winner.state);
    return est;
}

// ---- detailed balance ----

/// ‖Ω⁻¹E* − EΩ⁻¹‖_F / ‖Ω⁻¹‖_F. Accepts the GNS weight.
inline double detailed_balance_residual(const QuantumChannel& e, const DensityMatrix& sigma,
                                        const StandardMonotoneFn& g) {
    const OmegaOperator om = omega(sigma, g);
    const Matrix& inv = om.inverse.matrix();
    const Matrix& s = e.superop().matrix();
    return (inv * s.adjoint() - s * inv).norm() / inv.norm();
}

struct CarlenMaasReport {
    double gns_residual = 0.0;
    std::map<std::string, double> residuals;  // catalog g → residual
    bool gns_balanced = false;                // GNS residual ≤ 1e-9
    bool implication_holds = true;            // GNS balanced ⇒ every g residual ≤ 1e-7
};

inline CarlenMaasReport carlen_maas_check(const QuantumChannel& e, const DensityMatrix& sigma) {
    CarlenMaasReport r;
    r.gns_residual = detailed_balance_residual(e, sigma, gns_weight());
    r.gns_balanced = r.gns_residual <= 1e-9;
    for (const auto& g : g_catalog()) {
        const double res = detailed_balance_residual(e, sigma, g);
        r.residuals[g.name] = res;
        if (r.gns_balanced && res > 1e-7) r.implication_holds = false;
    }
    return r;
}

struct SubmultiplicativityCheck {
    bool holds = false;
    bool strict = false;  // power coefficient below the n-th power by more than 1e-8
    double power_coefficient = 0.0;  // η(E^n)
    double coefficient_power = 0.0;  // η(E)^n
};

inline SubmultiplicativityCheck sdpi_submultiplicativity_check(const QuantumChannel& e,
                                                               const DensityMatrix& sigma,
                                                               const StandardMonotoneFn& g,
                                                               int n) {
    const DensityMatrix out = apply(e, sigma);
    if (schatten_norm(HermitianMatrix(out.matrix() - sigma.matrix()), 1.0) > 1e-7) {
        throw Error(ErrorCode::InvalidArgument, "reference state is not a fixed point");
    }
    SubmultiplicativityCheck c;
    c.power_coefficient = sdpi_chi2(channel_power(e, n), sigma, g).value;
    c.coefficient_power = std::pow(sdpi_chi2(e, sigma, g).value, n);
    c.holds = c.power_coefficient <= c.coefficient_power + 1e-8;
    c.strict = c.power_coefficient < c.coefficient_power - 1e-8;
    return c;
}

// ---- contraction-rate experiment ----

struct ExperimentOptions {
    VariationalOptions variational;
    double slack = 0.02;
    int n0_samples = 100;
    double db_tol = 1e-9;
    double tightness_rel_tol = 1e-7;
};

struct FamilyEta {
    std::string family;
    std::string f_name;
    double eta = 0.0;   // variational η_f(E^n, π)
    double root = 0.0;  // η^{1/n}
};

struct Chi2Entry {
    std::string g_name;
    double eta_power = 0.0;  // η_{χ²_g}(E^n, π)
    double bound = 0.0;      // η_{χ²_g}(E, π)
    double db_residual = 0.0;  // residual of E^n
};

struct ExperimentRow {
    int n = 0;
    std::vector<FamilyEta> etas;
    std::vector<Chi2Entry> chi2;
};

struct Violation {
    int n = 0;
    std::string family, f_name, g_name;
    double lhs = 0.0, rhs = 0.0;
};

struct TightnessVerdict {
    std::string family, f_name, kappa_name;
    double kappa_residual = 0.0;
    bool applicable = false;     // residual ≤ db_tol
    bool power_equality = true;  // η_κ(E^n) = η_κ(E)^n
    bool lower_bound = true;     // η_f(E^n) ≥ η_κ(E)^n − slack
    std::vector<Violation> violations;
};

struct ExperimentReport {
    std::string channel_label;
    DensityMatrix pi;
    int n0 = 0;  // first n with every sampled iterate inside the local radius
    double spectral_gap = 0.0;
    std::vector<ExperimentRow> rows;
    bool rate_verdict = true;  // η_f(E^n)^{1/n} ≤ η_g(E) + slack for n ≥ n0
    std::vector<Violation> rate_violations;
    std::vector<TightnessVerdict> tightness;
};

/// Smallest n ≤ n_max with max over seeded states ‖E^n(ρ) − π‖_∞ < λ_min(π)/2, or n_max + 1.
inline int local_regime_start(const QuantumChannel& e, const DensityMatrix& pi, int n_max,
                              int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Matrix> states;
    for (int k = 0; k < samples; ++k) {
        const Matrix g = detail::random_ginibre(e.dim(), rng);
        Matrix r = g * g.adjoint();
        states.push_back(r / r.trace().real());
    }
    const double radius = pi.lambda_min() / 2.0;
    for (int n = 1; n <= n_max; ++n) {
        double worst = 0.0;
        for (auto& s : states) {
            s = e.apply_operator(s);
            worst = std::max(worst, schatten_norm(HermitianMatrix(s - pi.matrix()), schatten_infinity));
        }
        if (worst < radius) return n;
    }
    return n_max + 1;
}

inline ExperimentReport contraction_experiment(const QuantumChannel& e,
                                               const std::vector<FDivergenceSpec>& families,
                                               const std::vector<StandardMonotoneFn>& gs,
                                               int n_max, const ExperimentOptions& opts = {}) {
    if (n_max < 1) throw Error(ErrorCode::ParameterOutOfRange, "n_max must be at least 1");
    const PrimitivityReport prim = is_primitive(e);
    if (!prim.is_primitive) throw Error(ErrorCode::NotPrimitive, "channel is not primitive");

    ExperimentReport rep;
    rep.channel_label = e.label();
    rep.pi = fixed_point(e);
    rep.spectral_gap = prim.spectral_gap;
    rep.n0 = local_regime_start(e, rep.pi, n_max, opts.n0_samples, opts.variational.seed);

    std::vector<double> bounds;
    for (const auto& g : gs) bounds.push_back(sdpi_chi2(e, rep.pi, g).value);

    std::vector<DivergenceEvaluator> evals;
    for (const auto& spec : families) evals.push_back(make_evaluator(spec));

    for (int n = 1; n <= n_max; ++n) {
        const QuantumChannel en = channel_power(e, n);
        ExperimentRow row;
        row.n = n;
        for (std::size_t k = 0; k < families.size(); ++k) {
            const double eta = sdpi_variational(evals[k], en, rep.pi, opts.variational).value;
            row.etas.push_back({std::string(to_string(families[k].family)), families[k].name, eta,
                                std::pow(eta, 1.0 / n)});
        }
        for (std::size_t j = 0; j < gs.size(); ++j) {
            row.chi2.push_back({gs[j].name, sdpi_chi2(en, rep.pi, gs[j]).value, bounds[j],
                                detailed_balance_residual(en, rep.pi, gs[j])});
        }
        if (n >= rep.n0) {
            for (const auto& fe : row.etas) {
                for (std::size_t j = 0; j < gs.size(); ++j) {
                    if (fe.root > bounds[j] + opts.slack) {
                        rep.rate_verdict = false;
                        rep.rate_violations.push_back(
                            {n, fe.family, fe.f_name, gs[j].name, fe.root, bounds[j] + opts.slack});
                    }
                }
            }
        }
        rep.rows.push_back(std::move(row));
    }

    for (std::size_t k = 0; k < families.size(); ++k) {
        TightnessVerdict tv;
        tv.family = std::string(to_string(families[k].family));
        tv.f_name = families[k].name;
        const StandardMonotoneFn kappa = local_kappa(families[k]);
        tv.kappa_name = kappa.name;
        tv.kappa_residual = detailed_balance_residual(e, rep.pi, kappa);
        tv.applicable = tv.kappa_residual <= opts.db_tol;
        if (tv.applicable) {
            const double base = sdpi_chi2(e, rep.pi, kappa).value;
            for (const auto& row : rep.rows) {
                const double expected = std::pow(base, row.n);
                const double got = sdpi_chi2(channel_power(e, row.n), rep.pi, kappa).value;
                if (std::abs(got - expected) > opts.tightness_rel_tol * std::abs(expected) + 1e-14) {
                    tv.power_equality = false;
                    tv.violations.push_back({row.n, tv.family, tv.f_name, kappa.name, got, expected});
                }
                const double eta = row.etas[k].eta;
                if (eta < expected - opts.slack) {
                    tv.lower_bound = false;
                    tv.violations.push_back({row.n, tv.family, tv.f_name, kappa.name, eta, expected});
                }
            }
        }
        rep.tightness.push_back(std::move(tv));
    }
    return rep;
}

}  // namespace qcontract

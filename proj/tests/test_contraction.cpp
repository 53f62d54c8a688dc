#include "support.hpp"

#include <gtest/gtest.h>

using namespace qcontract;
using qtest::random_state;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

RealMatrix chain(double a, double b) {
    RealMatrix w(2, 2);
    w << 1 - a, b, a, 1 - b;
    return w;
}

DensityMatrix diag_state(double a) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = 1 - a;
    return validate_density(m);
}

VariationalOptions quick(int restarts = 32) {
    VariationalOptions o;
    o.restarts = restarts;
    return o;
}

// primitive channels with their fixed point as reference state
std::vector<QuantumChannel> fixed_point_fixtures() {
    return {depolarizing(0.5),
            amplitude_damping(0.3, 0.2),
            embedded_classical(chain(0.2, 0.4)),
            pauli_channel({0.7, 0.1, 0.15, 0.05}),
            random_channel(2, 4, 7),
            random_channel(2, 4, 11),
            random_channel(2, 2, 3),
            random_channel(3, 2, 5)};
}

}  // namespace

// ---- Ω_σ^g ----

TEST(Omega, MaximallyMixedIsScaledIdentity) {
    for (Index d : {2, 3}) {
        for (const auto& g : g_catalog()) {
            const OmegaOperator om = omega(maximally_mixed(d), g);
            const Matrix expect = double(d) * Matrix::Identity(d * d, d * d);
            EXPECT_LE((om.forward.matrix() - expect).norm(), 1e-12) << g.name;
        }
    }
}

TEST(Omega, MatchesClosedForms) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const DensityMatrix sigma = random_state(trial % 2 ? 3 : 2, rng);
        for (const auto& g : g_catalog()) {
            const Matrix oracle = qtest::omega_oracle(sigma.matrix(), g.name);
            const Matrix got = omega(sigma, g).forward.matrix();
            EXPECT_LE((got - oracle).norm(), 1e-8 * oracle.norm()) << g.name;
        }
        const Matrix gns = qtest::omega_oracle(sigma.matrix(), "gns");
        EXPECT_LE((omega(sigma, gns_weight()).forward.matrix() - gns).norm(), 1e-9 * gns.norm());
    }
}

TEST(Omega, InverseAndSquareRoots) {
    std::mt19937_64 rng(42);
    const DensityMatrix sigma = random_state(3, rng);
    for (const auto& g : g_catalog()) {
        const OmegaOperator om = omega(sigma, g);
        const Index n = 9;
        EXPECT_LE((om.inverse.matrix() * om.forward.matrix() - Matrix::Identity(n, n)).norm(), 1e-9);
        EXPECT_LE((om.sqrt.matrix() * om.sqrt.matrix() - om.forward.matrix()).norm(),
                  1e-9 * om.forward.matrix().norm());
        EXPECT_LE((om.inv_sqrt.matrix() * om.sqrt.matrix() - Matrix::Identity(n, n)).norm(), 1e-9);
        EXPECT_GT(om.weights.minCoeff(), 0.0);
    }
}

TEST(Omega, SelfAdjoint) {
    std::mt19937_64 rng(43);
    const DensityMatrix sigma = random_state(3, rng);
    for (const auto& g : g_catalog()) {
        const OmegaOperator om = omega(sigma, g);
        for (int k = 0; k < 5; ++k) {
            const Matrix x = qtest::random_hermitian(3, rng), y = qtest::random_hermitian(3, rng);
            const Complex lhs = hs_inner(x, om.forward.apply(y));
            const Complex rhs = hs_inner(om.forward.apply(x), y);
            EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::abs(lhs));
        }
    }
}

TEST(Omega, QuadraticFormIsChi2Max) {
    std::mt19937_64 rng(44);
    const DensityMatrix sigma = maximally_mixed(2);
    const OmegaOperator om = omega(sigma, g_max());
    for (int k = 0; k < 10; ++k) {
        const DensityMatrix rho = random_state(2, rng);
        const Matrix x = rho.matrix() - sigma.matrix();
        const double quad = hs_inner(x, om.forward.apply(x)).real();
        EXPECT_NEAR(quad, chi2_max(rho, sigma).value, 1e-12);
    }
}

TEST(Omega, RejectsSingularReference) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    const DensityMatrix pure = validate_density(m);
    EXPECT_EQ(code_of([&] { omega(pure, g_max()); }), ErrorCode::SingularReference);
}

// ---- exact χ²_g SDPI constant ----

TEST(SdpiChi2, IdentityChannelIsOne) {
    std::mt19937_64 rng(50);
    for (const auto& g : g_catalog()) {
        const DensityMatrix sigma = random_state(2, rng);
        EXPECT_NEAR(sdpi_chi2(identity_channel(2), sigma, g).value, 1.0, 1e-12) << g.name;
    }
}

TEST(SdpiChi2, ReplacerIsZero) {
    std::mt19937_64 rng(51);
    const DensityMatrix sigma = random_state(3, rng);
    for (const auto& g : g_catalog()) {
        const SdpiEstimate est = sdpi_chi2(replacer_channel(sigma), sigma, g);
        EXPECT_LE(est.value, 1e-12) << g.name;
        EXPECT_TRUE(est.reference_fixed);
    }
}

TEST(SdpiChi2, DepolarizingIsSquaredContraction) {
    for (double p : {0.25, 0.5, 0.75}) {
        for (const auto& g : g_catalog()) {
            EXPECT_NEAR(sdpi_chi2(depolarizing(p), maximally_mixed(2), g).value, (1 - p) * (1 - p), 1e-9);
        }
    }
}

TEST(SdpiChi2, EmbeddedReversibleChain) {
    for (const auto& g : g_catalog()) {
        EXPECT_NEAR(sdpi_chi2(embedded_classical(chain(0.3, 0.3)), maximally_mixed(2), g).value, 0.16,
                    1e-9);
    }
    // non-uniform reversible chain: λ₂ = 1 − a − b, π = (b, a)/(a+b)
    const SdpiEstimate est = sdpi_chi2(embedded_classical(chain(0.2, 0.4)), diag_state(2.0 / 3.0), g_kmb());
    EXPECT_NEAR(est.value, 0.16, 1e-9);
}

TEST(SdpiChi2, MatchesNonHermitianEigensolve) {
    for (const auto& e : fixed_point_fixtures()) {
        const DensityMatrix pi = fixed_point(e);
        for (const auto& g : g_catalog()) {
            const auto ev = qtest::contraction_spectrum(e.superop().matrix(), qtest::omega_oracle(pi.matrix(), g.name));
            const SdpiEstimate est = sdpi_chi2(e, pi, g);
            EXPECT_NEAR(ev[0], 1.0, 1e-7) << e.label() << " " << g.name;
            EXPECT_NEAR(est.value, ev[1], 1e-7) << e.label() << " " << g.name;
        }
    }
}

TEST(SdpiChi2, TopSingularValueAndSpectrum) {
    for (const auto& e : fixed_point_fixtures()) {
        const DensityMatrix pi = fixed_point(e);
        for (const auto& g : g_catalog()) {
            const SdpiEstimate est = sdpi_chi2(e, pi, g);
            EXPECT_TRUE(est.reference_fixed);
            EXPECT_NEAR(est.top_eigenvalue_check, 1.0, 1e-7) << e.label() << " " << g.name;
            EXPECT_GE(est.value, 0.0);
            EXPECT_LE(est.value, 1.0);

            const OmegaOperator om = omega(pi, g);
            const Matrix n = om.sqrt.matrix() * e.superop().matrix() * om.inv_sqrt.matrix();
            Eigen::SelfAdjointEigenSolver<Matrix> herm(n.adjoint() * n);
            EXPECT_GE(herm.eigenvalues().minCoeff(), -1e-9);
            EXPECT_LE(herm.eigenvalues().maxCoeff(), 1.0 + 1e-9);
        }
    }
}

TEST(SdpiChi2, GeneralizedRatioBoundForNonFixedReference) {
    // η bounds the χ²_g ratio with E(σ) as output reference, for any σ
    std::mt19937_64 rng(52);
    const QuantumChannel e = random_channel(2, 3, 19);
    const DensityMatrix sigma = random_state(2, rng);
    for (const auto& g : g_catalog()) {
        const SdpiEstimate est = sdpi_chi2(e, sigma, g);
        EXPECT_FALSE(est.reference_fixed);
        const DensityMatrix es = apply(e, sigma);
        for (int k = 0; k < 50; ++k) {
            const DensityMatrix rho = random_state(2, rng);
            const double ratio = chi2_g(apply(e, rho), es, g).value / chi2_g(rho, sigma, g).value;
            EXPECT_LE(ratio, est.value + 1e-9);
        }
    }
}

TEST(SdpiChi2, Errors) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    const DensityMatrix pure = validate_density(m);
    EXPECT_EQ(code_of([&] { sdpi_chi2(depolarizing(0.5), pure, g_max()); }), ErrorCode::SingularReference);
    // replacing with a pure state makes E(σ) singular
    const QuantumChannel to_ground = replacer_channel(pure);
    EXPECT_EQ(code_of([&] { sdpi_chi2(to_ground, maximally_mixed(2), g_max()); }),
              ErrorCode::SingularReference);
}

// ---- variational search ----

TEST(Variational, IdentityChannelAttainsOne) {
    const SdpiEstimate est = sdpi_variational(make_evaluator(f_kl()), identity_channel(2), maximally_mixed(2), quick(8));
    EXPECT_GE(est.value, 1.0 - 1e-6);
    EXPECT_EQ(est.method, SdpiMethod::Variational);
    EXPECT_TRUE(est.argmax_state.has_value());
}

TEST(Variational, Chi2OnDepolarizing) {
    const SdpiEstimate est =
        sdpi_variational(make_chi2_evaluator(g_kmb()), depolarizing(0.5), maximally_mixed(2), quick());
    EXPECT_GE(est.value, 0.25 - 1e-3);
    EXPECT_LE(est.value, 0.25 + 1e-6);
    EXPECT_EQ(est.restarts_used, 32);
    EXPECT_GT(est.valid_restarts, 0);
}

TEST(Variational, CompletelyDepolarizingIsZero) {
    const SdpiEstimate est =
        sdpi_variational(make_evaluator(f_kl()), depolarizing(1.0), maximally_mixed(2), quick(8));
    EXPECT_LE(est.value, 1e-8);
}

TEST(Variational, DeterministicAcrossThreadCounts) {
    const QuantumChannel e = random_channel(2, 4, 7);
    const DensityMatrix pi = fixed_point(e);
    VariationalOptions one = quick(12), many = quick(12);
    one.threads = 1;
    many.threads = 4;
    const auto eval = make_evaluator(f_hellinger().with_family(Family::Matsumoto));
    const SdpiEstimate a = sdpi_variational(eval, e, pi, one);
    const SdpiEstimate b = sdpi_variational(eval, e, pi, many);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ((a.argmax_state->matrix() - b.argmax_state->matrix()).norm(), 0.0);
    VariationalOptions other = quick(12);
    other.seed = 99;
    EXPECT_GT(sdpi_variational(eval, e, pi, other).value, 0.0);
}

TEST(Variational, AllRestartsDegenerate) {
    VariationalOptions o = quick(4);
    o.exclusion = 2.0;  // every state lies within trace distance 2 of σ
    EXPECT_EQ(code_of([&] {
                  sdpi_variational(make_evaluator(f_kl()), depolarizing(0.5), maximally_mixed(2), o);
              }),
              ErrorCode::AllRestartsDegenerate);
}

TEST(Variational, ExactConstantConsistency) {
    // ten (channel, g) pairs with σ = π
    const std::vector<QuantumChannel> channels = {random_channel(2, 4, 7), random_channel(2, 4, 11),
                                                  random_channel(2, 2, 3), amplitude_damping(0.3, 0.2),
                                                  random_channel(2, 3, 19)};
    const std::vector<StandardMonotoneFn> gs = {g_max(), g_kmb()};
    int fixtures = 0;
    for (const auto& e : channels) {
        const DensityMatrix pi = fixed_point(e);
        for (const auto& g : gs) {
            const double exact = sdpi_chi2(e, pi, g).value;
            const double var = sdpi_variational(make_chi2_evaluator(g), e, pi, quick()).value;
            EXPECT_LE(var, exact + 1e-6) << e.label() << " " << g.name;
            EXPECT_GE(var, exact - 1e-2) << e.label() << " " << g.name;
            ++fixtures;
        }
    }
    EXPECT_EQ(fixtures, 10);
}

TEST(Variational, LocalChi2LowerBound) {
    for (const auto& e : {random_channel(2, 4, 7), random_channel(2, 4, 11), amplitude_damping(0.3, 0.2)}) {
        const DensityMatrix pi = fixed_point(e);
        for (Family fam : all_families()) {
            for (const auto& f : f_catalog()) {
                const FDivergenceSpec spec = f.with_family(fam);
                const double local = sdpi_chi2(e, pi, local_kappa(spec)).value;
                const double var = sdpi_variational(make_evaluator(spec), e, pi, quick()).value;
                EXPECT_GE(var, local - 1e-2) << e.label() << " " << to_string(fam) << " " << f.name;
                EXPECT_LE(var, 1.0 + 1e-8);
            }
        }
    }
}

TEST(Variational, Errors) {
    EXPECT_EQ(code_of([&] {
                  sdpi_variational(make_evaluator(f_kl()), depolarizing(0.5, 3), maximally_mixed(2));
              }),
              ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([&] {
                  sdpi_variational(make_evaluator(f_kl()), depolarizing(0.5), maximally_mixed(2), quick(0));
              }),
              ErrorCode::ParameterOutOfRange);
}

// ---- detailed balance ----

TEST(DetailedBalance, PauliChannel) {
    const QuantumChannel e = pauli_channel({0.6, 0.2, 0.15, 0.05});
    for (const auto& g : g_catalog()) EXPECT_LE(detailed_balance_residual(e, maximally_mixed(2), g), 1e-10);
    EXPECT_LE(detailed_balance_residual(e, maximally_mixed(2), gns_weight()), 1e-10);
}

TEST(DetailedBalance, ReversibleChain) {
    const QuantumChannel e = embedded_classical(chain(0.2, 0.4));
    const DensityMatrix pi = diag_state(2.0 / 3.0);
    for (const auto& g : g_catalog()) EXPECT_LE(detailed_balance_residual(e, pi, g), 1e-10) << g.name;
}

TEST(DetailedBalance, RandomChannelIsNotBalanced) {
    const QuantumChannel e = random_channel(2, 4, 7);
    const double r = detailed_balance_residual(e, fixed_point(e), g_max());
    EXPECT_GT(r, 1e-3);
    EXPECT_NEAR(r, 0.215448461799496, 1e-9);  // pinned
}

TEST(DetailedBalance, MatchesOracleOmega) {
    // ‖Ω⁻¹E* − EΩ⁻¹‖_F/‖Ω⁻¹‖_F with Ω from the closed forms
    for (const auto& e : fixed_point_fixtures()) {
        const DensityMatrix pi = fixed_point(e);
        for (const auto& g : g_catalog()) {
            const Matrix inv = qtest::omega_oracle(pi.matrix(), g.name).inverse();
            const Matrix& s = e.superop().matrix();
            const double oracle = (inv * s.adjoint() - s * inv).norm() / inv.norm();
            EXPECT_NEAR(detailed_balance_residual(e, pi, g), oracle, 1e-8) << e.label() << " " << g.name;
        }
    }
}

// ---- Carlen–Maas ----

TEST(CarlenMaas, BalancedFixtures) {
    const std::vector<std::pair<QuantumChannel, DensityMatrix>> fixtures = {
        {embedded_classical(chain(0.3, 0.3)), maximally_mixed(2)},
        {embedded_classical(chain(0.2, 0.4)), diag_state(2.0 / 3.0)},
        {pauli_channel({0.7, 0.1, 0.15, 0.05}), maximally_mixed(2)},
        {amplitude_damping(0.3, 0.2), diag_state(0.8)}};
    for (const auto& [e, sigma] : fixtures) {
        const CarlenMaasReport r = carlen_maas_check(e, sigma);
        EXPECT_TRUE(r.gns_balanced) << e.label();
        EXPECT_TRUE(r.implication_holds) << e.label();
        EXPECT_EQ(r.residuals.size(), g_catalog().size());
        for (const auto& [name, res] : r.residuals) EXPECT_LE(res, 1e-9) << e.label() << " " << name;
    }
}

TEST(CarlenMaas, NonBalancedRandomChannel) {
    const QuantumChannel e = random_channel(2, 4, 7);
    const CarlenMaasReport r = carlen_maas_check(e, fixed_point(e));
    EXPECT_FALSE(r.gns_balanced);
    EXPECT_TRUE(r.implication_holds);
    EXPECT_NEAR(r.gns_residual, 0.209011870917694, 1e-9);  // pinned
    EXPECT_GT(r.residuals.at("max"), 1e-3);
    EXPECT_GT(r.residuals.at("kmb"), 1e-3);
}

// ---- submultiplicativity ----

TEST(Submultiplicativity, DepolarizingEquality) {
    for (int n = 1; n <= 5; ++n) {
        const auto c = sdpi_submultiplicativity_check(depolarizing(0.5), maximally_mixed(2), g_max(), n);
        EXPECT_TRUE(c.holds);
        EXPECT_FALSE(c.strict);
        EXPECT_NEAR(c.power_coefficient, std::pow(0.25, n), 1e-9);
    }
}

TEST(Submultiplicativity, IdentityChannel) {
    const auto c = sdpi_submultiplicativity_check(identity_channel(2), maximally_mixed(2), g_kmb(), 4);
    EXPECT_TRUE(c.holds);
    EXPECT_NEAR(c.power_coefficient, 1.0, 1e-12);
}

TEST(Submultiplicativity, RandomChannelStrict) {
    const QuantumChannel e = random_channel(2, 4, 11);
    const auto c = sdpi_submultiplicativity_check(e, fixed_point(e), g_max(), 3);
    EXPECT_TRUE(c.holds);
    EXPECT_TRUE(c.strict);
    EXPECT_NEAR(c.power_coefficient, 0.00412514566321068, 1e-10);  // pinned
    EXPECT_NEAR(c.coefficient_power, 0.00867070111123423, 1e-10);  // pinned
}

TEST(Submultiplicativity, RequiresFixedReference) {
    EXPECT_EQ(code_of([&] {
                  sdpi_submultiplicativity_check(amplitude_damping(0.3, 0.2), maximally_mixed(2), g_max(), 2);
              }),
              ErrorCode::InvalidArgument);
}

TEST(DetailedBalance, ImpliesPowerTightness) {
    const std::vector<QuantumChannel> balanced = {pauli_channel({0.7, 0.1, 0.15, 0.05}),
                                                  embedded_classical(chain(0.2, 0.4)),
                                                  amplitude_damping(0.3, 0.2), depolarizing(0.4)};
    for (const auto& e : balanced) {
        const DensityMatrix pi = fixed_point(e);
        for (const auto& g : g_catalog()) {
            ASSERT_LE(detailed_balance_residual(e, pi, g), 1e-9);
            const double base = sdpi_chi2(e, pi, g).value;
            for (int n = 1; n <= 8; ++n) {
                const double expected = std::pow(base, n);
                EXPECT_NEAR(sdpi_chi2(channel_power(e, n), pi, g).value, expected, 1e-7 * expected + 1e-14)
                    << e.label() << " " << g.name << " n=" << n;
            }
        }
    }
}

// ---- contraction experiment ----

TEST(Experiment, DepolarizingAllFamilies) {
    std::vector<FDivergenceSpec> fams;
    for (Family fam : all_families()) fams.push_back(f_kl().with_family(fam));
    ExperimentOptions opts;
    opts.variational.restarts = 16;
    const ExperimentReport rep = contraction_experiment(depolarizing(0.5), fams, g_catalog(), 6, opts);
    ASSERT_EQ(rep.rows.size(), 6u);
    for (const auto& row : rep.rows) {
        for (const auto& c : row.chi2) EXPECT_NEAR(c.eta_power, std::pow(0.25, row.n), 1e-9);
        for (const auto& e : row.etas) {
            EXPECT_LE(e.eta, 1.0 + 1e-8);
            if (row.n >= 3) {
                EXPECT_GE(e.root, 0.25 - 0.02) << e.family << " n=" << row.n;
                EXPECT_LE(e.root, 0.25 + 1e-6) << e.family << " n=" << row.n;
            }
        }
    }
    EXPECT_TRUE(rep.rate_verdict);
    for (const auto& t : rep.tightness) {
        EXPECT_TRUE(t.applicable);
        EXPECT_TRUE(t.power_equality && t.lower_bound) << t.family;
    }
}

TEST(Experiment, ReversibleChainTightness) {
    const std::vector<FDivergenceSpec> fams = {f_kl().with_family(Family::HT), f_chi2().with_family(Family::Petz),
                                               f_hellinger().with_family(Family::Matsumoto)};
    ExperimentOptions opts;
    opts.variational.restarts = 8;
    const ExperimentReport rep =
        contraction_experiment(embedded_classical(chain(0.3, 0.3)), fams, g_catalog(), 4, opts);
    for (const auto& row : rep.rows) {
        for (const auto& c : row.chi2) EXPECT_NEAR(c.eta_power, std::pow(0.16, row.n), 1e-9);
    }
    for (const auto& t : rep.tightness) {
        EXPECT_TRUE(t.applicable) << t.family;
        EXPECT_TRUE(t.power_equality) << t.family;
        EXPECT_TRUE(t.lower_bound) << t.family;
    }
}

TEST(Experiment, NonBalancedRandomChannel) {
    const std::vector<FDivergenceSpec> fams = {f_kl().with_family(Family::HT)};
    ExperimentOptions opts;
    opts.variational.restarts = 8;
    const ExperimentReport rep = contraction_experiment(random_channel(2, 4, 7), fams, {g_max()}, 4, opts);
    EXPECT_EQ(rep.n0, 2);
    EXPECT_TRUE(rep.rate_verdict);
    ASSERT_EQ(rep.tightness.size(), 1u);
    EXPECT_FALSE(rep.tightness[0].applicable);
    EXPECT_GT(rep.tightness[0].kappa_residual, 1e-3);
}

TEST(Experiment, DeterministicReports) {
    const std::vector<FDivergenceSpec> fams = {f_chi2().with_family(Family::Matsumoto)};
    ExperimentOptions opts;
    opts.variational.restarts = 6;
    const QuantumChannel e = random_channel(2, 4, 11);
    const ExperimentReport a = contraction_experiment(e, fams, g_catalog(), 3, opts);
    const ExperimentReport b = contraction_experiment(e, fams, g_catalog(), 3, opts);
    EXPECT_EQ(to_json(a, 0.02).dump(), to_json(b, 0.02).dump());
}

TEST(Experiment, Errors) {
    const std::vector<FDivergenceSpec> fams = {f_kl()};
    EXPECT_EQ(code_of([&] { contraction_experiment(unitary_channel(detail::pauli(1)), fams, {g_max()}, 3); }),
              ErrorCode::NotPrimitive);
    EXPECT_EQ(code_of([&] { contraction_experiment(depolarizing(0.5), fams, {g_max()}, 0); }),
              ErrorCode::ParameterOutOfRange);
}

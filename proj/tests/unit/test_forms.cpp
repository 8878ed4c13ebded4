#include "lagmc/error.hpp"
#include "lagmc/forms.hpp"
#include "lagmc/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace lagmc;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> random_positive(CounterRng& rng, int n) {
    std::vector<double> a(static_cast<std::size_t>(n));
    for (auto& x : a) x = std::pow(10.0, rng.uniform(-2.0, 2.0));
    return a;
}

double delta_u(const Spectrum& s) { return std::accumulate(s.values().begin(), s.values().end(), 0.0); }

}  // namespace

TEST(LambdaMatrix, Examples) {
    std::vector<double> a{5, 5, 5};
    Matrix m = build_lambda_matrix(a, 1.25);
    EXPECT_DOUBLE_EQ(m(0, 0), 3.75);
    EXPECT_DOUBLE_EQ(m(0, 1), -1.25);
    std::vector<double> one{2.0};
    EXPECT_DOUBLE_EQ(build_lambda_matrix(one, 0.5)(0, 0), 1.5);
    std::vector<double> bad{1.0, 0.0};
    EXPECT_THROW(build_lambda_matrix(bad, 1.0), InvalidArgument);
}

TEST(LambdaMatrix, EqualsDiagonalMinusRankOne) {
    for (int t = 0; t < 200; ++t) {
        CounterRng rng(21, 1, static_cast<std::uint64_t>(t));
        auto a = random_positive(rng, 4);
        const double c = rng.uniform(0.1, 2.0);
        Matrix ref = -c * Matrix::Ones(4, 4);
        for (int i = 0; i < 4; ++i) ref(i, i) += a[static_cast<std::size_t>(i)];
        EXPECT_LE((build_lambda_matrix(a, c) - ref).cwiseAbs().maxCoeff(), 1e-12 * 100);
    }
}

TEST(RankOne, Examples) {
    std::vector<double> five{5, 5, 5}, ones{1, 1, 1}, edge{3.75, 3.75, 3.75};
    auto c1 = rank_one_psd(five, 1.25);
    EXPECT_TRUE(c1.psd);
    EXPECT_NEAR(c1.criterion_value, 0.75, 1e-15);
    EXPECT_GE(c1.min_eigenvalue, 0.0);
    EXPECT_TRUE(c1.oracle_agrees);
    auto c2 = rank_one_psd(ones, 1.25);
    EXPECT_FALSE(c2.psd);
    EXPECT_LT(c2.min_eigenvalue, 0.0);
    EXPECT_TRUE(c2.oracle_agrees);
    auto c3 = rank_one_psd(edge, 1.25);
    EXPECT_TRUE(c3.psd);
    EXPECT_NEAR(c3.min_eigenvalue, 0.0, 1e-9);
    EXPECT_TRUE(c3.oracle_agrees);
}

TEST(QformMinEig, Examples) {
    std::vector<double> a{1, 1}, edge{3.75, 3.75, 3.75}, b{2, 3, 4};
    EXPECT_NEAR(qform_min_eig(a, 0.0), 1.0, 1e-15);
    EXPECT_NEAR(qform_min_eig(edge, 1.25), 0.0, 1e-9);
    EXPECT_LT(qform_min_eig(b, 1.25), 0.0);
    EXPECT_GT(1.25 * (0.5 + 1.0 / 3 + 0.25), 1.0);
}

TEST(RankOne, CriterionMatchesOracleOnRandomInputs) {
    int disagreements = 0;
    for (int t = 0; t < 20000; ++t) {
        CounterRng rng(22, 1, static_cast<std::uint64_t>(t));
        const int n = 2 + t % 5;
        const double coeff = (t / 5) % 2 ? 1.25 : 1.125;
        auto a = random_positive(rng, n);
        const double crit = 1.0 - coeff * std::accumulate(a.begin(), a.end(), 0.0, [](double s, double x) { return s + 1 / x; });
        if (std::abs(crit) <= 1e-7) continue;
        if ((crit > 0) != (qform_min_eig(a, coeff) > 0)) ++disagreements;
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(RankOne, QuadraticFormSemantics) {
    for (int t = 0; t < 200; ++t) {
        CounterRng rng(23, 1, static_cast<std::uint64_t>(t));
        const int n = 2 + t % 5;
        auto a = random_positive(rng, n);
        for (auto& x : a) x *= 10.0;
        auto c = rank_one_psd(a, 1.25);
        if (!c.psd) continue;
        const double amax = *std::max_element(a.begin(), a.end());
        for (int j = 0; j < 1000; ++j) {
            double q = 0.0, sum = 0.0, norm2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double x = rng.uniform(-1.0, 1.0);
                q += a[static_cast<std::size_t>(i)] * x * x;
                sum += x;
                norm2 += x * x;
            }
            q -= 1.25 * sum * sum;
            ASSERT_GE(q, -1e-9 * norm2 * amax);
        }
    }
}

TEST(RankOne, ScalingUpPreservesPsd) {
    for (int t = 0; t < 500; ++t) {
        CounterRng rng(24, 1, static_cast<std::uint64_t>(t));
        auto a = random_positive(rng, 2 + t % 4);
        auto c = rank_one_psd(a, 1.125);
        for (auto& x : a) x *= 1.7;
        auto d = rank_one_psd(a, 1.125);
        EXPECT_LT(d.criterion_value, c.criterion_value);
        if (c.psd) EXPECT_TRUE(d.psd);
    }
}

TEST(ConvexCases, Dispatch) {
    const double A3 = certified_A_convex(3);
    auto k = FormConstants::convex(3, A3);
    Spectrum s1{2, 2, 2};
    auto f1 = convex_case_coefficients(s1, 6.0, k);
    EXPECT_EQ(f1.case_id, FormCaseId::Convex1);
    EXPECT_TRUE(rank_one_psd(f1.a, f1.coeff).psd);

    Spectrum s2{10, 1, 1e-6};
    auto f2 = convex_case_coefficients(s2, delta_u(s2), k);
    EXPECT_EQ(f2.case_id, FormCaseId::Convex2);
    EXPECT_EQ(f2.split, 2);
    EXPECT_EQ(f2.a.size(), 3u);
    EXPECT_EQ(f2.a.back(), 18.0);
    EXPECT_TRUE(rank_one_psd(f2.a, f2.coeff).psd);

    Spectrum s3{1e-4, 1e-5, 0};
    auto f3 = convex_case_coefficients(s3, delta_u(s3), k);
    EXPECT_EQ(f3.case_id, FormCaseId::Convex3);
    EXPECT_TRUE(rank_one_psd(f3.a, f3.coeff).psd);

    EXPECT_THROW(convex_case_coefficients(Spectrum{1, -0.1}, 0.9, FormConstants::convex(2, 10)), InvalidArgument);
}

TEST(ConvexCases, DispatchIsTotalAndExclusive) {
    for (int t = 0; t < 5000; ++t) {
        CounterRng rng(25, 1, static_cast<std::uint64_t>(t));
        const int n = 2 + t % 4;
        std::vector<double> l(static_cast<std::size_t>(n));
        for (auto& x : l) x = std::pow(10.0, rng.uniform(-4.0, 2.0));
        Spectrum s(l);
        auto k = FormConstants::convex(n, 100);
        int hits = 0;
        hits += s.min() >= k.c_small;
        hits += s.min() < k.c_small && s.max() >= k.c_small;
        hits += s.max() < k.c_small;
        EXPECT_EQ(hits, 1);
        auto fc = convex_case_coefficients(s, delta_u(s), k);
        EXPECT_EQ(fc.case_id, convex_case_of(s, k));
        for (double a : fc.a) EXPECT_GT(a, 0.0);
    }
}

TEST(ConvexCases, Case3CertificateBoundsTheHyperplaneForm) {
    // The certificate in transformed variables must imply the original form
    // sum 2 lambda_i w g_i x_i^2 - coeff (sum x_i)^2 >= 0 on sum g_i x_i = 0.
    for (int t = 0; t < 2000; ++t) {
        CounterRng rng(26, 1, static_cast<std::uint64_t>(t));
        const int n = 2 + t % 4;
        auto k = FormConstants::convex(n, 3.0);
        std::vector<double> l(static_cast<std::size_t>(n));
        for (auto& x : l) x = k.c_small * std::pow(10.0, rng.uniform(-6.0, -1e-3));
        Spectrum s(l);
        const double w = k.A + delta_u(s);
        auto fc = convex_case_coefficients(s, delta_u(s), k);
        ASSERT_EQ(fc.case_id, FormCaseId::Convex3);
        ASSERT_TRUE(rank_one_psd(fc.a, fc.coeff).psd);
        std::vector<double> d(l.size()), g(l.size());
        for (std::size_t i = 0; i < l.size(); ++i) {
            g[i] = 1.0 / (1.0 + s[i] * s[i]);
            d[i] = 2.0 * s[i] * w * g[i];
        }
        const double dmax = *std::max_element(d.begin(), d.end());
        EXPECT_GE(constrained_form_min_eig(d, fc.coeff, g), -1e-9 * dmax);
    }
}

TEST(SupercriticalCases, Examples) {
    auto k = FormConstants::supercritical(3, 0.3, certified_A_supercritical(3, 0.3));
    Spectrum c{5, 2, -0.4};
    ASSERT_GT(lagrangian_angle(c), pi / 2 + 0.3);
    EXPECT_FALSE(supercritical_separated(c, k));
    auto fc = supercritical_case_coefficients(c, k);
    EXPECT_EQ(fc.case_id, FormCaseId::SuperClusteredGammaN);
    EXPECT_TRUE(rank_one_psd(fc.a, fc.coeff).psd);
    EXPECT_EQ(fc.coeff, 1.125);

    Spectrum s{1e4, 1e4, -1e-6};
    EXPECT_TRUE(supercritical_separated(s, k));
    EXPECT_EQ(supercritical_case_coefficients(s, k).case_id, FormCaseId::SuperSeparated);

    EXPECT_THROW(supercritical_case_coefficients(Spectrum{5, 2, 0.1}, k), InvalidArgument);
    EXPECT_THROW(supercritical_case_coefficients(Spectrum{1, 1, -0.9}, k), InvalidArgument);
    auto k0 = k;
    k0.theta = 0.0;
    EXPECT_THROW(supercritical_case_coefficients(c, k0), InvalidArgument);
}

TEST(SupercriticalCases, ClusteredBranchBookkeeping) {
    auto k = FormConstants::supercritical(3, 0.3, 10.0);
    const double big = 2.0 * clustered_threshold(3, 0.3, k.mu);
    Spectrum s{big, 3.0, -1.0};
    auto lt = supercritical_case_coefficients(s, k, 1);
    EXPECT_EQ(lt.case_id, FormCaseId::SuperClusteredGammaLtN);
    EXPECT_EQ(lt.split, 1);
    EXPECT_DOUBLE_EQ(lt.kappa, 0.5 * k.mu);
    // Choosing C(theta) this large makes tau exceed half of tan(theta)/lambda_{n-1}.
    EXPECT_GT(lt.tau, 0.5 * std::tan(0.3) / 3.0);
    EXPECT_GE(lt.tau, lt.tau_floor);
    auto gt = supercritical_case_coefficients(s, k, 2);
    EXPECT_DOUBLE_EQ(gt.kappa, 1.0);
    EXPECT_EQ(gt.a[1], 81.0 + 2);
    EXPECT_EQ(gt.a[2], 81.0 + 3);
}

TEST(SupercriticalCases, DispatchIsExclusive) {
    for (int t = 0; t < 5000; ++t) {
        CounterRng rng(27, 1, static_cast<std::uint64_t>(t));
        const int n = 2 + t % 3;
        std::vector<double> l(static_cast<std::size_t>(n));
        for (auto& x : l) x = std::tan(rng.uniform(-pi / 2 + 1e-6, pi / 2 - 1e-6));
        Spectrum s(l);
        if (lagrangian_angle(s) < critical_phase(n) + 0.3 || s.min() >= 0) continue;
        auto k = FormConstants::supercritical(n, 0.3, 10.0);
        auto fc = supercritical_case_coefficients(s, k);
        const bool sep = supercritical_separated(s, k);
        EXPECT_EQ(fc.case_id == FormCaseId::SuperSeparated, sep);
        for (double a : fc.a) EXPECT_GT(a, 0.0);
    }
}

TEST(SupercriticalCases, EpsHatBoundsTheTraceFreeForm) {
    // sum lambda_i h_i^2 >= eps_hat sum |lambda_i| h_i^2 whenever sum h_i = 0.
    for (double theta : {0.05, 0.3, 1.0}) {
        const double eh = supercritical_eps_hat(theta);
        int checked = 0;
        for (int t = 0; checked < 3000; ++t) {
            CounterRng rng(28, static_cast<std::uint64_t>(theta * 100), static_cast<std::uint64_t>(t));
            const int n = 2 + t % 4;
            std::vector<double> l(static_cast<std::size_t>(n));
            for (auto& x : l) x = std::tan(rng.uniform(-pi / 2 + 1e-4, pi / 2 - 1e-4));
            Spectrum s(l);
            if (lagrangian_angle(s) < critical_phase(n) + theta) continue;
            ++checked;
            std::vector<double> d(l.size()), ones(l.size(), 1.0);
            double scale = 0.0;
            for (std::size_t i = 0; i < l.size(); ++i) {
                d[i] = s[i] - eh * std::abs(s[i]);
                scale = std::max(scale, std::abs(s[i]));
            }
            ASSERT_GE(constrained_form_min_eig(d, 0.0, ones), -1e-9 * scale) << "theta " << theta;
        }
    }
}

TEST(Certify, SmallAFailsWithWitness) {
    auto r = certify_constants(3, FormCaseId::Convex1, 5000, 3.0);
    EXPECT_FALSE(r.ok);
    ASSERT_TRUE(r.witness.has_value());
    EXPECT_LT(r.worst_margin, 0.0);
    auto good = certify_constants(3, FormCaseId::Convex1, 5000, certified_A_convex(3));
    EXPECT_TRUE(good.ok);
    EXPECT_EQ(good.oracle_disagreements, 0u);
}

TEST(Certify, DeterministicGivenSeed) {
    CertifyOptions o;
    o.seed = 99;
    auto a = certify_constants(3, FormCaseId::Convex2, 3000, 40.0, o);
    auto b = certify_constants(3, FormCaseId::Convex2, 3000, 40.0, o);
    EXPECT_EQ(a.worst_margin, b.worst_margin);
    EXPECT_EQ(a.proposed, b.proposed);
}

TEST(Certify, TwoDimensionalFamilies) {
    CertifyOptions o;
    o.theta = 0.3;
    EXPECT_TRUE(certify_constants(2, FormCaseId::Dim2Convex, 5000, certified_A_convex(2), o).ok);
    EXPECT_TRUE(certify_constants(2, FormCaseId::Dim2Super, 5000, certified_A_supercritical(2, 0.3), o).ok);
}

TEST(FindMinA, BisectionContract) {
    CertifyOptions o;
    o.seed = 5;
    for (FormCaseId f : {FormCaseId::Convex1, FormCaseId::Convex2, FormCaseId::Convex3}) {
        const double A = find_min_A(3, f, 4000, o);
        EXPECT_GE(A, kMinA);
        EXPECT_TRUE(certify_constants(3, f, 4000, A, o).ok);
        EXPECT_TRUE(certify_constants(3, f, 4000, 2 * A, o).ok);
        if (A > kMinA) EXPECT_FALSE(certify_constants(3, f, 4000, A / 1.02, o).ok);
    }
    EXPECT_GE(find_min_A(2, FormCaseId::Dim2Convex, 2000, o), 3.0);
}

TEST(Dim2Margin, Examples) {
    auto k = FormConstants::convex(2, certified_A_convex(2));
    EXPECT_NEAR(dim2_jacobi_margin(Spectrum{2.0, 2.0}, k, Dim2Regime::Convex), 8.0 - 1.0, 1e-14);
    EXPECT_GE(dim2_jacobi_margin(Spectrum{1.0, 0.5}, k, Dim2Regime::Convex), 0.0);
    EXPECT_THROW(dim2_jacobi_margin(Spectrum{1.0, -0.5}, k, Dim2Regime::Convex), InvalidArgument);
    EXPECT_THROW(dim2_jacobi_margin(Spectrum{1.0, 0.5, 0.2}, k, Dim2Regime::Convex), InvalidArgument);
}

TEST(Dim2Margin, SweepGridConvex) {
    auto k = FormConstants::convex(2, certified_A_convex(2));
    double worst = 1.0;
    for (int i = 0; i <= 400; ++i) {
        const double l1 = i == 0 ? 0.0 : std::pow(10.0, -6.0 + 12.0 * i / 400.0);
        for (int j = 0; j <= 100; ++j) {
            const double l2 = l1 * j / 100.0;
            worst = std::min(worst, dim2_jacobi_margin(Spectrum{l1, l2}, k, Dim2Regime::Convex));
        }
    }
    EXPECT_GE(worst, 0.0);
}

TEST(Dim2Margin, CThetaIsSharp) {
    // lambda_1 + lambda_2 >= 2 c(theta) lambda_1 with equality approached as
    // lambda_1 lambda_2 -> -1 ... sample the boundary Theta = theta.
    for (double theta : {0.1, 0.3, 1.0}) {
        const double c = dim2_c_theta(theta);
        double ratio_min = 1e300;
        for (int i = 1; i < 20000; ++i) {
            const double a1 = theta + (pi / 2 - theta) * i / 20000.0;
            const double l1 = std::tan(a1), l2 = std::tan(theta - a1);
            ratio_min = std::min(ratio_min, (l1 + l2) / (2 * l1));
        }
        EXPECT_GE(ratio_min, c - 1e-12);
        EXPECT_LE(ratio_min, c + 1e-6);
    }
}

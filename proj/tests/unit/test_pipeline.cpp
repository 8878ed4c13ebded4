#include "lagmc/pipeline.hpp"
#include "lagmc/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace lagmc;

namespace {

constexpr double pi = std::numbers::pi;

Point random_point(const Grid& g, std::uint64_t i) {
    CounterRng rng(3, 7, i);
    Point p{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) p[static_cast<std::size_t>(a)] = rng.uniform(g.lo(a), g.hi(a));
    return p;
}

}  // namespace

TEST(Mollify, AffinePhaseIsReproduced) {
    // Symmetric stencil with unit mass: convolution fixes affine functions.
    Grid box = Grid::cube(3, -1, 1, 5);
    auto f = [](std::span<const double> x) { return pi / 2 + 0.4 + 0.1 * x[0] - 0.05 * x[1] + 0.02 * x[2]; };
    PhaseSpec phi = PhaseSpec::make(3, f, 0.12, box);
    for (int k : {1, 4, 16}) {
        PhaseSpec pk = mollify_phase(phi, k);
        for (std::uint64_t i = 0; i < 200; ++i) {
            const Point p = random_point(box, i);
            ASSERT_NEAR(pk.at(p), phi.at(p), 1e-13);
        }
    }
}

TEST(Mollify, ContractOnKink) {
    for (int n : {2, 3}) {
        Grid box = Grid::cube(n, -0.75, 0.75, 9);
        for (double slope : {0.05, 0.8, 3.0}) {
            PhaseSpec phi = kink_phase(n, 0.3, slope, box);
            for (int k : {1, 2, 8, 64}) {
                PhaseSpec pk = mollify_phase(phi, k);
                EXPECT_EQ(pk.regime.tag, PhaseTag::Supercritical);
                double err = 0.0, lip = 0.0;
                for (std::uint64_t i = 0; i < 2000; ++i) {
                    Point p = random_point(box, i);
                    if (i % 4 == 0) p[0] = 0.0;  // on the kink
                    err = std::max(err, std::abs(pk.at(p) - phi.at(p)));
                    Point q = p;
                    q[1] += 1e-3;
                    q[0] += 7e-4;
                    lip = std::max(lip, std::abs(pk.at(q) - pk.at(p)) / std::hypot(1e-3, 7e-4));
                }
                EXPECT_LE(err, 1.0 / k);
                EXPECT_LE(err, slope * mollifier_radius(phi, k));
                EXPECT_LE(lip, slope * (1.0 + 1e-9));
                EXPECT_GE(pk.inf, critical_phase(n) + 0.3 - 1.0 / (4 * k));
            }
        }
    }
}

TEST(Mollify, ClampKeepsRangeBelowMaximalPhase) {
    Grid box = Grid::cube(2, -1, 1, 9);
    auto f = [](std::span<const double> x) { return pi - 0.01 - 0.4 * std::abs(x[1]); };
    PhaseSpec phi = PhaseSpec::make(2, f, 0.4, box);
    PhaseSpec pk = mollify_phase(phi, 8);
    for (std::uint64_t i = 0; i < 500; ++i) {
        const double v = pk.at(random_point(box, i));
        ASSERT_LT(v, pi - 1.0 / 32);
    }
    EXPECT_LT(pk.sup, pi - 1.0 / 32);
    // Inside the band the clamp is the identity.
    Point far{0.0, 0.9, 0.0};
    EXPECT_NEAR(pk.at(far), phi.at(far), 0.4 * mollifier_radius(phi, 8));
}

TEST(Mollify, ConstantPhaseUnchanged) {
    PhaseSpec phi = PhaseSpec::constant(3, pi / 2 + 0.5);
    PhaseSpec pk = mollify_phase(phi, 4);
    EXPECT_EQ(pk.at(Point{0.3, 0.1, -0.2}), pi / 2 + 0.5);
    EXPECT_THROW(mollify_phase(phi, 0), InvalidArgument);
}

TEST(Holder, ZeroForQuadraticsAndMatchesBruteForce) {
    Grid g = Grid::cube(2, -1, 1, 17);
    EXPECT_NEAR(holder_quotient(sample(g, [](const Point& x) { return x[0] * x[0] - 3 * x[0] * x[1]; }), 0.5), 0.0, 1e-9);
    GridField u = sample(g, [](const Point& x) { return x[0] * x[0] * x[0] + std::sin(x[1]) * x[0]; });
    double brute = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (i == j || !in_inner_half_box(g, i) || !in_inner_half_box(g, j)) continue;
            const Point a = g.coord(i), b = g.coord(j);
            const double d = std::hypot(a[0] - b[0], a[1] - b[1]);
            brute = std::max(brute, hessian_norm(discrete_hessian(u, i) - discrete_hessian(u, j)) / std::sqrt(d));
        }
    EXPECT_NEAR(holder_quotient(u, 0.5), brute, 1e-12 * brute);
    EXPECT_THROW(holder_quotient(u, 1.0), OutOfRange);
}

TEST(Holder, StridedSamplingBoundedByFullSearch) {
    Grid g = Grid::cube(2, -1, 1, 65);
    GridField u = sample(g, [](const Point& x) { return std::pow(x[0], 3) + 0.5 * x[0] * x[1] * x[1]; });
    const double q = holder_quotient(u, 0.5);
    // |D^2u(x) - D^2u(y)| <= 6|x - y| on the half box; sup of |x-y|^{1/2} there is sqrt(sqrt 2).
    EXPECT_GT(q, 0.0);
    EXPECT_LE(q, 7.0 * std::sqrt(std::sqrt(2.0)));
}

TEST(Pipeline, KinkSandwichAndConvergence) {
    Grid g = Grid::cube(2, -0.75, 0.75, 17);
    PhaseSpec phi = kink_phase(2, 0.3, 0.05, g);
    GridField b = mean_phase_boundary(g, phi);
    PipelineReport rep = run_pipeline(phi, g, 16, b);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.rows.front().k, 2);
    EXPECT_EQ(rep.rows.back().k, 16);
    EXPECT_NEAR(rep.barrier_radius, 0.75 * std::sqrt(2.0), 1e-15);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        EXPECT_LE(r.phik_err, 1.0 / r.k);
        EXPECT_TRUE(r.sandwich_ok);
        EXPECT_LE(r.iters, 20);
        if (i > 0) {
            EXPECT_LE(r.diff_to_ref, rep.rows[i - 1].diff_to_ref);
            EXPECT_GT(r.delta, 0.0);
            // delta scales like 1/k: the measured constant stays put.
            EXPECT_NEAR(r.c_cmp, rep.rows[1].c_cmp, 0.5 * rep.rows[1].c_cmp);
        }
    }
    EXPECT_TRUE(rep.findings.empty());
}

TEST(Pipeline, NonDyadicKRoundsUp) {
    Grid g = Grid::cube(2, -0.75, 0.75, 9);
    PhaseSpec phi = kink_phase(2, 0.3, 0.05, g);
    PipelineReport rep = run_pipeline(phi, g, 5, mean_phase_boundary(g, phi));
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_EQ(rep.rows.back().k, 8);
}

TEST(Pipeline, CsvIsDeterministic) {
    Grid g = Grid::cube(2, -0.75, 0.75, 9);
    PhaseSpec phi = kink_phase(2, 0.3, 0.2, g);
    std::ostringstream a, b;
    write_pipeline_csv(a, run_pipeline(phi, g, 8, mean_phase_boundary(g, phi)));
    write_pipeline_csv(b, run_pipeline(phi, g, 8, mean_phase_boundary(g, phi)));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "k,phik_err,lip,iters,hess_sup,sandwich_ok,diff_to_ref,holder");
}

TEST(Pipeline, LipschitzDoublingMovesTheBound) {
    Grid g = Grid::cube(2, -0.75, 0.75, 17);
    PhaseSpec a = kink_phase(2, 0.3, 0.4, g);
    PhaseSpec b = kink_phase(2, 0.3, 0.8, g);
    PipelineReport ra = run_pipeline(a, g, 8, mean_phase_boundary(g, a));
    PipelineReport rb = run_pipeline(b, g, 8, mean_phase_boundary(g, b));
    for (const auto& r : rb.rows) EXPECT_TRUE(r.sandwich_ok);
    EXPECT_GT(std::abs(rb.rows.back().hess_sup - ra.rows.back().hess_sup), 1e-6);
    EXPECT_GT(rb.rows.back().holder, ra.rows.back().holder);
}

TEST(Pipeline, RejectsNonSupercriticalPhase) {
    Grid g = Grid::cube(2, -1, 1, 9);
    PhaseSpec phi = PhaseSpec::constant(2, 0.0);
    EXPECT_THROW(run_pipeline(phi, g, 4, mean_phase_boundary(g, phi)), InvalidArgument);
    PhaseSpec ok = kink_phase(2, 0.3, 0.1, g);
    EXPECT_THROW(run_pipeline(ok, g, 1, mean_phase_boundary(g, ok)), InvalidArgument);
    EXPECT_THROW(run_pipeline(ok, g, 4, mean_phase_boundary(Grid::cube(2, -1, 1, 11), ok)), InvalidArgument);
}

TEST(Format, SeventeenDigits) {
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(format_number(2.0), "2");
}

#include "lagmc/pipeline.hpp"

#include "lagmc/error.hpp"
#include "lagmc/parallel.hpp"
#include "lagmc/random.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>

namespace lagmc {

namespace {

constexpr double pi = std::numbers::pi;

struct Stencil {
    std::vector<double> offsets;  // flattened points of the reference ball, dim entries each
    std::vector<double> weights;  // sum to one
};

Stencil bump_stencil(int n) {
    using Rule = boost::math::quadrature::gauss<double, 8>;
    std::vector<double> x, w;
    // The rule stores the nonnegative half; order 8 has no center node.
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
        x.push_back(-Rule::abscissa()[i]);
        w.push_back(Rule::weights()[i]);
        x.push_back(Rule::abscissa()[i]);
        w.push_back(Rule::weights()[i]);
    }
    Stencil s;
    const std::size_t m = x.size();
    std::size_t total = 1;
    for (int a = 0; a < n; ++a) total *= m;
    double sum = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        double r2 = 0.0, weight = 1.0;
        std::vector<double> y(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            const std::size_t j = rest % m;
            rest /= m;
            y[static_cast<std::size_t>(a)] = x[j];
            weight *= w[j];
            r2 += x[j] * x[j];
        }
        if (r2 >= 1.0) continue;
        weight *= std::exp(1.0 / (r2 - 1.0));
        s.offsets.insert(s.offsets.end(), y.begin(), y.end());
        s.weights.push_back(weight);
        sum += weight;
    }
    for (double& v : s.weights) v /= sum;
    return s;
}

// Identity on [lo + w, hi - w]; tanh saturation into (lo, hi) outside.
double soft_clamp(double v, double lo, double hi, double w) {
    const double a = lo + w, b = hi - w;
    if (v > b) return b + w * std::tanh((v - b) / w);
    if (v < a) return a - w * std::tanh((a - v) / w);
    return v;
}

}  // namespace

PhaseSpec kink_phase(int n, double theta, double slope, const Grid& box) {
    if (!(theta > 0.0)) throw OutOfRange("kink margin theta must be positive");
    if (!(slope > 0.0)) throw OutOfRange("kink slope must be positive");
    const double base = critical_phase(n) + theta;
    return PhaseSpec::make(n, [base, slope](std::span<const double> x) { return base + slope * std::abs(x[0]); }, slope, box);
}

GridField mean_phase_boundary(const Grid& g, const PhaseSpec& phi) {
    double mean = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) mean += phi.at(g.coord(i));
    mean /= static_cast<double>(g.size());
    const double t = std::tan(mean / g.dim());
    return sample(g, [t](const Point& x) { return 0.5 * t * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); });
}

double mollifier_radius(const PhaseSpec& phi, int k) {
    if (k <= 0) throw InvalidArgument("mollification index k must be positive");
    return 1.0 / (k * std::max(phi.lipschitz, 1.0));
}

PhaseSpec mollify_phase(const PhaseSpec& phi, int k) {
    const double r = mollifier_radius(phi, k);
    const int n = phi.dim;
    const double margin = phi.regime.tag == PhaseTag::Supercritical && phi.inf > 0.0 ? phi.regime.margin : 0.0;
    const double hi = n * pi / 2 - 1.0 / (4.0 * k);
    const double lo = margin > 0.0 ? critical_phase(n) + margin - 1.0 / (4.0 * k) : -hi;
    const double band = 1.0 / (8.0 * k);
    PhaseSpec out;
    out.dim = n;
    out.lipschitz = phi.lipschitz;
    if (phi.lipschitz == 0.0) {
        // Constant phase: every convolution returns the same value.
        out.evaluator = phi.evaluator;
        out.inf = phi.inf;
        out.sup = phi.sup;
        out.regime = phi.regime;
        return out;
    }
    auto stencil = std::make_shared<const Stencil>(bump_stencil(n));
    PhaseFn base = phi.evaluator;
    out.evaluator = [stencil, base, r, n, lo, hi, band](std::span<const double> x) {
        const auto nn = static_cast<std::size_t>(n);
        double y[3] = {0.0, 0.0, 0.0};
        double acc = 0.0;
        for (std::size_t j = 0; j < stencil->weights.size(); ++j) {
            for (std::size_t a = 0; a < nn; ++a) y[a] = x[a] - r * stencil->offsets[j * nn + a];
            acc += stencil->weights[j] * base(std::span<const double>(y, nn));
        }
        return soft_clamp(acc, lo, hi, band);
    };
    out.inf = soft_clamp(phi.inf - phi.lipschitz * r, lo, hi, band);
    out.sup = soft_clamp(phi.sup + phi.lipschitz * r, lo, hi, band);
    out.regime = classify_range(out.inf, out.sup, n);
    return out;
}

bool in_inner_half_box(const Grid& g, std::size_t node) {
    if (!g.interior(node)) return false;
    const Point x = g.coord(node);
    const Point c = g.center();
    for (int a = 0; a < g.dim(); ++a) {
        const auto s = static_cast<std::size_t>(a);
        if (std::abs(x[s] - c[s]) > 0.25 * (g.hi(a) - g.lo(a)) * (1.0 + 1e-12)) return false;
    }
    return true;
}

double inner_hessian_sup(const GridField& u) {
    const Grid& g = u.grid();
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (in_inner_half_box(g, i)) m = std::max(m, hessian_norm(discrete_hessian(u, i)));
    return m;
}

double holder_quotient(const GridField& u, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw OutOfRange("Hoelder exponent must lie in (0, 1)");
    const Grid& g = u.grid();
    const int n = g.dim();
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (in_inner_half_box(g, i)) nodes.push_back(i);
    std::vector<Matrix> hess(nodes.size());
    std::vector<Point> pos(nodes.size());
    std::vector<MultiIndex> mi(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        hess[j] = discrete_hessian(u, nodes[j]);
        pos[j] = g.coord(nodes[j]);
        mi[j] = g.multi(nodes[j]);
    }
    auto quotient = [&](std::size_t a, std::size_t b) {
        double d2 = 0.0;
        for (int ax = 0; ax < n; ++ax) {
            const double d = pos[a][static_cast<std::size_t>(ax)] - pos[b][static_cast<std::size_t>(ax)];
            d2 += d * d;
        }
        return hessian_norm(hess[a] - hess[b]) / std::pow(d2, 0.5 * alpha);
    };

    std::vector<std::size_t> coarse;
    int stride = 1;
    if (g.max_points() > 33) stride = (g.max_points() - 2) / 32 + 1;
    const MultiIndex cm = g.multi(g.center_node());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        bool on = true;
        for (int ax = 0; ax < n; ++ax)
            if ((mi[j][static_cast<std::size_t>(ax)] - cm[static_cast<std::size_t>(ax)]) % stride != 0) on = false;
        if (on) coarse.push_back(j);
    }
    std::vector<double> best(coarse.size(), 0.0);
    parallel_for(coarse.size(), [&](std::size_t a) {
        for (std::size_t b = a + 1; b < coarse.size(); ++b) best[a] = std::max(best[a], quotient(coarse[a], coarse[b]));
    });
    double m = best.empty() ? 0.0 : *std::max_element(best.begin(), best.end());
    if (stride > 1) {
        std::vector<long> slot(g.size(), -1);
        for (std::size_t j = 0; j < nodes.size(); ++j) slot[nodes[j]] = static_cast<long>(j);
        std::vector<double> local(nodes.size(), 0.0);
        parallel_for(nodes.size(), [&](std::size_t a) {
            const MultiIndex base = mi[a];
            const int span3 = n == 3 ? 2 : 0;
            for (int d0 = -2; d0 <= 2; ++d0)
                for (int d1 = -2; d1 <= 2; ++d1)
                    for (int d2 = -span3; d2 <= span3; ++d2) {
                        MultiIndex o{base[0] + d0, base[1] + d1, base[2] + d2};
                        bool inside = true;
                        for (int ax = 0; ax < n; ++ax)
                            if (o[static_cast<std::size_t>(ax)] < 0 || o[static_cast<std::size_t>(ax)] >= g.points(ax)) inside = false;
                        if (!inside) continue;
                        const long b = slot[g.index(o)];
                        if (b > static_cast<long>(a)) local[a] = std::max(local[a], quotient(a, static_cast<std::size_t>(b)));
                    }
        });
        m = std::max(m, *std::max_element(local.begin(), local.end()));
    }
    return m;
}

namespace {

// min over interior nodes of min(F(H + 2 delta I) - F(H), F(H) - F(H - 2 delta I)) / delta.
double measured_barrier_constant(const std::vector<std::vector<double>>& spectra, double delta) {
    double c = std::numeric_limits<double>::infinity();
    for (const auto& l : spectra) {
        double up = 0.0, down = 0.0;
        for (double x : l) {
            up += std::atan(x + 2.0 * delta) - std::atan(x);
            down += std::atan(x) - std::atan(x - 2.0 * delta);
        }
        c = std::min(c, std::min(up, down) / delta);
    }
    return c;
}

}  // namespace

PipelineReport run_pipeline(const PhaseSpec& phi, const Grid& grid, int K, const GridField& boundary,
                            const PipelineOptions& opts) {
    if (K < 2) throw InvalidArgument("pipeline needs K >= 2");
    if (phi.regime.tag != PhaseTag::Supercritical || !(phi.inf > 0.0))
        throw InvalidArgument("pipeline needs a supercritical phase with margin theta > 0");
    if (!(boundary.grid() == grid)) throw InvalidArgument("boundary data lives on a different grid");
    const int n = grid.dim();
    const auto nn = static_cast<std::size_t>(n);

    std::vector<int> ks;
    for (int k = 2; k < 2 * K; k *= 2) {
        ks.push_back(k);
        if (k >= K) break;
    }

    PipelineReport rep;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.interior(i)) continue;
        const Point x = grid.coord(i);
        double r2 = 0.0;
        for (std::size_t a = 0; a < nn; ++a) r2 += x[a] * x[a];
        rep.barrier_radius = std::max(rep.barrier_radius, std::sqrt(r2));
    }

    // Dense sampling set: all grid nodes plus seeded uniform points of the box.
    std::vector<Point> samples;
    for (std::size_t i = 0; i < grid.size(); ++i) samples.push_back(grid.coord(i));
    for (std::size_t j = 0; j < opts.dense_samples; ++j) {
        CounterRng rng(opts.seed, 0x5eed, j);
        Point p{0, 0, 0};
        for (int a = 0; a < n; ++a) p[static_cast<std::size_t>(a)] = rng.uniform(grid.lo(a), grid.hi(a));
        samples.push_back(p);
    }
    std::vector<double> phi_samples(samples.size());
    parallel_for(samples.size(), [&](std::size_t j) { phi_samples[j] = phi.at(samples[j]); });

    std::vector<GridField> solutions;
    std::vector<std::vector<double>> phik_nodes;
    for (int k : ks) {
        PipelineRow row;
        row.k = k;
        const PhaseSpec pk = mollify_phase(phi, k);
        std::vector<double> vals(samples.size());
        parallel_for(samples.size(), [&](std::size_t j) { vals[j] = pk.at(samples[j]); });
        for (std::size_t j = 0; j < samples.size(); ++j) row.phik_err = std::max(row.phik_err, std::abs(vals[j] - phi_samples[j]));
        // Lipschitz: adjacent grid-node quotients along every axis.
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const MultiIndex m = grid.multi(i);
            for (int a = 0; a < n; ++a) {
                if (m[static_cast<std::size_t>(a)] + 1 >= grid.points(a)) continue;
                const std::size_t o = i + grid.stride(a);
                row.lip = std::max(row.lip, std::abs(vals[o] - vals[i]) / grid.spacing(a));
            }
        }
        phik_nodes.emplace_back(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(grid.size()));
        std::optional<SolveResult> solved;
        try {
            solved.emplace(newton_solve(grid, pk, boundary, opts.solve));
        } catch (const SolveFailure& e) {
            rep.partial = true;
            rep.findings.push_back("solve failed at k = " + std::to_string(k) + ": " + e.what());
            row.iters = e.report().iterations;
            rep.rows.push_back(row);
            throw;
        }
        SolveResult& sol = *solved;
        row.iters = sol.report.iterations;
        row.hess_sup = inner_hessian_sup(sol.u);
        row.holder = holder_quotient(sol.u, opts.alpha);
        solutions.push_back(std::move(sol.u));
        rep.rows.push_back(row);
    }

    // Sandwich for each consecutive pair (k, 2k): barriers from u_k, checked against u_2k.
    for (std::size_t p = 0; p + 1 < ks.size(); ++p) {
        const int k = ks[p];
        const GridField& uk = solutions[p];
        std::vector<std::vector<double>> spectra;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid.interior(i)) spectra.push_back(jacobi_eigen(discrete_hessian(uk, i)).values);
        // Required gap: |phi_k - phi_2k| <= 1/k + 1/(2k), plus the two solver tolerances.
        const double need = 1.5 / k + 2.0 * opts.solve.tol;
        // Each arctan increment is at most 2 delta, so the constant is at most 2n: start below the answer.
        double delta = need / (2.0 * n);
        for (int it = 0; it < 60; ++it) {
            const double c = measured_barrier_constant(spectra, delta);
            if (c * delta >= need) break;
            delta = it < 20 ? std::max(1.01 * need / c, 1.01 * delta) : delta * 1.5;
        }
        PipelineRow& row = rep.rows[p + 1];
        row.delta = delta;
        row.c_cmp = delta * k;
        const GridField lower = barrier_shift(uk, delta, rep.barrier_radius);
        const GridField upper = barrier_shift(uk, -delta, rep.barrier_radius);
        const SandwichResult s = sandwich_check(lower, solutions[p + 1], upper);
        row.sandwich_ok = s.ok;
        row.sandwich_violation = s.worst_violation;
        if (!s.ok)
            rep.findings.push_back("sandwich violated for pair (" + std::to_string(k) + ", " + std::to_string(2 * k) +
                                   ") by " + format_number(s.worst_violation));
        rep.rows[p].diff_to_next = max_abs_difference(uk, solutions[p + 1]);
    }
    const GridField& ref = solutions.back();
    for (std::size_t p = 0; p < ks.size(); ++p) rep.rows[p].diff_to_ref = max_abs_difference(solutions[p], ref);
    for (std::size_t p = 1; p < ks.size(); ++p)
        if (rep.rows[p].diff_to_ref > rep.rows[p - 1].diff_to_ref)
            rep.findings.push_back("|u_k - u_ref| increased at k = " + std::to_string(ks[p]));
    return rep;
}

std::string format_number(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

void write_pipeline_csv(std::ostream& os, const PipelineReport& r) {
    os << "k,phik_err,lip,iters,hess_sup,sandwich_ok,diff_to_ref,holder\n";
    for (const auto& row : r.rows)
        os << row.k << ',' << format_number(row.phik_err) << ',' << format_number(row.lip) << ',' << row.iters << ','
           << format_number(row.hess_sup) << ',' << (row.sandwich_ok ? 1 : 0) << ',' << format_number(row.diff_to_ref)
           << ',' << format_number(row.holder) << '\n';
}

}  // namespace lagmc

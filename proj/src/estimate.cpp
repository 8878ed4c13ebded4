#include "lagmc/estimate.hpp"

#include "lagmc/error.hpp"
#include "lagmc/parallel.hpp"
#include "lagmc/tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lagmc {

namespace {

std::span<const double> as_span(const Point& p, int n) { return {p.data(), static_cast<std::size_t>(n)}; }

Matrix rebuild(const Matrix& q, const Vector& d) { return q * d.asDiagonal() * q.transpose(); }

// e_{k-1} of the values with entry i removed.
double sigma_without(const std::vector<double>& l, std::size_t skip, int k) {
    std::vector<double> rest;
    for (std::size_t j = 0; j < l.size(); ++j)
        if (j != skip) rest.push_back(l[j]);
    return elementary_symmetric(rest)[static_cast<std::size_t>(k - 1)];
}

void check_k(int k, int n) {
    if (k < 1 || k > n) throw OutOfRange("sigma_k index must lie in [1, n]");
}

}  // namespace

GraphGeometry graph_geometry(const Matrix& hessian, const Vector& grad_phi) {
    const auto n = hessian.rows();
    if (grad_phi.size() != n) throw InvalidArgument("phase gradient has the wrong dimension");
    const JacobiEigen e = jacobi_eigen(hessian);
    Vector metric(n), inv(n), drift(n);
    double v = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = e.values[static_cast<std::size_t>(i)];
        metric(i) = 1.0 + l * l;
        inv(i) = 1.0 / metric(i);
        drift(i) = -l * inv(i);
        v *= std::sqrt(metric(i));
    }
    GraphGeometry out;
    out.g = rebuild(e.basis, metric);
    out.g_inv = rebuild(e.basis, inv);
    out.V = v;
    // Rotate Dphi into the eigenframe, scale, rotate back.
    const Vector p = e.basis.transpose() * grad_phi;
    out.mean_curv_norm = std::sqrt(p.dot(inv.asDiagonal() * p));
    out.beltrami_drift = e.basis * (drift.asDiagonal() * p);
    return out;
}

Vector beltrami_drift_divergence(const AnalyticField& u, std::span<const double> x) {
    const int n = u.dim();
    const Matrix h = u.hessian(x);
    const std::vector<double> t = u.third(x);
    const Matrix g = Matrix::Identity(n, n) + h * h;
    const Matrix gi = g.inverse();
    Vector out = Vector::Zero(n);
    for (int j = 0; j < n; ++j) {
        Matrix dh(n, n);
        for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) dh(a, c) = t[static_cast<std::size_t>((a * n + c) * n + j)];
        const Matrix dg = dh * h + h * dh;
        const Matrix dgi = -gi * dg * gi;
        const double dlog = 0.5 * (gi * dg).trace();
        for (int i = 0; i < n; ++i) out(i) += dgi(i, j) + gi(i, j) * dlog;
    }
    return out;
}

JacobiTerms jacobi_terms(const AnalyticField& u, double A, std::span<const double> x) {
    const int n = u.dim();
    const auto nn = static_cast<std::size_t>(n);
    const Matrix h = u.hessian(x);
    const std::vector<double> t = u.third(x);
    const std::vector<double> f = u.fourth(x);
    JacobiTerms out;
    out.b = A + h.trace();
    out.grad_b = Vector::Zero(n);
    Matrix hess_b = Matrix::Zero(n, n);
    for (std::size_t l = 0; l < nn; ++l)
        for (std::size_t g = 0; g < nn; ++g) {
            out.grad_b(static_cast<Eigen::Index>(g)) += t[(l * nn + l) * nn + g];
            for (std::size_t d = 0; d < nn; ++d)
                hess_b(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(d)) += f[((l * nn + l) * nn + g) * nn + d];
        }
    const JacobiEigen e = jacobi_eigen(h);
    out.lambda = Eigen::Map<const Vector>(e.values.data(), n);
    out.min_eigenvalue = e.values.back();
    out.phase_margin = lagrangian_angle(e.values) - critical_phase(n);
    const PhaseJet jet = phase_jet(u, x);
    out.grad_phi = jet.gradient;
    out.lap_phi = jet.hessian.trace();
    const GraphGeometry geo = graph_geometry(h, jet.gradient);
    out.trace_hess_b = geo.g_inv.cwiseProduct(hess_b).sum();
    out.drift_b = geo.beltrami_drift.dot(out.grad_b);
    out.grad_norm2 = out.grad_b.dot(geo.g_inv * out.grad_b);

    // Third derivatives in the eigenframe: r_abc = sum Q_ia Q_jb Q_lc u_ijl.
    const Matrix& q = e.basis;
    std::vector<double> s1(nn * nn * nn, 0.0), s2(nn * nn * nn, 0.0), r(nn * nn * nn, 0.0);
    for (std::size_t i = 0; i < nn; ++i)
        for (std::size_t j = 0; j < nn; ++j)
            for (std::size_t c = 0; c < nn; ++c) {
                double acc = 0.0;
                for (std::size_t l = 0; l < nn; ++l) acc += q(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(c)) * t[(i * nn + j) * nn + l];
                s1[(i * nn + j) * nn + c] = acc;
            }
    for (std::size_t i = 0; i < nn; ++i)
        for (std::size_t b = 0; b < nn; ++b)
            for (std::size_t c = 0; c < nn; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < nn; ++j) acc += q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) * s1[(i * nn + j) * nn + c];
                s2[(i * nn + b) * nn + c] = acc;
            }
    for (std::size_t a = 0; a < nn; ++a)
        for (std::size_t b = 0; b < nn; ++b)
            for (std::size_t c = 0; c < nn; ++c) {
                double acc = 0.0;
                for (std::size_t i = 0; i < nn; ++i) acc += q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) * s2[(i * nn + b) * nn + c];
                r[(a * nn + b) * nn + c] = acc;
            }
    out.grad_phi_frame = q.transpose() * jet.gradient;
    for (std::size_t g = 0; g < nn; ++g)
        for (std::size_t i = 0; i < nn; ++i) {
            const double gi = 1.0 / (1.0 + e.values[i] * e.values[i]);
            const double uii = r[(i * nn + i) * nn + g];
            out.bracket_abs += std::abs(e.values[i]) * gi * gi * uii * uii;
            for (std::size_t k = 0; k < nn; ++k) {
                const double gk = 1.0 / (1.0 + e.values[k] * e.values[k]);
                const double uik = r[(i * nn + k) * nn + g];
                out.bracket_h += (e.values[i] + e.values[k]) * gi * gk * uik * uik;
            }
        }
    out.third_frame = std::move(r);
    return out;
}

double jacobi_residual_convex(const AnalyticField& u, const FormConstants& c, std::span<const double> x) {
    const JacobiTerms t = jacobi_terms(u, c.A, x);
    if (t.min_eigenvalue < -tol::kRoundoff * (1.0 + t.lambda.cwiseAbs().maxCoeff()))
        throw InvalidArgument("non-convex point; the supercritical variant applies");
    const double b = t.b;
    const double lhs = (t.trace_hess_b + t.drift_b) / b - (1.0 + c.eps) * t.grad_norm2 / (b * b);
    const double rhs = c.delta * t.bracket_h / b + t.lap_phi / b - c.C_big * t.grad_phi.squaredNorm();
    return lhs - rhs;
}

double jacobi_residual_supercritical(const AnalyticField& u, const FormConstants& c, std::span<const double> x) {
    const JacobiTerms t = jacobi_terms(u, c.A, x);
    if (t.phase_margin < c.theta - tol::kPhaseCritical)
        throw InvalidArgument("phase margin below theta; the supercritical inequality does not apply");
    const double b = t.b;
    const double lhs = t.trace_hess_b + t.drift_b - (1.0 + c.eps) * t.grad_norm2 / b;
    const double rhs = supercritical_eps_hat(c.theta) * t.bracket_abs - c.C_big * b * t.grad_phi.squaredNorm() + t.lap_phi;
    return lhs - rhs;
}

const char* to_string(JacobiVariant v) { return v == JacobiVariant::Convex ? "convex" : "supercritical"; }

JacobiReport jacobi_report(const ManufacturedProblem& p, const Grid& grid, const FormConstants& c, JacobiVariant v) {
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.interior(i)) nodes.push_back(i);
    std::vector<double> margin(nodes.size()), scale(nodes.size()), weight(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t j) {
        const Point x = grid.coord(nodes[j]);
        const auto xs = as_span(x, grid.dim());
        const JacobiTerms t = jacobi_terms(p.u, c.A, xs);
        scale[j] = t.b;
        if (v == JacobiVariant::Convex) {
            margin[j] = jacobi_residual_convex(p.u, c, xs);
            weight[j] = t.grad_phi.squaredNorm();
        } else {
            margin[j] = jacobi_residual_supercritical(p.u, c, xs);
            weight[j] = t.b * t.grad_phi.squaredNorm();
        }
    });
    JacobiReport r;
    r.variant = v;
    r.constants = c;
    r.nodes_checked = nodes.size();
    r.min_margin = std::numeric_limits<double>::infinity();
    r.min_scaled_margin = std::numeric_limits<double>::infinity();
    r.calibrated_C = c.C_big;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (margin[j] < r.min_margin) {
            r.min_margin = margin[j];
            r.worst_node = nodes[j];
        }
        r.min_scaled_margin = std::min(r.min_scaled_margin, margin[j] / scale[j]);
        const double floor = -1e-8 * scale[j];
        if (margin[j] < floor) {
            ++r.violation_count;
            // The margin is affine in C with slope weight >= 0.
            r.calibrated_C = weight[j] > 0.0 ? std::max(r.calibrated_C, c.C_big + (floor - margin[j]) / weight[j])
                                             : std::numeric_limits<double>::infinity();
        }
    }
    return r;
}

Matrix newton_tensor(const Matrix& hessian, int k) {
    const int n = static_cast<int>(hessian.rows());
    check_k(k, n);
    const JacobiEigen e = jacobi_eigen(hessian);
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = sigma_without(e.values, static_cast<std::size_t>(i), k);
    return rebuild(e.basis, d);
}

namespace {

double k_sigma_k(const Matrix& h, int k) {
    return k * elementary_symmetric(jacobi_eigen(h).values)[static_cast<std::size_t>(k)];
}

Vector central_gradient(const GridField& u, std::size_t node) {
    const Grid& g = u.grid();
    Vector d(g.dim());
    for (int a = 0; a < g.dim(); ++a) d(a) = (u[node + g.stride(a)] - u[node - g.stride(a)]) / (2.0 * g.spacing(a));
    return d;
}

}  // namespace

double divergence_identity_check(const GridField& u, int k) {
    const Grid& g = u.grid();
    const int n = g.dim();
    check_k(k, n);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.interior(i, 2)) nodes.push_back(i);
    std::vector<double> res(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t j) {
        const std::size_t x = nodes[j];
        const Matrix lx = newton_tensor(discrete_hessian(u, x), k);
        const Vector dx = central_gradient(u, x);
        double div = 0.0;
        for (int a = 0; a < n; ++a) {
            const double h = g.spacing(a);
            // Flux component a at the two half points along axis a.
            double flux[2];
            for (int side = 0; side < 2; ++side) {
                const std::size_t y = side == 0 ? x + g.stride(a) : x - g.stride(a);
                const Matrix l = 0.5 * (lx + newton_tensor(discrete_hessian(u, y), k));
                Vector du = 0.5 * (dx + central_gradient(u, y));
                du(a) = (side == 0 ? u[y] - u[x] : u[x] - u[y]) / h;
                flux[side] = l.row(a).dot(du);
            }
            div += (flux[0] - flux[1]) / h;
        }
        res[j] = std::abs(k_sigma_k(discrete_hessian(u, x), k) - div);
    });
    return res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
}

double divergence_identity_check(const AnalyticField& u, const Grid& grid, int k) {
    const int n = grid.dim();
    if (u.dim() != n) throw InvalidArgument("field and grid dimensions differ");
    check_k(k, n);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.interior(i)) nodes.push_back(i);
    auto flux = [&](const Point& p) {
        const auto xs = as_span(p, n);
        return Vector(newton_tensor(u.hessian(xs), k) * u.gradient(xs));
    };
    std::vector<double> res(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t j) {
        const Point x = grid.coord(nodes[j]);
        double div = 0.0;
        for (int a = 0; a < n; ++a) {
            const double h = grid.spacing(a);
            Point xp = x, xm = x;
            xp[static_cast<std::size_t>(a)] += h;
            xm[static_cast<std::size_t>(a)] -= h;
            div += (flux(xp)(a) - flux(xm)(a)) / (2.0 * h);
        }
        res[j] = std::abs(k_sigma_k(u.hessian(as_span(x, n)), k) - div);
    });
    return res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
}

MeanValueReport mean_value_monitor(const GridField& u, const PhaseSpec& phi, double A, double radius) {
    if (A < 3.0) throw OutOfRange("mean value monitor needs A >= 3");
    const Grid& g = u.grid();
    const int n = g.dim();
    double hmax = 0.0, cell = 1.0;
    for (int a = 0; a < n; ++a) {
        hmax = std::max(hmax, g.spacing(a));
        cell *= g.spacing(a);
    }
    if (!(radius > 0.0) || radius > g.inradius() - 2.0 * hmax)
        throw OutOfRange("ball radius must be positive and leave two grid layers inside the box");
    const Point c = g.center();
    const std::size_t center = g.center_node();
    auto log_b = [&](std::size_t node) {
        const double b = A + discrete_hessian(u, node).trace();
        if (!(b > 0.0)) throw InvalidArgument("A + Delta u is not positive");
        return std::log(b);
    };
    MeanValueReport r;
    r.point_value = log_b(center);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.coord(i);
        double d2 = 0.0;
        for (int a = 0; a < n; ++a) d2 += (x[static_cast<std::size_t>(a)] - c[static_cast<std::size_t>(a)]) * (x[static_cast<std::size_t>(a)] - c[static_cast<std::size_t>(a)]);
        if (d2 > radius * radius) continue;
        const Matrix h = discrete_hessian(u, i);
        Vector dlog(n), dphi(n);
        for (int a = 0; a < n; ++a) {
            const double s = 2.0 * g.spacing(a);
            dlog(a) = (log_b(i + g.stride(a)) - log_b(i - g.stride(a))) / s;
            Point xp = x, xm = x;
            xp[static_cast<std::size_t>(a)] += g.spacing(a);
            xm[static_cast<std::size_t>(a)] -= g.spacing(a);
            dphi(a) = (phi.at(xp) - phi.at(xm)) / s;
        }
        const GraphGeometry geo = graph_geometry(h, dphi);
        const double w = geo.V * cell;
        r.volume += w;
        r.ball_average += log_b(i) * w;
        r.gradient_integral += dlog.dot(geo.g_inv * dlog) * w;
        r.phase_gradient_integral += dphi.squaredNorm() * w;
        ++r.nodes;
    }
    r.ratio = r.point_value / r.ball_average;
    return r;
}

HessianBoundTable hessian_bound_study(Catalog family, int n, const std::vector<int>& points, double lo, double hi,
                                      const CatalogParams& params, const SolveOptions& opts) {
    if (points.size() < 2) throw InvalidArgument("refinement study needs at least two grids");
    HessianBoundTable t;
    t.family = family;
    t.dim = n;
    for (int p : points) {
        const Grid grid = Grid::cube(n, lo, hi, p);
        const ManufacturedProblem mp = manufactured_problem(family, grid, params);
        const SolveResult sol = newton_solve(grid, mp.phi, mp.u_exact, opts);
        const std::size_t c = grid.center_node();
        HessianBoundRow row;
        row.points = p;
        row.h = grid.spacing(0);
        row.hess0 = hessian_norm(discrete_hessian(sol.u, c));
        row.exact0 = hessian_norm(mp.u.hessian(as_span(grid.coord(c), n)));
        row.osc = sol.u.max() - sol.u.min();
        row.lip = mp.phi.lipschitz;
        row.theta = mp.min_phase_margin;
        row.iterations = sol.report.iterations;
        t.rows.push_back(row);
    }
    const double a = t.rows[t.rows.size() - 2].hess0, b = t.rows.back().hess0;
    t.spread = std::abs(a - b) / std::max(std::abs(a), std::abs(b));
    t.stable = t.spread <= 0.01;
    return t;
}

}  // namespace lagmc

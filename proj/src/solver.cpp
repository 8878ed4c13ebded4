#include "lagmc/solver.hpp"

#include "lagmc/parallel.hpp"
#include "lagmc/tolerance.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lagmc {

Matrix discrete_hessian(const GridField& u, std::size_t node) {
    const Grid& g = u.grid();
    if (!g.interior(node)) throw InvalidArgument("discrete Hessian needs an interior node");
    const int n = g.dim();
    Matrix h(n, n);
    const double u0 = u[node];
    for (int i = 0; i < n; ++i) {
        const std::size_t si = g.stride(i);
        const double hi = g.spacing(i);
        h(i, i) = ((u[node + si] - u0) / hi - (u0 - u[node - si]) / hi) / hi;
        for (int j = i + 1; j < n; ++j) {
            const std::size_t sj = g.stride(j);
            const double v = (u[node + si + sj] - u[node + si - sj] - u[node - si + sj] + u[node - si - sj]) / (4.0 * hi * g.spacing(j));
            h(i, j) = h(j, i) = v;
        }
    }
    return h;
}

double hessian_norm(const Matrix& h) {
    const auto e = jacobi_eigen(h);
    return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
}

GridField residual(const GridField& u, const PhaseSpec& phi) {
    const Grid& g = u.grid();
    GridField r(g);
    parallel_for(g.size(), [&](std::size_t i) {
        if (!g.interior(i)) return;
        r[i] = lagrangian_angle(jacobi_eigen(discrete_hessian(u, i)).values) - phi.at(g.coord(i));
    });
    return r;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Interior {
    std::vector<std::size_t> nodes;      // interior node ids
    std::vector<long> unknown_of;        // grid node -> unknown index or -1
};

Interior interior_map(const Grid& g) {
    Interior m;
    m.unknown_of.assign(g.size(), -1);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.interior(i)) {
            m.unknown_of[i] = static_cast<long>(m.nodes.size());
            m.nodes.push_back(i);
        }
    return m;
}

// Linearization of u -> sum_ij a_ij (D_h^2 u)_ij at each interior node, with
// a = (I + H^2)^{-1} (or I for the Poisson start). Every stencil entry is
// inserted, even when zero, so the sparsity pattern never changes.
SpMat assemble(const Grid& g, const Interior& m, const std::vector<double>& coef) {
    const int n = g.dim();
    const auto nn = static_cast<std::size_t>(n);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m.nodes.size() * (1 + 2 * nn + 2 * nn * (nn - 1)));
    for (std::size_t r = 0; r < m.nodes.size(); ++r) {
        const std::size_t node = m.nodes[r];
        const double* a = &coef[r * nn * nn];
        auto add = [&](std::size_t other, double v) {
            const long c = m.unknown_of[other];
            if (c >= 0) trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
        };
        double center = 0.0;
        for (int i = 0; i < n; ++i) {
            const double hi2 = g.spacing(i) * g.spacing(i);
            const double aii = a[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(i)];
            center -= 2.0 * aii / hi2;
            add(node + g.stride(i), aii / hi2);
            add(node - g.stride(i), aii / hi2);
            for (int j = i + 1; j < n; ++j) {
                const double w = 2.0 * a[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)] / (4.0 * g.spacing(i) * g.spacing(j));
                const std::size_t si = g.stride(i), sj = g.stride(j);
                add(node + si + sj, w);
                add(node - si - sj, w);
                add(node + si - sj, -w);
                add(node - si + sj, -w);
            }
        }
        trip.emplace_back(static_cast<int>(r), static_cast<int>(r), center);
    }
    SpMat A(static_cast<Eigen::Index>(m.nodes.size()), static_cast<Eigen::Index>(m.nodes.size()));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

class LinearSystem {
public:
    LinearSystem(bool direct) : direct_(direct) {}

    // Solves A x = b; returns false on breakdown.
    bool solve(const SpMat& A, const Vector& b, Vector& x, std::string& note) {
        if (direct_) return solve_direct(A, b, x, note);
        SpMatRow Ar = A;
        Eigen::BiCGSTAB<SpMatRow, Eigen::IncompleteLUT<double>> it;
        it.preconditioner().setFillfactor(1);
        it.preconditioner().setDroptol(1e-3);
        it.setTolerance(1e-13);
        it.setMaxIterations(2000);
        it.compute(Ar);
        if (it.info() == Eigen::Success) {
            x = it.solve(b);
            if (it.info() == Eigen::Success && x.allFinite()) {
                ++iterative_solves_;
                return true;
            }
        }
        ++fallbacks_;
        return solve_direct(A, b, x, note);
    }

    std::string summary() const {
        std::ostringstream os;
        os << "linear: " << direct_solves_ << " direct, " << iterative_solves_ << " BiCGSTAB+ILUT";
        if (fallbacks_) os << ", " << fallbacks_ << " fallbacks to direct";
        return os.str();
    }

private:
    bool solve_direct(const SpMat& A, const Vector& b, Vector& x, std::string& note) {
        if (!analyzed_) {
            lu_.analyzePattern(A);
            analyzed_ = true;
        }
        lu_.factorize(A);
        if (lu_.info() != Eigen::Success) {
            note = "sparse LU factorization failed: " + lu_.lastErrorMessage();
            return false;
        }
        x = lu_.solve(b);
        if (lu_.info() != Eigen::Success || !x.allFinite()) {
            note = "sparse LU solve failed";
            return false;
        }
        ++direct_solves_;
        return true;
    }

    bool direct_;
    bool analyzed_ = false;
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
    int direct_solves_ = 0, iterative_solves_ = 0, fallbacks_ = 0;
};

void fill_report_stats(SolveReport& rep, const GridField& u) {
    const Grid& g = u.grid();
    std::vector<double> norms(g.size(), 0.0);
    parallel_for(g.size(), [&](std::size_t i) {
        if (g.interior(i)) norms[i] = hessian_norm(discrete_hessian(u, i));
    });
    rep.hessian_sup = *std::max_element(norms.begin(), norms.end());
    rep.osc = u.max() - u.min();
}

}  // namespace

SolveResult newton_solve(const Grid& grid, const PhaseSpec& phi, const GridField& boundary, const SolveOptions& opts) {
    if (!(boundary.grid() == grid)) throw InvalidArgument("boundary data lives on a different grid");
    if (phi.dim != grid.dim()) throw InvalidArgument("phase dimension differs from the grid");
    if (!(opts.tol > 0.0) || opts.max_iter < 1) throw InvalidArgument("solver tolerance and iteration cap must be positive");
    const int n = grid.dim();
    const auto nn = static_cast<std::size_t>(n);
    if (opts.mode == SolveMode::Supercritical && !(phi.inf > critical_phase(n)))
        throw InvalidArgument("phase range is not supercritical; subcritical-phase solving is not supported "
                              "(no comparison principle, singular solutions exist)");
    const Interior m = interior_map(grid);
    const bool direct = opts.linear == LinearSolver::Direct ||
                        (opts.linear == LinearSolver::Auto && m.nodes.size() <= kDirectSolveLimit);
    LinearSystem linear(direct);

    std::vector<double> phi_nodes(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t i) {
        if (grid.interior(i)) phi_nodes[i] = phi.at(grid.coord(i));
    });

    GridField u = boundary;
    SolveReport rep;
    std::string note;

    if (opts.initial) {
        if (!(opts.initial->grid() == grid)) throw InvalidArgument("initial guess lives on a different grid");
        for (std::size_t i : m.nodes) u[i] = (*opts.initial)[i];
    } else {
        // Poisson start: Delta_h u = n tan(mean phase / n) with the same boundary data.
        double mean = 0.0;
        for (std::size_t i : m.nodes) mean += phi_nodes[i];
        mean /= static_cast<double>(std::max<std::size_t>(1, m.nodes.size()));
        const double target = n * std::tan(mean / n);
        for (std::size_t i : m.nodes) u[i] = 0.0;
        std::vector<double> eye(m.nodes.size() * nn * nn, 0.0);
        for (std::size_t r = 0; r < m.nodes.size(); ++r)
            for (std::size_t i = 0; i < nn; ++i) eye[r * nn * nn + i * nn + i] = 1.0;
        const SpMat L = assemble(grid, m, eye);
        Vector b(static_cast<Eigen::Index>(m.nodes.size()));
        for (std::size_t r = 0; r < m.nodes.size(); ++r) b(static_cast<Eigen::Index>(r)) = -(discrete_hessian(u, m.nodes[r]).trace() - target);
        Vector x;
        // Separate system object: the Laplacian's pattern matches but its factorization must not be reused.
        LinearSystem poisson(direct);
        if (!poisson.solve(L, b, x, note)) throw SolveFailure("initial Poisson solve failed: " + note, u, rep);
        for (std::size_t r = 0; r < m.nodes.size(); ++r) u[m.nodes[r]] += x(static_cast<Eigen::Index>(r));
    }

    std::vector<double> coef(m.nodes.size() * nn * nn);
    std::vector<double> res(m.nodes.size());
    // Residual and (optionally) the linearization coefficients at every interior node.
    auto evaluate = [&](const GridField& v, bool with_coef) {
        parallel_for(m.nodes.size(), [&](std::size_t r) {
            const std::size_t node = m.nodes[r];
            const Matrix h = discrete_hessian(v, node);
            const JacobiEigen e = jacobi_eigen(h);
            res[r] = lagrangian_angle(e.values) - phi_nodes[node];
            if (with_coef) {
                Vector w(n);
                for (int i = 0; i < n; ++i) {
                    const double l = e.values[static_cast<std::size_t>(i)];
                    w(i) = 1.0 / (1.0 + l * l);
                }
                const Matrix a = e.basis * w.asDiagonal() * e.basis.transpose();
                for (std::size_t i = 0; i < nn; ++i)
                    for (std::size_t j = 0; j < nn; ++j)
                        coef[r * nn * nn + i * nn + j] = 0.5 * (a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
            }
        });
        double mx = 0.0;
        for (double x : res) mx = std::max(mx, std::abs(x));
        return mx;
    };

    double rnorm = evaluate(u, true);
    rep.residual_history.push_back(rnorm);
    while (rnorm > opts.tol) {
        if (rep.iterations >= opts.max_iter) {
            rep.final_residual_inf = rnorm;
            rep.wall_notes = linear.summary();
            fill_report_stats(rep, u);
            throw SolveFailure("Newton iteration cap reached with residual " + std::to_string(rnorm), u, rep);
        }
        const SpMat J = assemble(grid, m, coef);
        Vector b(static_cast<Eigen::Index>(m.nodes.size()));
        for (std::size_t r = 0; r < m.nodes.size(); ++r) b(static_cast<Eigen::Index>(r)) = -res[r];
        Vector dx;
        if (!linear.solve(J, b, dx, note)) {
            rep.final_residual_inf = rnorm;
            rep.wall_notes = linear.summary();
            throw SolveFailure("linear solve breakdown: " + note, u, rep);
        }
        double t = 1.0;
        GridField trial = u;
        double tnorm = 0.0;
        for (int halvings = 0;; ++halvings) {
            for (std::size_t r = 0; r < m.nodes.size(); ++r) trial[m.nodes[r]] = u[m.nodes[r]] + t * dx(static_cast<Eigen::Index>(r));
            tnorm = evaluate(trial, false);
            if (tnorm < rnorm) break;
            if (halvings >= 30) {
                evaluate(u, false);
                rep.final_residual_inf = rnorm;
                rep.wall_notes = linear.summary();
                fill_report_stats(rep, u);
                throw SolveFailure("line search could not decrease the residual", u, rep);
            }
            t *= 0.5;
            ++rep.damping_events;
        }
        u = std::move(trial);
        ++rep.iterations;
        rnorm = evaluate(u, true);
        rep.residual_history.push_back(rnorm);
    }
    rep.final_residual_inf = rnorm;
    rep.wall_notes = linear.summary();
    fill_report_stats(rep, u);
    return {std::move(u), std::move(rep)};
}

GridField barrier_shift(const GridField& u, double delta, double r) {
    const Grid& g = u.grid();
    GridField out = u;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.coord(i);
        double r2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        out[i] += delta * (r2 - r * r);
    }
    return out;
}

SandwichResult sandwich_check(const GridField& lower, const GridField& mid, const GridField& upper) {
    if (!(lower.grid() == mid.grid()) || !(mid.grid() == upper.grid())) throw InvalidArgument("sandwich fields live on different grids");
    const double slack = tol::kSandwichSlack * (1.0 + mid.sup_norm());
    SandwichResult out;
    out.worst_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mid.size(); ++i) {
        const double v = std::max(lower[i] - mid[i], mid[i] - upper[i]);
        if (v > out.worst_violation) {
            out.worst_violation = v;
            out.node = i;
        }
    }
    out.ok = out.worst_violation <= slack;
    return out;
}

}  // namespace lagmc

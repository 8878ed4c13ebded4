#include "lagmc/manufactured.hpp"

#include "lagmc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lagmc {

AnalyticField::AnalyticField(Matrix quadratic, std::vector<Ridge> ridges) : q_(std::move(quadratic)), ridges_(std::move(ridges)) {
    if (q_.rows() != q_.cols() || q_.rows() < 2) throw InvalidArgument("quadratic part must be square with n >= 2");
    if (max_asymmetry(q_) != 0.0) throw InvalidArgument("quadratic part must be symmetric");
    for (const auto& r : ridges_)
        if (static_cast<Eigen::Index>(r.k.size()) != q_.rows()) throw InvalidArgument("ridge direction has the wrong length");
}

double AnalyticField::profile_derivative(const Ridge& r, double t, int order) const {
    if (r.profile == Profile::Exp) return r.amp * std::exp(t);
    switch (order % 4) {
        case 0: return r.amp * std::sin(t);
        case 1: return r.amp * std::cos(t);
        case 2: return -r.amp * std::sin(t);
        default: return -r.amp * std::cos(t);
    }
}

namespace {

double ridge_arg(const AnalyticField::Ridge& r, std::span<const double> x) {
    double t = r.shift;
    for (std::size_t i = 0; i < r.k.size(); ++i) t += r.k[i] * x[i];
    return t;
}

}  // namespace

double AnalyticField::value(std::span<const double> x) const {
    const int n = dim();
    double v = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v += 0.5 * q_(i, j) * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
    for (const auto& r : ridges_) v += profile_derivative(r, ridge_arg(r, x), 0);
    return v;
}

Vector AnalyticField::gradient(std::span<const double> x) const {
    const int n = dim();
    Vector g = Vector::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i) += q_(i, j) * x[static_cast<std::size_t>(j)];
    for (const auto& r : ridges_) {
        const double d = profile_derivative(r, ridge_arg(r, x), 1);
        for (int i = 0; i < n; ++i) g(i) += d * r.k[static_cast<std::size_t>(i)];
    }
    return g;
}

Matrix AnalyticField::hessian(std::span<const double> x) const {
    const int n = dim();
    Matrix h = q_;
    for (const auto& r : ridges_) {
        const double d = profile_derivative(r, ridge_arg(r, x), 2);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) h(i, j) += d * r.k[static_cast<std::size_t>(i)] * r.k[static_cast<std::size_t>(j)];
    }
    return h;
}

std::vector<double> AnalyticField::third(std::span<const double> x) const {
    const auto n = static_cast<std::size_t>(dim());
    std::vector<double> t(n * n * n, 0.0);
    for (const auto& r : ridges_) {
        const double d = profile_derivative(r, ridge_arg(r, x), 3);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t l = 0; l < n; ++l) t[(i * n + j) * n + l] += d * r.k[i] * r.k[j] * r.k[l];
    }
    return t;
}

std::vector<double> AnalyticField::fourth(std::span<const double> x) const {
    const auto n = static_cast<std::size_t>(dim());
    std::vector<double> t(n * n * n * n, 0.0);
    for (const auto& r : ridges_) {
        const double d = profile_derivative(r, ridge_arg(r, x), 4);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t l = 0; l < n; ++l)
                    for (std::size_t m = 0; m < n; ++m) t[((i * n + j) * n + l) * n + m] += d * r.k[i] * r.k[j] * r.k[l] * r.k[m];
    }
    return t;
}

PhaseJet phase_jet(const AnalyticField& u, std::span<const double> x) {
    const int n = u.dim();
    const auto nn = static_cast<std::size_t>(n);
    const Matrix h = u.hessian(x);
    const auto t3 = u.third(x);
    const auto t4 = u.fourth(x);
    const Matrix ginv = operator_derivative(h);
    auto slice3 = [&](int g) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < nn; ++i)
            for (std::size_t j = 0; j < nn; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t3[(i * nn + j) * nn + static_cast<std::size_t>(g)];
        return m;
    };
    std::vector<Matrix> ug;
    for (int g = 0; g < n; ++g) ug.push_back(slice3(g));
    PhaseJet jet;
    jet.value = lagrangian_angle(jacobi_eigen(h).values);
    jet.gradient.resize(n);
    jet.hessian.resize(n, n);
    for (int g = 0; g < n; ++g) jet.gradient(g) = (ginv * ug[static_cast<std::size_t>(g)]).trace();
    for (int g = 0; g < n; ++g) {
        for (int d = 0; d < n; ++d) {
            Matrix ugd(n, n);
            for (std::size_t i = 0; i < nn; ++i)
                for (std::size_t j = 0; j < nn; ++j)
                    ugd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t4[((i * nn + j) * nn + static_cast<std::size_t>(g)) * nn + static_cast<std::size_t>(d)];
            const Matrix& Ug = ug[static_cast<std::size_t>(g)];
            const Matrix& Ud = ug[static_cast<std::size_t>(d)];
            jet.hessian(g, d) = (ginv * ugd).trace() - (ginv * (Ud * h + h * Ud) * ginv * Ug).trace();
        }
    }
    return jet;
}

const char* to_string(Catalog c) {
    switch (c) {
        case Catalog::Quadratic: return "quadratic";
        case Catalog::Convex: return "convex";
        case Catalog::Supercritical: return "supercritical";
    }
    return "?";
}

std::optional<Catalog> catalog_from_string(const std::string& s) {
    for (auto c : {Catalog::Quadratic, Catalog::Convex, Catalog::Supercritical})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

namespace {

AnalyticField build_field(Catalog choice, int n, const CatalogParams& p) {
    using Ridge = AnalyticField::Ridge;
    const auto nn = static_cast<std::size_t>(n);
    switch (choice) {
        case Catalog::Quadratic: {
            std::vector<double> c = p.c.empty() ? std::vector<double>(nn, 1.0) : p.c;
            if (c.size() != nn) throw InvalidArgument("quadratic coefficients need n entries");
            Matrix q = Matrix::Zero(n, n);
            for (int i = 0; i < n; ++i) q(i, i) = c[static_cast<std::size_t>(i)];
            return AnalyticField(q, {});
        }
        case Catalog::Convex: {
            std::vector<double> b = p.b;
            if (b.empty()) {
                b.assign(nn, 0.0);
                b[0] = 1.0;
            }
            if (b.size() != nn) throw InvalidArgument("exponential direction needs n entries");
            return AnalyticField(p.s * Matrix::Identity(n, n), {Ridge{p.a, b, 0.0, AnalyticField::Profile::Exp}});
        }
        case Catalog::Supercritical: {
            Matrix q = Matrix::Zero(n, n);
            std::vector<Ridge> ridges;
            if (n == 2) {
                q.diagonal() << 2.0, -0.3;
                ridges.push_back(Ridge{0.1, {1.0, 0.7}, 0.3, AnalyticField::Profile::Sin});
                ridges.push_back(Ridge{0.08, {-0.6, 0.9}, 1.0, AnalyticField::Profile::Sin});
            } else {
                q.diagonal() << 3.0, 2.0, -0.3;
                ridges.push_back(Ridge{0.1, {1.0, 0.7, 0.5}, 0.3, AnalyticField::Profile::Sin});
                ridges.push_back(Ridge{0.08, {-0.6, 0.9, 0.4}, 1.0, AnalyticField::Profile::Sin});
            }
            return AnalyticField(q, std::move(ridges));
        }
    }
    throw InvalidArgument("unknown catalog entry");
}

std::string describe_node(const Grid& g, std::size_t node) {
    std::ostringstream os;
    const Point x = g.coord(node);
    os << "node " << node << " at (";
    for (int a = 0; a < g.dim(); ++a) os << (a ? ", " : "") << x[static_cast<std::size_t>(a)];
    os << ")";
    return os.str();
}

}  // namespace

ManufacturedProblem manufactured_problem(Catalog choice, const Grid& grid, const CatalogParams& params) {
    const int n = grid.dim();
    AnalyticField u = build_field(choice, n, params);
    const auto nn = static_cast<std::size_t>(n);
    GridField exact(grid);
    double min_margin = 1e300, min_eig = 1e300;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.coord(i);
        std::span<const double> xs(x.data(), nn);
        exact[i] = u.value(xs);
        const auto e = jacobi_eigen(u.hessian(xs));
        const double margin = lagrangian_angle(e.values) - critical_phase(n);
        min_margin = std::min(min_margin, margin);
        min_eig = std::min(min_eig, e.values.back());
        if (choice == Catalog::Convex && !(e.values.back() > 0.0))
            throw InvalidArgument("convex catalog entry loses convexity at " + describe_node(grid, i));
        if (choice == Catalog::Supercritical && margin < params.theta)
            throw InvalidArgument("supercritical catalog entry falls below the margin at " + describe_node(grid, i));
    }
    // Lipschitz bound: max |D phi| over a lattice twice as fine as the grid, plus 5%.
    double lip = 0.0;
    if (choice != Catalog::Quadratic) {
        std::vector<double> lo(nn), hi(nn);
        std::vector<int> pts(nn);
        for (int a = 0; a < n; ++a) {
            lo[static_cast<std::size_t>(a)] = grid.lo(a);
            hi[static_cast<std::size_t>(a)] = grid.hi(a);
            pts[static_cast<std::size_t>(a)] = std::min(2 * grid.points(a) - 1, 65);
        }
        const Grid fine(lo, hi, pts);
        for (std::size_t i = 0; i < fine.size(); ++i) {
            const Point x = fine.coord(i);
            lip = std::max(lip, phase_jet(u, std::span<const double>(x.data(), nn)).gradient.norm());
        }
        lip *= 1.05;
    }
    AnalyticField uf = u;
    PhaseFn f = [uf, nn](std::span<const double> x) { return lagrangian_angle(jacobi_eigen(uf.hessian(x.first(nn))).values); };
    PhaseSpec phi = choice == Catalog::Quadratic ? PhaseSpec::constant(n, f(std::span<const double>(grid.coord(0).data(), nn)))
                                                 : PhaseSpec::make(n, f, lip, grid);
    return ManufacturedProblem{choice, std::move(u), std::move(exact), std::move(phi), min_margin, min_eig};
}

}  // namespace lagmc

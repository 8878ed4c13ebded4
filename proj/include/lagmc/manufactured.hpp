#pragma once

#include "lagmc/grid.hpp"
#include "lagmc/phase.hpp"
#include "lagmc/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lagmc {

// u(x) = 1/2 x^T Q x + sum_r amp_r f_r(k_r . x + shift_r), f in {exp, sin}.
// All derivatives are exact: D^m of a ridge is amp f^{(m)} k^{(x)m}.
class AnalyticField {
public:
    enum class Profile { Exp, Sin };
    struct Ridge {
        double amp = 0.0;
        std::vector<double> k;
        double shift = 0.0;
        Profile profile = Profile::Sin;
    };

    AnalyticField(Matrix quadratic, std::vector<Ridge> ridges);

    int dim() const { return static_cast<int>(q_.rows()); }
    double value(std::span<const double> x) const;
    Vector gradient(std::span<const double> x) const;
    Matrix hessian(std::span<const double> x) const;
    // Flattened n^3 tensor, entry (i, j, l) at (i n + j) n + l.
    std::vector<double> third(std::span<const double> x) const;
    // Flattened n^4 tensor, entry (i, j, l, m) at ((i n + j) n + l) n + m.
    std::vector<double> fourth(std::span<const double> x) const;

private:
    double profile_derivative(const Ridge& r, double t, int order) const;
    Matrix q_;
    std::vector<Ridge> ridges_;
};

// Phase phi = F(D^2 u) of an analytic field and its first two derivatives:
// phi_g = tr(G^{-1} U_g), phi_gd = tr(G^{-1} U_gd) - tr(G^{-1}(U_d H + H U_d) G^{-1} U_g),
// with G = I + H^2 and U_g the Hessian's derivative along x_g.
struct PhaseJet {
    double value = 0.0;
    Vector gradient;
    Matrix hessian;
};
PhaseJet phase_jet(const AnalyticField& u, std::span<const double> x);

enum class Catalog { Quadratic, Convex, Supercritical };
const char* to_string(Catalog c);
std::optional<Catalog> catalog_from_string(const std::string& s);

struct CatalogParams {
    std::vector<double> c;  // quadratic diagonal, default all ones
    double s = 2.0;         // convex family scale
    double a = 0.1;         // convex family exponential amplitude
    std::vector<double> b;  // convex family exponential direction, default e_1
    double theta = 0.2;     // supercritical family required margin
};

struct ManufacturedProblem {
    Catalog choice;
    AnalyticField u;
    GridField u_exact;
    PhaseSpec phi;
    // Smallest nodal Theta - (n-2)pi/2 and smallest nodal eigenvalue.
    double min_phase_margin = 0.0;
    double min_eigenvalue = 0.0;
};

// Throws InvalidArgument naming the first node that violates the family's regime.
ManufacturedProblem manufactured_problem(Catalog choice, const Grid& grid, const CatalogParams& params = {});

}  // namespace lagmc

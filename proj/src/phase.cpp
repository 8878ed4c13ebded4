#include "lagmc/phase.hpp"

#include "lagmc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lagmc {

PhaseRegime classify_range(double inf, double sup, int n) {
    const double bound = n * std::numbers::pi / 2.0;
    if (!(inf > -bound) || !(sup < bound)) throw OutOfRange("phase range leaves (-n pi/2, n pi/2)");
    if (inf >= 0.0) return phase_classify(inf, n);
    if (sup <= 0.0) return phase_classify(sup, n);
    return {PhaseTag::Subcritical, 0.0};
}

PhaseSpec PhaseSpec::make(int dim, PhaseFn f, double lipschitz, const Grid& box) {
    if (box.dim() != dim) throw InvalidArgument("phase dimension differs from the box");
    if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz)) throw InvalidArgument("Lipschitz constant must be finite and >= 0");
    PhaseSpec p;
    p.dim = dim;
    p.evaluator = std::move(f);
    p.lipschitz = lipschitz;
    p.inf = std::numeric_limits<double>::infinity();
    p.sup = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < box.size(); ++i) {
        const double v = p.at(box.coord(i));
        if (!std::isfinite(v)) throw InvalidArgument("phase is not finite on the box");
        p.inf = std::min(p.inf, v);
        p.sup = std::max(p.sup, v);
    }
    p.regime = classify_range(p.inf, p.sup, dim);
    return p;
}

PhaseSpec PhaseSpec::constant(int dim, double value) {
    PhaseSpec p;
    p.dim = dim;
    p.evaluator = [value](std::span<const double>) { return value; };
    p.lipschitz = 0.0;
    p.inf = p.sup = value;
    p.regime = classify_range(value, value, dim);
    return p;
}

}  // namespace lagmc

#pragma once

#include "lagmc/grid.hpp"
#include "lagmc/spectral.hpp"

#include <functional>
#include <span>

namespace lagmc {

using PhaseFn = std::function<double(std::span<const double>)>;

// A Lipschitz phase on a working box with its sampled range and regime.
struct PhaseSpec {
    int dim = 2;
    PhaseFn evaluator;
    double lipschitz = 0.0;
    double inf = 0.0;
    double sup = 0.0;
    PhaseRegime regime;

    double operator()(std::span<const double> x) const { return evaluator(x); }
    double at(const Point& p) const { return evaluator(std::span<const double>(p.data(), static_cast<std::size_t>(dim))); }

    // Samples the range on the nodes of `box`, classifies the regime and
    // rejects ranges leaving (-n pi/2, n pi/2).
    static PhaseSpec make(int dim, PhaseFn f, double lipschitz, const Grid& box);
    static PhaseSpec constant(int dim, double value);
};

// Regime of a phase range: classified at inf when the range is positive,
// at sup when negative, subcritical when it changes sign.
PhaseRegime classify_range(double inf, double sup, int n);

}  // namespace lagmc

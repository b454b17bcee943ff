// propagation.hpp: Time-local master-equation integration and exact-map hand-over at poles
#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hamens/dynamical_map.hpp"
#include "hamens/generator.hpp"

namespace hamens {

struct IntegrationError : std::runtime_error {
    IntegrationError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

struct Tolerance {
    double relative = 1e-9;
    double absolute = 1e-12;
};

struct StateTrajectory {
    std::vector<double> times;
    std::vector<Vec3> bloch;
    // false where the state came from direct map application instead of integration
    std::vector<bool> integrated;
};

using GeneratorFunction = std::function<LindbladGenerator(double)>;

// Bloch-form integration of dr/dt = L(t) r with L = K − tr(K) I + [h]×, using an embedded
// Dormand–Prince 5(4) pair with dense output. `times` must be increasing and lie within
// [t0, t1]; the span is assumed pole-free. Generator failures and step-size collapse are
// reported as IntegrationError at the failing time.
StateTrajectory integrate_master(const GeneratorFunction& gen, const DensityMatrix& rho0, double t0, double t1,
                                 std::span<const double> times, Tolerance tol = {});

// ½|r_a − r_b|
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double trace_distance(const Vec3& a, const Vec3& b);

// Lab-frame generator of the family (principal-frame extraction rotated back).
GeneratorFunction family_generator(const MapFamily& family);

// Integrates between consecutive poles; each segment restarts from the exact map at its
// left end, and grid points within `margin` of a pole take the exact map directly.
StateTrajectory propagate_hybrid(const MapFamily& family, const DensityMatrix& rho0, std::span<const double> grid,
                                 Tolerance tol = {}, double margin = 1e-3);

} // namespace hamens

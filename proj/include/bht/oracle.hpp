#pragma once

#include <vector>

#include "bht/math.hpp"
#include "bht/trace_result.hpp"

namespace bht {

// Brute-force reference integrator for the beam equation. Slow and accurate;
// used only by tests and the `verify` subcommand, never by the renderer.

struct PathSample {
    double phi = 0, u = 0, udot = 0, t = 0;
};

enum class Terminal {
    EscapedToInfinity,
    PlungedAtHorizon,
    ReachedMaxPhi,
};

struct GeodesicPath {
    Terminal terminal = Terminal::ReachedMaxPhi;
    std::vector<PathSample> samples;  // decimated to ~8k entries, first and last kept
    double e = 0;                     // nonnegative motion constant of the initial state
    double max_energy_residual = 0;   // max |udot^2 - (e^2 - u^2(1-u))| over all steps
    double asymptote_phi = 0;         // azimuth of the escape asymptote, if escaped

    const PathSample& back() const { return samples.back(); }
};

// RK4 integration of u'' = (3/2)u^2 - u in the azimuth phi, with coordinate
// time slaved through dt/dphi = e(1/u^2 + 1/u + 1/(1-u)). The time channel
// skips contributions at u <= 0 and freezes above u = 0.999 where it diverges
// toward the horizon; beams are only timed on u <= 1/3 where it is accurate.
// step must be <= 1e-5. escape_u is the inverse radius below which an outgoing
// beam counts as escaped.
GeodesicPath integrate(double u0, double udot0, double step, double max_phi,
                       double escape_u = 1e-7);

// Same integration without the reference step cap. At the reference step the
// truncation error sits below the double roundoff floor, so convergence-order
// measurements (and bulk yes/no classification sweeps) need coarser steps.
GeodesicPath integrate_with_step(double u0, double udot0, double step, double max_phi,
                                 double escape_u = 1e-7);

// Reference version of the full per-beam query: camera at inverse radius
// 1/p_r, beam angle delta from outward radial, disc line at alpha + k pi in
// the beam plane, disc band u_oc <= u <= u_ic. Integration steps are split
// exactly at each crossing azimuth (phi is the independent variable, so event
// localization is exact). t_ret of a hit is minus the coordinate-time travel
// from the hit to the camera.
TraceResult reference_trace(double p_r, double delta, double alpha, double u_ic,
                            double u_oc, double step, double max_phi = 64.0 * kPi);

// Canonical table row: a beam arriving from infinity with motion constant e,
// starting just outside u = 0. Used to cross-check precomputed rows.
GeodesicPath integrate_from_infinity(double e, double step, double max_phi = 64.0 * kPi);

}  // namespace bht

#pragma once

#include "bht/math.hpp"

namespace bht {

// Everything below works in horizon units: the Schwarzschild radius is 1 and
// radii enter as the inverse radius u = 1/r. The photon effective potential
// u^2 (1 - u) peaks at u = 2/3 with value 4/27.
inline constexpr double kPhotonSphereU = 2.0 / 3.0;
inline constexpr double kCritE2 = 4.0 / 27.0;
inline constexpr double kDiscInnerU = 1.0 / 3.0;  // innermost stable circular orbit

// Basis of a static observer at (r, theta, phi), as four-vectors in
// pseudo-Cartesian components [t, x, y, z] where the spatial triplet is the
// Euclidean direction scaled by the orthonormal coordinate increments.
struct StaticBasis {
    Vec4 e_t, e_r, e_theta, e_phi;
};

StaticBasis static_basis(double r, double theta, double phi);

// Metric contraction of two four-vectors given in pseudo-Cartesian components
// at a point with inverse radius u and radial unit direction n (signature +---).
double metric_dot(double u, Vec3 n, Vec4 a, Vec4 b);

// Camera frame: timelike unit e_tau plus the spacelike image axes. All
// orthonormal in the metric at the camera position.
struct CameraBasis {
    Vec4 e_tau, e_w, e_h, e_d;
};

// Null direction of the view beam leaving the camera at image coordinates
// (q_w, q_h) with focal length f, traced backward in time.
Vec4 beam_direction(double q_w, double q_h, double f, const CameraBasis& cam);

// Orthonormal frame adapted to the plane of a beam: ex points radially outward
// at the camera, ey is the in-plane direction of travel, ez the plane normal.
// delta is the angle from outward radial to the beam direction, alpha the
// in-plane angle from ex to the line where the beam plane meets the equatorial
// plane (wrapped so alpha is in [0, pi); the crossing set {alpha + k pi} is
// unchanged by the wrap).
struct BeamFrame {
    Vec3 ex, ey, ez;
    double delta = 0;
    double alpha = 0;
    bool radial = false;  // beam parallel to the radial direction; plane undefined
};

// p is the camera position vector (spatial, pseudo-Cartesian), d the null beam
// direction from beam_direction().
BeamFrame make_beam_frame(Vec3 p, Vec4 d);

// Fate of a beam. Above the critical energy there is no turning point, so the
// current direction decides; below it the potential barrier at the apsis (or
// the photon sphere) decides regardless of direction.
enum class RayClass {
    Plunging,    // e^2 >= 4/27 moving inward: falls through the horizon
    Escaping,    // e^2 >= 4/27 moving outward: nothing can turn it around
    Scattering,  // e^2 < 4/27 outside the photon sphere: turns at the apsis
    Trapped,     // e^2 < 4/27 inside the photon sphere: cannot get out
};

// Motion constants of a beam: u' = du/dphi in the beam plane and the squared
// energy-like constant e^2 = u'^2 + u^2 (1 - u).
struct RayState {
    double u = 0;
    double udot = 0;
    double e2 = 0;
    RayClass cls = RayClass::Scattering;
    bool radial = false;
};

// State at the camera (inverse radius u, polar angle delta from outward
// radial). The identity e2 = udot^2 + u^2 (1 - u) holds exactly by
// construction. Beams within ~1e-12 of radial are flagged instead of being
// given a divergent udot.
RayState ray_constants(double u, double delta);

// Largest inverse radius reached by a scattering ray with squared energy e2,
// i.e. the smallest root of u^2 (1 - u) = e2 in [0, 2/3]. Exact at both
// endpoints: apsis_u(0) = 0 and apsis_u(4/27) = 2/3. e2 above the critical
// value (beyond a 1e-12 slack) has no apsis and is a domain error.
double apsis_u(double e2);

// Right-hand side of the ray equation u'' = (3/2) u^2 - u.
inline double u_accel(double u) { return u * (1.5 * u - 1.0); }

// dt/dphi along a beam, in the exact partial-fraction form
// e (1/u^2 + 1/u + 1/(1-u)) which avoids the cancellation in e/(u^2 - u^3).
inline double time_integrand(double u, double e) {
    return e * (1.0 / (u * u) + 1.0 / u + 1.0 / (1.0 - u));
}

}  // namespace bht

#pragma once

#include "bht/geodesic.hpp"
#include "bht/math.hpp"

namespace bht {

// Row-major 4x4 matrix acting on frame components ordered (time, then the
// three spatial axes of whichever orthonormal tetrad is in play).
struct Mat4 {
    double m[4][4] = {};
};

Mat4 mat_identity();
Mat4 mat_mul(const Mat4& a, const Mat4& b);

// Applies a to the component vector v, with v.t as component 0.
Vec4 mat_apply(const Mat4& a, Vec4 v);

// Minkowski product of orthonormal-frame components, signature +---.
inline double minkowski_dot(Vec4 a, Vec4 b) {
    return a.t * b.t - a.x * b.x - a.y * b.y - a.z * b.z;
}

// Schwarzschild coordinates of an event outside the horizon.
struct SchwarzschildPosition {
    double t = 0;
    double r = 0;
    double theta = 0;
    double phi = 0;
};

// Timelike geodesic state in an orbital plane of inclination chi. (r, psi)
// are polar coordinates within the plane; e_orb and l_orb are the conserved
// energy and angular momentum per unit mass. The plane is fixed: psi = 0 lies
// at azimuth 0 and the ascending direction is toward +y.
struct OrbitState {
    double r = 0;        // areal radius
    double psi = 0;      // polar angle in the orbital plane
    double chi = 0;      // inclination of the orbital plane
    double t = 0;        // coordinate time
    double dr_dtau = 0;  // radial proper-time velocity
    double e_orb = 0;    // conserved energy per unit mass
    double l_orb = 0;    // conserved angular momentum per unit mass
    double tau = 0;      // accumulated proper time
    bool horizon = false;  // a step reached r <= 1; state is frozen
};

// Radial acceleration d2r/dtau2 of a timelike orbit with squared angular
// momentum l2, at inverse radius u.
inline double orbit_radial_accel(double u, double l2) {
    const double u2 = u * u;
    return 0.5 * (2.0 * l2 * u2 * u - 3.0 * l2 * u2 * u2 - u2);
}

// (dr/dtau)^2 minus its value implied by the constants of motion; zero for an
// exact solution, and the quantity orbit_step must keep small.
inline double orbit_energy_residual(const OrbitState& s) {
    const double u = 1.0 / s.r, l2 = s.l_orb * s.l_orb;
    return s.dr_dtau * s.dr_dtau -
           (s.e_orb * s.e_orb + l2 * u * u * u - l2 * u * u + u - 1.0);
}

// Initial orbit from radius r0, launch angle delta0 measured from the outward
// radial direction (tan delta = r dpsi/dr, so delta0 < pi/2 moves outward),
// and speed v0 relative to a static observer. v0 = 0 is a static release
// (l_orb = 0, radial plunge follows). Throws std::invalid_argument when
// r0 <= 1, v0 is outside [0, 1), or delta0 is outside (0, pi).
OrbitState orbit_init(double r0, double delta0, double v0, double chi);

// One leapfrog step of size dtau: half-kick, drift, half-kick on r, with t
// and psi advanced by the midpoint rates dt/dtau = e/(1-u), dpsi/dtau = l u^2.
// Reaching r <= 1 sets the horizon flag without advancing; further steps are
// no-ops. Throws std::invalid_argument for dtau <= 0.
OrbitState orbit_step(const OrbitState& s, double dtau);

// Schwarzschild coordinates of the orbit point: theta = arccos(cos psi sin
// chi), phi = arctan2(sin psi, cos chi cos psi).
SchwarzschildPosition schwarzschild_position(const OrbitState& s);

// Frame chain from the static observer tetrad (t, r, theta, phi) to the
// camera tetrad (tau, w, h, d): rot aligns the angular axes with the orbital
// plane (r, plane normal, motion tangent), boost applies the orbital
// velocity, orient is the caller's view rotation. lambda = orient * boost *
// rot; its rows are the camera basis vectors in static-frame components.
struct LorentzChain {
    Mat4 rot;
    Mat4 boost;
    Mat4 orient;
    Mat4 lambda;
    Vec3 v;           // camera velocity in the (r, normal, tangent) frame
    double gamma = 1;  // Lorentz factor e / sqrt(1 - u)
};

// Builds the chain at the current orbit point. Throws std::domain_error at or
// inside the horizon and std::runtime_error if the velocity reaches light
// speed (integration blew up).
LorentzChain lorentz_chain(const OrbitState& s, const Mat4& orient);

// View rotation for lorentz_chain: with zero angles the camera looks inward
// along -e_r with the orbital plane normal as screen up and the direction of
// motion to screen left (w = -tangent, h = normal, d = radial). Positive yaw
// turns the view toward screen right, positive pitch toward screen up,
// positive roll turns e_w toward e_h; applied in that order about the moving
// camera axes.
Mat4 orientation_matrix(double yaw, double pitch, double roll);

// Camera tetrad as pseudo-Cartesian four-vectors: rows of lambda contracted
// with the static basis at pos. Feed to beam_direction().
CameraBasis camera_basis(const SchwarzschildPosition& pos, const Mat4& lambda);

}  // namespace bht

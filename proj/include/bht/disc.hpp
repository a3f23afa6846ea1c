#pragma once

#include <cstdint>
#include <vector>

#include "bht/math.hpp"

namespace bht {

// Complete elliptic integral of the first kind, K(k) with modulus k in
// [0, 1), evaluated by the arithmetic-geometric mean. K(0) = pi/2 exactly.
double elliptic_k(double k);

// One streak of disc material on a precessing quasi-circular orbit between
// inverse radii u1 and u2. The radial oscillation closes in azimuth every
// 4K/sqrt(u3 - u1), which differs from 2 pi unless the orbit is circular,
// so the apsides drift each revolution.
struct DiscParticle {
    double u1 = 0, u2 = 0;  // orbit bounds in inverse radius, u1 <= u2 <= 1/3
    double phi0 = 0;        // orbital phase at t = 0
    double u3 = 0;          // 1 - u1 - u2
    double kappa = 0;       // elliptic modulus of the exact orbit
    double k = 0;           // K(kappa)
    double u_bar = 0;       // (u1 + u2) / 2
};

// Fills the derived fields. Requires 0 < u1 <= u2 <= 1/3.
DiscParticle make_disc_particle(double u1, double u2, double phi0);

// The particle's angular position along its orbit at coordinate time t.
double particle_phase(const DiscParticle& p, double t);

// Inverse radius of the particle point parameterized by orbit phase angle
// phi_a (the sin^2 radial oscillation profile).
double particle_u(const DiscParticle& p, double phi_a);

// Density contributed by one particle at the hit point (t, r, phi) in the
// equatorial plane. The particle is a linear streak spanning parameter
// a in [0, 2 pi) ahead of its phase; the kernel is max(0, 1 - d^2)^2 on the
// streak distance d, with d scaled by 1/falloff.
double particle_density(double t, double r, double phi, const DiscParticle& p,
                        double falloff = 1.0);

struct DiscModel {
    double u_ic = 1.0 / 3.0;  // inner edge (largest inverse radius), <= 1/3
    double u_oc = 0.05;       // outer edge
    double t_scale = 10000;   // peak temperature in kelvin
    double density_falloff = 1.0;
    std::vector<DiscParticle> particles;
};

// Black-body temperature at inverse radius u: profile u^3 (1 - sqrt(3 u)),
// normalized so the maximum (at uit = 12/49) equals t_scale. Domain
// 0 < u <= 1/3; outside it throws std::domain_error.
double disc_temperature(double u, double t_scale);

struct DiscSample {
    Vec3 xyz{0, 0, 0};   // emitted XYZ, already scaled by density
    double density = 0;  // summed particle density at the hit
};

// Emitted light at inverse radius u, retarded time t_ret, azimuth phi:
// black-body XYZ at disc_temperature(u) times the total particle density.
// Outside the [u_oc, u_ic] band both fields are zero.
DiscSample disc_radiance(double u, double t_ret, double phi,
                         const DiscModel& model);

// Deterministic procedural model: n particles with orbit bounds drawn
// uniformly in [u_oc, u_ic] (sorted per pair) and phases uniform in
// [0, 2 pi), from a splitmix64 stream on the seed.
DiscModel make_disc_model(uint32_t n_particles, double u_ic, double u_oc,
                          double t_scale, double density_falloff,
                          uint64_t seed);

}  // namespace bht

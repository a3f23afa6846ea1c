#include "bht/disc.hpp"

#include <cmath>
#include <stdexcept>

#include "bht/color.hpp"
#include "bht/rng.hpp"

namespace bht {

namespace {

// Peak of u^3 (1 - sqrt(3 u)) over (0, 1/3], attained at u = 12/49:
// 3 u^2 = (7/2) sqrt(3) u^(5/2) there, giving 1728 / 7^7.
constexpr double kProfilePeak = 1728.0 / 823543.0;

double wrap_two_pi(double a) {
    a = std::fmod(a, 2.0 * kPi);
    return a < 0 ? a + 2.0 * kPi : a;
}

}  // namespace

double elliptic_k(double k) {
    if (!(k >= 0.0) || k >= 1.0)
        throw std::domain_error("elliptic_k: modulus must be in [0, 1)");
    double a = 1.0;
    double b = std::sqrt(1.0 - k * k);
    // Quadratic convergence reaches the rounding floor in ~5 steps; the
    // iteration cap guards against a last-ulp stall.
    for (int it = 0; it < 64 && a - b > 4e-16 * a; ++it) {
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return kPi / (a + b);
}

DiscParticle make_disc_particle(double u1, double u2, double phi0) {
    if (!(u1 > 0.0) || u1 > u2 || u2 > 1.0 / 3.0)
        throw std::invalid_argument(
            "make_disc_particle: need 0 < u1 <= u2 <= 1/3");
    DiscParticle p;
    p.u1 = u1;
    p.u2 = u2;
    p.phi0 = phi0;
    p.u3 = 1.0 - u1 - u2;
    p.kappa = u2 > u1 ? std::sqrt((u2 - u1) / (p.u3 - u1)) : 0.0;
    p.k = elliptic_k(p.kappa);
    p.u_bar = 0.5 * (u1 + u2);
    return p;
}

double particle_phase(const DiscParticle& p, double t) {
    return std::sqrt(0.5 * p.u_bar * p.u_bar * p.u_bar) * t + p.phi0;
}

double particle_u(const DiscParticle& p, double phi_a) {
    const double s =
        std::sin(kPi / (4.0 * p.k) * phi_a * std::sqrt(p.u3 - p.u1));
    return p.u1 + (p.u2 - p.u1) * s * s;
}

double particle_density(double t, double r, double phi, const DiscParticle& p,
                        double falloff) {
    const double phase = particle_phase(p, t);
    const double a = wrap_two_pi(phi - phase);
    const double du = r - 1.0 / particle_u(p, a + phase);
    const double d2 = sqr(a / kPi - 1.0) + du * du;
    const double v = 1.0 - d2 / (falloff * falloff);
    return v > 0 ? v * v : 0.0;
}

double disc_temperature(double u, double t_scale) {
    if (!(u > 0.0) || u > 1.0 / 3.0)
        throw std::domain_error("disc_temperature: need 0 < u <= 1/3");
    const double profile = u * u * u * (1.0 - std::sqrt(3.0 * u));
    return t_scale * std::pow(profile / kProfilePeak, 0.25);
}

DiscSample disc_radiance(double u, double t_ret, double phi,
                         const DiscModel& model) {
    DiscSample out;
    if (!(u >= model.u_oc) || u > model.u_ic) return out;
    const double r = 1.0 / u;
    for (const DiscParticle& p : model.particles)
        out.density += particle_density(t_ret, r, phi, p, model.density_falloff);
    if (out.density > 0)
        out.xyz = out.density * blackbody_xyz(disc_temperature(u, model.t_scale));
    return out;
}

DiscModel make_disc_model(uint32_t n_particles, double u_ic, double u_oc,
                          double t_scale, double density_falloff,
                          uint64_t seed) {
    if (!(u_oc > 0.0) || !(u_oc < u_ic) || u_ic > 1.0 / 3.0)
        throw std::invalid_argument(
            "make_disc_model: need 0 < u_oc < u_ic <= 1/3");
    if (!(t_scale > 0.0) || !(density_falloff > 0.0))
        throw std::invalid_argument(
            "make_disc_model: temperature and falloff must be positive");
    DiscModel m;
    m.u_ic = u_ic;
    m.u_oc = u_oc;
    m.t_scale = t_scale;
    m.density_falloff = density_falloff;
    m.particles.reserve(n_particles);
    SplitMix64 rng{seed};
    for (uint32_t i = 0; i < n_particles; ++i) {
        double a = rng.uniform(u_oc, u_ic);
        double b = rng.uniform(u_oc, u_ic);
        if (a > b) std::swap(a, b);
        const double phi0 = rng.uniform(0.0, 2.0 * kPi);
        m.particles.push_back(make_disc_particle(a, b, phi0));
    }
    return m;
}

}  // namespace bht

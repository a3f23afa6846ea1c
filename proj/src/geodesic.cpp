#include "bht/geodesic.hpp"

#include <cmath>
#include <stdexcept>

namespace bht {

StaticBasis static_basis(double r, double theta, double phi) {
    if (r <= 1.0) throw std::domain_error("static_basis: r must be outside the horizon");
    const double u = 1.0 / r;
    const double root = std::sqrt(1.0 - u);
    const double st = std::sin(theta), ct = std::cos(theta);
    const double sp = std::sin(phi), cp = std::cos(phi);
    StaticBasis b;
    b.e_t = {1.0 / root, 0, 0, 0};
    b.e_r = {0, root * st * cp, root * st * sp, root * ct};
    b.e_theta = {0, ct * cp, ct * sp, -st};
    b.e_phi = {0, -sp, cp, 0};
    return b;
}

double metric_dot(double u, Vec3 n, Vec4 a, Vec4 b) {
    const Vec3 as = spatial(a), bs = spatial(b);
    return (1.0 - u) * a.t * b.t - dot(as, bs) - u / (1.0 - u) * dot(n, as) * dot(n, bs);
}

Vec4 beam_direction(double q_w, double q_h, double f, const CameraBasis& cam) {
    const double inv = 1.0 / std::sqrt(q_w * q_w + q_h * q_h + f * f);
    return -cam.e_tau + inv * (q_w * cam.e_w + q_h * cam.e_h - f * cam.e_d);
}

BeamFrame make_beam_frame(Vec3 p, Vec4 d) {
    BeamFrame f;
    f.ex = normalize(p);
    const Vec3 ds = spatial(d);
    const double dn = norm(ds);
    f.delta = std::acos(std::clamp(dot(f.ex, ds) / dn, -1.0, 1.0));

    const Vec3 plane = cross(f.ex, ds);
    const double pn = norm(plane);
    if (pn < 1e-12 * dn) {
        // Beam along the radial line: the plane is undefined. Pick a
        // deterministic normal so downstream code still has a frame.
        const Vec3 pick = std::abs(f.ex.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        f.ez = normalize(cross(f.ex, pick));
        f.ey = cross(f.ez, f.ex);
        f.radial = true;
        f.alpha = 0;
        return f;
    }
    f.ez = plane / pn;
    f.ey = cross(f.ez, f.ex);

    // Line where the beam plane meets the equatorial plane: perpendicular to
    // both normals. Oriented toward +ey so crossings happen at alpha + k pi
    // with the beam running in the +ey sense.
    Vec3 node = cross(Vec3{0, 0, 1}, f.ez);
    const double nn = norm(node);
    if (nn < 1e-12) {
        f.alpha = 0;  // beam plane is the equatorial plane
        return f;
    }
    node = node / nn;
    if (dot(node, f.ey) < 0) node = -node;
    f.alpha = std::acos(std::clamp(dot(node, f.ex), -1.0, 1.0));
    if (f.alpha >= kPi) f.alpha = 0;
    return f;
}

RayState ray_constants(double u, double delta) {
    RayState s;
    s.u = u;
    const double sd = std::sin(delta);
    if (std::abs(sd) < 1e-12) {
        s.radial = true;
        s.udot = 0;
        s.e2 = 0;
        s.cls = delta < kPi / 2 ? RayClass::Escaping : RayClass::Plunging;
        return s;
    }
    s.udot = -u * std::cos(delta) / sd;
    s.e2 = s.udot * s.udot + u * u * (1.0 - u);
    if (s.e2 >= kCritE2)
        s.cls = s.udot >= 0 ? RayClass::Plunging : RayClass::Escaping;
    else
        s.cls = u < kPhotonSphereU ? RayClass::Scattering : RayClass::Trapped;
    return s;
}

double apsis_u(double e2) {
    if (e2 <= 0.0) return 0.0;
    if (e2 >= kCritE2) {
        if (e2 > kCritE2 + 1e-12)
            throw std::domain_error("apsis_u: no apsis above the critical energy");
        return kPhotonSphereU;
    }
    const double arg = std::clamp(2.0 * e2 / kCritE2 - 1.0, -1.0, 1.0);
    return 1.0 / 3.0 + 2.0 / 3.0 * std::sin(std::asin(arg) / 3.0);
}

}  // namespace bht

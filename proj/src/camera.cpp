#include "bht/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace bht {

Mat4 mat_identity() {
    Mat4 a;
    for (int i = 0; i < 4; ++i) a.m[i][i] = 1.0;
    return a;
}

Mat4 mat_mul(const Mat4& a, const Mat4& b) {
    Mat4 c;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            const double s = a.m[i][k];
            if (s == 0.0) continue;
            for (int j = 0; j < 4; ++j) c.m[i][j] += s * b.m[k][j];
        }
    return c;
}

Vec4 mat_apply(const Mat4& a, Vec4 v) {
    const double c[4] = {v.t, v.x, v.y, v.z};
    double out[4] = {};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out[i] += a.m[i][j] * c[j];
    return {out[0], out[1], out[2], out[3]};
}

OrbitState orbit_init(double r0, double delta0, double v0, double chi) {
    if (!(r0 > 1.0)) throw std::invalid_argument("orbit_init: r0 must be outside the horizon");
    if (!(v0 >= 0.0 && v0 < 1.0)) throw std::invalid_argument("orbit_init: v0 must be in [0, 1)");
    if (!(delta0 > 0.0 && delta0 < kPi)) throw std::invalid_argument("orbit_init: delta0 must be in (0, pi)");

    const double u0 = 1.0 / r0;
    const double e2 = (1.0 - u0) / (1.0 - v0 * v0);
    const double cot = std::cos(delta0) / std::sin(delta0);
    const double l2 = (e2 + u0 - 1.0) / (u0 * u0 * (1.0 - u0 + cot * cot));
    if (l2 < 0.0) throw std::invalid_argument("orbit_init: no timelike orbit for these initial conditions");

    OrbitState s;
    s.r = r0;
    s.chi = chi;
    s.e_orb = std::sqrt(e2);
    s.l_orb = std::sqrt(l2);
    // dr/dtau = (dr/dpsi)(dpsi/dtau) = (r cot delta0)(l u^2); algebraically
    // equal to the energy-equation root but free of its cancellation, and
    // carrying the launch direction in the sign of cot.
    s.dr_dtau = s.l_orb * u0 * cot;
    return s;
}

OrbitState orbit_step(const OrbitState& s, double dtau) {
    if (!(dtau > 0.0)) throw std::invalid_argument("orbit_step: dtau must be positive");
    if (s.horizon) return s;

    OrbitState n = s;
    if (s.r <= 1.0) {
        n.horizon = true;
        return n;
    }
    const double l2 = s.l_orb * s.l_orb;
    const double v_half = s.dr_dtau + 0.5 * dtau * orbit_radial_accel(1.0 / s.r, l2);
    const double r_mid = s.r + 0.5 * dtau * v_half;
    const double r_new = s.r + dtau * v_half;
    if (r_new <= 1.0 || r_mid <= 1.0) {
        n.horizon = true;  // stop before leaving the exterior chart
        return n;
    }
    const double u_mid = 1.0 / r_mid;
    n.r = r_new;
    n.dr_dtau = v_half + 0.5 * dtau * orbit_radial_accel(1.0 / r_new, l2);
    n.t = s.t + dtau * s.e_orb / (1.0 - u_mid);
    n.psi = s.psi + dtau * s.l_orb * u_mid * u_mid;
    n.tau = s.tau + dtau;
    return n;
}

SchwarzschildPosition schwarzschild_position(const OrbitState& s) {
    const double cp = std::cos(s.psi), sp = std::sin(s.psi);
    const double cc = std::cos(s.chi), sc = std::sin(s.chi);
    SchwarzschildPosition p;
    p.t = s.t;
    p.r = s.r;
    p.theta = std::acos(std::clamp(cp * sc, -1.0, 1.0));
    p.phi = std::atan2(sp, cc * cp);
    return p;
}

LorentzChain lorentz_chain(const OrbitState& s, const Mat4& orient) {
    if (!(s.r > 1.0)) throw std::domain_error("lorentz_chain: camera at or inside the horizon");
    const double u = 1.0 / s.r;
    const SchwarzschildPosition p = schwarzschild_position(s);

    LorentzChain c;
    c.orient = orient;

    // Angular block of the rotation into the orbital frame: row 2 is the
    // plane normal, row 3 the unit tangent of increasing psi, both expanded
    // in (e_theta, e_phi). The normal is oriented so that the tangent row
    // (-b, a) matches the actual motion; this fixes the sign of b.
    const double st = std::sin(p.theta), ct = std::cos(p.theta);
    const double sf = std::sin(p.phi), cf = std::cos(p.phi);
    const double sc = std::sin(s.chi), cc = std::cos(s.chi);
    const double a = sc * ct * cf + cc * st;
    const double b = -sc * sf;
    c.rot = mat_identity();
    c.rot.m[2][2] = a;
    c.rot.m[2][3] = b;
    c.rot.m[3][2] = -b;
    c.rot.m[3][3] = a;

    // Velocity relative to the local static observer, components along
    // (radial, normal, tangent).
    c.v = {s.dr_dtau / s.e_orb, 0.0, s.l_orb * u * std::sqrt(1.0 - u) / s.e_orb};
    const double v2 = dot(c.v, c.v);
    if (v2 >= 1.0) throw std::runtime_error("lorentz_chain: orbital speed reached light speed");
    c.gamma = 1.0 / std::sqrt(1.0 - v2);

    c.boost = mat_identity();
    if (v2 > 0.0) {
        const double g = c.gamma;
        const double vc[3] = {c.v.x, c.v.y, c.v.z};
        c.boost.m[0][0] = g;
        for (int i = 0; i < 3; ++i) {
            c.boost.m[0][i + 1] = g * vc[i];
            c.boost.m[i + 1][0] = g * vc[i];
            for (int j = 0; j < 3; ++j)
                c.boost.m[i + 1][j + 1] = (i == j ? 1.0 : 0.0) + (g - 1.0) * vc[i] * vc[j] / v2;
        }
    }

    c.lambda = mat_mul(c.orient, mat_mul(c.boost, c.rot));
    return c;
}

namespace {

Vec3 rotate_about(Vec3 v, Vec3 axis, double ang) {
    const double cs = std::cos(ang), sn = std::sin(ang);
    return cs * v + sn * cross(axis, v) + (1.0 - cs) * dot(axis, v) * axis;
}

}  // namespace

Mat4 orientation_matrix(double yaw, double pitch, double roll) {
    // Components in the boosted (radial, normal, tangent) frame.
    Vec3 w{0, 0, -1}, h{0, 1, 0}, d{1, 0, 0};
    w = rotate_about(w, h, -yaw);
    d = rotate_about(d, h, -yaw);
    h = rotate_about(h, w, pitch);
    d = rotate_about(d, w, pitch);
    w = rotate_about(w, d, roll);
    h = rotate_about(h, d, roll);

    Mat4 o = mat_identity();
    const Vec3 rows[3] = {w, h, d};
    for (int i = 0; i < 3; ++i) {
        o.m[i + 1][1] = rows[i].x;
        o.m[i + 1][2] = rows[i].y;
        o.m[i + 1][3] = rows[i].z;
    }
    return o;
}

CameraBasis camera_basis(const SchwarzschildPosition& pos, const Mat4& lambda) {
    const StaticBasis sb = static_basis(pos.r, pos.theta, pos.phi);
    const Vec4 cols[4] = {sb.e_t, sb.e_r, sb.e_theta, sb.e_phi};
    auto row = [&](int i) {
        Vec4 out;
        for (int j = 0; j < 4; ++j) out = out + lambda.m[i][j] * cols[j];
        return out;
    };
    return {row(0), row(1), row(2), row(3)};
}

}  // namespace bht

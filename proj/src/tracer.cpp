#include "bht/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bht {

namespace {

// phi mod pi into [0, pi), mapping an exact multiple to exactly 0.
double mod_pi(double phi) {
    double m = std::fmod(phi, kPi);
    if (m < 0) m += kPi;
    return m;
}

}  // namespace

TraceResult trace_ray(double p_r, double delta, double alpha, double u_ic,
                      double u_oc, const TableSet& tables) {
    TraceResult res;
    const RayState st = ray_constants(1.0 / p_r, delta);

    if (st.radial) {
        // Degenerate beam plane: the beam heads straight along the radial
        // line and never leaves the camera azimuth, so it cannot reach the
        // disc lines at finite angle offsets.
        res.captured = st.cls == RayClass::Plunging;
        res.escape_delta = delta;
        return res;
    }
    if (st.cls == RayClass::Trapped) {
        res.captured = true;
        return res;
    }

    const double u = st.u;
    const double e = std::sqrt(st.e2);
    const bool below_crit = st.e2 < kCritE2;
    const double s = sign_pos(st.udot);

    const DSample cam = lookup_d(tables.d, e, u);
    double delta_total = cam.delta;

    // Apsis quantities exist only below the critical energy; otherwise the
    // beam has no turning point and the apsis azimuth is pushed to infinity.
    double t_a = 0;
    double delta_a = 0;
    double phi_a = std::numeric_limits<double>::infinity();
    if (below_crit) {
        const DSample apsis = lookup_d(tables.d, e, apsis_u(st.e2));
        t_a = apsis.t;
        delta_a = apsis.delta;
        phi_a = delta_a + kPi / 2;
    }

    double phi = delta_total + (s > 0 ? kPi - delta : delta) + s * alpha;

    // Crossing candidate on the same side of the apsis as the camera.
    // Emission cannot follow reception: crossings at radii interpolating to a
    // hair "past" the camera clamp to zero travel time.
    const double phi0 = mod_pi(phi);
    const USample c0 = lookup_u(tables.u, e, phi0);
    if (phi0 < phi_a && u_oc <= c0.u && c0.u <= u_ic &&
        sign_pos(c0.u - u) == s) {
        res.add_hit(
            {std::min(s * (cam.t - c0.t), 0.0), c0.u, alpha + phi - phi0});
    }

    // Mirrored candidate beyond the apsis, reachable only when the beam
    // turns around (below critical energy, currently heading inward).
    if (below_crit && s > 0) {
        phi = 2.0 * phi_a - phi;
        const double phi1 = mod_pi(phi);
        const USample c1 = lookup_u(tables.u, e, phi1);
        if (phi1 < phi_a && u_oc <= c1.u && c1.u <= u_ic) {
            res.add_hit({std::min(cam.t + c1.t - 2.0 * t_a, 0.0), c1.u,
                         alpha + phi - phi1});
        }
    }

    if (st.udot > 0) {
        if (!below_crit) {
            res.captured = true;
            return res;
        }
        delta_total = 2.0 * delta_a - delta_total;
    }
    res.escape_delta = delta + delta_total;
    return res;
}

Vec3 escape_direction(const TraceResult& result, const BeamFrame& frame) {
    return std::cos(result.escape_delta) * frame.ex +
           std::sin(result.escape_delta) * frame.ey;
}

}  // namespace bht

#include "bht/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "bht/geodesic.hpp"

namespace bht {
namespace {

struct State {
    double u, v, t;
};

// Time channel diverges at u -> 0 and u -> 1; contributions outside (0, 0.999]
// are dropped (beams are only timed on the disc band u <= 1/3).
double t_rate(double u, double e) {
    if (u <= 0.0 || u > 0.999) return 0.0;
    return time_integrand(u, e);
}

State rk4_step(State s, double h, double e) {
    auto f = [e](State y) { return State{y.v, u_accel(y.u), t_rate(y.u, e)}; };
    const State k1 = f(s);
    const State k2 = f({s.u + 0.5 * h * k1.u, s.v + 0.5 * h * k1.v, 0});
    const State k3 = f({s.u + 0.5 * h * k2.u, s.v + 0.5 * h * k2.v, 0});
    const State k4 = f({s.u + h * k3.u, s.v + h * k3.v, 0});
    return {s.u + h / 6.0 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u),
            s.v + h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v),
            s.t + h / 6.0 * (k1.t + 2 * k2.t + 2 * k3.t + k4.t)};
}

// Largest partial step from s that keeps u below 1, to 1e-10 in phi.
double bisect_horizon(State s, double h, double e) {
    double lo = 0, hi = h;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (rk4_step(s, mid, e).u >= 1.0)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

struct Recorder {
    std::vector<PathSample>& out;
    std::size_t stride = 1;
    std::size_t seen = 0;

    void push(double phi, State s) {
        if (seen++ % stride) return;
        if (out.size() >= 8192) {
            for (std::size_t i = 1; 2 * i < out.size(); ++i) out[i] = out[2 * i];
            out.resize((out.size() + 1) / 2);
            stride *= 2;
        }
        out.push_back({phi, s.u, s.v, s.t});
    }
    void push_terminal(double phi, State s) {
        if (out.empty() || out.back().phi < phi) out.push_back({phi, s.u, s.v, s.t});
    }
};

struct Stepper {
    double e, e2, step, max_phi, escape_u;
    double phi = 0;
    State s;
    GeodesicPath* path;
    Recorder rec;

    void note_residual() {
        const double r = std::abs(s.v * s.v - (e2 - s.u * s.u * (1.0 - s.u)));
        if (r > path->max_energy_residual) path->max_energy_residual = r;
    }

    // Advances by at most h_want; returns false when a terminal state was hit.
    bool advance(double h_want) {
        State next = rk4_step(s, h_want, e);
        if (next.u >= 1.0) {
            const double h = bisect_horizon(s, h_want, e);
            s = rk4_step(s, h, e);
            phi += h;
            rec.push_terminal(phi, s);
            path->terminal = Terminal::PlungedAtHorizon;
            return false;
        }
        s = next;
        phi += h_want;
        note_residual();
        rec.push(phi, s);
        if (s.u < escape_u && s.v < 0) {
            rec.push_terminal(phi, s);
            path->terminal = Terminal::EscapedToInfinity;
            path->asymptote_phi = phi + std::atan2(s.u, -s.v);
            return false;
        }
        if (phi >= max_phi) {
            rec.push_terminal(phi, s);
            path->terminal = Terminal::ReachedMaxPhi;
            return false;
        }
        return true;
    }
};

}  // namespace

GeodesicPath integrate(double u0, double udot0, double step, double max_phi,
                       double escape_u) {
    if (!(step > 0) || step > 1e-5 + 1e-15)
        throw std::invalid_argument("integrate: step must be in (0, 1e-5]");
    return integrate_with_step(u0, udot0, step, max_phi, escape_u);
}

GeodesicPath integrate_with_step(double u0, double udot0, double step, double max_phi,
                                 double escape_u) {
    if (!(step > 0)) throw std::invalid_argument("integrate: step must be positive");
    GeodesicPath path;
    path.e = std::sqrt(udot0 * udot0 + u0 * u0 * (1.0 - u0));
    Stepper st{path.e, path.e * path.e, step, max_phi, escape_u,
               0.0,    {u0, udot0, 0.0}, &path,       Recorder{path.samples}};
    st.rec.push(0.0, st.s);
    while (st.advance(std::min(step, max_phi - st.phi))) {
    }
    return path;
}

TraceResult reference_trace(double p_r, double delta, double alpha, double u_ic,
                            double u_oc, double step, double max_phi) {
    if (!(step > 0) || step > 1e-5 + 1e-15)
        throw std::invalid_argument("reference_trace: step must be in (0, 1e-5]");
    const double u0 = 1.0 / p_r;
    TraceResult res;

    const RayState rs = ray_constants(u0, delta);
    if (rs.radial) {
        // Along the radial line: no in-plane motion, so no disc-line crossings.
        if (delta < kPi / 2) {
            res.escape_delta = 0;
        } else {
            res.captured = true;
        }
        return res;
    }

    GeodesicPath path;
    path.e = std::sqrt(rs.e2);
    Stepper st{path.e, rs.e2,  step, max_phi, 1e-7,
               0.0,    {u0, rs.udot, 0.0}, &path, Recorder{path.samples}};

    // First crossing azimuth strictly ahead of the camera.
    double beta = alpha > 1e-9 ? alpha : alpha + kPi;

    bool running = true;
    while (running) {
        double h = std::min(step, max_phi - st.phi);
        const bool lands_on_event = st.phi + h >= beta;
        if (lands_on_event) h = beta - st.phi;
        running = st.advance(h);
        if (lands_on_event && (running || st.phi >= beta)) {
            if (st.s.u >= u_oc && st.s.u <= u_ic)
                res.add_hit({-st.s.t, st.s.u, beta});
            beta += kPi;
        }
    }
    res.captured = path.terminal != Terminal::EscapedToInfinity;
    if (!res.captured) res.escape_delta = path.asymptote_phi;
    return res;
}

GeodesicPath integrate_from_infinity(double e, double step, double max_phi) {
    return integrate(0.0, e, step, max_phi);
}

}  // namespace bht

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "bht/geodesic.hpp"
#include "bht/oracle.hpp"

using namespace bht;

TEST_CASE("u = 0 is a fixed point") {
    const GeodesicPath p = integrate(0.0, 0.0, 1e-5, 0.5);
    CHECK(p.terminal == Terminal::ReachedMaxPhi);
    for (const PathSample& s : p.samples) CHECK(s.u == 0.0);
}

TEST_CASE("circular photon orbit holds for a revolution") {
    const GeodesicPath p = integrate(kPhotonSphereU, 0.0, 1e-5, 2 * kPi);
    CHECK(p.terminal == Terminal::ReachedMaxPhi);
    for (const PathSample& s : p.samples) CHECK(std::abs(s.u - kPhotonSphereU) < 1e-8);
}

TEST_CASE("weak beam from infinity deflects by twice its motion constant") {
    const double e = 0.01;
    const GeodesicPath p = integrate_from_infinity(e, 1e-5);
    REQUIRE(p.terminal == Terminal::EscapedToInfinity);
    const double deflection = p.asymptote_phi - kPi;
    CHECK(deflection == doctest::Approx(2 * e).epsilon(0.05));
}

TEST_CASE("energy residual stays tiny at the reference step") {
    const double u0 = 0.3, udot0 = 0.23;
    const GeodesicPath p = integrate(u0, udot0, 1e-5, 30.0);
    CHECK(p.max_energy_residual < 1e-10);
    CHECK(p.samples.size() <= 9000);
    double prev = -1;
    for (const PathSample& s : p.samples) {
        CHECK(s.phi > prev);
        prev = s.phi;
    }
}

TEST_CASE("halving the step cuts the residual about sixteenfold") {
    const double u0 = 0.2, udot0 = std::sqrt(0.1 - u0 * u0 * (1 - u0));
    const double r1 = integrate_with_step(u0, udot0, 1e-2, 30.0).max_energy_residual;
    const double r2 = integrate_with_step(u0, udot0, 5e-3, 30.0).max_energy_residual;
    CHECK(r1 / r2 > 8.0);
    CHECK(r1 / r2 < 40.0);
}

TEST_CASE("reference step cap is enforced") {
    CHECK_THROWS_AS(integrate(0.1, 0.0, 2e-5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(integrate(0.1, 0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("exactly critical beams stall at the photon sphere") {
    const double u0 = 0.3;
    const double udot0 = std::sqrt(kCritE2 - u0 * u0 * (1 - u0));
    const GeodesicPath p = integrate(u0, udot0, 1e-5, 20.0);
    CHECK(p.terminal == Terminal::ReachedMaxPhi);
    CHECK(std::abs(p.back().u - kPhotonSphereU) < 1e-3);
}

TEST_CASE("terminal classification matches the analytic energy split") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const double u = 0.02 + 0.93 * uni(rng);
        const double delta = 0.02 + (kPi - 0.04) * uni(rng);
        const RayState s = ray_constants(u, delta);
        if (std::abs(s.e2 - kCritE2) < 1e-4) continue;  // separatrix band
        if (std::abs(u - kPhotonSphereU) < 1e-4) continue;
        const GeodesicPath p = integrate_with_step(u, s.udot, 1e-3, 64 * kPi, 1e-6);
        ++checked;
        if (s.cls == RayClass::Scattering || s.cls == RayClass::Escaping) {
            CHECK(p.terminal == Terminal::EscapedToInfinity);
        } else {
            CHECK(p.terminal == Terminal::PlungedAtHorizon);
        }
    }
    CHECK(checked > 1500);
}

TEST_CASE("coordinate time accumulates monotonically on the visible range") {
    const GeodesicPath p = integrate(0.12, 0.1, 1e-5, 10.0);
    double prev_t = -1e300;
    for (const PathSample& s : p.samples) {
        if (s.u > 0 && s.u <= 0.999) {
            CHECK(s.t >= prev_t);
            prev_t = s.t;
        }
    }
    CHECK(prev_t > 0.0);
}

TEST_CASE("radial reference beams") {
    const TraceResult out = reference_trace(10.0, 0.0, 0.4, 1.0 / 3, 0.05, 1e-5);
    CHECK(!out.captured);
    CHECK(out.escape_delta == 0.0);
    CHECK(out.n_hits == 0);

    const TraceResult in = reference_trace(10.0, kPi, 0.4, 1.0 / 3, 0.05, 1e-5);
    CHECK(in.captured);
    CHECK(in.n_hits == 0);
}

TEST_CASE("sideways beam at r = 10 escapes and can cross the disc band") {
    const TraceResult res = reference_trace(10.0, kPi / 2, 0.3, 1.0 / 3, 0.05, 1e-5);
    CHECK(!res.captured);
    REQUIRE(res.n_hits >= 1);
    CHECK(res.n_hits <= 2);
    double prev_mag = 0.0;
    for (int i = 0; i < std::min(res.n_hits, 2); ++i) {
        const DiscIntersection& h = res.hits[static_cast<std::size_t>(i)];
        CHECK(h.t_ret < 0.0);
        CHECK(-h.t_ret > prev_mag);
        prev_mag = -h.t_ret;
        CHECK(h.u_hit >= 0.05);
        CHECK(h.u_hit <= 1.0 / 3);
        // Crossings happen exactly on the disc line.
        const double k = std::round((h.phi_hit - 0.3) / kPi);
        CHECK(std::abs(h.phi_hit - (0.3 + k * kPi)) < 1e-9);
    }
}

TEST_CASE("steep beam into the hole is captured but still crosses the band") {
    // delta just under pi: almost radially inward, slightly prograde.
    const TraceResult res = reference_trace(10.0, 3.0, 0.1, 1.0 / 3, 0.05, 1e-5);
    CHECK(res.captured);
    for (int i = 0; i < std::min(res.n_hits, 2); ++i) {
        const DiscIntersection& h = res.hits[static_cast<std::size_t>(i)];
        CHECK(h.t_ret < 0.0);
        CHECK(h.u_hit >= 0.05);
        CHECK(h.u_hit <= 1.0 / 3);
    }
}

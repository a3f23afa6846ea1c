#pragma once

#include <array>
#include <cstdint>

namespace bht {

// One crossing of the equatorial disc band by a beam.
struct DiscIntersection {
    double t_ret = 0;   // emission time minus reception time; always <= 0
    double u_hit = 0;   // inverse radius of the crossing, in [u_outer, u_inner]
    double phi_hit = 0; // in-plane angle from ex at the crossing (alpha + k pi)
};

// Outcome of tracing one beam backward from the camera.
struct TraceResult {
    bool captured = false;
    double escape_delta = 0;  // asymptotic angle from outward radial, if escaped
    int n_hits = 0;
    std::array<DiscIntersection, 2> hits{};

    void add_hit(DiscIntersection h) {
        if (n_hits < 2) hits[static_cast<std::size_t>(n_hits)] = h;
        ++n_hits;
    }
};

}  // namespace bht

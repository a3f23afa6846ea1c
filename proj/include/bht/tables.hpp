#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bht/math.hpp"

namespace bht {

// Precomputed beam tables. Table "d" maps (e, u) to (time, deflection) for the
// canonical beam arriving from infinity with motion constant e; table "u" maps
// (e, phi) to (time, inverse radius) along the same beams. Both are sampled on
// cell-centered unit-square grids through the warps in map_d / map_u, which
// concentrate texels where the beams bend hardest.

inline constexpr uint32_t kTableIdD = 1;
inline constexpr uint32_t kTableIdU = 2;
inline constexpr uint32_t kTableIdColor = 3;
inline constexpr float kSentinel = std::numeric_limits<float>::lowest();

struct DCoord {
    double e = 0, u = 0;
};
struct UCoord {
    double e = 0, phi = 0;
};

// Warp from beam coordinates to the unit square. Sub- and super-critical
// branches meet at s = 1/2 only asymptotically: e -> 0 from the left,
// e -> infinity from the right, and |e^2 - 4/27| -> 0 at the outer edges.
// Values are clamped into [0,1]; out-of-domain (e, u) is a domain error.
Vec2 map_d(double e, double u);
DCoord unmap_d(double s, double t);  // s = 1/2 itself is a domain error
Vec2 map_u(double e, double phi);
UCoord unmap_u(double s, double t);

struct Table {
    uint32_t id = 0;
    uint32_t width = 0, height = 0;
    double epsilon = 0;
    // Interleaved texel pairs, row-major: (time, payload) at [2*(j*width+i)].
    std::vector<float> data;

    float at(uint32_t i, uint32_t j, int c) const {
        return data[2 * (static_cast<size_t>(j) * width + i) + static_cast<size_t>(c)];
    }
    float& at(uint32_t i, uint32_t j, int c) {
        return data[2 * (static_cast<size_t>(j) * width + i) + static_cast<size_t>(c)];
    }
};

struct TableSet {
    Table d;  // (e, u) -> (time, deflection)
    Table u;  // (e, phi) -> (time, inverse radius)
};

// Fills both tables by symplectic Euler integration of the beam equation with
// azimuth step epsilon, one beam per table column. epsilon must be in
// (0, 1e-3], dimensions at least 2x2. Parallelism is over columns and does not
// change the result.
TableSet precompute(double epsilon, uint32_t d_width, uint32_t d_height,
                    uint32_t u_width, uint32_t u_height, int threads = 1);

struct DSample {
    double t = 0, delta = 0;
};
struct USample {
    double t = 0, u = 0;
};

// Bilinear reads. Fractional columns are clamped inside the branch matching
// the query (never across the s = 1/2 seam). lookup_d extrapolates linearly
// past the first/last row (the apsis row sits half a texel beyond the last
// center); lookup_u clamps rows and repairs sentinel texels from the nearest
// written azimuth below. Returned times carry the storage regularizer
// time_base() already added back; only same-e differences of them are
// meaningful.
DSample lookup_d(const Table& table, double e, double u);
USample lookup_u(const Table& table, double e, double phi);

// Storage regularizer for the time channel: texels hold
// S = t - time_base(u) - log(2e), which stays O(1) where raw t diverges.
inline double time_base(double u) { return std::log(u) - 1.0 / u; }

// Total bend 2*(phi_apsis - pi/2) of a sub-critical beam from infinity,
// computed with the same Euler scheme the fill uses. e = 0 is the straight
// degenerate beam with zero deflection; e^2 >= 4/27 is a domain error.
double total_deflection(double e, double epsilon);

// Both tables concatenated, each with its own fixed 32-byte header.
void save_tables(const TableSet& tables, const std::string& path);
TableSet load_tables(const std::string& path);

}  // namespace bht

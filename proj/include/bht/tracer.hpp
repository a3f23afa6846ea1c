#pragma once

#include "bht/geodesic.hpp"
#include "bht/tables.hpp"
#include "bht/trace_result.hpp"

namespace bht {

// Traces one beam backward from the camera using only table lookups: no
// integration happens here. Returns the escape angle delta' (angle from
// outward radial of the asymptotic direction, measured like delta) or capture,
// plus up to two crossings of the equatorial disc band u_oc <= u <= u_ic.
// The two crossing tests cover the segment before the beam's apsis and its
// mirror image after it; crossings of beams wrapping more than a full extra
// turn are out of scope by construction.
//
// Preconditions: p_r > 1, delta in [0, pi], alpha in [0, pi),
// 0 <= u_oc <= u_ic <= 1/3. Table domain errors propagate.
TraceResult trace_ray(double p_r, double delta, double alpha, double u_ic,
                      double u_oc, const TableSet& tables);

// Direction the escaped beam leaves toward, in the beam plane of `frame`.
// Precondition: result is not captured.
Vec3 escape_direction(const TraceResult& result, const BeamFrame& frame);

}  // namespace bht

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bht/math.hpp"

namespace bht {

// A punctual light source on the celestial sphere: unit direction, total
// linear intensity, and chromaticity. Its XYZ tristimulus sums to intensity.
struct Star {
    Vec3 dir;
    double intensity = 0;
    double cx = 0, cy = 0;
};

inline Vec3 star_xyz(const Star& s) {
    return {s.intensity * s.cx, s.intensity * s.cy, s.intensity * (1.0 - s.cx - s.cy)};
}

struct StarCatalog {
    std::vector<Star> stars;
};

// Cube faces 0..5 = +x, -x, +y, -y, +z, -z. Face coordinates U, V in [-1, 1]
// are the ratios of the two non-dominant components (cyclic order x->(y,z),
// y->(z,x), z->(x,y)) to the signed dominant one.
int dominant_face(Vec3 d);
Vec2 face_uv(int face, Vec3 d);
// Un-normalized direction of a face point; face_uv(face, face_dir(face,u,v))
// round-trips exactly.
Vec3 face_dir(int face, double u, double v);

// One cube texel: XYZ color sum of the stars inside it plus the sub-texel
// position (in [0,1]^2) of their luminosity-weighted centroid.
struct StarTexel {
    float x = 0, y = 0, z = 0;
    float pw = 0, ph = 0;
};

// Star cubemap with a sum-semantics mip chain: every level holds the same
// total XYZ, coarser levels merge 2x2 children by color sum and
// luminosity-weighted position average.
struct StarMap {
    int face_size = 0;  // power of two
    int levels = 0;     // log2(face_size) + 1, down to 1x1 faces
    std::vector<StarTexel> texels;

    int level_size(int level) const { return face_size >> level; }
    const StarTexel& at(int level, int face, int i, int j) const;
};

// Builds the map, binning each star into the level-0 texel under its
// direction. hash_positions replaces stored sub-texel positions with a hash
// of the texel color (the cheap variant used when real positions are not
// wanted); colors and totals are unaffected.
StarMap build_starmap(const StarCatalog& catalog, int face_size, bool hash_positions = false);

// Beam footprint on the cube, in face UV coordinates: center, the UV steps
// for one screen pixel step in w and h, the mip level chosen so the footprint
// plus a one-texel margin spans at most 9 texels per axis, and the inverse
// 2x2 map taking UV offsets back to pixel (w,h) units.
struct Footprint {
    int face = 0;
    Vec2 center;
    Vec2 ew, eh;
    int level = 0;
    double inv[2][2] = {{0, 0}, {0, 0}};
    bool degenerate = false;  // collinear or vanishing pixel edges
};

// dw and dh are the screen-space direction derivatives; they and d need not
// be normalized (the face quotient rule cancels any common scale). Throws
// std::invalid_argument for a zero direction or non-finite derivatives.
Footprint footprint(Vec3 d, Vec3 dw, Vec3 dh, const StarMap& map);

// Sums star colors over the footprint's tent support, weighting each star by
// f(w) f(h) with f(x) = max(1 - |x|, 0) in pixel units. Texels are fetched
// from every face the support region touches, so gathers are continuous
// across cube edges.
Vec3 gather_stars(const StarMap& map, const Footprint& fp);

// Extended-source cubemap: plain radiance texels with average-semantics mips,
// sampled with a trilinear anisotropic filter.
struct ExtendedTexel {
    float x = 0, y = 0, z = 0;
};

struct ExtendedMap {
    int face_size = 0;
    int levels = 0;
    std::vector<ExtendedTexel> texels;

    int level_size(int level) const { return face_size >> level; }
    const ExtendedTexel& at(int level, int face, int i, int j) const;
};

// Evaluates shade at every level-0 texel center direction (unit length).
ExtendedMap build_extended_map(int face_size, const std::function<Vec3(Vec3)>& shade);

// Average radiance over the beam footprint: up to 8 trilinear taps spread
// along the footprint's major axis, minor axis matched to one texel.
Vec3 sample_extended(const ExtendedMap& map, Vec3 d, Vec3 dw, Vec3 dh);

// Deterministic procedural catalog: uniform directions, power-law intensities
// (density exponent 2.35 above intensity 1), chromaticities of black bodies
// with log-normal temperatures around 6000 K.
StarCatalog generate_catalog(uint64_t seed, int count);

// Text catalog: one star per line, "dir_x dir_y dir_z intensity x y".
void save_catalog(const std::string& path, const StarCatalog& catalog);
StarCatalog load_catalog(const std::string& path);

// Binary map cache: "BHSM" magic, face size, mip count, float32 texels.
void save_starmap(const std::string& path, const StarMap& map);
StarMap load_starmap(const std::string& path);

}  // namespace bht

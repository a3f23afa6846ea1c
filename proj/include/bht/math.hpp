#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace bht {

struct Vec2 {
    double x = 0, y = 0;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

// Four-vector in pseudo-Cartesian components: time component t plus a
// Euclidean 3-vector part. The metric itself lives in geodesic.hpp.
struct Vec4 {
    double t = 0, x = 0, y = 0, z = 0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(Vec3 v, double s) { return s * v; }
inline Vec3 operator/(Vec3 v, double s) { return {v.x / s, v.y / s, v.z / s}; }
inline Vec3 operator-(Vec3 v) { return {-v.x, -v.y, -v.z}; }

inline Vec4 operator+(Vec4 a, Vec4 b) { return {a.t + b.t, a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec4 operator-(Vec4 a, Vec4 b) { return {a.t - b.t, a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec4 operator*(double s, Vec4 v) { return {s * v.t, s * v.x, s * v.y, s * v.z}; }
inline Vec4 operator-(Vec4 v) { return {-v.t, -v.x, -v.y, -v.z}; }

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(Vec3 v) { return v / norm(v); }

inline Vec3 spatial(Vec4 v) { return {v.x, v.y, v.z}; }

inline constexpr double kPi = 3.14159265358979323846;

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

inline double sqr(double v) { return v * v; }

// sign with sign(0) = +1; used for picking the outward geodesic branch.
inline double sign_pos(double v) { return v < 0 ? -1.0 : 1.0; }

}  // namespace bht

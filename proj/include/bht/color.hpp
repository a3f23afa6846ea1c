#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bht/math.hpp"

namespace bht {

// CIE 1931 2-degree color matching functions, multi-lobe piecewise-Gaussian
// analytic fits. Non-negative over the visible range; wavelengths in nm.
double cie_x(double lambda_nm);
double cie_y(double lambda_nm);
double cie_z(double lambda_nm);

// Relative spectral radiance of a black body per unit wavelength. The
// normalization is arbitrary but fixed, so only ratios and colors matter.
// With this normalization d^5 B_T(d lambda) = B_{dT}(lambda) exactly.
double planck_spectrum(double lambda_nm, double t_kelvin);

// Spectral integration domain shared by every color computation here:
// a 1 nm trapezoid rule over [360, 830] nm.
inline constexpr double kLambdaMin = 360.0;
inline constexpr double kLambdaMax = 830.0;

Vec3 blackbody_xyz(double t_kelvin);

// Raw received XYZ of an arbitrary emitted spectrum under Doppler factor d:
// d^5 * integral of spectrum(d * lambda) times each matching function. The
// d^5 prefactor makes a flat spectrum scale as exactly d^5 and maps a black
// body at T onto the black body at d*T. Not normalized.
Vec3 received_xyz(const std::function<double(double)>& emitted_spectrum, double d);

struct Chromaticity {
    double x = 0, y = 0;
};

// (x, y) projection; zero or non-finite XYZ sums map to the equal-energy
// point to keep downstream lookups defined.
Chromaticity chromaticity_of(const Vec3& xyz);
Chromaticity blackbody_chromaticity(double t_kelvin);

inline constexpr double kCctMin = 1000.0;
inline constexpr double kCctMax = 40000.0;

// Correlated color temperature: cubic epicenter seed refined by a bracketed
// search for the closest point on the black-body locus, clamped to
// [kCctMin, kCctMax].
double correlated_temperature(double x, double y);

// Parameters of the Doppler color table. The spectrum family behind each
// grid chromaticity is a black body at the correlated temperature times
// max(0, 1 - a1 A1 - a2 A2), with A1, A2 unit-peak Gaussian absorption
// bands; the coefficients are fitted per cell so the family member takes
// exactly the cell's chromaticity. The default window spans the black-body
// locus from roughly 2250 K to 17500 K; its right edge stays clear of the
// region beyond x ~ 0.507 at low y where the clipped two-band family has
// no exact representative at any coefficients.
struct ColorTableSpec {
    uint32_t nx = 64, ny = 32, nd = 64;
    double x_min = 0.25, x_max = 0.50;
    double y_min = 0.26, y_max = 0.42;
    double d_min = 0.1, d_max = 10.0;  // log-uniform Doppler axis
    double band1_nm = 480.0, band2_nm = 610.0, band_sigma_nm = 60.0;
    int threads = 1;
};

// 3D chromaticity-shift table: (x, y, D) -> received XYZ per unit emitted
// X+Y+Z. Nodes span the ranges inclusively; D nodes are log-uniform.
//
// Storage detail: data holds the received color divided by the black-body
// magnitude law M(T_cell, D) = S(T_cell * D) / S(T_cell), where S(T) is the
// integrated visible output of a black body at T. M carries the steep
// (several orders of magnitude) D dependence analytically, so the stored
// residual varies slowly along D and linear interpolation stays accurate;
// lookups multiply M back at the exact queried D.
struct ColorTable {
    uint32_t nx = 0, ny = 0, nd = 0;
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
    double d_min = 0, d_max = 0;
    uint32_t clamped_cells = 0;  // cells whose chromaticity fit did not converge
    std::vector<float> cell_t;   // [j * nx + i]: correlated temperature per cell
    std::vector<float> cell_a1;  // [j * nx + i]: fitted band coefficients
    std::vector<float> cell_a2;
    std::vector<float> data;     // [3 * ((k * ny + j) * nx + i)]: XYZ residual

    mutable std::atomic<uint64_t> clamped_lookups{0};

    ColorTable() = default;
    ColorTable(ColorTable&& o) noexcept { *this = std::move(o); }
    ColorTable& operator=(ColorTable&& o) noexcept {
        nx = o.nx; ny = o.ny; nd = o.nd;
        x_min = o.x_min; x_max = o.x_max; y_min = o.y_min; y_max = o.y_max;
        d_min = o.d_min; d_max = o.d_max;
        clamped_cells = o.clamped_cells;
        cell_t = std::move(o.cell_t);
        cell_a1 = std::move(o.cell_a1);
        cell_a2 = std::move(o.cell_a2);
        data = std::move(o.data);
        clamped_lookups.store(o.clamped_lookups.load());
        return *this;
    }
};

// Fills the table by direct spectral integration. Throws std::invalid_argument
// for non-positive d_min, inverted ranges, or dimensions below 2.
ColorTable precompute_color_table(const ColorTableSpec& spec = {});

// Doppler/beaming transform of one grid node at exact factor d, integrating
// the node's stored spectrum directly instead of reading the sampled data.
// Used to pin stored values and the d = 1 identity.
Vec3 color_shift_reference(const ColorTable& table, const ColorTableSpec& spec,
                           uint32_t i, uint32_t j, double d);

// Same exact transform at an arbitrary chromaticity (no table involved).
Vec3 color_shift_exact(const ColorTableSpec& spec, double x, double y, double d);

// Trilinear read (linear weights per axis, with the analytic magnitude law
// folded back in). The factor d = 1 falls mid-cell on the log axis but its
// value is the identity triple by construction, so inside that cell the
// reconstruction is tent-anchored to it; lookups at d = 1 return exactly
// [x, y, 1-x-y] for any in-range chromaticity. Coordinates outside the
// grid clamp to the edge and bump clamped_lookups.
Vec3 lookup_color(const ColorTable& table, double x, double y, double d);

// Received XYZ for an emitted color under Doppler factor d:
// (X + Y + Z) * table(xy, d). Zero input stays zero.
Vec3 apply_doppler_beaming(const Vec3& emitted, double d, const ColorTable& table);

void save_color_table(const ColorTable& table, const std::string& path);
ColorTable load_color_table(const std::string& path);

// Display transforms. Linear sRGB with D65 white; components may be negative
// or above 1 for out-of-gamut XYZ.
Vec3 xyz_to_linear_srgb(const Vec3& xyz);
double srgb_encode(double linear);

struct Rgb8 {
    uint8_t r = 0, g = 0, b = 0;
};

// Exposure scale, extended reinhard curve on luminance (white point maps to
// exactly 1), sRGB encode and quantize. Monotone in input luminance.
Rgb8 tone_map_pixel(const Vec3& xyz, double exposure, double l_white = 4.0);

}  // namespace bht

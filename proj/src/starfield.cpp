#include "bht/starfield.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bht/color.hpp"
#include "bht/rng.hpp"

namespace bht {

namespace {

int int_log2(int n) {
    int l = 0;
    while ((1 << (l + 1)) <= n) ++l;
    return l;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Flat index of texel (i, j) on a face at a mip level; levels are stored
// outermost, faces next, rows (j) before columns.
size_t texel_index(int face_size, int level, int face, int i, int j) {
    size_t off = 0;
    for (int k = 0; k < level; ++k) {
        const size_t s = size_t(face_size >> k);
        off += 6 * s * s;
    }
    const size_t s = size_t(face_size >> level);
    return off + size_t(face) * s * s + size_t(j) * s + size_t(i);
}

size_t texel_count(int face_size, int levels) {
    size_t total = 0;
    for (int k = 0; k < levels; ++k) {
        const size_t s = size_t(face_size >> k);
        total += 6 * s * s;
    }
    return total;
}

double component(Vec3 v, int k) { return k == 0 ? v.x : (k == 1 ? v.y : v.z); }

double tent(double x) { return std::max(1.0 - std::abs(x), 0.0); }

// Continuous texel coordinate of U in [-1, 1] on an s-texel axis.
double texel_coord(double u, int s) { return (u + 1.0) * 0.5 * s; }

void bin_coord(double u, int s, int& idx, double& sub) {
    const double c = texel_coord(u, s);
    idx = std::clamp(int(std::floor(c)), 0, s - 1);
    sub = std::clamp(c - idx, 0.0, 1.0 - 1e-9);
}

}  // namespace

int dominant_face(Vec3 d) {
    const double a[3] = {std::abs(d.x), std::abs(d.y), std::abs(d.z)};
    int k = 0;
    if (a[1] > a[0]) k = 1;
    if (a[2] > a[k]) k = 2;
    return 2 * k + (component(d, k) < 0 ? 1 : 0);
}

Vec2 face_uv(int face, Vec3 d) {
    const int k = face / 2;
    const double m = component(d, k);
    return {component(d, (k + 1) % 3) / m, component(d, (k + 2) % 3) / m};
}

Vec3 face_dir(int face, double u, double v) {
    const int k = face / 2;
    const double s = face % 2 == 0 ? 1.0 : -1.0;
    double c[3];
    c[k] = s;
    c[(k + 1) % 3] = s * u;
    c[(k + 2) % 3] = s * v;
    return {c[0], c[1], c[2]};
}

const StarTexel& StarMap::at(int level, int face, int i, int j) const {
    return texels[texel_index(face_size, level, face, i, j)];
}

const ExtendedTexel& ExtendedMap::at(int level, int face, int i, int j) const {
    return texels[texel_index(face_size, level, face, i, j)];
}

StarMap build_starmap(const StarCatalog& catalog, int face_size, bool hash_positions) {
    if (!power_of_two(face_size))
        throw std::invalid_argument("build_starmap: face_size must be a power of two");

    StarMap map;
    map.face_size = face_size;
    map.levels = int_log2(face_size) + 1;
    map.texels.assign(texel_count(face_size, map.levels), {});

    // Level-0 binning with double accumulators; sums and the luminosity
    // weights for the position centroid must not lose bits star by star.
    struct Acc {
        double x = 0, y = 0, z = 0, w = 0, wpw = 0, wph = 0;
    };
    std::vector<Acc> acc(size_t(6) * face_size * face_size);
    for (const Star& s : catalog.stars) {
        const int face = dominant_face(s.dir);
        const Vec2 uv = face_uv(face, s.dir);
        int i, j;
        double pw, ph;
        bin_coord(uv.x, face_size, i, pw);
        bin_coord(uv.y, face_size, j, ph);
        const Vec3 c = star_xyz(s);
        const double w = c.x + c.y + c.z;
        Acc& a = acc[(size_t(face) * face_size + j) * face_size + i];
        a.x += c.x;
        a.y += c.y;
        a.z += c.z;
        a.w += w;
        a.wpw += w * pw;
        a.wph += w * ph;
    }
    for (int face = 0; face < 6; ++face)
        for (int j = 0; j < face_size; ++j)
            for (int i = 0; i < face_size; ++i) {
                const Acc& a = acc[(size_t(face) * face_size + j) * face_size + i];
                StarTexel& t = map.texels[texel_index(face_size, 0, face, i, j)];
                t.x = float(a.x);
                t.y = float(a.y);
                t.z = float(a.z);
                if (a.w > 0) {
                    t.pw = float(a.wpw / a.w);
                    t.ph = float(a.wph / a.w);
                }
                if (hash_positions && a.w > 0) {
                    uint32_t bx, by, bz;
                    std::memcpy(&bx, &t.x, 4);
                    std::memcpy(&by, &t.y, 4);
                    std::memcpy(&bz, &t.z, 4);
                    SplitMix64 h{(uint64_t(bx) << 32) ^ (uint64_t(by) << 16) ^ bz};
                    t.pw = float(h.uniform());
                    t.ph = float(h.uniform());
                }
            }

    // Mip chain: color sums, luminosity-weighted positions mapped into the
    // parent texel's unit square.
    for (int level = 1; level < map.levels; ++level) {
        const int s = face_size >> level;
        for (int face = 0; face < 6; ++face)
            for (int j = 0; j < s; ++j)
                for (int i = 0; i < s; ++i) {
                    double x = 0, y = 0, z = 0, w = 0, wpw = 0, wph = 0;
                    for (int cj = 0; cj < 2; ++cj)
                        for (int ci = 0; ci < 2; ++ci) {
                            const StarTexel& c =
                                map.texels[texel_index(face_size, level - 1, face,
                                                       2 * i + ci, 2 * j + cj)];
                            const double cw = double(c.x) + c.y + c.z;
                            x += c.x;
                            y += c.y;
                            z += c.z;
                            w += cw;
                            wpw += cw * (ci + c.pw) * 0.5;
                            wph += cw * (cj + c.ph) * 0.5;
                        }
                    StarTexel& t = map.texels[texel_index(face_size, level, face, i, j)];
                    t.x = float(x);
                    t.y = float(y);
                    t.z = float(z);
                    if (w > 0) {
                        t.pw = float(wpw / w);
                        t.ph = float(wph / w);
                    }
                }
    }
    return map;
}

Footprint footprint(Vec3 d, Vec3 dw, Vec3 dh, const StarMap& map) {
    const double dn = norm(d);
    if (!(dn > 0) || !std::isfinite(dn))
        throw std::invalid_argument("footprint: beam direction must be finite and nonzero");
    for (const Vec3& g : {dw, dh})
        if (!std::isfinite(g.x) || !std::isfinite(g.y) || !std::isfinite(g.z))
            throw std::invalid_argument("footprint: non-finite direction derivative");

    Footprint fp;
    fp.face = dominant_face(d);
    fp.center = face_uv(fp.face, d);

    // Quotient rule dU = (d_k1' - U d_k') / d_k; any common scale of d and
    // its derivatives cancels, so unnormalized inputs are fine.
    const int k = fp.face / 2, k1 = (k + 1) % 3, k2 = (k + 2) % 3;
    const double m = component(d, k);
    fp.ew = {(component(dw, k1) - fp.center.x * component(dw, k)) / m,
             (component(dw, k2) - fp.center.y * component(dw, k)) / m};
    fp.eh = {(component(dh, k1) - fp.center.x * component(dh, k)) / m,
             (component(dh, k2) - fp.center.y * component(dh, k)) / m};

    // Smallest level where the pixel extent plus a one-texel margin on each
    // side stays within 9 texels per axis.
    const double span_u = (std::abs(fp.ew.x) + std::abs(fp.eh.x)) * 0.5 * map.face_size;
    const double span_v = (std::abs(fp.ew.y) + std::abs(fp.eh.y)) * 0.5 * map.face_size;
    int level = 0;
    while (level < map.levels - 1 &&
           std::max(span_u, span_v) / (1 << level) + 2.0 > 9.0)
        ++level;
    fp.level = level;

    const double det = fp.ew.x * fp.eh.y - fp.eh.x * fp.ew.y;
    const double scale = fp.ew.x * fp.ew.x + fp.ew.y * fp.ew.y + fp.eh.x * fp.eh.x +
                         fp.eh.y * fp.eh.y;
    if (std::abs(det) <= 1e-9 * scale || scale == 0.0) {
        fp.degenerate = true;
    } else {
        fp.inv[0][0] = fp.eh.y / det;
        fp.inv[0][1] = -fp.eh.x / det;
        fp.inv[1][0] = -fp.ew.y / det;
        fp.inv[1][1] = fp.ew.x / det;
    }
    return fp;
}

Vec3 gather_stars(const StarMap& map, const Footprint& fp) {
    const int s = map.level_size(fp.level) > 0 ? map.level_size(fp.level) : 1;

    // Tent support: stars weigh in for |w| < 1 and |h| < 1, a parallelogram
    // twice the pixel's size. Its projective image on any face is a straight-
    // edged quad, so the corner bounding box covers it exactly.
    const Vec2 corners[4] = {
        {fp.center.x + fp.ew.x + fp.eh.x, fp.center.y + fp.ew.y + fp.eh.y},
        {fp.center.x + fp.ew.x - fp.eh.x, fp.center.y + fp.ew.y - fp.eh.y},
        {fp.center.x - fp.ew.x + fp.eh.x, fp.center.y - fp.ew.y + fp.eh.y},
        {fp.center.x - fp.ew.x - fp.eh.x, fp.center.y - fp.ew.y - fp.eh.y}};

    const int kf = fp.face / 2;
    const double sf = fp.face % 2 == 0 ? 1.0 : -1.0;

    Vec3 out;
    for (int g = 0; g < 6; ++g) {
        // Bounding box of the support on face g. Corners behind g's horizon
        // force the conservative whole-face box.
        double lo_u = 1e30, hi_u = -1e30, lo_v = 1e30, hi_v = -1e30;
        bool visible = false, wrapped = false;
        for (const Vec2& c : corners) {
            const Vec3 dir = face_dir(fp.face, c.x, c.y);
            const double mg = component(dir, g / 2) * (g % 2 == 0 ? 1.0 : -1.0);
            if (mg <= 1e-12) {
                wrapped = true;
                continue;
            }
            visible = true;
            const Vec2 uv = face_uv(g, dir);
            lo_u = std::min(lo_u, uv.x);
            hi_u = std::max(hi_u, uv.x);
            lo_v = std::min(lo_v, uv.y);
            hi_v = std::max(hi_v, uv.y);
        }
        if (!visible) continue;
        if (wrapped) {
            lo_u = lo_v = -1.0;
            hi_u = hi_v = 1.0;
        }
        if (lo_u > 1.0 || hi_u < -1.0 || lo_v > 1.0 || hi_v < -1.0) continue;

        const int i0 = std::clamp(int(std::floor(texel_coord(lo_u, s))), 0, s - 1);
        const int i1 = std::clamp(int(std::floor(texel_coord(hi_u, s))), 0, s - 1);
        const int j0 = std::clamp(int(std::floor(texel_coord(lo_v, s))), 0, s - 1);
        const int j1 = std::clamp(int(std::floor(texel_coord(hi_v, s))), 0, s - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                const StarTexel& t = map.at(fp.level, g, i, j);
                if (t.x == 0 && t.y == 0 && t.z == 0) continue;
                const double su = (i + double(t.pw)) * 2.0 / s - 1.0;
                const double sv = (j + double(t.ph)) * 2.0 / s - 1.0;
                const Vec3 dir = face_dir(g, su, sv);
                const double mf = component(dir, kf) * sf;
                if (mf <= 0) continue;  // behind the footprint's face
                const Vec2 uv = face_uv(fp.face, dir);
                const double du = uv.x - fp.center.x;
                const double dv = uv.y - fp.center.y;
                double w, h;
                if (fp.degenerate) {
                    // Axis-aligned fallback: scale each UV offset by the
                    // pixel extent along that axis. Exact-center stars keep
                    // weight one even for a vanishing footprint.
                    const double su_scale =
                        std::max(std::abs(fp.ew.x) + std::abs(fp.eh.x), 1e-300);
                    const double sv_scale =
                        std::max(std::abs(fp.ew.y) + std::abs(fp.eh.y), 1e-300);
                    w = du == 0 ? 0.0 : du / su_scale;
                    h = dv == 0 ? 0.0 : dv / sv_scale;
                } else {
                    w = fp.inv[0][0] * du + fp.inv[0][1] * dv;
                    h = fp.inv[1][0] * du + fp.inv[1][1] * dv;
                }
                const double weight = tent(w) * tent(h);
                if (weight > 0) out = out + weight * Vec3{t.x, t.y, t.z};
            }
    }
    return out;
}

ExtendedMap build_extended_map(int face_size, const std::function<Vec3(Vec3)>& shade) {
    if (!power_of_two(face_size))
        throw std::invalid_argument("build_extended_map: face_size must be a power of two");
    ExtendedMap map;
    map.face_size = face_size;
    map.levels = int_log2(face_size) + 1;
    map.texels.assign(texel_count(face_size, map.levels), {});
    for (int face = 0; face < 6; ++face)
        for (int j = 0; j < face_size; ++j)
            for (int i = 0; i < face_size; ++i) {
                const double u = (i + 0.5) * 2.0 / face_size - 1.0;
                const double v = (j + 0.5) * 2.0 / face_size - 1.0;
                const Vec3 c = shade(normalize(face_dir(face, u, v)));
                ExtendedTexel& t = map.texels[texel_index(face_size, 0, face, i, j)];
                t.x = float(c.x);
                t.y = float(c.y);
                t.z = float(c.z);
            }
    // Average-semantics mips: radiance, not energy.
    for (int level = 1; level < map.levels; ++level) {
        const int s = face_size >> level;
        for (int face = 0; face < 6; ++face)
            for (int j = 0; j < s; ++j)
                for (int i = 0; i < s; ++i) {
                    double x = 0, y = 0, z = 0;
                    for (int cj = 0; cj < 2; ++cj)
                        for (int ci = 0; ci < 2; ++ci) {
                            const ExtendedTexel& c =
                                map.texels[texel_index(face_size, level - 1, face,
                                                       2 * i + ci, 2 * j + cj)];
                            x += c.x;
                            y += c.y;
                            z += c.z;
                        }
                    ExtendedTexel& t = map.texels[texel_index(face_size, level, face, i, j)];
                    t.x = float(x * 0.25);
                    t.y = float(y * 0.25);
                    t.z = float(z * 0.25);
                }
    }
    return map;
}

Vec3 sample_extended(const ExtendedMap& map, Vec3 d, Vec3 dw, Vec3 dh) {
    const double dn = norm(d);
    if (!(dn > 0) || !std::isfinite(dn))
        throw std::invalid_argument("sample_extended: beam direction must be finite and nonzero");

    const int face = dominant_face(d);
    const Vec2 c = face_uv(face, d);
    const int k = face / 2, k1 = (k + 1) % 3, k2 = (k + 2) % 3;
    const double m = component(d, k);
    const Vec2 ew = {(component(dw, k1) - c.x * component(dw, k)) / m,
                     (component(dw, k2) - c.y * component(dw, k)) / m};
    const Vec2 eh = {(component(dh, k1) - c.x * component(dh, k)) / m,
                     (component(dh, k2) - c.y * component(dh, k)) / m};

    const double span_u = (std::abs(ew.x) + std::abs(eh.x)) * 0.5 * map.face_size;
    const double span_v = (std::abs(ew.y) + std::abs(eh.y)) * 0.5 * map.face_size;
    const double minor = std::max(1.0, std::min(span_u, span_v));
    const double major = std::max({span_u, span_v, minor});

    const double lf = std::clamp(std::log2(minor), 0.0, double(map.levels - 1));
    const int l0 = int(lf);
    const int l1 = std::min(l0 + 1, map.levels - 1);
    const double lt = lf - l0;

    auto tap = [&](int level, double u, double v) {
        const int s = map.level_size(level) > 0 ? map.level_size(level) : 1;
        const double cu = texel_coord(u, s) - 0.5;
        const double cv = texel_coord(v, s) - 0.5;
        const int i0 = std::clamp(int(std::floor(cu)), 0, s - 1);
        const int j0 = std::clamp(int(std::floor(cv)), 0, s - 1);
        const int i1 = std::min(i0 + 1, s - 1);
        const int j1 = std::min(j0 + 1, s - 1);
        const double fu = std::clamp(cu - i0, 0.0, 1.0);
        const double fv = std::clamp(cv - j0, 0.0, 1.0);
        auto tex = [&](int i, int j) {
            const ExtendedTexel& t = map.at(level, face, i, j);
            return Vec3{t.x, t.y, t.z};
        };
        return (1 - fu) * ((1 - fv) * tex(i0, j0) + fv * tex(i0, j1)) +
               fu * ((1 - fv) * tex(i1, j0) + fv * tex(i1, j1));
    };

    const int taps = std::clamp(int(std::ceil(major / minor)), 1, 8);
    const bool u_major = span_u >= span_v;
    const Vec2 axis = u_major ? Vec2{std::abs(ew.x) + std::abs(eh.x), 0.0}
                              : Vec2{0.0, std::abs(ew.y) + std::abs(eh.y)};
    Vec3 sum;
    for (int t = 0; t < taps; ++t) {
        const double off = (t + 0.5) / taps - 0.5;
        const double u = std::clamp(c.x + axis.x * off, -1.0, 1.0);
        const double v = std::clamp(c.y + axis.y * off, -1.0, 1.0);
        const Vec3 a = tap(l0, u, v);
        const Vec3 b = l1 == l0 ? a : tap(l1, u, v);
        sum = sum + (1.0 - lt) * a + lt * b;
    }
    return sum / double(taps);
}

StarCatalog generate_catalog(uint64_t seed, int count) {
    if (count < 0) throw std::invalid_argument("generate_catalog: negative count");

    // Black-body chromaticity cache over log temperature; the locus is smooth
    // so 256 intervals keep interpolation error well below star-color noise.
    static const int kNodes = 257;
    static const std::array<Chromaticity, kNodes>& locus = [] {
        static std::array<Chromaticity, kNodes> l;
        for (int i = 0; i < kNodes; ++i) {
            const double t = 1000.0 * std::pow(40.0, i / double(kNodes - 1));
            l[i] = blackbody_chromaticity(t);
        }
        return l;
    }();
    auto locus_xy = [&](double t_kelvin) {
        const double pos = std::clamp(std::log(t_kelvin / 1000.0) / std::log(40.0), 0.0, 1.0) *
                           (kNodes - 1);
        const int i = std::min(int(pos), kNodes - 2);
        const double f = pos - i;
        return Chromaticity{(1 - f) * locus[i].x + f * locus[i + 1].x,
                           (1 - f) * locus[i].y + f * locus[i + 1].y};
    };

    StarCatalog cat;
    cat.stars.reserve(size_t(count));
    SplitMix64 rng{seed};
    const double alpha = 2.35;
    for (int n = 0; n < count; ++n) {
        const double z = 2.0 * rng.uniform() - 1.0;
        const double phi = 2.0 * kPi * rng.uniform();
        const double sxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double intensity = std::pow(1.0 - rng.uniform(), -1.0 / (alpha - 1.0));
        const double g1 = 1.0 - rng.uniform();  // in (0, 1]
        const double g2 = rng.uniform();
        const double gauss = std::sqrt(-2.0 * std::log(g1)) * std::cos(2.0 * kPi * g2);
        const double t_kelvin = 6000.0 * std::exp(0.25 * gauss);
        const Chromaticity xy = locus_xy(t_kelvin);
        cat.stars.push_back({{sxy * std::cos(phi), sxy * std::sin(phi), z}, intensity,
                             xy.x, xy.y});
    }
    return cat;
}

void save_catalog(const std::string& path, const StarCatalog& catalog) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_catalog: cannot open " + path);
    out.precision(17);
    for (const Star& s : catalog.stars)
        out << s.dir.x << ' ' << s.dir.y << ' ' << s.dir.z << ' ' << s.intensity << ' '
            << s.cx << ' ' << s.cy << '\n';
    if (!out) throw std::runtime_error("save_catalog: write failed for " + path);
}

StarCatalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_catalog: cannot open " + path);
    StarCatalog cat;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Star s;
        if (!(ls >> s.dir.x >> s.dir.y >> s.dir.z >> s.intensity >> s.cx >> s.cy))
            throw std::runtime_error("load_catalog: parse error at line " +
                                     std::to_string(line_no));
        std::string extra;
        if (ls >> extra)
            throw std::runtime_error("load_catalog: trailing data at line " +
                                     std::to_string(line_no));
        const double n = norm(s.dir);
        if (!(n > 0) || !std::isfinite(n) || !(s.intensity > 0))
            throw std::runtime_error("load_catalog: invalid star at line " +
                                     std::to_string(line_no));
        s.dir = s.dir / n;
        cat.stars.push_back(s);
    }
    return cat;
}

namespace {

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& in, size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(in[off + i])) << (8 * i);
    return v;
}

void put_f32(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

float get_f32(const std::string& in, size_t off) {
    const uint32_t v = get_u32(in, off);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

}  // namespace

void save_starmap(const std::string& path, const StarMap& map) {
    std::string buf;
    buf.reserve(12 + map.texels.size() * 20);
    buf += "BHSM";
    put_u32(buf, uint32_t(map.face_size));
    put_u32(buf, uint32_t(map.levels));
    for (const StarTexel& t : map.texels) {
        put_f32(buf, t.x);
        put_f32(buf, t.y);
        put_f32(buf, t.z);
        put_f32(buf, t.pw);
        put_f32(buf, t.ph);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out.write(buf.data(), std::streamsize(buf.size())))
        throw std::runtime_error("save_starmap: write failed for " + path);
}

StarMap load_starmap(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_starmap: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || buf.compare(0, 4, "BHSM") != 0)
        throw std::runtime_error("load_starmap: not a star map file: " + path);
    StarMap map;
    map.face_size = int(get_u32(buf, 4));
    map.levels = int(get_u32(buf, 8));
    if (!power_of_two(map.face_size) || map.levels != int_log2(map.face_size) + 1)
        throw std::runtime_error("load_starmap: corrupt header in " + path);
    const size_t count = texel_count(map.face_size, map.levels);
    if (buf.size() != 12 + count * 20)
        throw std::runtime_error("load_starmap: truncated or oversized payload in " + path);
    map.texels.resize(count);
    for (size_t n = 0; n < count; ++n) {
        StarTexel& t = map.texels[n];
        const size_t off = 12 + n * 20;
        t.x = get_f32(buf, off);
        t.y = get_f32(buf, off + 4);
        t.z = get_f32(buf, off + 8);
        t.pw = get_f32(buf, off + 12);
        t.ph = get_f32(buf, off + 16);
    }
    return map;
}

}  // namespace bht

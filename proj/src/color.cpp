#include "bht/color.hpp"

#include "bht/tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace bht {

namespace {

double lobe(double lambda, double center, double inv_sigma_lo, double inv_sigma_hi) {
    const double t = (lambda - center) * (lambda < center ? inv_sigma_lo : inv_sigma_hi);
    return std::exp(-0.5 * t * t);
}

constexpr int kLambdaSteps = static_cast<int>(kLambdaMax - kLambdaMin);  // 1 nm

// hc/kB in nm * K.
constexpr double kPlanckC2 = 1.4387768775039337e7;

struct Cmf {
    double x[kLambdaSteps + 1], y[kLambdaSteps + 1], z[kLambdaSteps + 1];
    double w[kLambdaSteps + 1];  // trapezoid weights
};

const Cmf& cmf() {
    static const Cmf table = [] {
        Cmf t;
        for (int i = 0; i <= kLambdaSteps; ++i) {
            const double l = kLambdaMin + i;
            t.x[i] = cie_x(l);
            t.y[i] = cie_y(l);
            t.z[i] = cie_z(l);
            t.w[i] = (i == 0 || i == kLambdaSteps) ? 0.5 : 1.0;
        }
        return t;
    }();
    return table;
}

double gauss_band(double lambda, double center, double sigma) {
    const double t = (lambda - center) / sigma;
    return std::exp(-0.5 * t * t);
}

// Spectrum family member: black body at temperature t times the two-band
// absorption factor, clipped at zero so the spectrum stays physical for any
// coefficients.
struct Member {
    double t = 6500, a1 = 0, a2 = 0;
    double band1 = 480, band2 = 610, sigma = 60;

    double operator()(double lambda) const {
        const double absorb = 1.0 - a1 * gauss_band(lambda, band1, sigma) -
                              a2 * gauss_band(lambda, band2, sigma);
        return absorb > 0 ? planck_spectrum(lambda, t) * absorb : 0.0;
    }
};

Vec3 integrate_xyz(const Member& s) {
    const Cmf& c = cmf();
    Vec3 out{0, 0, 0};
    for (int i = 0; i <= kLambdaSteps; ++i) {
        const double l = kLambdaMin + i;
        const double v = s(l) * c.w[i];
        out.x += v * c.x[i];
        out.y += v * c.y[i];
        out.z += v * c.z[i];
    }
    return out;
}

double chroma_err(const Member& s, double x, double y) {
    const Vec3 u = integrate_xyz(s);
    const double su = u.x + u.y + u.z;
    if (!(su > 0)) return 1.0;
    return std::hypot(u.x / su - x, u.y / su - y);
}

double locus_distance2(double t, double x, double y) {
    const Chromaticity c = blackbody_chromaticity(t);
    return sqr(c.x - x) + sqr(c.y - y);
}

// One damped Newton pass on the clipped family. Each step solves the 2x2
// linear system for the coefficient update that moves the member's
// chromaticity onto (x, y), linearized on the currently active (unclipped)
// wavelengths; from a1 = a2 = 0 with nothing clipped the first step is the
// plain direct solve. Returns the final chromaticity error.
double newton_fit(double x, double y, Member& s, int max_iter) {
    const Cmf& c = cmf();
    for (int it = 0; it < max_iter; ++it) {
        Vec3 u{0, 0, 0}, v1{0, 0, 0}, v2{0, 0, 0};
        for (int i = 0; i <= kLambdaSteps; ++i) {
            const double l = kLambdaMin + i;
            const double g1 = gauss_band(l, s.band1, s.sigma);
            const double g2 = gauss_band(l, s.band2, s.sigma);
            const double m = 1.0 - s.a1 * g1 - s.a2 * g2;
            if (m <= 0) continue;
            const double b = planck_spectrum(l, s.t) * c.w[i];
            const Vec3 k{c.x[i], c.y[i], c.z[i]};
            u = u + (b * m) * k;
            v1 = v1 + (b * g1) * k;
            v2 = v2 + (b * g2) * k;
        }
        const double su = u.x + u.y + u.z;
        if (!(su > 0)) return 1.0;
        const double err = std::hypot(u.x / su - x, u.y / su - y);
        if (err < 1e-13) return err;
        const double sv1 = v1.x + v1.y + v1.z, sv2 = v2.x + v2.y + v2.z;
        const double m11 = v1.x - x * sv1, m12 = v2.x - x * sv2;
        const double m21 = v1.y - y * sv1, m22 = v2.y - y * sv2;
        const double r1 = u.x - x * su, r2 = u.y - y * su;
        const double det = m11 * m22 - m12 * m21;
        if (std::abs(det) < 1e-300 * std::max(std::abs(m11 * m22), std::abs(m12 * m21)) ||
            det == 0)
            return err;
        const double da1 = (r1 * m22 - r2 * m12) / det;
        const double da2 = (m11 * r2 - m21 * r1) / det;
        // Backtracking: accept the largest halving that reduces the error.
        bool moved = false;
        double step = 1.0;
        for (int h = 0; h < 24; ++h, step *= 0.5) {
            Member trial = s;
            trial.a1 += step * da1;
            trial.a2 += step * da2;
            if (chroma_err(trial, x, y) < err) {
                s = trial;
                moved = true;
                break;
            }
        }
        if (!moved) return err;
    }
    return chroma_err(s, x, y);
}

// Nelder-Mead polish in (a1, a2) for cells where Newton stalls on the
// clipping kinks.
double simplex_fit(double x, double y, Member& s, int max_iter) {
    double px[3] = {s.a1, s.a1 + 0.5 * std::abs(s.a1) + 0.1, s.a1};
    double py[3] = {s.a2, s.a2, s.a2 + 0.5 * std::abs(s.a2) + 0.1};
    auto eval = [&](double a1, double a2) {
        Member m = s;
        m.a1 = a1;
        m.a2 = a2;
        return chroma_err(m, x, y);
    };
    double f[3];
    for (int i = 0; i < 3; ++i) f[i] = eval(px[i], py[i]);
    for (int it = 0; it < max_iter; ++it) {
        int hi = 0, lo = 0;
        for (int i = 1; i < 3; ++i) {
            if (f[i] > f[hi]) hi = i;
            if (f[i] < f[lo]) lo = i;
        }
        if (f[lo] < 1e-13) break;
        double cx = 0, cy = 0;
        for (int i = 0; i < 3; ++i)
            if (i != hi) { cx += 0.5 * px[i]; cy += 0.5 * py[i]; }
        const double rx = 2 * cx - px[hi], ry = 2 * cy - py[hi];
        const double fr = eval(rx, ry);
        if (fr < f[lo]) {
            const double ex = 3 * cx - 2 * px[hi], ey = 3 * cy - 2 * py[hi];
            const double fe = eval(ex, ey);
            if (fe < fr) { px[hi] = ex; py[hi] = ey; f[hi] = fe; }
            else { px[hi] = rx; py[hi] = ry; f[hi] = fr; }
        } else if (fr < f[hi]) {
            px[hi] = rx; py[hi] = ry; f[hi] = fr;
        } else {
            const double kx = cx + 0.5 * (px[hi] - cx), ky = cy + 0.5 * (py[hi] - cy);
            const double fk = eval(kx, ky);
            if (fk < f[hi]) { px[hi] = kx; py[hi] = ky; f[hi] = fk; }
            else {
                for (int i = 0; i < 3; ++i) {
                    if (i == lo) continue;
                    px[i] = px[lo] + 0.5 * (px[i] - px[lo]);
                    py[i] = py[lo] + 0.5 * (py[i] - py[lo]);
                    f[i] = eval(px[i], py[i]);
                }
            }
        }
    }
    int lo = 0;
    for (int i = 1; i < 3; ++i)
        if (f[i] < f[lo]) lo = i;
    s.a1 = px[lo];
    s.a2 = py[lo];
    return f[lo];
}

constexpr double kFitTarget = 1e-9;

Member fresh_member(double x, double y, const ColorTableSpec& spec) {
    Member s;
    s.t = correlated_temperature(x, y);
    s.band1 = spec.band1_nm;
    s.band2 = spec.band2_nm;
    s.sigma = spec.band_sigma_nm;
    s.a1 = s.a2 = 0;
    return s;
}

double fit_polish(double x, double y, Member& s) {
    double err = newton_fit(x, y, s, 60);
    if (err >= kFitTarget) err = simplex_fit(x, y, s, 400);
    if (err >= kFitTarget) err = newton_fit(x, y, s, 40);
    return err;
}

// Last-resort start search: signed-log scan over both coefficients. The
// error landscape has disconnected basins (deeply clipped spectra form
// solution islands), so the best-ranked starts are polished one by one
// rather than trusting the single coarsest minimum.
double fit_scan(double x, double y, Member& s) {
    struct Start {
        double err, a1, a2;
    };
    std::vector<Start> starts;
    starts.reserve(2305);
    starts.push_back({chroma_err(s, x, y), s.a1, s.a2});
    for (int s1 = -1; s1 <= 1; ++s1) {
        for (int s2 = -1; s2 <= 1; ++s2) {
            for (int i1 = 0; i1 < (s1 ? 24 : 1); ++i1) {
                for (int i2 = 0; i2 < (s2 ? 24 : 1); ++i2) {
                    Member m = s;
                    m.a1 = s1 * 0.05 * std::pow(1.55, i1);
                    m.a2 = s2 * 0.05 * std::pow(1.55, i2);
                    starts.push_back({chroma_err(m, x, y), m.a1, m.a2});
                }
            }
        }
    }
    std::sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) {
        return a.err < b.err || (a.err == b.err && a.a1 < b.a1) ||
               (a.err == b.err && a.a1 == b.a1 && a.a2 < b.a2);
    });
    Member best = s;
    best.a1 = starts[0].a1;
    best.a2 = starts[0].a2;
    double best_err = starts[0].err;
    const size_t n_polish = std::min<size_t>(64, starts.size());
    for (size_t k = 0; k < n_polish; ++k) {
        Member m = s;
        m.a1 = starts[k].a1;
        m.a2 = starts[k].a2;
        const double e = newton_fit(x, y, m, 60);
        if (e < best_err) {
            best = m;
            best_err = e;
        }
        if (best_err < kFitTarget) break;
    }
    if (best_err >= kFitTarget) best_err = fit_polish(x, y, best);
    s = best;
    return best_err;
}

// Tracks the fit from a converged anchor chromaticity to the target along
// the straight chroma-space line with adaptive steps, seeding each step's
// Newton solve from the previous solution. Robust where a cold start lands
// outside the solution's basin. s enters holding the anchor's coefficients.
double homotopy_fit(double ax, double ay, double tx, double ty, Member& s) {
    double cx = ax, cy = ay;
    double step = 1.0;
    int halvings = 0;
    while (true) {
        const double remain = std::hypot(tx - cx, ty - cy);
        if (remain == 0) break;
        const double frac = std::min(1.0, step);
        const double nx = cx + (tx - cx) * frac;
        const double ny = cy + (ty - cy) * frac;
        Member trial = s;
        if (newton_fit(nx, ny, trial, 40) < kFitTarget) {
            s = trial;
            cx = nx;
            cy = ny;
            if (frac >= 1.0) break;
            step = std::min(1.0, step * 2.0);
        } else {
            step *= 0.5;
            if (++halvings > 40) break;
        }
    }
    return chroma_err(s, tx, ty);
}

// Fits the family member for an arbitrary chromaticity with the full ladder:
// Newton from zero, scan plus polish, then homotopy from the nearest locus
// point (which always fits directly). Returns true on convergence.
bool fit_member(double x, double y, const ColorTableSpec& spec, Member& s) {
    s = fresh_member(x, y, spec);
    double err = newton_fit(x, y, s, 60);
    if (err < kFitTarget) return true;
    Member retry = fresh_member(x, y, spec);
    err = fit_scan(x, y, retry);
    if (err < kFitTarget) {
        s = retry;
        return true;
    }
    Member walk = fresh_member(x, y, spec);
    const Chromaticity anchor = blackbody_chromaticity(walk.t);
    err = homotopy_fit(anchor.x, anchor.y, x, y, walk);
    double best = chroma_err(s, x, y);
    if (chroma_err(retry, x, y) < best) { s = retry; best = chroma_err(retry, x, y); }
    if (err < best) s = walk;
    return chroma_err(s, x, y) < kFitTarget;
}

// Log of the integrated visible black-body output on a fixed log-T grid;
// carries the steep magnitude dependence of Doppler shifts analytically.
struct MagnitudeLaw {
    static constexpr int kN = 2048;
    static constexpr double kTLo = 200.0, kTHi = 500000.0;
    double ln_s[kN];

    MagnitudeLaw() {
        for (int i = 0; i < kN; ++i) {
            const double t = kTLo * std::pow(kTHi / kTLo, double(i) / (kN - 1));
            const Vec3 v = blackbody_xyz(t);
            ln_s[i] = std::log(v.x + v.y + v.z);
        }
    }

    double ln_sum(double t) const {
        const double f = std::clamp(
            std::log(t / kTLo) / std::log(kTHi / kTLo) * (kN - 1), 0.0, double(kN - 1));
        const int i = std::min(kN - 2, static_cast<int>(f));
        const double w = f - i;
        return (1.0 - w) * ln_s[i] + w * ln_s[i + 1];
    }
};

const MagnitudeLaw& magnitude_law() {
    static const MagnitudeLaw law;
    return law;
}

// M(T, d) = S(T*d)/S(T): received-to-emitted visible output of a black body
// under Doppler factor d. Exactly 1 at d = 1 for any T.
double magnitude(double t, double d) {
    if (d == 1.0) return 1.0;
    if (!(t > 0)) t = 6500.0;
    const MagnitudeLaw& law = magnitude_law();
    return std::exp(law.ln_sum(t * d) - law.ln_sum(t));
}

Vec3 shifted_xyz(const Member& s, double d) {
    const Cmf& c = cmf();
    Vec3 out{0, 0, 0};
    for (int i = 0; i <= kLambdaSteps; ++i) {
        const double l = kLambdaMin + i;
        const double v = s(d * l) * c.w[i];
        out.x += v * c.x[i];
        out.y += v * c.y[i];
        out.z += v * c.z[i];
    }
    return (d * d * d * d * d) * out;
}

void check_spec(const ColorTableSpec& spec) {
    if (spec.nx < 2 || spec.ny < 2 || spec.nd < 2)
        throw std::invalid_argument("color table: dimensions must be at least 2");
    if (!(spec.d_min > 0) || !(spec.d_max > spec.d_min))
        throw std::invalid_argument("color table: need 0 < d_min < d_max");
    if (!(spec.x_max > spec.x_min) || !(spec.y_max > spec.y_min))
        throw std::invalid_argument("color table: inverted chromaticity range");
    if (!(spec.band_sigma_nm > 0))
        throw std::invalid_argument("color table: band sigma must be positive");
}

}  // namespace

double cie_x(double l) {
    return 0.362 * lobe(l, 442.0, 0.0624, 0.0374) +
           1.056 * lobe(l, 599.8, 0.0264, 0.0323) -
           0.065 * lobe(l, 501.1, 0.0490, 0.0382);
}

double cie_y(double l) {
    return 0.821 * lobe(l, 568.8, 0.0213, 0.0247) +
           0.286 * lobe(l, 530.9, 0.0613, 0.0322);
}

double cie_z(double l) {
    return 1.217 * lobe(l, 437.0, 0.0845, 0.0278) +
           0.681 * lobe(l, 459.0, 0.0385, 0.0725);
}

double planck_spectrum(double lambda_nm, double t_kelvin) {
    if (!(lambda_nm > 0) || !(t_kelvin > 0)) return 0.0;
    const double l5 = sqr(sqr(lambda_nm)) * lambda_nm;
    // 1e27 keeps visible-range values near unity for comfortable exponents.
    return 1e27 / (l5 * std::expm1(kPlanckC2 / (lambda_nm * t_kelvin)));
}

Vec3 blackbody_xyz(double t_kelvin) {
    Member s;
    s.t = t_kelvin;
    return integrate_xyz(s);
}

Vec3 received_xyz(const std::function<double(double)>& emitted_spectrum, double d) {
    const Cmf& c = cmf();
    Vec3 out{0, 0, 0};
    for (int i = 0; i <= kLambdaSteps; ++i) {
        const double l = kLambdaMin + i;
        const double v = emitted_spectrum(d * l) * c.w[i];
        out.x += v * c.x[i];
        out.y += v * c.y[i];
        out.z += v * c.z[i];
    }
    return (d * d * d * d * d) * out;
}

Chromaticity chromaticity_of(const Vec3& xyz) {
    const double sum = xyz.x + xyz.y + xyz.z;
    if (!(sum > 0) || !std::isfinite(sum)) return {1.0 / 3.0, 1.0 / 3.0};
    return {xyz.x / sum, xyz.y / sum};
}

Chromaticity blackbody_chromaticity(double t_kelvin) {
    return chromaticity_of(blackbody_xyz(t_kelvin));
}

double correlated_temperature(double x, double y) {
    // Cubic epicenter seed; degenerates far from the locus, where the
    // bracketed refinement below takes over anyway.
    const double denom = 0.1858 - y;
    double seed = kCctMax;
    if (std::abs(denom) > 1e-9) {
        const double n = (x - 0.3320) / denom;
        seed = 449.0 * n * n * n + 3525.0 * n * n + 6823.3 * n + 5520.33;
    }
    seed = std::clamp(seed, kCctMin, kCctMax);

    // Golden-section search for the closest locus point around the seed.
    double lo = std::max(kCctMin, seed / 2), hi = std::min(kCctMax, seed * 2);
    const double gr = 0.618033988749895;
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = locus_distance2(a, x, y), fb = locus_distance2(b, x, y);
    for (int it = 0; it < 60 && hi - lo > 1e-3 * lo; ++it) {
        if (fa < fb) {
            hi = b; b = a; fb = fa;
            a = hi - gr * (hi - lo);
            fa = locus_distance2(a, x, y);
        } else {
            lo = a; a = b; fa = fb;
            b = lo + gr * (hi - lo);
            fb = locus_distance2(b, x, y);
        }
    }
    return std::clamp(0.5 * (lo + hi), kCctMin, kCctMax);
}

// Runs fn(index) for index in [0, count) on the requested thread count with
// deterministic results (every index computes the same thing regardless of
// which thread picks it up).
template <class Fn>
void parallel_for(uint32_t count, int threads, Fn fn) {
    const int n = std::max(1, threads);
    if (n == 1) {
        for (uint32_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<uint32_t> next{0};
    auto worker = [&] {
        for (;;) {
            const uint32_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

ColorTable precompute_color_table(const ColorTableSpec& spec) {
    check_spec(spec);
    ColorTable tb;
    tb.nx = spec.nx;
    tb.ny = spec.ny;
    tb.nd = spec.nd;
    tb.x_min = spec.x_min;
    tb.x_max = spec.x_max;
    tb.y_min = spec.y_min;
    tb.y_max = spec.y_max;
    tb.d_min = spec.d_min;
    tb.d_max = spec.d_max;
    const size_t n_cells = static_cast<size_t>(tb.nx) * tb.ny;
    tb.cell_t.assign(n_cells, 0.f);
    tb.cell_a1.assign(n_cells, 0.f);
    tb.cell_a2.assign(n_cells, 0.f);
    tb.data.assign(3 * n_cells * tb.nd, 0.f);

    magnitude_law();  // build once before threads share it

    auto node_x = [&](uint32_t i) {
        return tb.x_min + (tb.x_max - tb.x_min) * i / (tb.nx - 1);
    };
    auto node_y = [&](uint32_t j) {
        return tb.y_min + (tb.y_max - tb.y_min) * j / (tb.ny - 1);
    };

    // Fit every cell's spectrum. A cold Newton pass handles the easy cells
    // near the locus; the off-locus rest are then walked in from already
    // converged grid neighbors by homotopy continuation (each sweep reads a
    // frozen snapshot of the converged set, so the result is independent of
    // thread count), with a direct locus walk and a scan as last resorts.
    std::vector<Member> members(n_cells);
    std::vector<char> ok(n_cells, 0);
    parallel_for(static_cast<uint32_t>(n_cells), spec.threads, [&](uint32_t c) {
        const uint32_t i = c % tb.nx;
        const uint32_t j = c / tb.nx;
        Member s = fresh_member(node_x(i), node_y(j), spec);
        ok[c] = newton_fit(node_x(i), node_y(j), s, 60) < kFitTarget;
        members[c] = s;
    });
    auto run_sweeps = [&](int max_sweeps) {
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            std::vector<char> seen = ok;
            std::atomic<uint32_t> fixed{0};
            parallel_for(static_cast<uint32_t>(n_cells), spec.threads,
                         [&](uint32_t c) {
                if (seen[c]) return;
                const uint32_t i = c % tb.nx;
                const uint32_t j = c / tb.nx;
                uint32_t nbr[8];
                uint32_t n_nbr = 0;
                for (int dj = -1; dj <= 1; ++dj) {
                    for (int di = -1; di <= 1; ++di) {
                        if (di == 0 && dj == 0) continue;
                        const int ni = static_cast<int>(i) + di;
                        const int nj = static_cast<int>(j) + dj;
                        if (ni < 0 || nj < 0 || ni >= static_cast<int>(tb.nx) ||
                            nj >= static_cast<int>(tb.ny))
                            continue;
                        nbr[n_nbr++] = static_cast<uint32_t>(nj) * tb.nx + ni;
                    }
                }
                for (uint32_t k = 0; k < n_nbr; ++k) {
                    const uint32_t from = nbr[k];
                    if (!seen[from]) continue;
                    Member s = members[from];
                    s.t = members[c].t;  // the cell's own temperature
                    const double ax = node_x(from % tb.nx);
                    const double ay = node_y(from / tb.nx);
                    if (homotopy_fit(ax, ay, node_x(i), node_y(j), s) <
                        kFitTarget) {
                        members[c] = s;
                        ok[c] = 1;
                        fixed.fetch_add(1);
                        return;
                    }
                }
            });
            if (fixed.load() == 0) break;
        }
    };
    run_sweeps(8);
    parallel_for(static_cast<uint32_t>(n_cells), spec.threads, [&](uint32_t c) {
        if (ok[c]) return;
        const double x = node_x(c % tb.nx);
        const double y = node_y(c / tb.nx);
        Member s = members[c];
        if (fit_scan(x, y, s) < kFitTarget) {
            members[c] = s;
            ok[c] = 1;
            return;
        }
        if (chroma_err(s, x, y) < chroma_err(members[c], x, y)) members[c] = s;
    });
    run_sweeps(8);
    std::atomic<uint32_t> clamped{0};
    parallel_for(static_cast<uint32_t>(n_cells), spec.threads, [&](uint32_t c) {
        if (ok[c]) return;
        const double x = node_x(c % tb.nx);
        const double y = node_y(c / tb.nx);
        Member walk = fresh_member(x, y, spec);
        const Chromaticity anchor = blackbody_chromaticity(walk.t);
        if (homotopy_fit(anchor.x, anchor.y, x, y, walk) < kFitTarget) {
            members[c] = walk;
            ok[c] = 1;
            return;
        }
        if (chroma_err(walk, x, y) < chroma_err(members[c], x, y))
            members[c] = walk;
        clamped.fetch_add(1);
    });
    tb.clamped_cells = clamped.load();

    const double log_lo = std::log(spec.d_min);
    const double log_hi = std::log(spec.d_max);
    parallel_for(tb.ny, spec.threads, [&](uint32_t j) {
        for (uint32_t i = 0; i < tb.nx; ++i) {
            const Member& s = members[j * tb.nx + i];
            tb.cell_t[j * tb.nx + i] = static_cast<float>(s.t);
            tb.cell_a1[j * tb.nx + i] = static_cast<float>(s.a1);
            tb.cell_a2[j * tb.nx + i] = static_cast<float>(s.a2);
            const Vec3 base = integrate_xyz(s);
            const double denom = base.x + base.y + base.z;
            for (uint32_t k = 0; k < tb.nd; ++k) {
                const double d = std::exp(log_lo + (log_hi - log_lo) * k / (tb.nd - 1));
                const double scale = 1.0 / (denom * magnitude(s.t, d));
                const Vec3 shifted = shifted_xyz(s, d);
                const size_t idx = 3 * ((static_cast<size_t>(k) * tb.ny + j) * tb.nx + i);
                tb.data[idx + 0] = static_cast<float>(std::max(0.0, shifted.x * scale));
                tb.data[idx + 1] = static_cast<float>(std::max(0.0, shifted.y * scale));
                tb.data[idx + 2] = static_cast<float>(std::max(0.0, shifted.z * scale));
            }
        }
    });
    return tb;
}

Vec3 color_shift_exact(const ColorTableSpec& spec, double x, double y, double d) {
    Member s;
    fit_member(x, y, spec, s);
    const Vec3 base = integrate_xyz(s);
    const Vec3 shifted = shifted_xyz(s, d);
    return (1.0 / (base.x + base.y + base.z)) * shifted;
}

Vec3 color_shift_reference(const ColorTable& table, const ColorTableSpec& spec,
                           uint32_t i, uint32_t j, double d) {
    if (i >= table.nx || j >= table.ny)
        throw std::out_of_range("color_shift_reference: node outside the grid");
    if (table.cell_t.empty())
        throw std::runtime_error("color_shift_reference: table has no cell spectra");
    Member s;
    s.t = table.cell_t[j * table.nx + i];
    s.a1 = table.cell_a1[j * table.nx + i];
    s.a2 = table.cell_a2[j * table.nx + i];
    s.band1 = spec.band1_nm;
    s.band2 = spec.band2_nm;
    s.sigma = spec.band_sigma_nm;
    const Vec3 base = integrate_xyz(s);
    const Vec3 shifted = shifted_xyz(s, d);
    return (1.0 / (base.x + base.y + base.z)) * shifted;
}

Vec3 lookup_color(const ColorTable& table, double x, double y, double d) {
    if (table.data.empty()) throw std::runtime_error("lookup_color: empty table");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(d)) {
        table.clamped_lookups.fetch_add(1, std::memory_order_relaxed);
        return {0, 0, 0};
    }
    const double fx = (x - table.x_min) / (table.x_max - table.x_min) * (table.nx - 1);
    const double fy = (y - table.y_min) / (table.y_max - table.y_min) * (table.ny - 1);
    const double d_cl = std::clamp(d, table.d_min, table.d_max);
    const double fd = std::log(d_cl / table.d_min) /
                      std::log(table.d_max / table.d_min) * (table.nd - 1);
    if (fx < 0 || fx > table.nx - 1 || fy < 0 || fy > table.ny - 1 || d != d_cl)
        table.clamped_lookups.fetch_add(1, std::memory_order_relaxed);

    auto split = [](double f, uint32_t n, uint32_t& i0, double& w) {
        const double c = std::clamp(f, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<uint32_t>(std::min(static_cast<double>(n - 2), std::floor(c)));
        w = std::clamp(c - i0, 0.0, 1.0);
    };
    uint32_t x0, y0, d0;
    double wx, wy, wd;
    split(fx, table.nx, x0, wx);
    split(fy, table.ny, y0, wy);
    split(fd, table.nd, d0, wd);

    auto texel = [&](uint32_t i, uint32_t j, uint32_t k) {
        const size_t idx = 3 * ((static_cast<size_t>(k) * table.ny + j) * table.nx + i);
        return Vec3{table.data[idx], table.data[idx + 1], table.data[idx + 2]};
    };
    // The factor-one point lies mid-cell on the log axis, yet its value is
    // known exactly: the cell's identity triple [x, y, 1-x-y]. Inside that
    // one cell a tent-weighted correction pins the reconstruction to it;
    // node values are untouched and no extra slices are read.
    const double fd1 = std::log(1.0 / table.d_min) /
                       std::log(table.d_max / table.d_min) * (table.nd - 1);
    double tent = 0, w1 = 0;
    if (fd1 > d0 && fd1 < d0 + 1) {
        w1 = fd1 - d0;
        tent = wd <= w1 ? wd / w1 : (1.0 - wd) / (1.0 - w1);
    }
    // Per xy corner: linear along D on the stored residual, the identity
    // anchor, then the analytic magnitude at the exact queried factor, then
    // bilinear in xy.
    Vec3 out{0, 0, 0};
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            const uint32_t i = x0 + dx, j = y0 + dy;
            Vec3 r = (1.0 - wd) * texel(i, j, d0) + wd * texel(i, j, d0 + 1);
            if (tent > 0) {
                const double cx =
                    table.x_min + (table.x_max - table.x_min) * i / (table.nx - 1);
                const double cy =
                    table.y_min + (table.y_max - table.y_min) * j / (table.ny - 1);
                const Vec3 anchor{cx, cy, 1.0 - cx - cy};
                if (tent >= 1.0) {
                    r = anchor;
                } else {
                    const Vec3 at1 =
                        (1.0 - w1) * texel(i, j, d0) + w1 * texel(i, j, d0 + 1);
                    r = r + tent * (anchor - at1);
                }
            }
            const double w = (dx ? wx : 1.0 - wx) * (dy ? wy : 1.0 - wy);
            out = out + (w * magnitude(table.cell_t[j * table.nx + i], d_cl)) * r;
        }
    }
    return out;
}

Vec3 apply_doppler_beaming(const Vec3& emitted, double d, const ColorTable& table) {
    const double sum = emitted.x + emitted.y + emitted.z;
    if (!(sum > 0)) return {0, 0, 0};
    const Chromaticity c = chromaticity_of(emitted);
    return sum * lookup_color(table, c.x, c.y, d);
}

void save_color_table(const ColorTable& tb, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_color_table: cannot open " + path);
    char header[32] = {};
    std::memcpy(header, "BHT1", 4);
    const uint32_t version = 1;
    std::memcpy(header + 4, &version, 4);
    std::memcpy(header + 8, &kTableIdColor, 4);
    std::memcpy(header + 12, &tb.nx, 4);
    std::memcpy(header + 16, &tb.ny, 4);
    std::memcpy(header + 20, &tb.nd, 4);
    std::memcpy(header + 24, &tb.clamped_cells, 4);
    f.write(header, sizeof header);
    const double ranges[6] = {tb.x_min, tb.x_max, tb.y_min, tb.y_max, tb.d_min, tb.d_max};
    f.write(reinterpret_cast<const char*>(ranges), sizeof ranges);
    f.write(reinterpret_cast<const char*>(tb.cell_t.data()),
            static_cast<std::streamsize>(tb.cell_t.size() * sizeof(float)));
    f.write(reinterpret_cast<const char*>(tb.cell_a1.data()),
            static_cast<std::streamsize>(tb.cell_a1.size() * sizeof(float)));
    f.write(reinterpret_cast<const char*>(tb.cell_a2.data()),
            static_cast<std::streamsize>(tb.cell_a2.size() * sizeof(float)));
    f.write(reinterpret_cast<const char*>(tb.data.data()),
            static_cast<std::streamsize>(tb.data.size() * sizeof(float)));
    if (!f) throw std::runtime_error("save_color_table: write failed for " + path);
}

ColorTable load_color_table(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_color_table: cannot open " + path);
    char header[32];
    if (!f.read(header, sizeof header))
        throw std::runtime_error("color table file: truncated header");
    if (std::memcmp(header, "BHT1", 4) != 0)
        throw std::runtime_error("color table file: bad magic");
    uint32_t version, id;
    std::memcpy(&version, header + 4, 4);
    std::memcpy(&id, header + 8, 4);
    if (version != 1) throw std::runtime_error("color table file: unsupported version");
    if (id != kTableIdColor) throw std::runtime_error("color table file: wrong table id");
    ColorTable tb;
    std::memcpy(&tb.nx, header + 12, 4);
    std::memcpy(&tb.ny, header + 16, 4);
    std::memcpy(&tb.nd, header + 20, 4);
    std::memcpy(&tb.clamped_cells, header + 24, 4);
    if (tb.nx < 2 || tb.ny < 2 || tb.nd < 2 || tb.nx > 4096 || tb.ny > 4096 ||
        tb.nd > 4096)
        throw std::runtime_error("color table file: bad dimensions");
    double ranges[6];
    if (!f.read(reinterpret_cast<char*>(ranges), sizeof ranges))
        throw std::runtime_error("color table file: truncated ranges");
    tb.x_min = ranges[0]; tb.x_max = ranges[1];
    tb.y_min = ranges[2]; tb.y_max = ranges[3];
    tb.d_min = ranges[4]; tb.d_max = ranges[5];
    if (!(tb.d_min > 0) || !(tb.d_max > tb.d_min) || !(tb.x_max > tb.x_min) ||
        !(tb.y_max > tb.y_min))
        throw std::runtime_error("color table file: bad ranges");
    tb.cell_t.resize(static_cast<size_t>(tb.nx) * tb.ny);
    tb.cell_a1.resize(tb.cell_t.size());
    tb.cell_a2.resize(tb.cell_t.size());
    if (!f.read(reinterpret_cast<char*>(tb.cell_t.data()),
                static_cast<std::streamsize>(tb.cell_t.size() * sizeof(float))) ||
        !f.read(reinterpret_cast<char*>(tb.cell_a1.data()),
                static_cast<std::streamsize>(tb.cell_a1.size() * sizeof(float))) ||
        !f.read(reinterpret_cast<char*>(tb.cell_a2.data()),
                static_cast<std::streamsize>(tb.cell_a2.size() * sizeof(float))))
        throw std::runtime_error("color table file: truncated cell spectra");
    tb.data.resize(3 * static_cast<size_t>(tb.nx) * tb.ny * tb.nd);
    if (!f.read(reinterpret_cast<char*>(tb.data.data()),
                static_cast<std::streamsize>(tb.data.size() * sizeof(float))))
        throw std::runtime_error("color table file: truncated data");
    char extra;
    if (f.read(&extra, 1))
        throw std::runtime_error("color table file: trailing bytes");
    return tb;
}

Vec3 xyz_to_linear_srgb(const Vec3& c) {
    return {3.2404542 * c.x - 1.5371385 * c.y - 0.4985314 * c.z,
            -0.9692660 * c.x + 1.8760108 * c.y + 0.0415560 * c.z,
            0.0556434 * c.x - 0.2040259 * c.y + 1.0572252 * c.z};
}

double srgb_encode(double v) {
    v = clamp01(v);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

Rgb8 tone_map_pixel(const Vec3& xyz, double exposure, double l_white) {
    const double lum = xyz.y * exposure;
    if (!(lum > 0)) return {0, 0, 0};
    // Extended reinhard: maps l_white to exactly 1, monotone everywhere.
    const double mapped = lum * (1.0 + lum / (l_white * l_white)) / (1.0 + lum);
    const Vec3 scaled = (exposure * mapped / lum) * xyz;
    const Vec3 rgb = xyz_to_linear_srgb(scaled);
    auto q = [](double v) {
        return static_cast<uint8_t>(std::lround(255.0 * srgb_encode(v)));
    };
    return {q(rgb.x), q(rgb.y), q(rgb.z)};
}

}  // namespace bht

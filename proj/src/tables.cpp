#include "bht/tables.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include "bht/geodesic.hpp"

namespace bht {
namespace {

constexpr double kSqrt23 = 0.81649658092772603273;  // sqrt(2/3)
constexpr double kSqrt13 = 0.57735026918962576451;  // sqrt(1/3)

// d(t - time_base(u))/dphi along a beam, algebraically regular at u -> 0 on
// the ingoing branch. For udot < 0 the sum e + udot is evaluated through the
// energy identity to dodge the cancellation as udot -> -e.
double ds_rate(double u, double udot, double e) {
    const double denom = udot >= 0 ? e + udot : u * u * (1.0 - u) / (e - udot);
    return (1.0 - u * u) / denom + e / (1.0 - u);
}

void fill_d_column(Table& tb, uint32_t i, double eps) {
    const uint32_t h = tb.height;
    const double s = (i + 0.5) / tb.width;
    const bool super = s > 0.5;
    std::vector<double> utex(h);
    for (uint32_t j = 0; j < h; ++j) utex[j] = unmap_d(s, (j + 0.5) / h).u;
    const double e = unmap_d(s, 0.0).e;

    double u = 0, udot = e, phi = 0, S = -std::log(2 * e);
    uint32_t next = 0;
    while (next < h) {
        const double rate = ds_rate(u, udot, e);
        const double udot1 = udot + u_accel(u) * eps;
        if (!super && udot1 <= 0) break;  // apsis reached; finish from the local model
        const double u1 = u + udot1 * eps;
        while (next < h && utex[next] <= u1) {
            const double th = (utex[next] - u) / (u1 - u);
            const double um = udot + th * (udot1 - udot);
            tb.at(i, next, 0) = static_cast<float>(S + th * eps * rate);
            tb.at(i, next, 1) =
                static_cast<float>(phi + th * eps - std::atan2(utex[next], um));
            ++next;
        }
        u = u1;
        udot = udot1;
        phi += eps;
        S += rate * eps;
        if (u >= 1.0) break;
    }
    if (!super && next < h) {
        // Quadratic apsis model at the last pre-apsis state: covers the final
        // texels that sit closer to the apsis than one Euler step.
        const double am = -u_accel(u);
        const double ua_loc = u + udot * udot / (2 * am);
        const double phia = phi + udot / am;
        const double rate = ds_rate(u, udot, e);
        for (; next < h; ++next) {
            const double du = std::max(0.0, ua_loc - utex[next]);
            const double um = std::sqrt(2 * am * du);
            const double phm = phia - um / am;
            tb.at(i, next, 0) = static_cast<float>(S + (phm - phi) * rate);
            tb.at(i, next, 1) = static_cast<float>(phm - std::atan2(utex[next], um));
        }
    }
}

void fill_u_column(Table& tb, uint32_t i, double eps) {
    const uint32_t h = tb.height;
    const double s = (i + 0.5) / tb.width;
    std::vector<double> ptex(h);
    for (uint32_t j = 0; j < h; ++j) ptex[j] = unmap_u(s, (j + 0.5) / h).phi;
    const double e = unmap_u(s, 0.0).e;

    double u = 0, udot = e, phi = 0, S = -std::log(2 * e);
    uint32_t next = 0;
    while (next < h) {
        const double rate = ds_rate(u, udot, e);
        const double udot1 = udot + u_accel(u) * eps;
        const double u1 = u + udot1 * eps;
        const double th_max = u1 >= 1.0 ? (1.0 - u) / (u1 - u) : 1.0;
        while (next < h && ptex[next] <= phi + eps) {
            const double th = (ptex[next] - phi) / eps;
            if (th > th_max) break;
            tb.at(i, next, 0) = static_cast<float>(S + th * eps * rate);
            tb.at(i, next, 1) = static_cast<float>(u + th * (u1 - u));
            ++next;
        }
        if (u1 >= 1.0) break;  // beam dies at the horizon; the rest stays sentinel
        u = u1;
        udot = udot1;
        phi += eps;
        S += rate * eps;
    }
}

void parallel_columns(uint32_t n, int threads, const std::function<void(uint32_t)>& fn) {
    if (threads <= 1) {
        for (uint32_t c = 0; c < n; ++c) fn(c);
        return;
    }
    std::atomic<uint32_t> cursor{0};
    std::vector<std::thread> pool;
    const int workers = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (uint32_t c; (c = cursor.fetch_add(1)) < n;) fn(c);
        });
    }
    for (std::thread& t : pool) t.join();
}

// Bilinear sample of channel c between columns i0/i1 at unclamped row
// coordinate y: values beyond the first/last row centers extrapolate linearly.
double sample_rows(const Table& tb, uint32_t i0, uint32_t i1, double fx, double y,
                   int c) {
    const int h = static_cast<int>(tb.height);
    int j0 = static_cast<int>(std::floor(y));
    j0 = std::clamp(j0, 0, h - 2);
    const double fy = y - j0;
    const uint32_t ja = static_cast<uint32_t>(j0), jb = ja + 1;
    const double a = (1 - fx) * tb.at(i0, ja, c) + fx * tb.at(i1, ja, c);
    const double b = (1 - fx) * tb.at(i0, jb, c) + fx * tb.at(i1, jb, c);
    return (1 - fy) * a + fy * b;
}

struct ColumnPick {
    uint32_t i0, i1;
    double fx;
};

ColumnPick pick_columns(double x, int lo, int hi) {
    x = std::clamp(x, static_cast<double>(lo), static_cast<double>(hi));
    int i0 = static_cast<int>(std::floor(x));
    i0 = std::clamp(i0, lo, std::max(lo, hi - 1));
    const int i1 = std::min(i0 + 1, hi);
    const double fx = i1 > i0 ? std::clamp(x - i0, 0.0, 1.0) : 0.0;
    return {static_cast<uint32_t>(i0), static_cast<uint32_t>(i1), fx};
}

void write_one(std::ofstream& f, const Table& tb) {
    char header[32] = {};
    std::memcpy(header, "BHT1", 4);
    const uint32_t version = 1;
    std::memcpy(header + 4, &version, 4);
    std::memcpy(header + 8, &tb.id, 4);
    std::memcpy(header + 12, &tb.width, 4);
    std::memcpy(header + 16, &tb.height, 4);
    std::memcpy(header + 20, &tb.epsilon, 8);
    f.write(header, sizeof header);
    f.write(reinterpret_cast<const char*>(tb.data.data()),
            static_cast<std::streamsize>(tb.data.size() * sizeof(float)));
}

Table read_one(std::ifstream& f) {
    char header[32];
    if (!f.read(header, sizeof header))
        throw std::runtime_error("table file: truncated header");
    if (std::memcmp(header, "BHT1", 4) != 0)
        throw std::runtime_error("table file: bad magic");
    uint32_t version;
    std::memcpy(&version, header + 4, 4);
    if (version != 1) throw std::runtime_error("table file: unsupported version");
    Table tb;
    std::memcpy(&tb.id, header + 8, 4);
    std::memcpy(&tb.width, header + 12, 4);
    std::memcpy(&tb.height, header + 16, 4);
    std::memcpy(&tb.epsilon, header + 20, 8);
    if (tb.width < 2 || tb.height < 2 || tb.width > (1u << 20) || tb.height > (1u << 20))
        throw std::runtime_error("table file: bad dimensions");
    tb.data.resize(2 * static_cast<size_t>(tb.width) * tb.height);
    if (!f.read(reinterpret_cast<char*>(tb.data.data()),
                static_cast<std::streamsize>(tb.data.size() * sizeof(float))))
        throw std::runtime_error("table file: truncated data");
    return tb;
}

}  // namespace

Vec2 map_d(double e, double u) {
    if (!(e >= 0) || !(u >= 0)) throw std::domain_error("map_d: e and u must be >= 0");
    const double e2 = e * e;
    if (e2 >= kCritE2) {
        if (u > 1.0 + 1e-12) throw std::domain_error("map_d: u beyond the horizon");
        const double w = std::min(u, 1.0) - kPhotonSphereU;
        const double s = 0.5 + std::sqrt(-std::log1p(-kCritE2 / e2) / 50.0);
        const double t =
            (kSqrt23 + std::copysign(std::sqrt(std::abs(w)), w)) / (kSqrt23 + kSqrt13);
        return {clamp01(s), clamp01(t)};
    }
    const double ua = apsis_u(e2);
    if (u > ua * (1.0 + 1e-9))
        throw std::domain_error("map_d: u beyond the apsis of this beam");
    const double s = 0.5 - std::sqrt(-std::log1p(-e2 / kCritE2) / 50.0);
    const double t = ua == 0 ? 0.0 : 1.0 - std::sqrt(std::max(0.0, 1.0 - u / ua));
    return {clamp01(s), clamp01(t)};
}

DCoord unmap_d(double s, double t) {
    if (!(s >= 0 && s <= 1) || !(t >= 0 && t <= 1))
        throw std::domain_error("unmap_d: (s, t) outside the unit square");
    if (s == 0.5) throw std::domain_error("unmap_d: s = 1/2 is the branch seam");
    if (s > 0.5) {
        const double x = s - 0.5;
        const double e2 = kCritE2 / -std::expm1(-50.0 * x * x);
        const double w = t * (kSqrt23 + kSqrt13) - kSqrt23;
        return {std::sqrt(e2), kPhotonSphereU + std::copysign(w * w, w)};
    }
    const double x = 0.5 - s;
    const double e2 = -kCritE2 * std::expm1(-50.0 * x * x);
    return {std::sqrt(e2), apsis_u(e2) * t * (2.0 - t)};
}

Vec2 map_u(double e, double phi) {
    if (!(e >= 0) || !(phi >= 0))
        throw std::domain_error("map_u: e and phi must be >= 0");
    const double e2 = e * e;
    const double s = 1.0 / (1.0 + 6.0 * e2);
    const double t = phi / 3.0 * (1.0 + 6.0 * e2 * e) / (1.0 + e2);
    return {clamp01(s), clamp01(t)};
}

UCoord unmap_u(double s, double t) {
    if (!(s > 0 && s <= 1) || !(t >= 0 && t <= 1))
        throw std::domain_error("unmap_u: (s, t) outside (0,1] x [0,1]");
    const double e2 = (1.0 / s - 1.0) / 6.0;
    const double e = std::sqrt(e2);
    return {e, 3.0 * t * (1.0 + e2) / (1.0 + 6.0 * e2 * e)};
}

TableSet precompute(double epsilon, uint32_t d_width, uint32_t d_height,
                    uint32_t u_width, uint32_t u_height, int threads) {
    if (!(epsilon > 0) || epsilon > 1e-3)
        throw std::invalid_argument("precompute: epsilon must be in (0, 1e-3]");
    if (d_width < 2 || d_height < 2 || u_width < 2 || u_height < 2)
        throw std::invalid_argument("precompute: table dimensions must be >= 2x2");

    TableSet ts;
    ts.d = Table{kTableIdD, d_width, d_height, epsilon,
                 std::vector<float>(2 * static_cast<size_t>(d_width) * d_height,
                                    kSentinel)};
    ts.u = Table{kTableIdU, u_width, u_height, epsilon,
                 std::vector<float>(2 * static_cast<size_t>(u_width) * u_height,
                                    kSentinel)};
    parallel_columns(d_width + u_width, threads, [&](uint32_t c) {
        if (c < d_width)
            fill_d_column(ts.d, c, epsilon);
        else
            fill_u_column(ts.u, c - d_width, epsilon);
    });
    return ts;
}

DSample lookup_d(const Table& table, double e, double u) {
    const Vec2 st = map_d(e, u);
    const bool super = e * e >= kCritE2;
    const int half = static_cast<int>(table.width) / 2;
    const ColumnPick cp =
        pick_columns(st.x * table.width - 0.5, super ? half : 0,
                     super ? static_cast<int>(table.width) - 1 : half - 1);
    const double y = st.y * table.height - 0.5;
    const double s_val = sample_rows(table, cp.i0, cp.i1, cp.fx, y, 0);
    const double delta = sample_rows(table, cp.i0, cp.i1, cp.fx, y, 1);
    return {s_val + time_base(std::max(u, 1e-12)), delta};
}

USample lookup_u(const Table& table, double e, double phi) {
    const Vec2 st = map_u(e, phi);
    const ColumnPick cp = pick_columns(st.x * table.width - 0.5, 0,
                                       static_cast<int>(table.width) - 1);
    // Rows extrapolate below the first center (u -> 0 linearly as phi -> 0)
    // and clamp above the last one; queries that land up there are rejected by
    // the caller's admissibility guards anyway.
    const int h = static_cast<int>(table.height);
    const double y = std::min(st.y * table.height - 0.5, h - 1.0);
    const int j0 = std::clamp(static_cast<int>(std::floor(y)), 0, h - 2);
    const double fy = y - j0;

    // A texel never reached by its beam is repaired from the nearest written
    // azimuth below it in the same column.
    auto texel = [&](uint32_t i, int j, int c) {
        int jj = j;
        while (jj > 0 && table.at(i, static_cast<uint32_t>(jj), 0) == kSentinel) --jj;
        return static_cast<double>(table.at(i, static_cast<uint32_t>(jj), c));
    };
    auto channel = [&](int c) {
        const double a =
            (1 - cp.fx) * texel(cp.i0, j0, c) + cp.fx * texel(cp.i1, j0, c);
        const double b =
            (1 - cp.fx) * texel(cp.i0, j0 + 1, c) + cp.fx * texel(cp.i1, j0 + 1, c);
        return (1 - fy) * a + fy * b;
    };
    const double uhat = channel(1);
    const double s_val = channel(0);
    return {s_val + time_base(std::max(uhat, 1e-12)), uhat};
}

double total_deflection(double e, double epsilon) {
    if (e == 0) return 0.0;
    if (!(e > 0) || e * e >= kCritE2)
        throw std::domain_error("total_deflection: needs a sub-critical beam");
    if (!(epsilon > 0) || epsilon > 1e-3)
        throw std::invalid_argument("total_deflection: epsilon must be in (0, 1e-3]");
    // The kick-then-drift update leaves udot half a step ahead of u in phase,
    // so the interpolated apsis azimuth carries a -epsilon/2 correction.
    double u = 0, udot = e, phi = 0;
    while (true) {
        const double udot1 = udot + u_accel(u) * epsilon;
        if (udot1 <= 0)
            return 2.0 * (phi + udot / -u_accel(u) - 0.5 * epsilon) - kPi;
        u += udot1 * epsilon;
        udot = udot1;
        phi += epsilon;
    }
}

void save_tables(const TableSet& tables, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_tables: cannot open " + path);
    write_one(f, tables.d);
    write_one(f, tables.u);
    if (!f) throw std::runtime_error("save_tables: write failed for " + path);
}

TableSet load_tables(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_tables: cannot open " + path);
    TableSet ts;
    ts.d = read_one(f);
    ts.u = read_one(f);
    if (ts.d.id != kTableIdD || ts.u.id != kTableIdU)
        throw std::runtime_error("load_tables: unexpected table ids");
    f.peek();
    if (!f.eof()) throw std::runtime_error("load_tables: trailing bytes");
    return ts;
}

}  // namespace bht
